mod common;

use std::f64::consts::FRAC_PI_2;

use ane_core::enhance::init_two_layer_uniform;
use ane_core::partition::{build_layer1, physical_partition, refine_layer};
use ane_core::{Architecture, Network, Point, RectDomain};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn lines_net(lines: &[(f64, f64)]) -> Network {
    let mut net = Network::zeros(&Architecture::new(vec![lines.len()]).unwrap());
    for (i, &(a, b)) in lines.iter().enumerate() {
        net.first.angles[i] = a;
        net.first.biases[i] = b;
    }
    net
}

#[test]
fn uniform_twelve_lines_give_thirty_six_cells() {
    let d = RectDomain::symmetric_unit();
    let net = init_two_layer_uniform(12, &d).unwrap();
    let pp = build_layer1(&net, &d);
    assert_eq!(pp.len(), 36);

    let lines: Vec<(f64, f64)> = net.first.angles.iter().copied().zip(net.first.biases.iter().copied()).collect();
    let n = 400;
    let labels: Vec<Vec<bool>> = raster(n).iter().map(|&p| line_signs(&lines, p)).collect();
    assert_eq!(raster_components(&labels, n), 36);
}

#[test]
fn line_arrangement_euler_count() {
    let d = RectDomain::symmetric_unit();
    let mut r = rng(11);
    for _ in 0..40 {
        let k = r.random_range(1..9);
        let lines: Vec<(f64, f64)> =
            (0..k).map(|_| (r.random_range(0.0..std::f64::consts::TAU), r.random_range(-0.8..0.8))).collect();
        let mut interior = 0;
        for i in 0..k {
            for j in i + 1..k {
                let (a1, b1) = lines[i];
                let (a2, b2) = lines[j];
                let det = a1.cos() * a2.sin() - a1.sin() * a2.cos();
                let x = (b1 * a2.sin() - b2 * a1.sin()) / det;
                let y = (a1.cos() * b2 - a2.cos() * b1) / det;
                if x.abs() < 1.0 && y.abs() < 1.0 {
                    interior += 1;
                }
            }
        }
        let pp = build_layer1(&lines_net(&lines), &d);
        assert_eq!(pp.len(), 1 + k + interior, "{lines:?}");
    }
}

#[test]
fn second_layer_sign_pattern_oracle() {
    // lines x = 0 and y = 0, second-layer neuron g = σ(x) − σ(y)
    let mut net = lines_net(&[(0.0, 0.0), (FRAC_PI_2, 0.0)]);
    net.push_layer(&[(vec![1.0, -1.0], 0.0)], vec![1.0], 0.0);
    let d = RectDomain::symmetric_unit();
    let k1 = build_layer1(&net, &d);
    assert_eq!(k1.len(), 4);
    let k2 = refine_layer(&k1, &net, 2).unwrap();
    assert_eq!(k2.len(), 5);
    assert_eq!(k2.cells.iter().filter(|c| c.level == 2).count(), 2);

    let n = 400;
    let labels: Vec<Vec<bool>> = raster(n).iter().map(|&p| net.activation_pattern(p)).collect();
    assert_eq!(raster_components(&labels, n), k2.len());
}

fn check_partition(net: &Network, r: &mut rand_chacha::ChaCha8Rng) {
    let d = RectDomain::symmetric_unit();
    let pp = physical_partition(net, &d);
    assert!((pp.total_area() - 4.0).abs() < 1e-8, "area {}", pp.total_area());
    let centroid_patterns: Vec<Vec<Option<bool>>> =
        pp.cells.iter().map(|c| pattern(net, c.centroid(), 1e-9)).collect();
    for (k, cell) in pp.cells.iter().enumerate() {
        for _ in 0..6 {
            let p = interior_sample(&cell.vertices, r);
            assert!(patterns_agree(&pattern(net, p, 1e-9), &centroid_patterns[k]), "pattern varies in cell {k}");
        }
        // affinity certificate
        let v = &cell.vertices;
        let (a, b, c) = (v[0], v[1], v[2]);
        let m = cell.centroid();
        let det = (b - a).cross(c - a);
        if det.abs() > 1e-10 {
            let s = (m - a).cross(c - a) / det;
            let t = (b - a).cross(m - a) / det;
            let fa = net.eval_point(a);
            let interp = fa + s * (net.eval_point(b) - fa) + t * (net.eval_point(c) - fa);
            let fm = net.eval_point(m);
            assert!((interp - fm).abs() <= 1e-8 * fm.abs().max(1.0));
        }
    }
    for &(i, j) in &pp.adjacency {
        let (pi, pj) = (&centroid_patterns[i], &centroid_patterns[j]);
        let differs = pi.iter().zip(pj).any(|(x, y)| matches!((x, y), (Some(a), Some(b)) if a != b));
        assert!(differs, "adjacent cells {i} and {j} share a pattern");
    }
}

#[test]
fn random_networks_give_maximal_constant_pattern_cells() {
    let mut r = rng(12);
    for _ in 0..30 {
        let net = random_net(&[r.random_range(1..=4), r.random_range(1..=3)], &mut r);
        check_partition(&net, &mut r);
    }
}

#[test]
fn locate_agrees_with_exhaustive_search() {
    let mut r = rng(13);
    let net = random_net(&[5, 4, 3], &mut r);
    let pp = physical_partition(&net, &RectDomain::symmetric_unit());
    let pts: Vec<Point> = (0..10_000).map(|_| random_point(&mut r)).collect();
    let ids = pp.locate(&pts).unwrap();
    for (p, id) in pts.iter().zip(ids) {
        assert_eq!(Some(id), pp.locate_exhaustive(*p));
    }
}

#[test]
fn grid_points_partition_exhaustively() {
    let mut r = rng(14);
    let net = random_net(&[6, 3], &mut r);
    let d = RectDomain::symmetric_unit();
    let pp = physical_partition(&net, &d);
    let grid = ane_core::quadrature::make_grid(d, 60).unwrap();
    let ids = pp.locate(&grid.points).unwrap();
    for (p, &id) in grid.points.iter().zip(&ids) {
        assert!(pp.cells[id].contains(*p, 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn refinement_conserves_area(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_net(&[r.random_range(1..=6), r.random_range(1..=4)], &mut r);
        let d = RectDomain::symmetric_unit();
        let k1 = build_layer1(&net, &d);
        let k2 = refine_layer(&k1, &net, 2).unwrap();
        prop_assert!((k1.total_area() - 4.0).abs() < 1e-8);
        prop_assert!((k2.total_area() - 4.0).abs() < 1e-8);
        prop_assert!(k2.len() >= k1.len());
        for c in &k2.cells {
            prop_assert!(c.area() > 0.0);
            let n = c.vertices.len();
            for i in 0..n {
                let (a, b, e) = (c.vertices[i], c.vertices[(i + 1) % n], c.vertices[(i + 2) % n]);
                prop_assert!((b - a).cross(e - b) >= -1e-9 * 2.0f64.sqrt() * 2.0);
            }
        }
    }

    #[test]
    fn regions_are_connected_and_cover_marks(seed in any::<u64>(), frac in 0.1f64..0.9) {
        let mut r = rng(seed);
        let net = random_net(&[5, 3], &mut r);
        let pp = physical_partition(&net, &RectDomain::symmetric_unit());
        let marked: Vec<usize> = (0..pp.len()).filter(|_| r.random_bool(frac)).collect();
        let regions = pp.regroup(&marked);
        let mut all: Vec<usize> = regions.iter().flat_map(|g| g.cell_ids.clone()).collect();
        all.sort_unstable();
        prop_assert_eq!(&all, &marked);
        for w in regions.windows(2) {
            prop_assert!(w[0].cell_ids[0] < w[1].cell_ids[0]);
        }
        for g in &regions {
            // connectivity by traversal within the region
            let mut seen = vec![g.cell_ids[0]];
            let mut k = 0;
            while k < seen.len() {
                for &nb in pp.neighbors(seen[k]) {
                    if g.cell_ids.contains(&nb) && !seen.contains(&nb) {
                        seen.push(nb);
                    }
                }
                k += 1;
            }
            prop_assert_eq!(seen.len(), g.cell_ids.len());
        }
    }
}
