//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ane_core::{Architecture, Network, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Network with angles in `[0, 2π)`, first-layer biases in `(−0.9, 0.9)` and
/// dense parameters in `(−1, 1)`.
pub fn random_net(widths: &[usize], rng: &mut ChaCha8Rng) -> Network {
    let arch = Architecture::new(widths.to_vec()).unwrap();
    let mut net = Network::zeros(&arch);
    for a in &mut net.first.angles {
        *a = rng.random_range(0.0..std::f64::consts::TAU);
    }
    for b in &mut net.first.biases {
        *b = rng.random_range(-0.9..0.9);
    }
    for l in &mut net.hidden {
        for w in l.weights.iter_mut() {
            *w = rng.random_range(-1.0..1.0);
        }
        for b in l.biases.iter_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    for w in &mut net.output.weights {
        *w = rng.random_range(-1.0..1.0);
    }
    net.output.bias = rng.random_range(-0.5..0.5);
    net
}

pub fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Scalar evaluation straight from the parameter structs: returns the output
/// and every layer's pre-activations.
pub fn scalar_eval(net: &Network, p: Point) -> (f64, Vec<Vec<f64>>) {
    let mut pre = Vec::new();
    let z1: Vec<f64> =
        net.first.angles.iter().zip(&net.first.biases).map(|(a, b)| a.cos() * p.x + a.sin() * p.y - b).collect();
    let mut h: Vec<f64> = z1.iter().map(|z| z.max(0.0)).collect();
    pre.push(z1);
    for l in &net.hidden {
        let mut z = Vec::with_capacity(l.biases.len());
        for j in 0..l.biases.len() {
            let mut s = -l.biases[j];
            for i in 0..l.n_in {
                s += l.weights[j * l.n_in + i] * h[i];
            }
            z.push(s);
        }
        h = z.iter().map(|v| v.max(0.0)).collect();
        pre.push(z);
    }
    let v = net.output.weights.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>() - net.output.bias;
    (v, pre)
}

/// Smallest pre-activation magnitude at `p`.
pub fn kink_distance(net: &Network, p: Point) -> f64 {
    scalar_eval(net, p).1.iter().flatten().fold(f64::INFINITY, |m, z| m.min(z.abs()))
}

/// Central difference of `f` at every coordinate of `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let a = f(&y);
            y[i] = x[i] - h;
            let b = f(&y);
            y[i] = x[i];
            (a - b) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖∞ / max(‖b‖∞, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let s = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    d / s.max(floor)
}

/// Random point inside a convex polygon, kept away from its boundary.
pub fn interior_sample(poly: &[Point], rng: &mut ChaCha8Rng) -> Point {
    let c = ane_core::geometry::polygon_centroid(poly);
    let i = rng.random_range(0..poly.len());
    let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
    let (mut s, mut t) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
    if s + t > 1.0 {
        s = 1.0 - s;
        t = 1.0 - t;
    }
    let q = c + (a - c) * s + (b - c) * t;
    c + (q - c) * 0.98
}

/// Activation pattern with near-zero pre-activations reported as `None`.
pub fn pattern(net: &Network, p: Point, tol: f64) -> Vec<Option<bool>> {
    scalar_eval(net, p).1.iter().flatten().map(|&z| if z.abs() <= tol { None } else { Some(z > 0.0) }).collect()
}

pub fn patterns_agree(a: &[Option<bool>], b: &[Option<bool>]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.is_none() || y.is_none() || x == y)
}

/// Connected components of equal labels on an `n × n` raster (4-neighbour).
pub fn raster_components<L: PartialEq>(labels: &[L], n: usize) -> usize {
    let mut seen = vec![false; labels.len()];
    let mut count = 0;
    for s in 0..labels.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(k) = stack.pop() {
            let (i, j) = (k % n, k / n);
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(k - 1);
            }
            if i + 1 < n {
                nb.push(k + 1);
            }
            if j > 0 {
                nb.push(k - n);
            }
            if j + 1 < n {
                nb.push(k + n);
            }
            for q in nb {
                if !seen[q] && labels[q] == labels[k] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
    }
    count
}

/// Cell-centred `n × n` raster on `[−1, 1]²`.
pub fn raster(n: usize) -> Vec<Point> {
    let h = 2.0 / n as f64;
    let mut pts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            pts.push(Point::new(-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h));
        }
    }
    pts
}

/// Sign vector of the first layer only (one bit per line).
pub fn line_signs(lines: &[(f64, f64)], p: Point) -> Vec<bool> {
    lines.iter().map(|(a, b)| a.cos() * p.x + a.sin() * p.y - b > 0.0).collect()
}
