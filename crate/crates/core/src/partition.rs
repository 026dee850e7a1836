//! Physical partitions: the convex cells on which a ReLU network is affine.
//!
//! `K^(1)` is the arrangement of the first-layer lines clipped to the domain.
//! `K^(l)` refines `K^(l−1)`: on each cell every layer-`l` pre-activation is
//! affine, so a cell is cut by the zero line of each neuron whose values at
//! the cell vertices change sign. Cuts inside one cell are applied in neuron
//! order, re-testing every sub-cell.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{AneError, Result};
use crate::geometry::{
    convex_contains, polygon_centroid, segment_distance, signed_area, split_convex, Affine2, BBox, Point,
};
use crate::network::Network;
use crate::quadrature::RectDomain;

/// Relative threshold on vertex values below which a value counts as zero.
pub const REL_SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub sign: f64,
    pub geom: f64,
    pub area: f64,
}

impl Tolerances {
    pub fn for_domain(domain: &RectDomain) -> Self {
        Self { sign: REL_SIGN_TOL, geom: 1e-9 * domain.diameter(), area: 1e-12 * domain.area() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCell {
    pub id: usize,
    /// Counter-clockwise vertices.
    pub vertices: Vec<Point>,
    /// Hidden layer whose neurons produced the last cut of this cell.
    pub level: usize,
}

impl ConvexCell {
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        polygon_centroid(&self.vertices)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        convex_contains(&self.vertices, p, tol)
    }

    pub fn bbox(&self) -> BBox {
        BBox::of(&self.vertices)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// A maximal connected set of marked cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    /// Sorted cell ids.
    pub cell_ids: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PhysicalPartition {
    pub domain: RectDomain,
    /// `l` such that this is `K^(l)`.
    pub layer: usize,
    pub cells: Vec<ConvexCell>,
    /// Pairs `(a, b)`, `a < b`, of cells sharing a boundary segment of positive length.
    pub adjacency: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    tol: Tolerances,
    locator: Locator,
}

impl PhysicalPartition {
    /// Build a partition from raw cells, assigning ids in order and computing adjacency.
    pub fn from_cells(domain: RectDomain, layer: usize, cells: Vec<(Vec<Point>, usize)>) -> Self {
        let tol = Tolerances::for_domain(&domain);
        let cells: Vec<ConvexCell> = cells
            .into_iter()
            .enumerate()
            .map(|(id, (vertices, level))| ConvexCell { id, vertices, level })
            .collect();
        let adjacency = compute_adjacency(&cells, tol.geom);
        let mut neighbors = vec![Vec::new(); cells.len()];
        for &(a, b) in &adjacency {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        let locator = Locator::new(&domain, &cells, tol.geom);
        Self { domain, layer, cells, adjacency, neighbors, tol, locator }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.neighbors[id]
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area()).sum()
    }

    /// Cell id containing each point; ties on shared edges go to the lowest id.
    pub fn locate(&self, points: &[Point]) -> Result<Vec<usize>> {
        points.iter().map(|&p| self.locate_point(p)).collect()
    }

    pub fn locate_point(&self, p: Point) -> Result<usize> {
        if !p.is_finite() || !self.domain.contains(p, self.tol.geom) {
            return Err(AneError::OutsideDomain { x: p.x, y: p.y });
        }
        for &id in self.locator.candidates(p) {
            if self.cells[id].contains(p, self.tol.geom) {
                return Ok(id);
            }
        }
        // numerically lost between cells: take the nearest one
        let mut best = (f64::INFINITY, 0);
        for c in &self.cells {
            let d = c.edges().map(|(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min);
            if d < best.0 {
                best = (d, c.id);
            }
        }
        Ok(best.1)
    }

    /// Exhaustive lowest-id containment, without the bucket grid.
    pub fn locate_exhaustive(&self, p: Point) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(p, self.tol.geom))
    }

    /// Connected components of the marked cells under edge adjacency, ordered
    /// by their smallest member.
    pub fn regroup(&self, marked: &[usize]) -> Vec<Region> {
        let set: BTreeSet<usize> = marked.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut regions = Vec::new();
        for &start in &set {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(c) = queue.pop_front() {
                for &nb in &self.neighbors[c] {
                    if set.contains(&nb) && seen.insert(nb) {
                        comp.push(nb);
                        queue.push_back(nb);
                    }
                }
            }
            comp.sort_unstable();
            regions.push(Region { cell_ids: comp });
        }
        regions
    }

    pub fn region_geometry(&self, region: &Region) -> RegionShape {
        RegionShape::new(region.cell_ids.iter().map(|&i| self.cells[i].vertices.clone()).collect(), self.tol.geom)
    }
}

/// `K^(1)`: the domain cut by every first-layer line `cos φ·x + sin φ·y − b = 0`.
pub fn build_layer1(net: &Network, domain: &RectDomain) -> PhysicalPartition {
    let tol = Tolerances::for_domain(domain);
    let lines = net.first_layer_affine();
    let pieces = cut_sequentially(domain.corners().to_vec(), &lines, &tol);
    let cells = pieces.into_iter().map(|v| (v, 1)).collect();
    PhysicalPartition::from_cells(*domain, 1, cells)
}

/// `K^(l)` from `K^(l−1)`.
pub fn refine_layer(pp: &PhysicalPartition, net: &Network, layer: usize) -> Result<PhysicalPartition> {
    let max = net.num_hidden_layers();
    if layer < 2 || layer > max {
        return Err(AneError::LayerOutOfRange { layer, max });
    }
    let tol = pp.tol;
    let mut cells = Vec::with_capacity(pp.cells.len());
    for cell in &pp.cells {
        let interior = cell.centroid();
        let outputs = net.affine_outputs_at(interior, layer - 1);
        let pre = net.dense_pre_affine(layer, &outputs[layer - 2]);
        let pieces = cut_sequentially(cell.vertices.clone(), &pre, &tol);
        if pieces.len() == 1 {
            cells.push((pieces.into_iter().next().unwrap(), cell.level));
        } else {
            cells.extend(pieces.into_iter().map(|v| (v, layer)));
        }
    }
    Ok(PhysicalPartition::from_cells(pp.domain, layer, cells))
}

/// The partition induced by the first `layers` hidden layers.
pub fn partition_up_to(net: &Network, domain: &RectDomain, layers: usize) -> Result<PhysicalPartition> {
    let mut pp = build_layer1(net, domain);
    for l in 2..=layers {
        pp = refine_layer(&pp, net, l)?;
    }
    Ok(pp)
}

/// The full physical partition `K^(L−1)` of `net`.
pub fn physical_partition(net: &Network, domain: &RectDomain) -> PhysicalPartition {
    partition_up_to(net, domain, net.num_hidden_layers()).expect("layer range is valid by construction")
}

fn cut_sequentially(start: Vec<Point>, lines: &[Affine2], tol: &Tolerances) -> Vec<Vec<Point>> {
    let mut pieces = vec![start];
    for g in lines {
        let mut next = Vec::with_capacity(pieces.len() + 1);
        for piece in pieces {
            match split_convex(&piece, g, tol.sign, tol.geom, tol.area) {
                Some((neg, pos)) => {
                    next.push(neg);
                    next.push(pos);
                }
                None => next.push(piece),
            }
        }
        pieces = next;
    }
    pieces
}

/// Length of the boundary shared by two convex polygons.
pub fn shared_length(a: &[Point], b: &[Point], tol: f64) -> f64 {
    let mut total = 0.0;
    let (na, nb) = (a.len(), b.len());
    for i in 0..na {
        let (p, q) = (a[i], a[(i + 1) % na]);
        for j in 0..nb {
            let (r, s) = (b[j], b[(j + 1) % nb]);
            total += collinear_overlap(p, q, r, s, tol);
        }
    }
    total
}

/// Overlap length of segment `[r, s]` with `[p, q]` when both lie on one line.
fn collinear_overlap(p: Point, q: Point, r: Point, s: Point, tol: f64) -> f64 {
    match overlap_interval(p, q, r, s, tol) {
        Some((lo, hi)) => (hi - lo) * p.dist(q),
        None => 0.0,
    }
}

/// Parameter interval on `[p, q]` covered by `[r, s]` when collinear.
fn overlap_interval(p: Point, q: Point, r: Point, s: Point, tol: f64) -> Option<(f64, f64)> {
    let e = q - p;
    let l2 = e.dot(e);
    if l2 == 0.0 {
        return None;
    }
    let len = l2.sqrt();
    if e.cross(r - p).abs() > tol * len || e.cross(s - p).abs() > tol * len {
        return None;
    }
    let tr = (r - p).dot(e) / l2;
    let ts = (s - p).dot(e) / l2;
    let lo = tr.min(ts).max(0.0);
    let hi = tr.max(ts).min(1.0);
    (hi > lo).then_some((lo, hi))
}

fn compute_adjacency(cells: &[ConvexCell], tol: f64) -> Vec<(usize, usize)> {
    let boxes: Vec<BBox> = cells.iter().map(|c| c.bbox()).collect();
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| boxes[a].min.x.total_cmp(&boxes[b].min.x).then(a.cmp(&b)));
    let mut pairs = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if boxes[j].min.x > boxes[i].max.x + tol {
                break;
            }
            if !boxes[i].overlaps(&boxes[j], tol) {
                continue;
            }
            if shared_length(&cells[i].vertices, &cells[j].vertices, tol) > 10.0 * tol {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Uniform bucket grid over the domain listing candidate cells per bucket.
#[derive(Debug, Clone)]
struct Locator {
    origin: Point,
    inv_h: (f64, f64),
    n: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new(domain: &RectDomain, cells: &[ConvexCell], tol: f64) -> Self {
        let n = ((cells.len() as f64).sqrt().ceil() as usize).clamp(1, 256);
        let hx = (domain.x_max - domain.x_min) / n as f64;
        let hy = (domain.y_max - domain.y_min) / n as f64;
        let mut loc = Self {
            origin: Point::new(domain.x_min, domain.y_min),
            inv_h: (1.0 / hx, 1.0 / hy),
            n,
            buckets: vec![Vec::new(); n * n],
        };
        for c in cells {
            let b = c.bbox();
            let (i0, j0) = loc.bucket(Point::new(b.min.x - tol, b.min.y - tol));
            let (i1, j1) = loc.bucket(Point::new(b.max.x + tol, b.max.y + tol));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * n + i].push(c.id);
                }
            }
        }
        loc
    }

    fn bucket(&self, p: Point) -> (usize, usize) {
        let fi = ((p.x - self.origin.x) * self.inv_h.0).floor();
        let fj = ((p.y - self.origin.y) * self.inv_h.1).floor();
        let clamp = |f: f64| (f.max(0.0) as usize).min(self.n - 1);
        (clamp(fi), clamp(fj))
    }

    fn candidates(&self, p: Point) -> &[usize] {
        let (i, j) = self.bucket(p);
        &self.buckets[j * self.n + i]
    }
}

/// Geometry of a union of convex polygons (a region or a piece of one).
#[derive(Debug, Clone)]
pub struct RegionShape {
    pub polygons: Vec<Vec<Point>>,
    tol: f64,
}

impl RegionShape {
    pub fn new(polygons: Vec<Vec<Point>>, tol: f64) -> Self {
        Self { polygons, tol }
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(|p| signed_area(p)).sum()
    }

    /// Area-weighted average of the member centroids.
    pub fn centroid(&self) -> Point {
        let mut acc = Point::default();
        let mut total = 0.0;
        for p in &self.polygons {
            let a = signed_area(p);
            acc = acc + polygon_centroid(p) * a;
            total += a;
        }
        if total > 0.0 {
            acc * (1.0 / total)
        } else {
            acc
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.polygons.iter().any(|poly| convex_contains(poly, p, self.tol))
    }

    /// Every edge of every member polygon.
    pub fn all_edges(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for poly in &self.polygons {
            let n = poly.len();
            for i in 0..n {
                out.push((poly[i], poly[(i + 1) % n]));
            }
        }
        out
    }

    /// Pieces of member edges not shared with another member polygon.
    pub fn boundary_edges(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for (pi, poly) in self.polygons.iter().enumerate() {
            let n = poly.len();
            for i in 0..n {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                let mut covered: Vec<(f64, f64)> = Vec::new();
                for (qi, other) in self.polygons.iter().enumerate() {
                    if qi == pi {
                        continue;
                    }
                    let m = other.len();
                    for j in 0..m {
                        if let Some(iv) = overlap_interval(a, b, other[j], other[(j + 1) % m], self.tol) {
                            covered.push(iv);
                        }
                    }
                }
                covered.sort_by(|x, y| x.0.total_cmp(&y.0));
                let len = a.dist(b);
                let mut t = 0.0;
                let min_t = if len > 0.0 { self.tol / len } else { 1.0 };
                for (lo, hi) in covered {
                    if lo - t > min_t {
                        out.push((a + (b - a) * t, a + (b - a) * lo));
                    }
                    t = t.max(hi);
                }
                if 1.0 - t > min_t {
                    out.push((a + (b - a) * t, b));
                }
            }
        }
        out
    }

    pub fn boundary_midpoints(&self) -> Vec<Point> {
        self.boundary_edges().into_iter().map(|(a, b)| (a + b) * 0.5).collect()
    }

    /// Split by the zero line of `line`: polygons crossed by it are cut, the
    /// rest go to the side containing their centroid. Returns `(negative, positive)`.
    pub fn split_by_line(&self, line: &Affine2) -> (RegionShape, RegionShape) {
        let mut neg = Vec::new();
        let mut pos = Vec::new();
        for poly in &self.polygons {
            match split_convex(poly, line, REL_SIGN_TOL, self.tol, 0.0) {
                Some((a, b)) => {
                    neg.push(a);
                    pos.push(b);
                }
                None => {
                    if line.eval(polygon_centroid(poly)) < 0.0 {
                        neg.push(poly.clone());
                    } else {
                        pos.push(poly.clone());
                    }
                }
            }
        }
        (RegionShape::new(neg, self.tol), RegionShape::new(pos, self.tol))
    }
}
