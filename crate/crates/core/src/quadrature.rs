//! Uniform midpoint quadrature on rectangles and inflow-boundary meshes.

use crate::error::{AneError, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl RectDomain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max) {
            return Err(AneError::Domain(format!("[{x_min}, {x_max}] x [{y_min}, {y_max}] is empty")));
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    /// `[−1, 1]²`
    pub fn symmetric_unit() -> Self {
        Self { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 }
    }

    /// `(0, 1)²`
    pub fn unit_square() -> Self {
        Self { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn diameter(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    /// Counter-clockwise corners starting at `(x_min, y_min)`.
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x_min, self.y_min),
            Point::new(self.x_max, self.y_min),
            Point::new(self.x_max, self.y_max),
            Point::new(self.x_min, self.y_max),
        ]
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p.x >= self.x_min - tol && p.x <= self.x_max + tol && p.y >= self.y_min - tol && p.y <= self.y_max + tol
    }
}

/// Cell-centred composite midpoint rule with `m × m` points.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub domain: RectDomain,
    pub m: usize,
    pub points: Vec<Point>,
    /// Weight of every point, `|Ω| / m²`.
    pub weight: f64,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(u, v)_T = Σ_q w u(x_q) v(x_q)`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        for len in [u.len(), v.len()] {
            if len != self.points.len() {
                return Err(AneError::LengthMismatch { expected: self.points.len(), actual: len });
            }
        }
        Ok(self.weight * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        Ok(self.inner(v, v)?.sqrt())
    }

    pub fn integrate(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.points.len() {
            return Err(AneError::LengthMismatch { expected: self.points.len(), actual: v.len() });
        }
        Ok(self.weight * v.iter().sum::<f64>())
    }

    pub fn sample(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.points.iter().map(|&p| f(p)).collect()
    }
}

pub fn make_grid(domain: RectDomain, m: usize) -> Result<QuadratureGrid> {
    if m == 0 {
        return Err(AneError::ZeroResolution);
    }
    let hx = (domain.x_max - domain.x_min) / m as f64;
    let hy = (domain.y_max - domain.y_min) / m as f64;
    let mut points = Vec::with_capacity(m * m);
    for j in 0..m {
        let y = domain.y_min + (j as f64 + 0.5) * hy;
        for i in 0..m {
            points.push(Point::new(domain.x_min + (i as f64 + 0.5) * hx, y));
        }
    }
    Ok(QuadratureGrid { domain, m, points, weight: domain.area() / (m * m) as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub midpoint: Point,
    pub length: f64,
    pub normal: Point,
    /// `|β·n|` at the midpoint.
    pub flux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// Uniform segments of the inflow boundary `{β·n < 0}`.
#[derive(Debug, Clone, Default)]
pub struct InflowBoundaryMesh {
    pub edges: Vec<BoundaryEdge>,
    pub sides: Vec<Side>,
}

impl InflowBoundaryMesh {
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn midpoints(&self) -> Vec<Point> {
        self.edges.iter().map(|e| e.midpoint).collect()
    }
}

/// Split every side of the rectangle into `m_b` segments and keep those whose
/// midpoint sees inflow, `β(x_E)·n < 0`. Sides where `β·n` vanishes are
/// characteristic and produce no edges.
pub fn inflow_mesh(domain: &RectDomain, beta: impl Fn(Point) -> Point, m_b: usize) -> Result<InflowBoundaryMesh> {
    if m_b == 0 {
        return Err(AneError::ZeroResolution);
    }
    let c = domain.corners();
    let sides = [
        (Side::Bottom, c[0], c[1], Point::new(0.0, -1.0)),
        (Side::Right, c[1], c[2], Point::new(1.0, 0.0)),
        (Side::Top, c[2], c[3], Point::new(0.0, 1.0)),
        (Side::Left, c[3], c[0], Point::new(-1.0, 0.0)),
    ];
    let mut mesh = InflowBoundaryMesh::default();
    for (side, a, b, n) in sides {
        let len = a.dist(b) / m_b as f64;
        let mut any = false;
        for k in 0..m_b {
            let t = (k as f64 + 0.5) / m_b as f64;
            let mid = a + (b - a) * t;
            let bn = beta(mid).dot(n);
            if bn < 0.0 {
                any = true;
                mesh.edges.push(BoundaryEdge { midpoint: mid, length: len, normal: n, flux: -bn });
            }
        }
        if any {
            mesh.sides.push(side);
        }
    }
    Ok(mesh)
}
