//! Test problems and their discrete least-squares functionals.
//!
//! Both the function-fitting loss `‖f − v‖²_T` and the LSNN functional
//! `Σ_q w_q (β·∇v + γv − f)² + Σ_E |β·n||E| (v − g)²` are weighted sums of
//! squared point residuals `r = c_v·v(x) + c_t·(t·∇v)(x) − y`. [`ResidualSystem`]
//! stores that common form once.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::batch::{BlockData, BlockKernel, BLOCK};
use crate::error::{AneError, Result};
use crate::geometry::Point;
use crate::network::{sum_in_order, Kernel, Network, OutputParams, CHUNK};
use crate::quadrature::{inflow_mesh, InflowBoundaryMesh, QuadratureGrid, RectDomain};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> Point + Send + Sync>;

#[derive(Clone)]
pub struct FunctionTarget {
    pub name: String,
    pub alpha: f64,
    pub domain: RectDomain,
    pub f: ScalarField,
}

impl FunctionTarget {
    pub fn eval(&self, p: Point) -> f64 {
        (self.f)(p)
    }
}

impl fmt::Debug for FunctionTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionTarget").field("name", &self.name).field("alpha", &self.alpha).finish()
    }
}

/// `f(x, y) = tanh((x² + y² − 1/4)/α) − tanh(3/(4α))` on `[−1, 1]²`.
pub fn target_transition(alpha: f64) -> Result<FunctionTarget> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(AneError::Config(format!("alpha must be positive, got {alpha}")));
    }
    let shift = (0.75 / alpha).tanh();
    Ok(FunctionTarget {
        name: "transition".into(),
        alpha,
        domain: RectDomain::symmetric_unit(),
        f: Arc::new(move |p: Point| ((p.x * p.x + p.y * p.y - 0.25) / alpha).tanh() - shift),
    })
}

/// `β·∇u + γu = f` in Ω, `u = g` on the inflow boundary.
#[derive(Clone)]
pub struct AdvectionProblem {
    pub name: String,
    pub domain: RectDomain,
    pub beta: VectorField,
    pub gamma: ScalarField,
    pub f: ScalarField,
    pub g: ScalarField,
    pub exact: Option<ScalarField>,
}

impl fmt::Debug for AdvectionProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdvectionProblem").field("name", &self.name).field("domain", &self.domain).finish()
    }
}

impl AdvectionProblem {
    pub fn inflow(&self, m_b: usize) -> Result<InflowBoundaryMesh> {
        let beta = self.beta.clone();
        inflow_mesh(&self.domain, move |p| beta(p), m_b)
    }
}

/// Interface position on the bottom inflow side for the two-segment problem.
pub const TWO_SEGMENTS_KINK: f64 = 43.0 / 64.0;

/// Piecewise-constant advection on `(0,1)²` with a discontinuity along two segments.
pub fn problem_two_segments() -> AdvectionProblem {
    let r = std::f64::consts::SQRT_2 - 1.0;
    AdvectionProblem {
        name: "two-segments".into(),
        domain: RectDomain::unit_square(),
        beta: Arc::new(move |p: Point| if p.y < p.x { Point::new(-r, 1.0) } else { Point::new(-1.0, r) }),
        gamma: Arc::new(|_| 0.0),
        f: Arc::new(|_| 0.0),
        g: Arc::new(|p: Point| if p.y <= 0.0 && p.x < TWO_SEGMENTS_KINK { -1.0 } else { 1.0 }),
        exact: Some(Arc::new(move |p: Point| {
            let s = if p.y < p.x { p.x + r * p.y } else { r * p.x + p.y };
            if s < TWO_SEGMENTS_KINK {
                -1.0
            } else {
                1.0
            }
        })),
    }
}

/// Constant advection along the diagonal with a solution jumping across `y = x`.
/// Points on the diagonal take the `sin` branch.
pub fn problem_nonconstant_jump() -> AdvectionProblem {
    let s2 = std::f64::consts::SQRT_2;
    let b = std::f64::consts::FRAC_1_SQRT_2;
    AdvectionProblem {
        name: "nonconstant-jump".into(),
        domain: RectDomain::unit_square(),
        beta: Arc::new(move |_| Point::new(b, b)),
        gamma: Arc::new(|_| 1.0),
        f: Arc::new(move |p: Point| {
            let s = p.x + p.y;
            if p.y >= p.x {
                s2 * s.cos() + s.sin()
            } else {
                -s2 * s.sin() + s.cos()
            }
        }),
        g: Arc::new(|p: Point| if p.y <= 0.0 { p.x.cos() } else { p.y.sin() }),
        exact: Some(Arc::new(|p: Point| {
            let s = p.x + p.y;
            if p.y >= p.x {
                s.sin()
            } else {
                s.cos()
            }
        })),
    }
}

#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Function(FunctionTarget),
    Advection(AdvectionProblem),
}

impl ProblemSpec {
    pub const NAMES: [&'static str; 3] = ["transition", "two-segments", "nonconstant-jump"];

    pub fn by_name(name: &str, alpha: f64) -> Result<Self> {
        match name {
            "transition" => Ok(Self::Function(target_transition(alpha)?)),
            "two-segments" => Ok(Self::Advection(problem_two_segments())),
            "nonconstant-jump" => Ok(Self::Advection(problem_nonconstant_jump())),
            other => Err(AneError::UnknownProblem(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Function(t) => &t.name,
            Self::Advection(p) => &p.name,
        }
    }

    pub fn domain(&self) -> RectDomain {
        match self {
            Self::Function(t) => t.domain,
            Self::Advection(p) => p.domain,
        }
    }
}

/// Weighted point residuals `r_q = c_v v(x_q) + c_t ∂_{t_q} v(x_q) − y_q`, loss `Σ_q w_q r_q²`.
#[derive(Debug, Clone, Default)]
pub struct ResidualSystem {
    pub points: Vec<Point>,
    pub tangents: Vec<[f64; 2]>,
    pub coef_v: Vec<f64>,
    pub coef_t: Vec<f64>,
    pub target: Vec<f64>,
    pub weight: Vec<f64>,
}

impl ResidualSystem {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push(&mut self, p: Point, t: [f64; 2], cv: f64, ct: f64, y: f64, w: f64) {
        self.points.push(p);
        self.tangents.push(t);
        self.coef_v.push(cv);
        self.coef_t.push(ct);
        self.target.push(y);
        self.weight.push(w);
    }

    /// `‖f − v‖²_T` on the grid.
    pub fn function_fit(target: &FunctionTarget, grid: &QuadratureGrid) -> Self {
        let mut s = Self::default();
        for &p in &grid.points {
            s.push(p, [0.0, 0.0], 1.0, 0.0, target.eval(p), grid.weight);
        }
        s
    }

    /// Discrete LS functional: interior grid points first, then inflow edge midpoints.
    pub fn lsnn(problem: &AdvectionProblem, grid: &QuadratureGrid, inflow: &InflowBoundaryMesh) -> Self {
        let mut s = Self::default();
        for &p in &grid.points {
            let b = (problem.beta)(p);
            s.push(p, [b.x, b.y], (problem.gamma)(p), 1.0, (problem.f)(p), grid.weight);
        }
        for e in &inflow.edges {
            s.push(e.midpoint, [0.0, 0.0], 1.0, 0.0, (problem.g)(e.midpoint), e.flux * e.length);
        }
        s
    }

    fn uses_tangent(&self, q: usize) -> Option<[f64; 2]> {
        (self.coef_t[q] != 0.0).then_some(self.tangents[q])
    }

    fn chunks(&self) -> Vec<std::ops::Range<usize>> {
        (0..self.len()).step_by(CHUNK).map(|s| s..(s + CHUNK).min(self.len())).collect()
    }

    /// Residuals of `net`.
    pub fn residuals(&self, net: &Network) -> Result<Vec<f64>> {
        Network::check_points(&self.points)?;
        let kernel = Kernel::new(net);
        Ok(self
            .chunks()
            .into_par_iter()
            .flat_map_iter(|range| {
                let mut ws = kernel.workspace();
                range
                    .map(|q| {
                        let (v, vt) = kernel.forward(&mut ws, self.points[q], self.uses_tangent(q));
                        self.coef_v[q] * v + self.coef_t[q] * vt - self.target[q]
                    })
                    .collect::<Vec<_>>()
            })
            .collect())
    }

    /// Residuals of an arbitrary function with a known directional derivative.
    pub fn residuals_of(&self, v: impl Fn(Point) -> f64, dv: impl Fn(Point, [f64; 2]) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|q| {
                let p = self.points[q];
                let vt = if self.coef_t[q] != 0.0 { dv(p, self.tangents[q]) } else { 0.0 };
                self.coef_v[q] * v(p) + self.coef_t[q] * vt - self.target[q]
            })
            .collect()
    }

    /// Per-point contributions `w_q r_q²`.
    pub fn contributions(&self, net: &Network) -> Result<Vec<f64>> {
        Ok(self.residuals(net)?.iter().zip(&self.weight).map(|(r, w)| w * r * r).collect())
    }

    pub fn loss(&self, net: &Network) -> Result<f64> {
        Ok(self.contributions(net)?.iter().sum())
    }

    /// `Σ_q w_q (c_v v + c_t ∂_t v)²`: the functional of `net` with zero data.
    pub fn energy(&self, net: &Network) -> Result<f64> {
        let r = self.residuals(net)?;
        Ok(r.iter().zip(&self.target).zip(&self.weight).map(|((r, y), w)| w * (r + y) * (r + y)).sum())
    }

    /// Loss of the zero function, `Σ_q w_q y_q²`.
    pub fn reference_loss(&self) -> f64 {
        self.target.iter().zip(&self.weight).map(|(y, w)| w * y * y).sum()
    }

    /// Loss and its gradient with respect to the flat parameter vector.
    pub fn loss_and_grad(&self, net: &Network) -> Result<(f64, Vec<f64>)> {
        Network::check_points(&self.points)?;
        let with_t = self.coef_t.iter().any(|&c| c != 0.0);
        let kernel = BlockKernel::new(net, with_t);
        let np = net.param_count();
        let parts: Vec<(f64, Vec<f64>)> = self
            .chunks()
            .into_par_iter()
            .map(|range| {
                let mut scratch = kernel.scratch();
                let mut g = vec![0.0; np];
                let mut loss = 0.0;
                let (mut x, mut y, mut tx, mut ty) = ([0.0; BLOCK], [0.0; BLOCK], [0.0; BLOCK], [0.0; BLOCK]);
                let mut start = range.start;
                while start < range.end {
                    let end = (start + BLOCK).min(range.end);
                    let nb = end - start;
                    for (b, q) in (start..end).enumerate() {
                        x[b] = self.points[q].x;
                        y[b] = self.points[q].y;
                        tx[b] = self.tangents[q][0];
                        ty[b] = self.tangents[q][1];
                    }
                    let data = BlockData {
                        x: &x[..nb],
                        y: &y[..nb],
                        tx: &tx[..nb],
                        ty: &ty[..nb],
                        coef_v: &self.coef_v[start..end],
                        coef_t: &self.coef_t[start..end],
                        target: &self.target[start..end],
                        weight: &self.weight[start..end],
                    };
                    loss += kernel.loss_and_grad(&mut scratch, &data, &mut g);
                    start = end;
                }
                (loss, g)
            })
            .collect();
        let loss = parts.iter().map(|p| p.0).sum();
        Ok((loss, sum_in_order(parts.into_iter().map(|p| p.1).collect(), np)))
    }

    /// Least-squares output layer for fixed hidden layers: minimises the loss
    /// over `(ω^L, b^L)`, taking the minimum-norm solution when the basis
    /// `{1, φ_i}` is rank deficient.
    pub fn solve_output(&self, net: &Network) -> Result<OutputParams> {
        Network::check_points(&self.points)?;
        let n = net.last_width();
        let kernel = Kernel::new(net);
        let last = net.num_hidden_layers() - 1;
        let rows: Vec<Vec<f64>> = self
            .chunks()
            .into_par_iter()
            .flat_map_iter(|range| {
                let mut ws = kernel.workspace();
                range
                    .map(|q| {
                        let t = self.uses_tangent(q);
                        kernel.forward(&mut ws, self.points[q], t);
                        let (cv, ct) = (self.coef_v[q], self.coef_t[q]);
                        let sw = self.weight[q].sqrt();
                        let h = ws.h(last);
                        let mut row = Vec::with_capacity(n + 2);
                        if t.is_some() {
                            let ht = ws.ht(last);
                            row.extend(h.iter().zip(ht).map(|(a, b)| sw * (cv * a + ct * b)));
                        } else {
                            row.extend(h.iter().map(|a| sw * cv * a));
                        }
                        row.push(-sw * cv);
                        row.push(sw * self.target[q]);
                        row
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let a = DMatrix::from_fn(rows.len(), n + 1, |i, j| rows[i][j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r[n + 1]));
        let svd = a.svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let c = svd
            .solve(&b, 1e-12 * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| AneError::Config(format!("output solve failed: {e}")))?;
        Ok(OutputParams { weights: c.iter().take(n).copied().collect(), bias: c[n] })
    }
}

/// `(‖f − v‖²_T, ∇_θ)` for a function target.
pub fn fn_loss(target: &FunctionTarget, net: &Network, grid: &QuadratureGrid) -> Result<(f64, Vec<f64>)> {
    ResidualSystem::function_fit(target, grid).loss_and_grad(net)
}

/// `(L_T(v; f), ∇_θ)` for an advection–reaction problem.
pub fn lsnn_loss(
    problem: &AdvectionProblem,
    net: &Network,
    grid: &QuadratureGrid,
    inflow: &InflowBoundaryMesh,
) -> Result<(f64, Vec<f64>)> {
    ResidualSystem::lsnn(problem, grid, inflow).loss_and_grad(net)
}

/// `‖u − v‖_T / ‖u‖_T`.
pub fn l2_relative_error(net: &Network, exact: impl Fn(Point) -> f64, grid: &QuadratureGrid) -> Result<f64> {
    let v = net.eval(&grid.points)?;
    let u = grid.sample(exact);
    let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
    Ok(grid.norm(&diff)? / grid.norm(&u)?)
}
