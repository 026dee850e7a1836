//! Neuron initialization and the ANE drivers.
//!
//! One loop trains the current network, computes its physical partition and
//! indicators, and either stops or enlarges the network. Width grows by one
//! first-layer neuron per marked cell (two-layer networks) or by one neuron
//! per marked region in the last hidden layer. After two consecutive loops
//! with an improvement rate at or below `δ`, the last width step is undone
//! and a new hidden layer is appended instead.

use log::{debug, info, warn};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{AneError, Result};
use crate::estimators::{improvement_rate, mark_average, mark_bulk, system_indicators, IndicatorSet};
use crate::geometry::{polygon_centroid, polygon_covariance, segment_intersections, Affine2, BBox, Point};
use crate::network::{Architecture, Network};
use crate::optimizer::{minimize, AdamConfig, MinimizeResult};
use crate::partition::{partition_up_to, physical_partition, PhysicalPartition, Region, RegionShape};
use crate::problems::{l2_relative_error, ProblemSpec, ResidualSystem, ScalarField};
use crate::quadrature::{make_grid, QuadratureGrid, RectDomain};

/// Standard deviation of the random output weights of a new layer.
pub const NEW_LAYER_OUTPUT_STD: f64 = 0.1;

/// Depth cap of the heuristic point-set recursion.
pub const HEURISTIC_MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marking {
    Average,
    Bulk(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AneConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub r: f64,
    pub marking: Marking,
    pub max_loops: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Initial first-layer width.
    pub n1: usize,
    /// Quadrature points per axis.
    pub m: usize,
    /// Inflow edges per boundary side.
    pub m_b: usize,
    /// Re-solve the output layer by least squares right after a layer is added.
    pub refit_output_after_layer: bool,
}

impl Default for AneConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            delta: 0.6,
            r: 1.0,
            marking: Marking::Bulk(0.5),
            max_loops: 20,
            adam: AdamConfig::default(),
            seed: 0,
            n1: 12,
            m: 200,
            m_b: 200,
            refit_output_after_layer: false,
        }
    }
}

impl AneConfig {
    /// Reference settings for a named problem, `None` for unknown names.
    pub fn for_problem(name: &str) -> Option<Self> {
        let (m, n1, gamma1, epsilon, lr) = match name {
            "transition" => (200, 12, 0.5, 0.05, 0.005),
            "two-segments" => (100, 6, 0.6, 0.05, 0.003),
            "nonconstant-jump" => (100, 6, 0.3, 0.03, 0.003),
            _ => return None,
        };
        Some(Self {
            epsilon,
            marking: Marking::Bulk(gamma1),
            n1,
            m,
            m_b: m,
            adam: AdamConfig { learning_rate: lr, ..AdamConfig::default() },
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(AneError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 2.0) {
            return Err(AneError::Config(format!("delta must lie in (0, 2), got {}", self.delta)));
        }
        if !(self.r > 0.0) {
            return Err(AneError::Config(format!("r must be positive, got {}", self.r)));
        }
        if let Marking::Bulk(g) = self.marking {
            if !(g > 0.0 && g < 1.0) {
                return Err(AneError::Config(format!("gamma1 must lie in (0, 1), got {g}")));
            }
        }
        if self.max_loops == 0 {
            return Err(AneError::Config("max_loops must be at least 1".into()));
        }
        if self.n1 == 0 {
            return Err(AneError::Config("n1 must be at least 1".into()));
        }
        if self.m == 0 || self.m_b == 0 {
            return Err(AneError::ZeroResolution);
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Accepted,
    RolledBack,
    Final,
    Unconverged,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accepted => "accepted",
            Self::RolledBack => "rolled_back",
            Self::Final => "final",
            Self::Unconverged => "unconverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AneRunRecord {
    pub structure: String,
    pub params: usize,
    /// Relative L² error against the exact solution when known, else `xi_rel`.
    pub error: f64,
    /// Estimator used for the improvement rate.
    pub xi: f64,
    pub xi_rel: f64,
    pub eta: Option<f64>,
    pub status: RunStatus,
    pub iterations: usize,
    pub loss: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AneHistory {
    pub records: Vec<AneRunRecord>,
    /// Consecutive runs with `η ≤ δ` since the last layer addition.
    pub low_eta_streak: usize,
    pub converged: bool,
}

/// Everything a caller may want to persist after a loop.
pub struct LoopSnapshot<'a> {
    pub index: usize,
    pub network: &'a Network,
    pub partition: &'a PhysicalPartition,
    pub record: &'a AneRunRecord,
}

#[derive(Debug, Clone)]
pub struct AneOutcome {
    pub history: AneHistory,
    pub network: Network,
}

/// Two-layer network whose first layer is a uniform grid of axis-parallel
/// lines: `⌊n1/2⌋` neurons with angle 0 (vertical lines) at
/// `x_min + i(x_max − x_min)/count`, then `⌈n1/2⌉` with angle `π/2`
/// (horizontal lines) spaced the same way in `y`. Output weights are zero.
pub fn init_two_layer_uniform(n1: usize, domain: &RectDomain) -> Result<Network> {
    let arch = Architecture::new(vec![n1])?;
    let mut net = Network::zeros(&arch);
    let nv = n1 / 2;
    let nh = n1 - nv;
    for i in 0..nv {
        net.first.angles[i] = 0.0;
        net.first.biases[i] = domain.x_min + i as f64 * (domain.x_max - domain.x_min) / nv as f64;
    }
    for i in 0..nh {
        net.first.angles[nv + i] = std::f64::consts::FRAC_PI_2;
        net.first.biases[nv + i] = domain.y_min + i as f64 * (domain.y_max - domain.y_min) / nh as f64;
    }
    Ok(net)
}

/// Replace the output layer by the least-squares optimum for fixed hidden layers.
pub fn output_weight_solve(net: &mut Network, system: &ResidualSystem) -> Result<()> {
    net.output = system.solve_output(net)?;
    Ok(())
}

/// Unit normal of the smallest-variance direction of a symmetric 2×2 matrix,
/// with the sign chosen so the angle lies in `(−π/2, π/2]`. `None` when the
/// eigenvalues coincide.
pub fn smallest_variance_direction(sxx: f64, sxy: f64, syy: f64) -> Option<Point> {
    let half = 0.5 * (sxx - syy);
    let rad = half.hypot(sxy);
    let scale = sxx.abs().max(syy.abs()).max(f64::MIN_POSITIVE);
    if rad <= 1e-12 * scale {
        return None;
    }
    let lambda = 0.5 * (sxx + syy) - rad;
    // rows of (S − λI) are orthogonal to the eigenvector; use the larger one
    let r1 = Point::new(sxx - lambda, sxy);
    let r2 = Point::new(sxy, syy - lambda);
    let r = if r1.norm() >= r2.norm() { r1 } else { r2 };
    let v = Point::new(-r.y, r.x);
    Some(canonical_normal(v * (1.0 / v.norm())))
}

fn canonical_normal(n: Point) -> Point {
    if n.x < 0.0 || (n.x == 0.0 && n.y < 0.0) {
        n * -1.0
    } else {
        n
    }
}

/// `(angle, bias)` of the line through the centroid of `cell` orthogonal to
/// the smallest-variance direction of `points` (the quadrature points in the
/// cell). Cells with fewer than three points use the cell's area moments.
pub fn first_layer_neuron_for_cell(cell: &[Point], points: &[Point]) -> (f64, f64) {
    let (sxx, sxy, syy) = if points.len() >= 3 {
        let n = points.len() as f64;
        let mean = points.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n);
        let mut s = (0.0, 0.0, 0.0);
        for &p in points {
            let d = p - mean;
            s.0 += d.x * d.x;
            s.1 += d.x * d.y;
            s.2 += d.y * d.y;
        }
        (s.0 / n, s.1 / n, s.2 / n)
    } else {
        polygon_covariance(cell)
    };
    let normal = smallest_variance_direction(sxx, sxy, syy).unwrap_or_else(|| {
        let b = BBox::of(cell);
        if b.width() >= b.height() {
            Point::new(1.0, 0.0)
        } else {
            Point::new(0.0, 1.0)
        }
    });
    let c = polygon_centroid(cell);
    (normal.y.atan2(normal.x), normal.dot(c))
}

/// One first-layer neuron per marked cell.
pub fn init_new_first_layer_neurons(
    marked: &[usize],
    pp: &PhysicalPartition,
    points: &[Point],
    cell_of: &[usize],
) -> Vec<(f64, f64)> {
    let mut members: Vec<Vec<Point>> = vec![Vec::new(); pp.len()];
    for (&p, &c) in points.iter().zip(cell_of) {
        members[c].push(p);
    }
    marked
        .iter()
        .map(|&k| {
            if members[k].len() < 3 {
                debug!("cell {k} holds {} quadrature points, using its area moments", members[k].len());
            }
            first_layer_neuron_for_cell(&pp.cells[k].vertices, &members[k])
        })
        .collect()
}

/// Farthest pair among `points`; earliest pair wins ties.
pub fn farthest_pair(points: &[Point]) -> Option<(Point, Point)> {
    let mut best: Option<(f64, Point, Point)> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = points[i].dist(points[j]);
            if best.is_none_or(|b| d > b.0) {
                best = Some((d, points[i], points[j]));
            }
        }
    }
    best.map(|b| (b.1, b.2))
}

/// Points through which a new deep neuron's zero set should pass for a region.
///
/// With `(v1, v2)` the farthest pair of boundary-edge midpoints and `o` the
/// area centroid: if `o` lies in the region, collect the crossings of the
/// segments `o–v1` and `o–v2` with all cell edges. Otherwise cut the region
/// by the line through `o` orthogonal to `v1 − v2`, pick the midpoint `v0`
/// maximising `|v0 − v1| + |v0 − v2|`, and recurse on the piece holding `v1`
/// with `(v0, v1)` and on the other piece with `(v0, v2)`.
pub fn heuristic_point_set(shape: &RegionShape, tol: f64) -> Vec<Point> {
    let mids = shape.boundary_midpoints();
    let Some(pair) = farthest_pair(&mids) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    heuristic_rec(shape, pair, 0, tol, &mut out);
    out
}

fn heuristic_rec(shape: &RegionShape, (v1, v2): (Point, Point), depth: usize, tol: f64, out: &mut Vec<Point>) {
    if shape.is_empty() {
        return;
    }
    let o = shape.centroid();
    if shape.contains(o) {
        let edges = shape.all_edges();
        for v in [v1, v2] {
            for &(a, b) in &edges {
                for p in segment_intersections(o, v, a, b, tol) {
                    if out.iter().all(|q: &Point| q.dist(p) > tol) {
                        out.push(p);
                    }
                }
            }
        }
        return;
    }
    if depth >= HEURISTIC_MAX_DEPTH {
        return;
    }
    let mids = shape.boundary_midpoints();
    let Some(v0) = mids
        .iter()
        .copied()
        .fold(None, |best: Option<Point>, p| match best {
            Some(b) if b.dist(v1) + b.dist(v2) >= p.dist(v1) + p.dist(v2) => Some(b),
            _ => Some(p),
        })
    else {
        return;
    };
    let line = Affine2::through(o, v2 - v1);
    let (neg, pos) = shape.split_by_line(&line);
    let (side1, side2) = if line.eval(v1) < 0.0 { (neg, pos) } else { (pos, neg) };
    heuristic_rec(&side1, (v0, v1), depth + 1, tol, out);
    heuristic_rec(&side2, (v0, v2), depth + 1, tol, out);
}

/// Incoming weights, bias and output weight of one new neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepNeuron {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub output_weight: f64,
    /// More points than unknowns: the zero set only fits in least squares.
    pub overdetermined: bool,
}

/// Neuron of hidden layer `layer` (≥ 2) whose pre-activation
/// `l(x) = c_0 + Σ c_i φ_i^{(layer−1)}(x)` vanishes on `points`, with `c` the
/// unit right singular vector of the smallest singular value of the matrix of
/// rows `(1, φ(x_j))`. The neuron computes `σ(Σ c_i φ_i − b)` with `b = −c_0`.
pub fn init_deep_neuron(net: &Network, layer: usize, points: &[Point], rng: Option<&mut ChaCha8Rng>) -> Result<DeepNeuron> {
    let max = net.num_hidden_layers() + 1;
    if layer < 2 || layer > max {
        return Err(AneError::LayerOutOfRange { layer, max });
    }
    if points.is_empty() {
        return Err(AneError::Config("deep neuron initialization needs at least one point".into()));
    }
    let phi = net.hidden_outputs(layer - 1, points)?;
    let cols = phi[0].len() + 1;
    let rows = points.len().max(cols);
    let a = DMatrix::from_fn(rows, cols, |i, j| {
        if i >= points.len() {
            0.0
        } else if j == 0 {
            1.0
        } else {
            phi[i][j - 1]
        }
    });
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let k = (0..svd.singular_values.len())
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]).then(i.cmp(&j)))
        .unwrap();
    let mut c: Vec<f64> = v_t.row(k).iter().copied().collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter_mut().for_each(|x| *x /= norm);
    let overdetermined = points.len() >= cols;
    if overdetermined {
        warn!(
            "{} points for {} unknowns in layer {layer}; the neuron fits them only in least squares, a smaller gamma1 helps",
            points.len(),
            cols
        );
    }
    let output_weight = match rng {
        Some(rng) => Normal::new(0.0, NEW_LAYER_OUTPUT_STD).expect("valid std").sample(rng),
        None => 0.0,
    };
    Ok(DeepNeuron { weights: c[1..].to_vec(), bias: -c[0], output_weight, overdetermined })
}

/// Cells to enlarge: the configured marking, or the largest indicator when it marks nothing.
pub fn mark(ind: &IndicatorSet, marking: Marking) -> Result<Vec<usize>> {
    let marked = match marking {
        Marking::Average => mark_average(ind),
        Marking::Bulk(g) => mark_bulk(ind, g)?,
    };
    if marked.is_empty() {
        return Ok(ind.argmax().into_iter().collect());
    }
    Ok(marked)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    /// Grow hidden layer `layer`: one neuron per marked cell when `layer == 1`,
    /// one per region otherwise.
    AddWidth { layer: usize, marked: Vec<usize>, regions: Vec<Region> },
    /// Roll back the last width step and append a hidden layer.
    AddLayer,
}

impl Decision {
    pub fn count(&self) -> Option<usize> {
        match self {
            Self::AddWidth { layer: 1, marked, .. } => Some(marked.len()),
            Self::AddWidth { regions, .. } => Some(regions.len()),
            Self::AddLayer => None,
        }
    }
}

/// The enhancement strategy for a network that has not converged.
pub fn enhancement_step(
    history: &AneHistory,
    pp: &PhysicalPartition,
    ind: &IndicatorSet,
    marking: Marking,
    hidden_layers: usize,
) -> Result<Decision> {
    if history.low_eta_streak >= 2 {
        return Ok(Decision::AddLayer);
    }
    let marked = mark(ind, marking)?;
    let regions = pp.regroup(&marked);
    Ok(Decision::AddWidth { layer: hidden_layers, marked, regions })
}

/// Per-region neurons for hidden layer `layer` of `net`, placed on the
/// partition `K^(layer−1)`. `pp` is the partition on which `regions` were formed.
fn deep_neurons_for_regions(
    net: &Network,
    domain: &RectDomain,
    pp: &PhysicalPartition,
    regions: &[Region],
    layer: usize,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<Vec<DeepNeuron>> {
    let parent = if pp.layer == layer - 1 { None } else { Some(partition_up_to(net, domain, layer - 1)?) };
    let tol = pp.tolerances().geom;
    let mut neurons = Vec::with_capacity(regions.len());
    for region in regions {
        let shape = match &parent {
            None => pp.region_geometry(region),
            Some(parent) => {
                let mut ids: Vec<usize> = region
                    .cell_ids
                    .iter()
                    .map(|&c| parent.locate_point(pp.cells[c].centroid()))
                    .collect::<Result<_>>()?;
                ids.sort_unstable();
                ids.dedup();
                parent.region_geometry(&Region { cell_ids: ids })
            }
        };
        let mut x = heuristic_point_set(&shape, tol);
        if x.is_empty() {
            x.push(shape.centroid());
        }
        neurons.push(init_deep_neuron(net, layer, &x, rng.as_deref_mut())?);
    }
    Ok(neurons)
}

/// Problem data shared by every loop.
struct Setup {
    domain: RectDomain,
    grid: QuadratureGrid,
    system: ResidualSystem,
    relative: bool,
    exact: Option<ScalarField>,
}

impl Setup {
    fn new(problem: &ProblemSpec, cfg: &AneConfig) -> Result<Self> {
        let domain = problem.domain();
        let grid = make_grid(domain, cfg.m)?;
        Ok(match problem {
            ProblemSpec::Function(t) => {
                let system = ResidualSystem::function_fit(t, &grid);
                Self { domain, grid, system, relative: true, exact: None }
            }
            ProblemSpec::Advection(p) => {
                let inflow = p.inflow(cfg.m_b)?;
                let system = ResidualSystem::lsnn(p, &grid, &inflow);
                Self { domain, grid, system, relative: false, exact: p.exact.clone() }
            }
        })
    }
}

fn train(net: &mut Network, system: &ResidualSystem, adam: &AdamConfig) -> Result<MinimizeResult> {
    let mut work = net.clone();
    let res = minimize(
        |theta| {
            work.set_flat(theta)?;
            system.loss_and_grad(&work)
        },
        &net.to_flat(),
        adam,
    )?;
    net.set_flat(&res.params)?;
    Ok(res)
}

/// Two-layer ANE: width enhancement only.
pub fn ane_two_layer(problem: &ProblemSpec, cfg: &AneConfig) -> Result<AneOutcome> {
    drive(problem, cfg, false, &mut |_| Ok(()))
}

/// Multi-layer ANE.
pub fn ane_multilayer(problem: &ProblemSpec, cfg: &AneConfig) -> Result<AneOutcome> {
    drive(problem, cfg, true, &mut |_| Ok(()))
}

/// Multi-layer ANE, calling `observe` after every loop's estimate.
pub fn ane_multilayer_with(
    problem: &ProblemSpec,
    cfg: &AneConfig,
    observe: &mut dyn FnMut(&LoopSnapshot<'_>) -> Result<()>,
) -> Result<AneOutcome> {
    drive(problem, cfg, true, observe)
}

struct Base {
    net: Network,
    xi: f64,
    params: usize,
}

fn drive(
    problem: &ProblemSpec,
    cfg: &AneConfig,
    allow_layers: bool,
    observe: &mut dyn FnMut(&LoopSnapshot<'_>) -> Result<()>,
) -> Result<AneOutcome> {
    cfg.validate()?;
    let setup = Setup::new(problem, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = init_two_layer_uniform(cfg.n1, &setup.domain)?;
    output_weight_solve(&mut net, &setup.system)?;
    let mut history = AneHistory::default();
    let mut base: Option<Base> = None;

    for index in 0..cfg.max_loops {
        let res = train(&mut net, &setup.system, &cfg.adam)?;
        let pp = physical_partition(&net, &setup.domain);
        let ind = system_indicators(&setup.system, &net, &pp, setup.relative)?;
        let params = net.param_count();
        let error = match &setup.exact {
            Some(u) => l2_relative_error(&net, |p| u(p), &setup.grid)?,
            None => ind.xi_rel,
        };
        let eta = base.as_ref().and_then(|b| improvement_rate(b.xi, ind.total, b.params, params, cfg.r).ok());
        let mut record = AneRunRecord {
            structure: net.architecture().to_string(),
            params,
            error,
            xi: ind.total,
            xi_rel: ind.xi_rel,
            eta,
            status: RunStatus::Accepted,
            iterations: res.iterations,
            loss: res.final_loss,
            cells: pp.len(),
        };
        info!(
            "loop {index}: {} N={} xi_rel={:.6} error={:.6} eta={} iters={} cells={}",
            record.structure,
            params,
            record.xi_rel,
            error,
            eta.map_or("--".to_string(), |e| format!("{e:.6}")),
            res.iterations,
            pp.len()
        );

        if ind.xi_rel < cfg.epsilon {
            record.status = RunStatus::Final;
            history.converged = true;
        } else if index + 1 == cfg.max_loops {
            record.status = RunStatus::Unconverged;
        } else {
            match eta {
                Some(e) if e <= cfg.delta => history.low_eta_streak += 1,
                _ => history.low_eta_streak = 0,
            }
            if !allow_layers {
                history.low_eta_streak = history.low_eta_streak.min(1);
            }
            let decision = enhancement_step(&history, &pp, &ind, cfg.marking, net.num_hidden_layers())?;
            if decision == Decision::AddLayer {
                record.status = RunStatus::RolledBack;
            }
            observe(&LoopSnapshot { index, network: &net, partition: &pp, record: &record })?;
            history.records.push(record);
            match decision {
                Decision::AddLayer => {
                    let b = base.as_ref().expect("a low rate implies an earlier accepted network");
                    net = b.net.clone();
                    let bpp = physical_partition(&net, &setup.domain);
                    let bind = system_indicators(&setup.system, &net, &bpp, setup.relative)?;
                    let marked = mark(&bind, cfg.marking)?;
                    let regions = bpp.regroup(&marked);
                    let layer = net.num_hidden_layers() + 1;
                    let neurons = deep_neurons_for_regions(&net, &setup.domain, &bpp, &regions, layer, Some(&mut rng))?;
                    let out_bias = net.output.bias;
                    net.push_layer(
                        &neurons.iter().map(|n| (n.weights.clone(), n.bias)).collect::<Vec<_>>(),
                        neurons.iter().map(|n| n.output_weight).collect(),
                        out_bias,
                    );
                    if cfg.refit_output_after_layer {
                        output_weight_solve(&mut net, &setup.system)?;
                    }
                    history.low_eta_streak = 0;
                    info!("rolled back to {} and added a layer of {} neurons", b.structure(), regions.len());
                }
                Decision::AddWidth { layer, marked, regions } => {
                    base = Some(Base { net: net.clone(), xi: ind.total, params });
                    if layer == 1 {
                        let cell_of = pp.locate(&setup.grid.points)?;
                        let neurons = init_new_first_layer_neurons(&marked, &pp, &setup.grid.points, &cell_of);
                        net.add_first_layer_neurons(&neurons);
                    } else {
                        let neurons = deep_neurons_for_regions(&net, &setup.domain, &pp, &regions, layer, None)?;
                        net.add_dense_neurons(
                            layer,
                            &neurons.into_iter().map(|n| (n.weights, n.bias, 0.0)).collect::<Vec<_>>(),
                        );
                    }
                    debug!("added width to layer {layer}: {}", net.architecture());
                }
            }
            continue;
        }
        observe(&LoopSnapshot { index, network: &net, partition: &pp, record: &record })?;
        history.records.push(record);
        break;
    }
    Ok(AneOutcome { history, network: net })
}

impl Base {
    fn structure(&self) -> String {
        self.net.architecture().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn uniform_init_twelve() {
        let net = init_two_layer_uniform(12, &RectDomain::symmetric_unit()).unwrap();
        let expect = [-1.0, -2.0 / 3.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0];
        for i in 0..6 {
            assert_eq!(net.first.angles[i], 0.0);
            assert_eq!(net.first.angles[6 + i], FRAC_PI_2);
            assert!((net.first.biases[i] - expect[i]).abs() < 1e-15);
            assert!((net.first.biases[6 + i] - expect[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_init_small_and_odd() {
        let net = init_two_layer_uniform(6, &RectDomain::unit_square()).unwrap();
        assert_eq!(&net.first.biases[..3], &[0.0, 1.0 / 3.0, 2.0 / 3.0]);
        let net = init_two_layer_uniform(2, &RectDomain::unit_square()).unwrap();
        assert_eq!(net.first.angles, vec![0.0, FRAC_PI_2]);
        assert_eq!(net.first.biases, vec![0.0, 0.0]);
        let net = init_two_layer_uniform(5, &RectDomain::unit_square()).unwrap();
        assert_eq!(net.first.angles.iter().filter(|&&a| a == FRAC_PI_2).count(), 3);
    }

    #[test]
    fn thin_strip_gives_horizontal_line() {
        let pts: Vec<Point> = (0..50).map(|i| Point::new(i as f64 / 49.0, 0.3 + 0.001 * ((i % 3) as f64))).collect();
        let cell = vec![Point::new(0.0, 0.29), Point::new(1.0, 0.29), Point::new(1.0, 0.31), Point::new(0.0, 0.31)];
        let (angle, bias) = first_layer_neuron_for_cell(&cell, &pts);
        assert!(angle.sin().abs() > 1.0 - 1e-6, "{angle}");
        assert!((bias / angle.sin() - 0.3).abs() < 1e-3);
    }

    #[test]
    fn isotropic_tie_uses_longer_axis() {
        let pts = vec![Point::new(-1.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, -1.0), Point::new(0.0, 1.0)];
        let wide = vec![Point::new(-2.0, -1.0), Point::new(2.0, -1.0), Point::new(2.0, 1.0), Point::new(-2.0, 1.0)];
        assert_eq!(first_layer_neuron_for_cell(&wide, &pts), (0.0, 0.0));
        let tall = vec![Point::new(-1.0, -2.0), Point::new(1.0, -2.0), Point::new(1.0, 2.0), Point::new(-1.0, 2.0)];
        assert_eq!(first_layer_neuron_for_cell(&tall, &pts).0, FRAC_PI_2);
    }

    #[test]
    fn deep_neuron_single_point() {
        let mut net = init_two_layer_uniform(2, &RectDomain::symmetric_unit()).unwrap();
        net.first.biases = vec![-0.5, -0.5];
        let x = [Point::new(0.2, 0.4)];
        let n = init_deep_neuron(&net, 2, &x, None).unwrap();
        let phi = net.hidden_outputs(1, &x).unwrap();
        let l = -n.bias + n.weights.iter().zip(&phi[0]).map(|(w, h)| w * h).sum::<f64>();
        assert!(l.abs() < 1e-10);
        assert!(!n.overdetermined);
        assert_eq!(n.output_weight, 0.0);
    }

    #[test]
    fn decisions() {
        let pp = physical_partition(
            &init_two_layer_uniform(4, &RectDomain::symmetric_unit()).unwrap(),
            &RectDomain::symmetric_unit(),
        );
        let ind = IndicatorSet::from_contributions(pp.len(), &[0, 1, 2, 3], &[4.0, 3.0, 2.0, 1.0], 1.0, false).unwrap();
        let mut h = AneHistory::default();
        let d = enhancement_step(&h, &pp, &ind, Marking::Bulk(0.5), 1).unwrap();
        assert_eq!(d.count(), Some(2));
        h.low_eta_streak = 2;
        assert_eq!(enhancement_step(&h, &pp, &ind, Marking::Bulk(0.5), 1).unwrap(), Decision::AddLayer);
        let zero = IndicatorSet::from_contributions(pp.len(), &[0, 1], &[0.0, 0.0], 1.0, false).unwrap();
        assert_eq!(mark(&zero, Marking::Bulk(0.5)).unwrap(), vec![0]);
    }
}
