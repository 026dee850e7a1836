//! Cell indicators, marking strategies and the improvement rate.

use crate::error::{AneError, Result};
use crate::network::Network;
use crate::partition::PhysicalPartition;
use crate::problems::{AdvectionProblem, FunctionTarget, ResidualSystem};
use crate::quadrature::{InflowBoundaryMesh, QuadratureGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    /// `ξ_K`, indexed by cell id.
    pub per_cell: Vec<f64>,
    /// `ξ = sqrt(Σ ξ_K²) / normalizer`.
    pub total: f64,
    pub relative: bool,
    pub normalizer: f64,
    /// `sqrt(Σ ξ_K² / reference)`, see [`IndicatorSet::from_contributions`].
    pub xi_rel: f64,
    /// Cells that received no residual point.
    pub empty_cells: Vec<usize>,
}

impl IndicatorSet {
    /// Aggregate per-point contributions `w_q r_q²` into cells. `reference`
    /// is the squared denominator of `xi_rel`; with `relative` it also
    /// normalises `total`. A non-positive reference leaves both unscaled.
    pub fn from_contributions(
        n_cells: usize,
        cell_of: &[usize],
        contributions: &[f64],
        reference: f64,
        relative: bool,
    ) -> Result<Self> {
        if cell_of.len() != contributions.len() {
            return Err(AneError::LengthMismatch { expected: contributions.len(), actual: cell_of.len() });
        }
        let mut sq = vec![0.0; n_cells];
        let mut hits = vec![0usize; n_cells];
        for (&c, &v) in cell_of.iter().zip(contributions) {
            sq[c] += v;
            hits[c] += 1;
        }
        let sum: f64 = sq.iter().sum();
        let normalizer = if relative && reference > 0.0 { reference.sqrt() } else { 1.0 };
        let xi_rel = if reference > 0.0 { (sum / reference).sqrt() } else { sum.sqrt() };
        Ok(Self {
            per_cell: sq.iter().map(|s| s.sqrt()).collect(),
            total: sum.sqrt() / normalizer,
            relative,
            normalizer,
            xi_rel,
            empty_cells: (0..n_cells).filter(|&c| hits[c] == 0).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.per_cell.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_cell.is_empty()
    }

    pub fn sum_sq(&self) -> f64 {
        self.per_cell.iter().map(|x| x * x).sum()
    }

    /// Cell with the largest indicator, lowest id on ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.per_cell.iter().enumerate() {
            if best.is_none_or(|b| v > self.per_cell[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// Indicators of any residual system on `pp`.
///
/// With `relative`, `total` and `xi_rel` are both divided by the data norm
/// `sqrt(Σ w_q y_q²)`. Otherwise `total` is absolute and `xi_rel` divides by
/// the functional of `net` itself with zero data.
pub fn system_indicators(
    system: &ResidualSystem,
    net: &Network,
    pp: &PhysicalPartition,
    relative: bool,
) -> Result<IndicatorSet> {
    let cell_of = pp.locate(&system.points)?;
    let contrib = system.contributions(net)?;
    let reference = if relative { system.reference_loss() } else { system.energy(net)? };
    IndicatorSet::from_contributions(pp.len(), &cell_of, &contrib, reference, relative)
}

/// `ξ_K = ‖f − v‖_{K,T}`, `ξ = sqrt(Σ ξ_K²) / ‖f‖_T`.
pub fn fn_indicators(
    target: &FunctionTarget,
    net: &Network,
    pp: &PhysicalPartition,
    grid: &QuadratureGrid,
) -> Result<IndicatorSet> {
    system_indicators(&ResidualSystem::function_fit(target, grid), net, pp, true)
}

/// `ξ_K² = Σ_{q∈K} w_q (v_β + γv − f)² + Σ_{x_E∈K} |β·n||E| (v − g)²`, `ξ = sqrt(Σ ξ_K²)`,
/// `ξ_rel = sqrt(L(v; f) / L(v; 0))`.
pub fn lsnn_indicators(
    problem: &AdvectionProblem,
    net: &Network,
    pp: &PhysicalPartition,
    grid: &QuadratureGrid,
    inflow: &InflowBoundaryMesh,
) -> Result<IndicatorSet> {
    system_indicators(&ResidualSystem::lsnn(problem, grid, inflow), net, pp, false)
}

/// Cells with `ξ_K` at or above the mean.
pub fn mark_average(ind: &IndicatorSet) -> Vec<usize> {
    if ind.is_empty() {
        return Vec::new();
    }
    let mean = ind.per_cell.iter().sum::<f64>() / ind.len() as f64;
    (0..ind.len()).filter(|&i| ind.per_cell[i] >= mean).collect()
}

/// Shortest prefix of the cells sorted by decreasing `ξ_K` (ties by id) whose
/// squared indicators reach `γ1 Σ ξ_K²`. Returned in ascending id order.
pub fn mark_bulk(ind: &IndicatorSet, gamma1: f64) -> Result<Vec<usize>> {
    if !(gamma1 > 0.0 && gamma1 < 1.0) {
        return Err(AneError::Config(format!("gamma1 must lie in (0, 1), got {gamma1}")));
    }
    let total = ind.sum_sq();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..ind.len()).collect();
    order.sort_by(|&a, &b| ind.per_cell[b].total_cmp(&ind.per_cell[a]).then(a.cmp(&b)));
    let goal = gamma1 * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for i in order {
        marked.push(i);
        acc += ind.per_cell[i] * ind.per_cell[i];
        if acc >= goal {
            break;
        }
    }
    marked.sort_unstable();
    Ok(marked)
}

/// `η_r = ((ξ_old − ξ_new)/ξ_old) / ((N_new^r − N_old^r)/N_new^r)`.
pub fn improvement_rate(xi_old: f64, xi_new: f64, n_old: usize, n_new: usize, r: f64) -> Result<f64> {
    if !(xi_old > 0.0) {
        return Err(AneError::UndefinedRate(format!("previous estimator is {xi_old}")));
    }
    if n_new <= n_old || n_old == 0 {
        return Err(AneError::UndefinedRate(format!("parameter count {n_old} -> {n_new}")));
    }
    if !(r > 0.0) {
        return Err(AneError::UndefinedRate(format!("rate exponent {r}")));
    }
    let nn = (n_new as f64).powf(r);
    let no = (n_old as f64).powf(r);
    Ok(((xi_old - xi_new) / xi_old) / ((nn - no) / nn))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> IndicatorSet {
        IndicatorSet::from_contributions(v.len(), &(0..v.len()).collect::<Vec<_>>(), &v.iter().map(|x| x * x).collect::<Vec<_>>(), 1.0, false)
            .unwrap()
    }

    #[test]
    fn average_marking() {
        assert_eq!(mark_average(&set(&[1.0, 1.0, 1.0])), vec![0, 1, 2]);
        assert_eq!(mark_average(&set(&[3.0, 1.0, 1.0, 1.0])), vec![0]);
    }

    #[test]
    fn bulk_marking() {
        // ξ² = {2, 3, 4, 1} by id
        let s = set(&[2.0f64.sqrt(), 3.0f64.sqrt(), 2.0, 1.0]);
        assert_eq!(mark_bulk(&s, 0.5).unwrap(), vec![1, 2]);
        let d = set(&[0.5, 0.4, 0.3, 0.2, 0.1]);
        assert_eq!(mark_bulk(&d, 1.0 - 1e-12).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(mark_bulk(&set(&[0.0, 0.0]), 0.5).unwrap().is_empty());
        assert!(mark_bulk(&d, 1.0).is_err());
    }

    #[test]
    fn table_rates() {
        let a = improvement_rate(0.357414, 0.323118, 37, 55, 1.0).unwrap();
        assert!((a - 0.293198).abs() < 1e-5, "{a}");
        let b = improvement_rate(0.323118, 0.272614, 55, 93, 1.0).unwrap();
        assert!((b - 0.382528).abs() < 1e-5, "{b}");
        let c = improvement_rate(0.323118, 0.025483, 55, 137, 1.0).unwrap();
        assert!((c - 1.538967).abs() < 1e-5, "{c}");
        assert_eq!(improvement_rate(0.2, 0.2, 10, 20, 1.0).unwrap(), 0.0);
        assert!(improvement_rate(0.0, 0.1, 10, 20, 1.0).is_err());
    }

    #[test]
    fn single_cell_aggregation() {
        let s = IndicatorSet::from_contributions(1, &[0, 0, 0], &[1.0, 2.0, 1.0], 16.0, true).unwrap();
        assert!((s.per_cell[0] / s.normalizer - s.total).abs() < 1e-15);
        assert_eq!(s.total, 0.5);
        assert_eq!(s.xi_rel, 0.5);
    }

    #[test]
    fn empty_cells_flagged() {
        let s = IndicatorSet::from_contributions(3, &[0, 2], &[1.0, 1.0], 1.0, false).unwrap();
        assert_eq!(s.empty_cells, vec![1]);
        assert_eq!(s.per_cell[1], 0.0);
    }
}
