//! Full-batch Adam with a windowed relative-change stopping rule.

use serde::{Deserialize, Serialize};

use crate::error::{AneError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub stop_window: usize,
    pub stop_rel_tol: f64,
    pub max_iters: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            stop_window: 2000,
            stop_rel_tol: 1e-3,
            max_iters: 100_000,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(AneError::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.stop_window == 0 {
            return Err(AneError::Config("stop window must be positive".into()));
        }
        if self.max_iters < self.stop_window {
            return Err(AneError::Config(format!(
                "max_iters ({}) must be at least the stop window ({})",
                self.max_iters, self.stop_window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Relative loss change over the last window fell below the tolerance.
    Stalled,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub params: Vec<f64>,
    /// `(iteration, loss)` at every window boundary, starting with iteration 0.
    pub trace: Vec<(usize, f64)>,
    pub iterations: usize,
    pub final_loss: f64,
    pub reason: StopReason,
}

impl MinimizeResult {
    /// Two-column `iteration loss` text.
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|(i, l)| format!("{i} {l:.12e}\n")).collect()
    }
}

/// Minimise with Adam. `eval` returns the loss and gradient at a parameter vector.
/// The returned parameters are the iterate at which the last loss was evaluated.
pub fn minimize<F>(mut eval: F, init: &[f64], cfg: &AdamConfig) -> Result<MinimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    let n = init.len();
    let mut theta = init.to_vec();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut trace = Vec::new();
    let mut window_loss = f64::NAN;
    let (mut b1t, mut b2t) = (1.0, 1.0);
    let mut it = 0;
    loop {
        let (loss, grad) = eval(&theta)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(AneError::NonFiniteLoss { iteration: it });
        }
        if it == 0 {
            trace.push((0, loss));
            window_loss = loss;
        } else if it % cfg.stop_window == 0 {
            trace.push((it, loss));
            let rel = (loss - window_loss).abs() / window_loss.max(1e-30);
            window_loss = loss;
            if rel < cfg.stop_rel_tol {
                return Ok(MinimizeResult { params: theta, trace, iterations: it, final_loss: loss, reason: StopReason::Stalled });
            }
        }
        if it >= cfg.max_iters {
            if trace.last().map(|t| t.0) != Some(it) {
                trace.push((it, loss));
            }
            return Ok(MinimizeResult { params: theta, trace, iterations: it, final_loss: loss, reason: StopReason::MaxIters });
        }
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        let lr = cfg.learning_rate * (1.0 - b2t).sqrt() / (1.0 - b1t);
        for i in 0..n {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            theta[i] -= lr * m[i] / (v[i].sqrt() + cfg.epsilon * (1.0 - b2t).sqrt());
        }
        it += 1;
    }
}
