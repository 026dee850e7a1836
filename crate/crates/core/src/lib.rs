//! Adaptive network enhancement (ANE) for two-dimensional ReLU networks.
//!
//! The crate grows a small ReLU network by repeating *train → estimate →
//! enhance* until an a posteriori estimator falls below a tolerance. The
//! pieces are:
//!
//! - [`network`]: the layered ReLU model, its evaluation and derivatives;
//! - [`quadrature`]: uniform midpoint grids and inflow boundary meshes;
//! - [`partition`]: the exact linear-region cell complex of a network;
//! - [`estimators`]: per-cell indicators, marking and improvement rates;
//! - [`optimizer`]: full-batch Adam with a windowed stopping rule;
//! - [`problems`]: function-fitting and advection–reaction least-squares
//!   functionals;
//! - [`enhance`]: neuron initialization and the ANE drivers;
//! - [`export`]: checkpoints, partition documents, run tables and SVG.

mod batch;
pub mod enhance;
pub mod error;
pub mod estimators;
pub mod export;
pub mod geometry;
pub mod network;
pub mod optimizer;
pub mod partition;
pub mod problems;
pub mod quadrature;

pub use enhance::{AneConfig, AneHistory, AneRunRecord, Marking, RunStatus};
pub use error::{AneError, Result};
pub use geometry::Point;
pub use network::{Architecture, Network};
pub use optimizer::AdamConfig;
pub use partition::PhysicalPartition;
pub use problems::{AdvectionProblem, FunctionTarget, ProblemSpec};
pub use quadrature::{InflowBoundaryMesh, QuadratureGrid, RectDomain};
