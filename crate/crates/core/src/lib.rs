//! Budget-constrained maintenance planning for large pavement networks.
//!
//! A shared local Q-network scores each segment's treatments per unit cost,
//! a greedy knapsack funds the best-scoring candidates under the annual
//! budget, and a policy network trained against a global value baseline
//! supplies exploration. Myopic and worst-first baselines, a synthetic
//! network generator and the experiment harness live alongside.
//!
//! Numerical kernels are generic over [`scalar::Real`]; the planning layer
//! runs in `f64` through the aliases below.

pub mod agent;
pub mod allocator;
pub mod baselines;
pub mod deterioration;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod money;
pub mod netgen;
pub mod network;
pub mod nn;
pub mod plan;
pub mod plot;
pub mod rewards;
pub mod scalar;

pub use error::{Error, Result};
pub use money::Money;
pub use network::{ActionKind, CostTable, NetworkState, RoadClass, Segment, Trajectory, UnitCosts};

/// Scalar used by the planning layer.
pub type Real = f64;
pub type Net = nn::DenseNet<Real>;
pub type Optimizer = nn::OptimizerState<Real>;
pub type Curve = deterioration::WeibullCurve<Real>;
pub type Rehab = deterioration::RehabEffect<Real>;
pub type Candidate = allocator::Candidate<Real>;
pub type Allocation = allocator::AllocationResult<Real>;
pub type Menu = allocator::Menu<Real>;
