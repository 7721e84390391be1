//! Decentralized online optimization on constant-curvature manifolds.
//!
//! Geometry kernels for the sphere, the hyperboloid and Euclidean space, the
//! curvature-aware consensus step, full-information and two-point bandit
//! online gradient descent, and an experiment harness that records regret.

pub mod consensus;
pub mod constants;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod manifold;
pub mod network;
pub mod online;
pub mod seed;

pub use error::{Error, Result};
pub use manifold::{GeodesicBall, ManifoldChart, ManifoldKind, Point, TangentVector};
pub use network::WeightMatrix;
