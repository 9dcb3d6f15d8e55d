//! Metric tensor, angular metric, spray, nonlinear connection and the
//! dynamical covariant derivative of a Lagrangian.

mod covariant;
mod linalg;
mod metric;
mod spray;

pub use covariant::covariant_derivative_along;
pub use linalg::solve;
pub use metric::{
    angular_metric, causal_character, metric_from_matrix, metric_tensor, AngularMetric, CausalCharacter, CausalTag,
    MetricValue, EIGEN_CUTOFF, TOL_NULL,
};
pub(crate) use metric::check_admissible;
pub use spray::{connection, spray, spray_generic, SprayValue};
