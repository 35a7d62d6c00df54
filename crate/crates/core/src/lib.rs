//! Numerical laboratory for nonlinear Bell functionals in asymmetric quantum
//! star networks: optimal state/observable constructions, functional
//! evaluation, classical bounds by three independent methods, sum-of-squares
//! optimality certificates and white-noise robustness.

pub mod bounds;
pub mod error;
pub mod functionals;
pub mod noise;
pub mod obsfile;
pub mod quantum;
pub mod report;
pub mod scenario;
pub mod schemes;
pub mod sos;

pub use error::{Error, Result};
pub use scenario::{Party, ScenarioKind, ScenarioSpec};

/// Round to 12 significant digits: the precision every serialized report uses.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}
