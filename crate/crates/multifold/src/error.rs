use crate::algebra::Complex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("{name} has a non-finite component")]
    NonFinite { name: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("chart singularity: 1 - w vanishes at w = {w}")]
    ChartSingularity { w: Complex },

    #[error("singular right-hand side at z = {z}, w = {w} (|denominator| = {denominator:e})")]
    SingularRhs { z: Complex, w: Complex, denominator: f64 },

    #[error("left the chart at z = {z}: |w| = {modulus} exceeds {limit}")]
    ChartExit { z: Complex, modulus: f64, limit: f64 },

    #[error("integration failed at z = {z}, w = {w}: {reason}")]
    IntegrationFailure { z: Complex, w: Complex, reason: String },

    #[error("path passes through the center {center} (segment {segment})")]
    PathThroughCenter { center: Complex, segment: usize },

    #[error("not a cycle: closure residual {residual:e} exceeds {tolerance:e}")]
    NotACycle { residual: f64, tolerance: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (|g| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error("quadrature did not converge: estimated error {estimate:e} > {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },
}

impl Error {
    /// Numerical failure that continuation treats as the orbit leaving the chart.
    pub fn is_chart_exit(&self) -> bool {
        matches!(self, Error::ChartExit { .. })
    }
}
