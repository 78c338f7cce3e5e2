use thiserror::Error;

/// How an integration range is partitioned before the panel rule is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    /// Geometrically graded panels toward a known feature (origin, pole).
    Graded,
    /// A change of variables removes the endpoint behaviour first.
    Substitution,
    /// Panels are bisected until the local error estimate is met.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub kind: RuleKind,
    /// Gauss–Legendre order on each panel; the error estimate uses order/2.
    pub nodes: usize,
    /// Target absolute error.
    pub target: f64,
    /// Truncation radius in ρ (or k) units.
    pub radius: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { kind: RuleKind::Adaptive, nodes: 16, target: 1e-8, radius: 12.0 }
    }
}

impl QuadratureSpec {
    pub fn with_target(target: f64) -> Self {
        Self { target, ..Self::default() }
    }

    /// Tighter default used when building kernel tables.
    pub fn table() -> Self {
        Self::with_target(1e-10)
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        if self.nodes < 8 {
            return Err(QuadError::InvalidSpec("node count must be >= 8"));
        }
        if !(self.target > 0.0) {
            return Err(QuadError::InvalidSpec("target error must be > 0"));
        }
        if !(self.radius > 0.0) {
            return Err(QuadError::InvalidSpec("truncation radius must be > 0"));
        }
        Ok(())
    }
}

/// A value together with its estimated absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature did not converge: estimate {estimate:e} exceeds target {target:e} ({context})")]
    NonConvergence { estimate: f64, target: f64, context: &'static str },
    #[error("integrand is not finite at {at}")]
    NotFinite { at: f64 },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
}
