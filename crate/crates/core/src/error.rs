use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Non-escape is never an error; it is reported as data by
/// [`crate::dynamics::EscapeOutcome`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("orbit diverged past {bound:e} after {steps} steps")]
    Divergence { steps: u64, bound: f64 },

    #[error("{op}: no convergence after {steps} Newton steps (residual {residual:e})")]
    NonConvergence {
        op: &'static str,
        steps: u32,
        residual: f64,
    },

    #[error("point has period {divisor}, a proper divisor of {period}")]
    PeriodNotExact { period: u32, divisor: u32 },

    #[error("implicit derivative undefined: |dg/dz| = {0:e}")]
    SingularImplicit(f64),

    #[error("{op}: Jacobian is singular (|det| = {det:e})")]
    JacobianSingular { op: &'static str, det: f64 },

    #[error("two Newton seeds converged to the same fixed point {re}{im:+}i")]
    SeedCollision { re: f64, im: f64 },

    #[error("holomorphic index undefined for multiplier 1")]
    MultiplierOne,

    #[error("logarithm branch undefined for multiplier {0}")]
    BranchUndefined(String),

    #[error("parameter {re}{im:+}i is inside M or undecided after {depth} iterations")]
    InsideOrUndecided { re: f64, im: f64, depth: u64 },

    #[error("ray tracer lost the ray at depth {depth}: angle off by {mismatch:e} turns")]
    NewtonLost { depth: u64, mismatch: f64 },

    #[error("no sample on the circle escaped within the iteration cap")]
    AllInterior,

    #[error("sampling disk degenerated (radius {0:e})")]
    DiskDegenerate(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// True for failures caused by bad caller input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Precondition(_))
    }
}
