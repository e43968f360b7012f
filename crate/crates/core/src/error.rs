use thiserror::Error;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function pole at non-positive integer {0}")]
    Pole(f64),
    #[error("series failed to converge within {terms} terms")]
    Convergence { terms: usize },
    #[error("degenerate special-function parameter: {0}")]
    DegenerateParameter(String),
    #[error("root finder did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("quadrature tolerance not met: estimated error {estimate:e} exceeds {requested:e}")]
    Tolerance { estimate: f64, requested: f64 },
    #[error("least-squares iteration diverged: {0}")]
    Divergence(String),
    #[error("singular Jacobian in least-squares step")]
    SingularJacobian,
    #[error("trap supports more than one bound state (N = {n})")]
    MultiBoundState { n: f64 },
    #[error("trap supports no bound state (N = {n})")]
    NoBoundState { n: f64 },
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("expected a real value but imaginary residue {residue:e} exceeds {allowed:e}")]
    Realification { residue: f64, allowed: f64 },
    #[error("kernel fit diverged: {0}")]
    FitDivergence(String),
    #[error("fit has non-positive decay rates (b1 = {b1}, d1 = {d1})")]
    AcausalFit { b1: f64, d1: f64 },
    #[error("Lagrange multiplier must be non-zero")]
    ZeroLambda,
    #[error("characteristic polynomial has a repeated pole near {0}")]
    MultiplePole(String),
    #[error("initial acceleration must be non-zero to effect a transport")]
    ZeroAcceleration,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("integrator step size underflow at t = {t}")]
    StepSize { t: f64 },
    #[error("probability {value} at t = {t} outside [-0.05, 1.05]: second-order expansion has broken down")]
    RegimeBreakdown { t: f64, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for failures of an iterative or adaptive numerical method.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::NonConvergence { .. }
                | Error::Tolerance { .. }
                | Error::Divergence(_)
                | Error::SingularJacobian
                | Error::Realification { .. }
                | Error::FitDivergence(_)
                | Error::AcausalFit { .. }
                | Error::MultiplePole(_)
                | Error::StepSize { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
