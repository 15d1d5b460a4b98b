use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("potential has nonzero mean coefficient q0 = {re} + {im}i")]
    NonzeroMean { re: f64, im: f64 },

    #[error("need at least 4 samples, got {0}")]
    TooFewSamples(usize),

    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),

    #[error("integrator step size underflow at x = {x} (lambda = {lambda_re} + {lambda_im}i)")]
    IntegratorFailure { x: f64, lambda_re: f64, lambda_im: f64 },

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    #[error("Newton iteration diverged for band {n} at t = {t}")]
    NewtonDivergence { n: i64, t: f64 },

    #[error("seeds for bands {n1} and {n2} converged to one simple root at t = {t}")]
    SeedCollision { n1: i64, n2: i64, t: f64 },

    #[error("ambiguous band matching for band {n} at t = {t}")]
    MatchingAmbiguity { n: i64, t: f64 },

    #[error("phi(1, lambda) = {modulus:e} is below the degeneracy threshold")]
    DirichletDegeneracy { modulus: f64 },

    #[error("multiple eigenvalue for band {n} at t = {t}")]
    MultipleEigenvalue { n: i64, t: f64 },

    #[error("arc of band {n} is not regular near t = {t}")]
    IrregularArc { n: i64, t: f64 },

    #[error("lambda is not an eigenvalue for t = {t}: residual {residual:e}")]
    NotAnEigenvalue { t: f64, residual: f64 },

    #[error("product ab is zero")]
    ZeroProduct,

    #[error("Fourier coefficient q_{n} (or q_-{n}) vanishes")]
    ZeroCoefficient { n: i64 },

    #[error("t = {t} is an exclusion point")]
    ExclusionPoint { t: f64 },

    #[error("quadrature did not converge near exclusion point t = {t}")]
    QuadratureNonconvergence { t: f64 },

    #[error("Bloch and direct reconstructions disagree on band {n} (discrepancy {discrepancy:e})")]
    BranchInconsistency { n: i64, discrepancy: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Input errors are the caller's fault; everything else is a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonzeroMean { .. }
                | Error::TooFewSamples(_)
                | Error::NonFiniteInput(_)
                | Error::ZeroProduct
                | Error::ZeroCoefficient { .. }
                | Error::InvalidConfig(_)
                | Error::Parse(_)
        )
    }
}
