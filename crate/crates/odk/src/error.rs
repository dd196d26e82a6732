use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Error, Debug)]
pub enum OdkError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Choi matrix is not Hermitian (asymmetry {0:.3e})")]
    NonHermitianChoi(f64),
    #[error("Choi matrix has negative eigenvalue {0:.3e}; no Kraus decomposition")]
    NegativeChoi(f64),
    #[error("Kraus set is not trace-preserving (residual {0:.3e})")]
    NotTracePreserving(f64),
    #[error("map does not annihilate the trace (residual {0:.3e})")]
    TraceNotAnnihilated(f64),
    #[error("map is not Hermiticity-preserving (residual {0:.3e})")]
    NotHermiticityPreserving(f64),
    #[error("zero input where a nonzero operator is required")]
    ZeroInput,
    #[error("steady state is singular or not full rank (min eigenvalue {0:.3e})")]
    SingularSteadyState(f64),
    #[error("spectral data {0} is not positive semidefinite at omega={1} (min eig {2:.3e})")]
    NonPsdSpectralData(String, f64, f64),
    #[error("detailed balance violated: {0}")]
    DetailedBalanceViolated(String),
    #[error("negative off-diagonal rate W[{0},{1}] = {2:.3e}")]
    NegativeRate(usize, usize, f64),
    #[error("not a probability vector: {0}")]
    NotAProbabilityVector(String),
    #[error("jump matrix is not column stochastic (residual {0:.3e})")]
    NonStochasticJumpMatrix(f64),
    #[error("series solution did not converge after {0} terms (last norm {1:.3e})")]
    SeriesNotConverged(usize, f64),
    #[error("invalid source for classical shadow: {0}")]
    InvalidSource(String),
    #[error("intermediate map singular at t={0} (condition number {1:.3e})")]
    SingularIntermediate(f64, f64),
    #[error("step size too coarse: Richardson check failed (error estimate {0:.3e})")]
    StepSizeTooCoarse(f64),
    #[error("map singular at t={0} (kernel dimension {1})")]
    SingularMap(f64, usize),
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("MUB construction requires prime dimension, got {0}")]
    NonPrimeDimension(usize),
    #[error("complete positivity violated at t={0} (min eigenvalue {1:.3e})")]
    CpViolated(f64, f64),
    #[error("Volterra stepping did not converge (Richardson estimate {0:.3e})")]
    VolterraNotConverged(f64),
    #[error("amplitude a(t) vanished near t={0}; generator extraction undefined")]
    SingularA(f64),
    #[error("decoherence matrix not positive semidefinite at t={0} (min eig {1:.3e})")]
    NonPsdDecoherence(f64, f64),
    #[error("bad mixture weights: {0}")]
    BadWeights(String),
    #[error("legitimate pair invalid: {0}")]
    PairInvalid(String),
    #[error("resolvent singular at s={0}")]
    ResolventSingular(f64),
    #[error("trace drift {0:.3e} exceeds tolerance during kernel stepping")]
    TraceDrift(f64),
    #[error("joint dimension too large: {0} > 64")]
    DimensionTooLarge(usize),
    #[error("propagator singular at t={0}")]
    SingularPropagator(f64),
    #[error("support violation: supp(rho) is not contained in supp(sigma)")]
    SupportViolation,
    #[error("state is singular; full rank required")]
    SingularState,
    #[error("family not differentiable at theta={0}")]
    NonDifferentiable(f64),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, OdkError>;
