use thiserror::Error;

/// Everything that can go wrong inside the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("medium resonance frequency must be positive, got {0}")]
    NonPositiveOmega(f64),
    #[error("coupling must be non-negative, got {0}")]
    NegativeCoupling(f64),
    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),
    #[error("invalid switching profile: {0}")]
    InvalidProfile(String),
    #[error("sampled profile grid does not resolve omega = {omega} (spacing {spacing})")]
    UnresolvedFrequency { omega: f64, spacing: f64 },
    #[error("spectral amplitude is singular at omega = {0}")]
    SingularFrequency(f64),
    #[error("permittivity has a real pole at omega = {0} (lossless resonance)")]
    PoleAtResonance(f64),
    #[error("mode at k = {0} has zero frequency")]
    DegenerateMode(f64),
    #[error("band {band} at k = {k} has zero frequency")]
    ZeroFrequencyMode { k: f64, band: &'static str },
    #[error("quadrature not converged: estimated error {error:e} at cutoff {cutoff}")]
    QuadratureNotConverged { error: f64, cutoff: f64 },
    #[error("total yield diverges without lower-band linearization or an explicit k cutoff")]
    DivergentYield,
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("kappa grid not converged: integrand at cutoff is {tail:e} of its peak")]
    UnconvergedKappaGrid { tail: f64 },
    #[error("lattice time step violates dt/dy <= 0.9 (ratio {0})")]
    CflViolation(f64),
    #[error("reflection from the lattice boundary detected (incoming/outgoing = {0:e})")]
    ReflectionDetected(f64),
    #[error("invalid lattice configuration: {0}")]
    InvalidLattice(String),
    #[error("no peaks found above threshold {0:e}")]
    NoPeaksFound(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
