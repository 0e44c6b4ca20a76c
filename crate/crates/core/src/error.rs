use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("grid error: {0}")]
    Grid(String),

    #[error("ellipticity violated: coefficient {value} at x = {at:?}")]
    Ellipticity { value: f64, at: [f64; 2] },

    #[error("not at resonance: λ = {lambda} is not an eigenvalue (nearest {nearest})")]
    NotResonant { lambda: f64, nearest: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Parse(#[from] crate::nonlinearity::expr::ParseError),

    #[error("Landesman–Lazer functional not applicable: {0}")]
    LlNotApplicable(String),

    #[error("dimension {0} unsupported here")]
    UnsupportedKernelDim(usize),

    #[error("integration aborted at step {step} (t = {time}): non-finite nonlinearity")]
    IntegrationAborted { step: usize, time: f64 },

    #[error("degree undefined: map vanishes on the boundary (margin {margin:e})")]
    BoundaryZero { margin: f64 },

    #[error("boundary under-sampled: {samples} samples still leave an angle increment above π/2")]
    UnderSampled { samples: usize },

    #[error("degree undefined: g vanishes on all sampled spheres")]
    DegreeUndefined,

    #[error("no zero-free radius found up to R = {r_max}; a Landesman–Lazer type condition likely fails")]
    NoZeroFreeRadius { r_max: f64 },

    #[error("Galerkin tail not contracting: multiplier {multiplier} > 1/2 for mode {mode}")]
    TailNotContracting { mode: usize, multiplier: f64 },

    #[error("degree of g is zero on B(0, {radius}); existence is not guaranteed")]
    ZeroDegree { radius: f64 },

    #[error("no zero of g found despite nonzero degree (best |g| = {best:e}); refine the time quadrature")]
    SeedNotFound { best: f64 },

    #[error("Newton stagnated at ε = {epsilon}: best residual {residual:e}")]
    NewtonStagnation { epsilon: f64, residual: f64 },

    #[error("continuation failed below ε = {epsilon}: step fell under {min_step:e}")]
    ContinuationFailed { epsilon: f64, min_step: f64 },

    #[error("no bounded orbit found: iterate escaped ‖x‖ = {norm} > {limit}")]
    Escaped { norm: f64, limit: f64 },

    #[error("no periodic orbit: kernel drift per period is {drift} for every probed state")]
    KernelDrift { drift: f64 },
}

impl Error {
    /// Failures caused by the problem data rather than by the numerics.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::NotResonant { .. }
                | Error::LlNotApplicable(_)
                | Error::UnsupportedKernelDim(_)
                | Error::BoundaryZero { .. }
                | Error::DegreeUndefined
                | Error::NoZeroFreeRadius { .. }
                | Error::TailNotContracting { .. }
                | Error::ZeroDegree { .. }
                | Error::KernelDrift { .. }
                | Error::Ellipticity { .. }
                | Error::Grid(_)
        )
    }
}
