use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("constrained system is rank deficient (pivot ratio {ratio:.3e})")]
    SingularSystem { ratio: f64 },

    #[error("right-hand side violates the constraint: |QJ| = {defect:.3e} > {tol:.3e}")]
    IncompatibleRhs { defect: f64, tol: f64 },

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("model `{model}` is invalid: {detail}")]
    ModelInvalid { model: String, detail: String },

    #[error("finite-difference probe left the admissible set (component {component})")]
    InadmissiblePerturbation { component: usize },

    #[error("state outside the admissible domain: {0}")]
    OutOfDomain(String),

    #[error("expected a positive value, got {0}")]
    NonPositive(f64),

    #[error("model `{0}` has no entropy pair")]
    EntropyUnavailable(String),

    #[error("model `{0}` has a gradient-dependent effective matrix")]
    NotLinearRegime(String),

    #[error("constraint Qb = 0 violated (defect {defect:.3e})")]
    ConstraintViolated { defect: f64 },

    #[error("degenerate state: non-finite characteristic speed")]
    DegenerateState,

    #[error("CFL violation: b*dt/dx = {number:.6} > {limit}")]
    CflViolation { number: f64, limit: f64 },

    #[error("cell {cell} left the admissible set at t = {time:.6e} (component {component} = {value:.6e})")]
    InadmissibleResult {
        cell: usize,
        component: usize,
        value: f64,
        time: f64,
    },

    #[error("alpha matrix is singular")]
    SingularAlpha,

    #[error("effective matrix at the interface is singular")]
    SingularM,

    #[error("interface matrix I + sigma is singular")]
    SingularSigma,

    #[error("explicit diffusion step unstable: dt = {dt:.6e} > {limit:.6e}")]
    StabilityViolation { dt: f64, limit: f64 },

    #[error("entropy increased by {increase:.3e} (relative) at step {step}, t = {time:.6e}")]
    EntropyIncrease {
        step: usize,
        time: f64,
        increase: f64,
    },

    #[error("grids incompatible: {a} cells vs {b} cells")]
    GridMismatch { a: usize, b: usize },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
