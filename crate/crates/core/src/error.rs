use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("axis {axis} is already in the {basis} basis")]
    WrongBasis { axis: String, basis: &'static str },

    #[error("term acts non-trivially on {0} spatial modes; at most one is allowed")]
    MultiModeTerm(usize),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("drift in direction {direction} cannot be carried by any flux channel (residual {residual:e})")]
    UnsolvableDrift { direction: usize, residual: f64 },

    #[error("operator term is not diagonal in the momentum representation")]
    NotMomentumDiagonal,

    #[error("state has no ancilla register")]
    NoAncilla,

    #[error("state already carries an ancilla register")]
    AncillaPresent,

    #[error("post-selection kept zero amplitude")]
    EmptyPostselection,

    #[error("qudit level {level} out of range for {levels} levels")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("expected a {expected} system, found {found}")]
    WrongFlavor {
        expected: &'static str,
        found: String,
    },

    #[error("t = {t} lies inside the initial layer (max eps^2 ln(1/eps) = {layer})")]
    InsideInitialLayer { t: f64, layer: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("layout needs {requested} amplitudes, above the budget of {budget}")]
    ResourceGuard { requested: usize, budget: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
