use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{}not Hermitian: entry ({row}, {col}) deviates from its conjugate transpose by {deviation:e}", label_prefix(.label))]
    NotHermitian {
        label: Option<String>,
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("observables do not commute: ||[A,B]|| = {norm:e} exceeds {bound:e}")]
    NotCommuting { norm: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state vector has zero norm")]
    ZeroState,

    #[error("Fock truncation n_max = {0} is below the minimum of 2")]
    InvalidTruncation(usize),

    #[error("post-selection probability {prob:e} is below the floor {floor:e}")]
    OrthogonalPostselection { prob: f64, floor: f64 },

    #[error("coupling strength is zero; weak value cannot be extracted")]
    ZeroCoupling,

    #[error("{quantity} has imaginary residue {residue:e}, expected a real value")]
    NumericalConsistency { quantity: &'static str, residue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn label_prefix(label: &Option<String>) -> String {
    match label {
        Some(l) => format!("observable `{l}` is "),
        None => "matrix is ".to_string(),
    }
}

impl Error {
    /// Failures of the numerics (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotCommuting { .. }
                | Error::OrthogonalPostselection { .. }
                | Error::ZeroCoupling
                | Error::NumericalConsistency { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
