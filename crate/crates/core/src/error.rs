use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state outside the domain: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("config error{}{}: {msg}", .line.map(|l| format!(" at line {l}")).unwrap_or_default(), .field.as_ref().map(|f| format!(" in field `{f}`")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: Option<String>,
        msg: String,
    },

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("continuation stalled at arclength {s:.6e}: {msg}")]
    ContinuationStall { s: f64, msg: String },

    #[error("eigenvalue collision: spectral gap {gap:.3e} below {tol:.3e}")]
    EigenvalueCollision { gap: f64, tol: f64 },

    #[error("not a discontinuity: {0}")]
    NotADiscontinuity(String),

    #[error("adaptive quadrature on [{a}, {b}] hit the depth limit")]
    QuadratureFailure { a: f64, b: f64 },

    #[error("solution blew up at t = {t:.6e}: {msg}")]
    BlowUp { t: f64, msg: String },

    #[error("waves reached the boundary at t = {t:.6e} (cell {cell})")]
    BoundaryContact { t: f64, cell: usize },

    #[error("position {x:.6e} outside the usable interval [{lo:.6e}, {hi:.6e}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            field: Some(field.into()),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
