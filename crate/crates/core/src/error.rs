use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("quadrature did not converge within {0} subdivisions")]
    Quadrature(usize),
    #[error("small divisor at mode {mode}: |exp(2 pi i k alpha) - 1| = {value:e}")]
    SmallDivisor { mode: usize, value: f64 },
    #[error("convergent index {requested} exceeds certified depth {available}")]
    Depth { requested: usize, available: usize },
    #[error("denominator exceeds the bit budget of {0} bits")]
    BitBudget(u64),
    #[error("precision budget exceeded: substitution error {bound:e} is not below {tolerance:e}")]
    Precision { bound: f64, tolerance: f64 },
    #[error("ellipticity violated at {site}: p = {value}")]
    Ellipticity { site: String, value: f64 },
    #[error("site {0} lies outside the tabulated window")]
    OutsideWindow(i64),
    #[error("divergent limit: M({0}) is infinite")]
    Divergent(&'static str),
    #[error("tail not certifiably geometric: max step factor {0}")]
    Tail(f64),
    #[error("no sign change on the bracket: I(lo) = {lo:e}, I(hi) = {hi:e}")]
    Bracket { lo: f64, hi: f64 },
    #[error("leakage {leak:e} exceeds budget {budget:e}")]
    Leakage { leak: f64, budget: f64 },
    #[error("window of {0} sites exceeds the memory budget")]
    Memory(u64),
    #[error("environment is not periodic with period dividing {0}")]
    NotPeriodic(i64),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
