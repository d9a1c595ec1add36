use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("x = {x} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("potential is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("step size underflow at x = {x} (step {h:e})")]
    StepUnderflow { x: f64, h: f64 },
    #[error("exceeded {max_steps} integration steps before reaching x = {x_end} (stopped at {x})")]
    MaxStepsExceeded { max_steps: usize, x: f64, x_end: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("tail covers {shells} dyadic shells, at least {required} are needed")]
    InsufficientTail { shells: usize, required: usize },
    #[error("no exact origin asymptotics available for this potential")]
    AsymptoticsUnavailable,
    #[error("cannot compose deficiency indices from an inconclusive endpoint")]
    InconclusiveInput,
    #[error("boundary ratio of kind {kind} is singular at c = {c}")]
    SingularRatio { c: f64, kind: u8 },
    #[error("derivative samples are required")]
    MissingDerivative,
    #[error("bump centred at {center} with width {width} is not strictly inside [{lo}, {hi}]")]
    BumpNotInterior { center: f64, width: f64, lo: f64, hi: f64 },
}
