use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time {t} lies outside the covered range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("delay {delay} became an advance at t = {t} (tau = {tau})")]
    AdvanceDetected { t: f64, delay: usize, tau: f64 },

    #[error("non-finite stage value in stage {stage} at t = {t}")]
    BlowUp { t: f64, stage: usize },

    #[error("step size {h} underflowed at t = {t}")]
    StepUnderflow { t: f64, h: f64 },

    #[error("degenerate crossing for delay {delay} in step starting at t = {t}: {reason}")]
    DegenerateCrossing {
        t: f64,
        delay: usize,
        reason: &'static str,
    },

    #[error("velocity {value} at t = {t} violates the bounds [{v_min}, {v_max}]")]
    VelocityBound {
        t: f64,
        value: f64,
        v_min: f64,
        v_max: f64,
    },

    #[error("history too short: integral over the whole history is {integral}, threshold is {a}")]
    HistoryTooShort { integral: f64, a: f64 },

    #[error("no bracketing interval: {0}")]
    BracketNotFound(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
}
