use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("spatial dimension N = {0} is below 2")]
    Dimension(u32),
    #[error("exponent p = {p} is outside the super-conformal band ({lower}, {upper})")]
    ExponentOutOfBand { p: f64, lower: f64, upper: f64 },
    #[error("perturbation exponent q = {q} must be below p = {p}")]
    PerturbationExponent { q: f64, p: f64 },
    #[error("perturbation violates |f(u)| <= M(1 + |u|^q) at u = {u}")]
    PerturbationBound { u: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid must end at r = 1 (ends at r = {0})")]
    NotUnitBall(f64),
    #[error("time step {step} exceeds the stability limit {limit}")]
    Cfl { step: f64, limit: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no blow-up detected after {steps} steps (max amplitude {amplitude})")]
    NoBlowup { steps: usize, amplitude: f64 },
    #[error("non-finite values produced at time {0} outside blow-up detection")]
    NonFinite(f64),
    #[error("time {time} is outside the trajectory coverage [{first}, {last}]")]
    Coverage { time: f64, first: f64, last: f64 },
    #[error("radius {needed} exceeds the grid radius {available}")]
    RadialCoverage { needed: f64, available: f64 },
    #[error("frame T0 = {frame} exceeds the blow-up time estimate {horizon}")]
    FrameBeyondBlowup { frame: f64, horizon: f64 },
    #[error("trajectory too short: need {need} snapshots, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("trajectory snapshots are not uniformly spaced")]
    NonUniformSpacing,
    #[error("fit needs at least {need} samples in its window, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("non-positive value {value} at time {time} in fit window")]
    NonPositive { time: f64, value: f64 },
}
