use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("unbounded gap: point list is empty")]
    UnboundedGap,

    #[error("lattice cube with {sites} sites exceeds cap of {cap}")]
    LatticeTooLarge { sites: usize, cap: usize },

    #[error("explosion guard tripped: {steps} particle-steps exceed cap {cap}")]
    ExplosionGuard { steps: u64, cap: u64 },

    #[error("stability violation: time step {k} exceeds h^2 = {h2} in explicit mode")]
    StabilityViolation { k: f64, h2: f64 },

    #[error("theta sweep is not monotone at index {0}: discretization failure")]
    NonMonotoneSweep(usize),

    #[error("stage clocks absent: population was not evolved over a stage")]
    StageClocksAbsent,

    #[error("need at least 2 replicates, got {0}")]
    TooFewReplicates(usize),

    #[error("divergent partial sum in schedule check: {0}")]
    DivergentSum(String),

    #[error("unknown experiment kind: {0}")]
    UnknownExperiment(String),

    #[error("missing calibrated constant `{0}`: run `calibrate` or set it in the config")]
    MissingConstant(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
