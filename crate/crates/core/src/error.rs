use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too small: {n} nodes (need at least {min})")]
    GridTooSmall { n: usize, min: usize },

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("operation requires a {expected} grid")]
    WrongGrid { expected: &'static str },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("every node is below the density floor {floor:e}")]
    BelowFloor { floor: f64 },

    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("initial state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("method {method} requires a {boundary} boundary")]
    IncompatibleBoundary {
        method: &'static str,
        boundary: &'static str,
    },

    #[error("non-finite values after step {step}")]
    Instability { step: usize },

    #[error("requested {k_max} states but the highest energy shifts by {shift:e} (relative) under grid refinement")]
    UnresolvedStates { k_max: usize, shift: f64 },

    #[error("trajectory from x0 = {x0} left the domain at t = {t}")]
    TrajectoryEscaped { x0: f64, t: f64 },

    #[error("caustic: |jacobian| = {jacobian:e} at t = {t}, x0 = {x0}")]
    Caustic { t: f64, x0: f64, jacobian: f64 },

    #[error("branch folding at t = {t}: trajectories cross near x = {x}")]
    BranchFolding { t: f64, x: f64 },

    #[error("potential {0} is not supported here")]
    UnsupportedPotential(String),

    #[error("no classically forbidden region: E = {energy} >= barrier height {height}")]
    NoForbiddenRegion { energy: f64, height: f64 },

    #[error("grid too narrow for mode {k}: edge amplitude {edge:e}")]
    GridTooNarrow { k: usize, edge: f64 },

    #[error("basis is not orthonormal on this grid (max deviation {deviation:e})")]
    BasisNotOrthonormal { deviation: f64 },

    #[error("truncation deficit {deficit:e} exceeds tolerance {tolerance:e}")]
    TruncationDeficit { deficit: f64, tolerance: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid override `{key}`: {reason}")]
    InvalidOverride { key: String, reason: String },

    #[error("threshold references metric `{0}` which the scenario does not produce")]
    ThresholdMismatch(String),

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_scenario(self, scenario: &str) -> Error {
        Error::Scenario {
            scenario: scenario.to_string(),
            source: Box::new(self),
        }
    }
}
