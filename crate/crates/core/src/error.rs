use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("I/O error on scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown {kind} `{id}` referenced by {by}")]
    Dangling {
        kind: &'static str,
        id: String,
        by: String,
    },
    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("{element}: {reason}")]
    Invalid { element: String, reason: String },
    #[error("unknown builtin scenario `{0}` (expected two-link, nd-car-only or nd-multimodal)")]
    UnknownBuiltin(String),
    #[error("unknown path `{0}`")]
    UnknownPath(String),
}

impl ScenarioError {
    pub(crate) fn invalid(element: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            element: element.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SupplyError {
    #[error("negative flow {0} veh/h")]
    NegativeFlow(f64),
    #[error("nonpositive speed {0} km/h for speed-dependent consumption")]
    NonPositiveSpeed(f64),
    #[error("mode `{mode}` is not allowed on link `{link}`")]
    ModeNotAllowed { link: String, mode: String },
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("empty choice set")]
    EmptyChoiceSet,
    #[error("nonpositive path cost {0} in commonality factor")]
    NonPositiveCost(f64),
    #[error("mode has no path on this OD pair")]
    ModeUnavailable,
}

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Supply(#[from] SupplyError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error("price vector has {got} entries, scenario has {expected} paths")]
    PriceDimension { expected: usize, got: usize },
    #[error("flow vector has wrong shape: {0}")]
    FlowShape(String),
    #[error("calibration target for OD `{0}` must be positive")]
    BadTarget(String),
    #[error("OD `{0}` has no car path to calibrate against")]
    NoCarMode(String),
    #[error("car flow on OD `{od}` reaches only {reached:.1} pax/h at the upper bracket (target {target:.1})")]
    BracketFailure { od: String, reached: f64, target: f64 },
    #[error("demand calibration did not converge after {sweeps} sweeps (worst error {worst:.4})")]
    CalibrationDiverged { sweeps: usize, worst: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Error, PartialEq)]
pub enum ClassicalError {
    #[error("demand must be positive, got {0}")]
    BadDemand(f64),
    #[error("system optimum is at a corner ({0:?}); the valid-toll line is degenerate")]
    NotInterior([f64; 2]),
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("results come from different scenarios (`{0}` vs `{1}`)")]
    ScenarioMismatch(String, String),
    #[error("cost vectors differ in length ({0} vs {1})")]
    Dimension(usize, usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum PricingError {
    #[error("unit price {value} at index {index} outside [{lb}, {ub}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lb: f64,
        ub: f64,
    },
    #[error("expected {expected} unit prices, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid design problem: {0}")]
    InvalidProblem(String),
}
