use thiserror::Error;

/// Errors surfaced by the coordination engine.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("device {device} references invalid node {node} (feeder has {node_count} nodes)")]
    InvalidNode {
        device: usize,
        node: usize,
        node_count: usize,
    },

    #[error("device {device}: state band [{lower}, {upper}] unreachable at slot {slot} (reachable [{reach_lo}, {reach_hi}])")]
    InfeasibleStateBand {
        device: usize,
        slot: usize,
        lower: f64,
        upper: f64,
        reach_lo: f64,
        reach_hi: f64,
    },

    #[error("subproblem for node {node} did not converge within {iterations} iterations (residual {residual:.3e}, tol {tol:.3e})")]
    SubproblemNonConvergence {
        node: usize,
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("empty discrete setpoint set for device {device}")]
    EmptyDiscreteSet { device: usize },

    #[error("relaxed setpoint {value} outside discrete hull [{lo}, {hi}] beyond tolerance for device {device}")]
    SetpointOutsideHull {
        device: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("stepsize {epsilon:.6e} exceeds admissible limit {limit:.6e}")]
    InadmissibleStepsize { epsilon: f64, limit: f64 },

    #[error("strict feasibility check failed: minimum slack {min_slack:.6e} on constraint rows {binding_rows:?}")]
    SlaterViolation {
        min_slack: f64,
        binding_rows: Vec<usize>,
    },

    #[error("power flow did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    PowerFlowDivergence { sweeps: usize, residual: f64 },

    #[error("horizon step {m} exceeds window of {window} slots")]
    HorizonExceeded { m: usize, window: usize },

    #[error("cost weight for device {device} must be positive, got {value}")]
    NonPositiveWeight { device: usize, value: f64 },

    #[error("bound tightening by {delta:.6} collapses the band [{lower}, {upper}]")]
    InfeasibleTightening {
        delta: f64,
        lower: f64,
        upper: f64,
    },

    #[error("trace too short for constant estimation: {len} records, need at least {need}")]
    TraceTooShort { len: usize, need: usize },

    #[error("scenario schema violation in {file}: {detail}")]
    SchemaViolation { file: String, detail: String },

    #[error("series '{name}' covers {len} slots, horizon needs {need}")]
    SeriesLengthMismatch {
        name: String,
        len: usize,
        need: usize,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
