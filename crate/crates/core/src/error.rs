use crate::Mode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate action box: dimension {dim} has bounds [{lo}, {hi}]")]
    DegenerateBox { dim: usize, lo: f64, hi: f64 },
    #[error("action grid with {nodes} nodes exceeds the cap of {cap}")]
    GridTooLarge { nodes: usize, cap: usize },
    #[error("invalid action grid: {0}")]
    InvalidGrid(String),
    #[error("no finite truncation horizon reaches tolerance {tol:e} (tail floor {floor:e})")]
    NoFiniteHorizon { tol: f64, floor: f64 },
    #[error("density row {state} integrates to {mass} instead of 1")]
    NotNormalized { state: usize, mass: f64 },
    #[error("negative density at state {state}, node {node}")]
    NegativeDensity { state: usize, node: usize },
    #[error("entropy weight must be positive, got {0}")]
    NonpositiveLambda(f64),
    #[error("operation requires a {expected} model, found {found}")]
    ModeMismatch { expected: Mode, found: Mode },
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("step h[{index}] = {h} too large: h * max rate must be <= 1 (max rate {max_rate})")]
    StepTooLarge { index: usize, h: f64, max_rate: f64 },
    #[error("no annealing stage converged")]
    AllStagesDiverged,
    #[error("model structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("discount family is not exponential")]
    NotExponential,
    #[error("search space of {candidates} candidates exceeds the cap of {cap}")]
    ScanTooLarge { candidates: usize, cap: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
