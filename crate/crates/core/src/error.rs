use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bad domain: {0}")]
    BadDomain(String),
    #[error("design needs at least 2 rows, got {0}")]
    DesignTooSmall(usize),
    #[error("index {index} out of range (limit {limit})")]
    BadIndex { index: usize, limit: usize },
    #[error("evaluation failed at row {row}: {message}")]
    Evaluation { row: usize, message: String },
    #[error("assembled matrix is not symmetric positive definite{}", param_suffix(*.param))]
    Assembly { param: Option<usize> },
    #[error("basis size {requested} exceeds numerical snapshot rank {rank}")]
    RankDeficient { requested: usize, rank: usize },
    #[error("basis is not orthonormal (Gram deviation {0:e})")]
    BadBasis(f64),
    #[error("reduced matrix is not symmetric positive definite")]
    ReducedAssembly,
    #[error("coercivity lower bound must be positive, got {0}")]
    BadCoercivityBound(f64),
    #[error("sample variance is zero")]
    DegenerateSample,
    #[error("probability {0} outside (0, 1)")]
    OutOfDomain(f64),
    #[error("bootstrap replicates are degenerate")]
    DegenerateBootstrap,
    #[error("interpolation nodes must be distinct")]
    BadNodes,
    #[error("bound unavailable: lower curvature coefficient is not positive")]
    BoundUnavailable,
    #[error("quadratic model disagrees at validation node (relative deviation {deviation:e})")]
    NonQuadraticRegime { deviation: f64 },
    #[error("effectivity {0} outside [0, 1]")]
    BadEffectivity(f64),
    #[error("{dropped} of {total} replicates failed")]
    UnreliableReplication { dropped: usize, total: usize },
    #[error("bad data: {0}")]
    BadData(String),
    #[error("fitted decay base {0} is not above 1")]
    NoDecay(f64),
    #[error("no sign change found below {limit}")]
    NoBracket { limit: f64 },
    #[error("grid needs {evaluations} evaluations, above the budget")]
    TooLarge { evaluations: f64 },
    #[error("degenerate model: {0}")]
    Degenerate(String),
    #[error("interval endpoints out of order: lo {lo} > hi {hi}")]
    IntervalOrder { lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn param_suffix(param: Option<usize>) -> String {
    match param {
        Some(j) => format!(" at parameter {j}"),
        None => String::new(),
    }
}
