use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("series is not invertible: {0}")]
    NotInvertible(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("invalid quantization parameter: {0}")]
    InvalidParam(String),
    #[error("operands live on different quantization parameters")]
    ParamMismatch,
    #[error("lattices differ: {0} vs {1}")]
    LatticeMismatch(usize, usize),
    #[error("not multipliable: {0}")]
    NotMultipliable(String),
    #[error("insufficient precision at {point:?}: known to u^{have}, need u^{need}")]
    InsufficientPrecision { point: Vec<i64>, have: i64, need: i64 },
    #[error("coefficient requested outside the known window at {0:?}")]
    OutsideWindow(Vec<i64>),
    #[error("not composable: {0}")]
    NotComposable(String),
    #[error("alpha squared is degenerate (A singular)")]
    DegenerateAlpha,
    #[error("{d} does not divide {n}")]
    Indivisible { d: i64, n: i64 },
    #[error("incompatible quantization on basis pair ({0}, {1})")]
    IncompatibleQuantization(usize, usize),
    #[error("exponent not in the image of the lattice map: {0:?}")]
    NotInImage(Vec<i64>),
    #[error("structure pairing not symmetric on generators ({0}, {1})")]
    NonSymmetricPairing(usize, usize),
    #[error("generator images {0} and {1} do not commute")]
    CocycleFailure(usize, usize),
    #[error("square-root pairing entry ({0}, {1}) does not square to the structure pairing")]
    SqrtMismatch(usize, usize),
    #[error("theta recurrence inconsistent: achieved dimension {achieved} of index {index}")]
    InconsistentRecurrence { achieved: usize, index: u64 },
    #[error("infinite index [H : h-(B)]")]
    InfiniteIndex,
    #[error("no representable lift: {0}")]
    NoLift(String),
    #[error("alternate form takes a value outside +-1 on ({0}, {1})")]
    IncompatibleForm(usize, usize),
    #[error("the image of L(B) in T(H,1) x H is not injective")]
    NonInjectiveImage,
    #[error("roots of unity of order {order} are not available for cyclotomic order {m}")]
    MissingRootsOfUnity { order: u64, m: u32 },
    #[error("element is not in the normalizer: {0}")]
    NotInNormalizer(String),
    #[error("theta space dimension {dim} is below the index {index}")]
    DimensionDeficit { dim: usize, index: u64 },
    #[error("multiplier is not symmetric")]
    NotSymmetricMultiplier,
    #[error("multiplier is not ample")]
    NotAmple,
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("value not representable: {0}")]
    Unrepresentable(String),
    #[error("parse error: {0}")]
    Parse(String),
}
