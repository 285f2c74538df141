use thiserror::Error;

/// Every failure the library reports. Variants map onto CLI exit code 2
/// (usage/format) except where a check legitimately fails (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has odd dimension {0}")]
    OddDimension(usize),
    #[error("matrix is not symmetric (defect {0:e})")]
    NonSymmetric(f64),
    #[error("dilation matrix is singular")]
    SingularL,
    #[error("matrix is not symplectic (defect {0:e})")]
    NotSymplectic(f64),
    #[error("matrix is not Hamiltonian (defect {0:e})")]
    NotHamiltonian(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("point is off the lattice: {0}")]
    OffLattice(String),
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("Hermite order {k} too high for n = {n} (need k <= n/4)")]
    OrderTooHigh { k: usize, n: usize },
    #[error("window has zero norm")]
    ZeroWindow,
    #[error("bad exponent: {0}")]
    BadExponent(String),
    #[error("no tau in 0..={0} makes A + tau B invertible")]
    FactorizationFailed(usize),
    #[error("kernel too large: n = {n} exceeds the cap {cap}")]
    KernelTooLarge { n: usize, cap: usize },
    #[error("workload too large: {0}")]
    TooLarge(String),
    #[error("ill-conditioned matrix (condition number {0:e})")]
    IllConditioned(f64),
    #[error("ill-conditioned symplectic matrix: {0}")]
    IllConditionedS(String),
    #[error("phase is not lattice compatible: {0}")]
    NotLatticeCompatible(String),
    #[error("unstable step: norm drift {0:e}")]
    UnstableStep(f64),
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported format version: {0}")]
    FormatVersion(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
