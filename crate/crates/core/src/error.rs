use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by a non-unit: {0}")]
    DivisionByNonUnit(String),
    #[error("not a square in Q_p")]
    NotASquare,
    #[error("roots do not lie in Q_p")]
    IrrationalRoots,
    #[error("scalars over different primes ({0} and {1})")]
    PrimeMismatch(u64, u64),
    #[error("value is not p-integral")]
    NotIntegral,
    #[error("insufficient precision: need {needed} digits, have {have}")]
    InsufficientPrecision { needed: i64, have: i64 },
    #[error("eigenspace is not one-dimensional ({zeros} zero elementary divisors)")]
    EigenspaceNotOneDimensional { zeros: usize },
    #[error("no computability certificate for {0}")]
    NoCertificate(String),
    #[error("missing Hecke eigenvalue at {prime}; table must cover all primes of norm <= {bound}")]
    MissingPrime { prime: String, bound: u64 },
    #[error("norm {norm} exceeds factorisation bound {bound}")]
    FactorBoundExceeded { norm: String, bound: u64 },
    #[error("{0} is not a totally positive element of the inverse different")]
    NotInInverseDifferent(String),
    #[error("no licence for inverting Theta_1: {0}")]
    LicenceMissing(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("character parity does not match weight")]
    ParityMismatch,
    #[error("trivial character in weight zero has no critical Eisenstein series")]
    TrivialWeightZero,
    #[error("character values outside Q are not supported: {0}")]
    UnsupportedCharacterRing(String),
    #[error("series does not converge")]
    SeriesDivergence,
    #[error("pole of the p-adic L-function")]
    Pole,
    #[error("eigenvalue table: {0}")]
    Table(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("series is not cuspidal at infinity")]
    NotCuspidal,
    #[error("series trusted to q^{have}, need q^{needed}")]
    InsufficientTruncation { needed: usize, have: usize },
    #[error("polynomial identity fails: {0}")]
    IdentityFailure(String),
    #[error("Euler factor vanishes at working precision: {0}")]
    EulerVanishing(String),
    #[error("tail contribution cannot be bounded: {0}")]
    TailUnbounded(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
