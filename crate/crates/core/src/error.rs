use thiserror::Error;

/// Errors raised by the numerical routines and file I/O.
///
/// Frequencies and points are carried as `f64` so that the error type is
/// independent of the scalar type used by the computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("pole hit: denominator vanishes at s = {re}{im:+}i")]
    PoleHit { re: f64, im: f64 },

    #[error("singularity at s = 0: {0}")]
    Singularity(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate frequency point {re}{im:+}i")]
    DuplicateFrequency { re: f64, im: f64 },

    #[error("conjugate conflict at {re}{im:+}i: stored response is not the conjugate")]
    ConjugateConflict { re: f64, im: f64 },

    #[error("dataset is not closed under conjugation")]
    NotConjugateClosed,

    #[error("point partition needs an even number of conjugate pairs, got {0}")]
    OddPairCount(usize),

    #[error("unbalanced partition: {left} left points versus {right} right points")]
    UnbalancedPartition { left: usize, right: usize },

    #[error("coincident interpolation points mu[{row}] = lambda[{col}]")]
    CoincidentPoints { row: usize, col: usize },

    #[error("Loewner pencil is identically zero")]
    ZeroMatrix,

    #[error("singular pencil: {0}")]
    SingularPencil(String),

    #[error("eigenvalue solver failed: {0}")]
    EigenFailure(String),

    #[error("pole {re}{im:+}i lies inside the imaginary-axis guard band")]
    BoundaryPole { re: f64, im: f64 },

    #[error("descriptor index larger than one; infinite modes cannot be deflated")]
    HigherIndex,

    #[error("loop singularity: |1 + L| underflows at s = {re}{im:+}i")]
    LoopSingularity { re: f64, im: f64 },

    #[error("singular E matrix: {0}")]
    SingularE(String),

    #[error("pole near the origin at {re}{im:+}i: step response does not settle")]
    PoleNearOrigin { re: f64, im: f64 },

    #[error("division by zero at omega = {omega} rad/s: {what}")]
    DivisionByZero { omega: f64, what: String },

    #[error("grid mismatch: no sample at s = {re}{im:+}i")]
    GridMismatch { re: f64, im: f64 },

    #[error("evaluation failed at omega = {omega} rad/s: {source}")]
    Evaluation {
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no feasible starting point: {0}")]
    Infeasible(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn pole_hit<T: crate::Real>(s: num_complex::Complex<T>) -> Self {
        Error::PoleHit { re: s.re.to_f64(), im: s.im.to_f64() }
    }

    pub(crate) fn at_omega(omega: f64, source: Error) -> Self {
        Error::Evaluation { omega, source: Box::new(source) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
