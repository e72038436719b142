use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Discrete basis normalization x/g is undefined for a zero goal.
    #[error("discrete primitive has a zero goal; basis normalization x/g is undefined")]
    GoalZero,

    /// The basis activation normalizer fell below its floor.
    #[error("basis activation normalizer {sum:.3e} is at or below the floor {floor:.1e}")]
    DegenerateNormalizer { sum: f64, floor: f64 },

    /// Integration step exceeds the stability guard dt <= tau/10.
    #[error("step size {dt} s exceeds the stability guard tau/10 = {limit} s")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("invalid primitive parameters: {0}")]
    InvalidParams(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("demonstration has {len} samples; at least {min} required")]
    TooFewSamples { len: usize, min: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    /// Segmentation found the selected DOF's maximum on a boundary sample.
    #[error("dof {dof} attains its maximum at boundary sample {index}; cannot segment")]
    BoundaryPeak { dof: usize, index: usize },

    #[error("basis sets do not match ({0} vs {1} weight entries)")]
    BasisMismatch(usize, usize),

    #[error("metric is numerically singular (condition estimate {cond:.3e})")]
    SingularMetric { cond: f64 },

    #[error("matrix is not Hurwitz: Lyapunov equation has no positive definite solution")]
    NonHurwitz,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// Roll is at or beyond the guard band where the cos(phi) inversion
    /// of the collective law is invalid.
    #[error("roll angle {phi:.3} rad at or beyond controller guard {guard:.3} rad")]
    RollGuard { phi: f64, guard: f64 },

    #[error("simulation diverged at t = {t:.3} s: a state exceeded {limit:.1e}")]
    Diverged { t: f64, limit: f64 },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    /// A pipeline stage failed; carries the stage name.
    #[error("pipeline stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Process exit code for the CLI: 2 for data/config problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::Config(_)
            | Error::InvalidTrajectory(_)
            | Error::TooFewSamples { .. }
            | Error::InvalidParams(_)
            | Error::BasisMismatch(..)
            | Error::BoundaryPeak { .. }
            | Error::GoalZero
            | Error::LengthMismatch(..) => 2,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
