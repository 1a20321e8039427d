use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not Hurwitz: eigenvalue real part {max_real_part:.3e} is not negative")]
    NotHurwitz { max_real_part: f64 },

    #[error("linear system is singular or rank-deficient")]
    SingularSystem,

    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix does not have full column rank (singular value ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("non-finite derivative in RK4 stage {stage}")]
    NonFiniteDerivative { stage: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("barrier breached: e'Pe / xi'^2 = {ratio:.9}")]
    BarrierBreach { ratio: f64 },

    #[error("input-only bound requires x0_bar")]
    MissingX0,

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("configuration fails feasibility condition C1 (margin {margin:.6})")]
    InfeasibleConfig { margin: f64 },

    #[error("config parse error: {0}")]
    Config(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
