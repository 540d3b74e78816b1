use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter {name} is not finite ({value})")]
    NonFiniteParameter { name: &'static str, value: f64 },

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("rotation index {0} is outside 0..12")]
    RotationOutOfRange(i64),

    #[error("both the tangent and the cotangent chart degenerate")]
    DegenerateDenominator,

    #[error("both eigenvalues vanish within {tol:e}; cannot classify")]
    UnresolvedClassification { tol: f64 },

    #[error("s1 = 0 with |s2| > 1: the stability integral at infinity vanishes")]
    DegenerateInfinity,

    #[error("point (r = {r}, theta = {theta}) lies on the critical set where d(theta)/dt = 0")]
    OnCriticalSet { r: f64, theta: f64 },

    #[error("x = {x} at theta = {theta} is the image of infinity")]
    AtInfinity { x: f64, theta: f64 },

    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("solution escaped at t = {t} (|y| = {norm:e})")]
    BlowUp { t: f64, norm: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("curve is not closed (gap {gap:e})")]
    OpenCurve { gap: f64 },
}

impl Error {
    /// True for failures of the numerical integration itself, as opposed to
    /// bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. } | Error::StepUnderflow { .. } | Error::MaxSteps(_)
        )
    }
}
