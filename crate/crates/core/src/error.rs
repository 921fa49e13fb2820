use thiserror::Error;

/// Every failure mode of the lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("point is not inside the domain (Re z2 = {re2}, profile value {profile})")]
    PointOutsideDomain { re2: f64, profile: f64 },
    #[error("direction vector has zero norm")]
    ZeroDirection,
    #[error("point is not on the boundary (residual {residual:e})")]
    NotOnBoundary { residual: f64 },
    #[error("profile is not differentiable at x = {x} (one-sided slopes {left:e} and {right:e})")]
    NonSmoothPoint { x: f64, left: f64, right: f64 },
    #[error("value {value:e} is outside the range of the profile")]
    OutOfRange { value: f64 },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("curve left the working box at t = {t} with depth {depth:e}")]
    EscapedDepthCap { t: f64, depth: f64 },
    #[error("distance grid is disconnected between the query points")]
    DisconnectedGrid,
    #[error("query point could not be attached to the distance grid")]
    AttachmentFailure,
    #[error("point {re} + {im}i is outside the right half-plane")]
    OutsideHalfPlane { re: f64, im: f64 },
    #[error("Gromov ratio is not balanced at the endpoints (h(0) = {h0}, h(1) = {h1})")]
    BalanceViolation { h0: f64, h1: f64 },
    #[error("integrand is not finite at x = {x:e}")]
    NonFiniteIntegrand { x: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
