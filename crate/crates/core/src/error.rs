use thiserror::Error;

use crate::ad::AdError;
use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("domain error: {0}")]
    Domain(#[from] AdError),
    #[error("point outside the declared domain of the equation: u = {u}, u1 = {u1}")]
    OutsideDomain { u: f64, u1: f64 },
    #[error("singular point: |u1| = {u1:e} is within eps_u1 = {eps:e} of zero")]
    SingularPoint { u1: f64, eps: f64 },
    #[error("trajectory reaches u1 = 0 at {at}")]
    SingularCrossing { at: f64 },
    #[error("leaf does not reach the reference section; tracing stopped at u = {u_stop}")]
    NotReachable { u_stop: f64 },
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("finite-difference stencil of radius {radius} leaves the domain")]
    StepTooLarge { radius: f64 },
    #[error("zero tangent vector")]
    ZeroTangent,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sampling region contains no points")]
    EmptyRegion,
    #[error(
        "quadrature did not converge: estimated error {abs_err:e} after {intervals} intervals"
    )]
    QuadratureFailure { abs_err: f64, intervals: usize },
    #[error("integration interval [{from}, {to}] in u1 contains zero")]
    SignCrossing { from: f64, to: f64 },
    #[error("degenerate Lagrangian: L_u1u1 = {value:e} at (u, u1) = ({u}, {u1})")]
    DegenerateLagrangian { u: f64, u1: f64, value: f64 },
    #[error("unknown builtin `{0}`")]
    UnknownEntry(String),
    #[error("unknown parameter `{param}` for builtin `{entry}`")]
    UnknownParam { entry: String, param: String },
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
