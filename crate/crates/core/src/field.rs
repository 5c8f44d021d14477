//! Scalar functions of `(u, u1)` evaluable with second-order partials.

use std::fmt;
use std::sync::Arc;

use crate::ad::{HyperDual2, Var};
use crate::error::Result;
use crate::expr::{Expr, Params};

pub trait ScalarField: Send + Sync {
    fn eval_hd(&self, u: HyperDual2, u1: HyperDual2) -> Result<HyperDual2>;

    /// Human-readable form, used in reports.
    fn describe(&self) -> String {
        "<function>".to_string()
    }

    fn value(&self, u: f64, u1: f64) -> Result<f64> {
        Ok(self
            .eval_hd(HyperDual2::constant(u), HyperDual2::constant(u1))?
            .val)
    }

    fn jet(&self, u: f64, u1: f64) -> Result<HyperDual2> {
        self.eval_hd(HyperDual2::lift(u, Var::U), HyperDual2::lift(u1, Var::U1))
    }
}

pub type Field = Arc<dyn ScalarField>;

/// An expression together with its parameter values.
#[derive(Debug, Clone)]
pub struct BoundExpr {
    pub expr: Expr,
    pub params: Params,
}

impl BoundExpr {
    pub fn new(expr: Expr, params: Params) -> Self {
        BoundExpr { expr, params }
    }

    pub fn into_field(self) -> Field {
        Arc::new(self)
    }
}

impl ScalarField for BoundExpr {
    fn eval_hd(&self, u: HyperDual2, u1: HyperDual2) -> Result<HyperDual2> {
        Ok(self.expr.eval_hd(u, u1, &self.params)?)
    }

    fn describe(&self) -> String {
        self.expr.to_string()
    }
}

/// Adapter for closures.
pub struct FnField<F> {
    f: F,
    label: String,
}

impl<F> FnField<F>
where
    F: Fn(HyperDual2, HyperDual2) -> Result<HyperDual2> + Send + Sync + 'static,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        FnField {
            f,
            label: label.into(),
        }
    }

    pub fn into_field(self) -> Field {
        Arc::new(self)
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(HyperDual2, HyperDual2) -> Result<HyperDual2> + Send + Sync,
{
    fn eval_hd(&self, u: HyperDual2, u1: HyperDual2) -> Result<HyperDual2> {
        (self.f)(u, u1)
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("label", &self.label)
            .finish()
    }
}
