//! Second-order forward-mode automatic differentiation in two variables.
//!
//! A [`HyperDual2`] carries a value together with its first and second
//! partial derivatives with respect to `u` and `u1`. Arithmetic propagates
//! all six slots exactly through the product, quotient and chain rules, so
//! the partials of `phi` that enter the curvature formulas come out without
//! truncation error.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} is not defined at {value}")]
    InvalidDomain { func: &'static str, value: f64 },
    #[error("function `{0}` is not supported (not twice differentiable)")]
    UnsupportedFunction(&'static str),
}

/// Which independent variable a seed represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    U,
    U1,
}

/// Value plus first and second partials with respect to `(u, u1)`.
///
/// The mixed partial is stored once, so `d_uv == d_vu` holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HyperDual2 {
    pub val: f64,
    pub d_u: f64,
    pub d_v: f64,
    pub d_uu: f64,
    pub d_uv: f64,
    pub d_vv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Neg,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Arctan,
    Arcsin,
    Arcsinh,
    Abs,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Neg => "neg",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Arctan => "arctan",
            UnaryFn::Arcsin => "arcsin",
            UnaryFn::Arcsinh => "arcsinh",
            UnaryFn::Abs => "abs",
        }
    }

    /// Functions callable by name in the expression grammar.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => UnaryFn::Sqrt,
            "exp" => UnaryFn::Exp,
            "ln" => UnaryFn::Ln,
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "tan" => UnaryFn::Tan,
            "arctan" => UnaryFn::Arctan,
            "arcsin" => UnaryFn::Arcsin,
            "arcsinh" => UnaryFn::Arcsinh,
            _ => return None,
        })
    }

    /// `(f(a), f'(a), f''(a))`, checking the domain of `f`.
    pub fn derivatives(self, a: f64) -> Result<(f64, f64, f64), AdError> {
        let domain = |func| AdError::InvalidDomain { func, value: a };
        Ok(match self {
            UnaryFn::Neg => (-a, -1.0, 0.0),
            UnaryFn::Sqrt => {
                if !(a > 0.0) {
                    return Err(domain("sqrt"));
                }
                let s = a.sqrt();
                (s, 0.5 / s, -0.25 / (a * s))
            }
            UnaryFn::Exp => {
                let e = a.exp();
                (e, e, e)
            }
            UnaryFn::Ln => {
                if !(a > 0.0) {
                    return Err(domain("ln"));
                }
                (a.ln(), 1.0 / a, -1.0 / (a * a))
            }
            UnaryFn::Sin => {
                let (s, c) = a.sin_cos();
                (s, c, -s)
            }
            UnaryFn::Cos => {
                let (s, c) = a.sin_cos();
                (c, -s, -c)
            }
            UnaryFn::Tan => {
                let c = a.cos();
                if c == 0.0 {
                    return Err(domain("tan"));
                }
                let t = a.tan();
                let sec2 = 1.0 + t * t;
                (t, sec2, 2.0 * t * sec2)
            }
            UnaryFn::Arctan => {
                let q = 1.0 / (1.0 + a * a);
                (a.atan(), q, -2.0 * a * q * q)
            }
            UnaryFn::Arcsin => {
                if !(a.abs() < 1.0) {
                    return Err(domain("arcsin"));
                }
                let r = 1.0 - a * a;
                let s = r.sqrt();
                (a.asin(), 1.0 / s, a / (r * s))
            }
            UnaryFn::Arcsinh => {
                let r = 1.0 + a * a;
                let s = r.sqrt();
                (a.asinh(), 1.0 / s, -a / (r * s))
            }
            UnaryFn::Abs => return Err(AdError::UnsupportedFunction("abs")),
        })
    }
}

impl HyperDual2 {
    pub const fn constant(val: f64) -> Self {
        HyperDual2 {
            val,
            d_u: 0.0,
            d_v: 0.0,
            d_uu: 0.0,
            d_uv: 0.0,
            d_vv: 0.0,
        }
    }

    /// Seed for an independent variable: the matching first partial is one.
    pub fn lift(value: f64, which: Var) -> Self {
        let mut h = Self::constant(value);
        match which {
            Var::U => h.d_u = 1.0,
            Var::U1 => h.d_v = 1.0,
        }
        h
    }

    /// True when all derivative slots vanish.
    pub fn is_constant(&self) -> bool {
        self.d_u == 0.0
            && self.d_v == 0.0
            && self.d_uu == 0.0
            && self.d_uv == 0.0
            && self.d_vv == 0.0
    }

    /// Compose a scalar function with derivatives `(f0, f1, f2)` at `self.val`.
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        HyperDual2 {
            val: f0,
            d_u: f1 * self.d_u,
            d_v: f1 * self.d_v,
            d_uu: f2 * self.d_u * self.d_u + f1 * self.d_uu,
            d_uv: f2 * self.d_u * self.d_v + f1 * self.d_uv,
            d_vv: f2 * self.d_v * self.d_v + f1 * self.d_vv,
        }
    }

    pub fn apply(self, f: UnaryFn) -> Result<Self, AdError> {
        let (f0, f1, f2) = f.derivatives(self.val)?;
        Ok(self.chain(f0, f1, f2))
    }

    pub fn recip(self) -> Result<Self, AdError> {
        if self.val == 0.0 {
            return Err(AdError::DivisionByZero);
        }
        let r = 1.0 / self.val;
        Ok(self.chain(r, -r * r, 2.0 * r * r * r))
    }

    pub fn try_div(self, rhs: Self) -> Result<Self, AdError> {
        Ok(self * rhs.recip()?)
    }

    pub fn powi(self, n: i32) -> Result<Self, AdError> {
        if n == 0 {
            return Ok(Self::constant(1.0));
        }
        if n < 0 && self.val == 0.0 {
            return Err(AdError::DivisionByZero);
        }
        let a = self.val;
        let nf = f64::from(n);
        let f1 = nf * a.powi(n - 1);
        let f2 = if n == 1 {
            0.0
        } else {
            nf * (nf - 1.0) * a.powi(n - 2)
        };
        Ok(self.chain(a.powi(n), f1, f2))
    }

    /// Power with a constant real exponent.
    pub fn powf(self, p: f64) -> Result<Self, AdError> {
        if p.fract() == 0.0 && p.abs() <= f64::from(i32::MAX) {
            return self.powi(p as i32);
        }
        let a = self.val;
        if !(a > 0.0) {
            return Err(AdError::InvalidDomain {
                func: "pow",
                value: a,
            });
        }
        Ok(self.chain(
            a.powf(p),
            p * a.powf(p - 1.0),
            p * (p - 1.0) * a.powf(p - 2.0),
        ))
    }

    /// General power `self^rhs`; a non-constant exponent needs a positive base.
    pub fn pow(self, rhs: Self) -> Result<Self, AdError> {
        if rhs.is_constant() {
            return self.powf(rhs.val);
        }
        if !(self.val > 0.0) {
            return Err(AdError::InvalidDomain {
                func: "pow",
                value: self.val,
            });
        }
        (rhs * self.apply(UnaryFn::Ln)?).apply(UnaryFn::Exp)
    }
}

/// Binary arithmetic with domain checking.
pub fn hd_arith(a: HyperDual2, b: HyperDual2, op: BinaryOp) -> Result<HyperDual2, AdError> {
    match op {
        BinaryOp::Add => Ok(a + b),
        BinaryOp::Sub => Ok(a - b),
        BinaryOp::Mul => Ok(a * b),
        BinaryOp::Div => a.try_div(b),
        BinaryOp::Pow => a.pow(b),
    }
}

pub fn hd_unary(a: HyperDual2, f: UnaryFn) -> Result<HyperDual2, AdError> {
    a.apply(f)
}

impl Add for HyperDual2 {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        HyperDual2 {
            val: self.val + b.val,
            d_u: self.d_u + b.d_u,
            d_v: self.d_v + b.d_v,
            d_uu: self.d_uu + b.d_uu,
            d_uv: self.d_uv + b.d_uv,
            d_vv: self.d_vv + b.d_vv,
        }
    }
}

impl Sub for HyperDual2 {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for HyperDual2 {
    type Output = Self;
    fn neg(self) -> Self {
        HyperDual2 {
            val: -self.val,
            d_u: -self.d_u,
            d_v: -self.d_v,
            d_uu: -self.d_uu,
            d_uv: -self.d_uv,
            d_vv: -self.d_vv,
        }
    }
}

impl Mul for HyperDual2 {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let a = self;
        HyperDual2 {
            val: a.val * b.val,
            d_u: a.d_u * b.val + a.val * b.d_u,
            d_v: a.d_v * b.val + a.val * b.d_v,
            d_uu: a.d_uu * b.val + 2.0 * a.d_u * b.d_u + a.val * b.d_uu,
            d_uv: a.d_uv * b.val + a.d_u * b.d_v + a.d_v * b.d_u + a.val * b.d_uv,
            d_vv: a.d_vv * b.val + 2.0 * a.d_v * b.d_v + a.val * b.d_vv,
        }
    }
}

impl Add<f64> for HyperDual2 {
    type Output = Self;
    fn add(mut self, b: f64) -> Self {
        self.val += b;
        self
    }
}

impl Mul<f64> for HyperDual2 {
    type Output = Self;
    fn mul(self, b: f64) -> Self {
        HyperDual2 {
            val: self.val * b,
            d_u: self.d_u * b,
            d_v: self.d_v * b,
            d_uu: self.d_uu * b,
            d_uv: self.d_uv * b,
            d_vv: self.d_vv * b,
        }
    }
}

impl fmt::Display for HyperDual2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [u: {}, u1: {}, uu: {}, uu1: {}, u1u1: {}]",
            self.val, self.d_u, self.d_v, self.d_uu, self.d_uv, self.d_vv
        )
    }
}
