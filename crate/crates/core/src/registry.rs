//! Built-in equations with their known energies, Lagrangians and curvatures.
//!
//! | name      | equation                                   |
//! |-----------|--------------------------------------------|
//! | `kappa`   | `u'' = sqrt(1 - kappa u'^2)`               |
//! | `kzero`   | `u'' = (4u'^2 + u^2 + u) / (4(2u + 1))`    |
//! | `damped`  | `u'' = -alpha u' - lambda u`               |
//! | `gravity` | `u'' = -Phi_u`, `Phi_uu = 4 pi G rho(u)`   |
//! | `kfamily` | `u'' = K(u) u'`                            |

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::ad::{HyperDual2, Var};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, ExprError, Params, PHASE_VARS, U_ONLY};
use crate::field::{BoundExpr, Field, FnField};
use crate::geometry::{JetPoint, OdeRhs};
use crate::quadrature::{integrate, DEFAULT_ABS_TOL};
use crate::sampling::Region;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub constraint: &'static str,
}

/// Static description of a registry entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntryInfo {
    pub name: &'static str,
    pub equation: &'static str,
    pub parameters: &'static [ParamSpec],
    /// Name of the optional expression argument (`rho`, `K`) and its default.
    pub expression: Option<(&'static str, &'static str)>,
    pub closed_forms: &'static [&'static str],
    pub domain: &'static str,
}

pub const ENTRIES: &[EntryInfo] = &[
    EntryInfo {
        name: "kappa",
        equation: "u2 = sqrt(1 - kappa*u1^2)",
        parameters: &[ParamSpec { name: "kappa", default: 1.0, constraint: "kappa != 0" }],
        expression: None,
        closed_forms: &["energy", "lagrangian", "curvatures", "k_int"],
        domain: "u1 != 0 and kappa*u1^2 < 1; checks use u in [-1, 1], u1 in [0.1, 0.9/sqrt(kappa)] (u1 in [0.1, 2] for kappa < 0)",
    },
    EntryInfo {
        name: "kzero",
        equation: "u2 = (4*u1^2 + u^2 + u)/(4*(2*u + 1))",
        parameters: &[],
        expression: None,
        closed_forms: &["energy", "lagrangian", "curvatures", "k_int"],
        domain: "u1 != 0 and 2u + 1 != 0; checks use u in [0, 1], u1 in [0.5, 2]",
    },
    EntryInfo {
        name: "damped",
        equation: "u2 = -alpha*u1 - lambda*u",
        parameters: &[
            ParamSpec { name: "alpha", default: 0.2, constraint: "alpha^2 < 4*lambda (underdamped)" },
            ParamSpec { name: "lambda", default: 1.0, constraint: "lambda > 0" },
        ],
        expression: None,
        closed_forms: &["energy", "energy_log", "lagrangian", "curvatures", "k_int"],
        domain: "u1 != 0 (the Lagrangian also needs u != 0); checks use u, u1 in [0.1, 1], Lagrangian checks u, u1 in [0.2, 1]",
    },
    EntryInfo {
        name: "gravity",
        equation: "u2 = -Phi_u with Phi_uu = 4*pi*G*rho(u), Phi(0) = Phi_u(0) = 0",
        parameters: &[
            ParamSpec { name: "G", default: 1.0 / (4.0 * PI), constraint: "G > 0" },
            ParamSpec { name: "rho0", default: 1.0, constraint: "uniform density; not allowed with a density expression" },
        ],
        expression: Some(("rho", "rho0")),
        closed_forms: &["energy", "lagrangian", "curvatures", "k_int"],
        domain: "u1 != 0; checks use u in [-1, 1], u1 in [0.2, 2]",
    },
    EntryInfo {
        name: "kfamily",
        equation: "u2 = K(u)*u1",
        parameters: &[],
        expression: Some(("K", "1")),
        closed_forms: &["energy (first integral u1 - int_0^u K)", "curvatures", "k_int"],
        domain: "u1 != 0; checks use u in [-1, 1], u1 in [0.2, 2]",
    },
];

pub fn entry_info(name: &str) -> Result<&'static EntryInfo> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

/// Closed forms of the sectional curvatures and the leaf curvature.
#[derive(Clone, Default)]
pub struct Reference {
    pub r1212: Option<Field>,
    pub r1313: Option<Field>,
    pub r2323: Option<Field>,
    pub k_int: Option<Field>,
}

/// A registry entry with its parameters substituted.
#[derive(Clone)]
pub struct Instance {
    pub info: &'static EntryInfo,
    /// Parameter values after defaults, without derived constants.
    pub params: Params,
    pub ode: OdeRhs,
    pub energy: Option<Field>,
    /// An alternative energy with the same level sets, when one is known.
    pub energy_alt: Option<Field>,
    pub lagrangian: Option<Field>,
    pub reference: Reference,
    /// Region for energy and curvature checks.
    pub region: Region,
    /// Region for Lagrangian checks.
    pub lagrangian_region: Region,
    /// Box `(u range, u1 range)` for random initial conditions.
    pub init_box: ((f64, f64), (f64, f64)),
    /// Integration length used with initial conditions from `init_box`.
    pub horizon: f64,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("name", &self.info.name)
            .field("params", &self.params)
            .field("phi", &self.ode.describe())
            .finish()
    }
}

impl Instance {
    pub fn name(&self) -> &'static str {
        self.info.name
    }

    pub fn with_eps_u1(mut self, eps: f64) -> Self {
        self.ode = self.ode.with_eps_u1(eps);
        self
    }

    /// `n` points of `region`'s box from a fixed low-discrepancy sequence.
    pub fn sample_points(&self, n: usize) -> Vec<JetPoint> {
        spread(n, self.region.u, self.region.u1)
    }

    /// `n` initial conditions from `init_box`, at `x = 0`.
    pub fn initial_conditions(&self, n: usize) -> Vec<JetPoint> {
        spread(n, self.init_box.0, self.init_box.1)
    }
}

/// Additive recurrence with the plastic number; deterministic and well spread.
fn spread(n: usize, u: (f64, f64), u1: (f64, f64)) -> Vec<JetPoint> {
    const G: f64 = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / G, 1.0 / (G * G));
    (0..n)
        .map(|i| {
            let s = (0.5 + a1 * (i + 1) as f64).fract();
            let t = (0.5 + a2 * (i + 1) as f64).fract();
            JetPoint::new(0.0, u.0 + s * (u.1 - u.0), u1.0 + t * (u1.1 - u1.0))
        })
        .collect()
}

/// Optional expression arguments to [`instantiate`].
#[derive(Debug, Clone, Default)]
pub struct Sources {
    /// Density `rho(u)` for `gravity`.
    pub rho: Option<String>,
    /// Coefficient `K(u)` for `kfamily`.
    pub k: Option<String>,
}

fn field(text: &str, params: &Params) -> Result<Field> {
    Ok(BoundExpr::new(parse(text, PHASE_VARS)?, params.clone()).into_field())
}

fn ode_from(text: &str, params: &Params) -> Result<OdeRhs> {
    Ok(OdeRhs::from_expr(parse(text, PHASE_VARS)?, params.clone()))
}

/// Fills defaults and rejects unknown or non-finite parameters. Names used
/// by `extra` expressions are accepted as well.
fn resolve_params(info: &EntryInfo, given: &Params, extra: &[String]) -> Result<Params> {
    for (name, value) in given.iter() {
        let known =
            info.parameters.iter().any(|p| p.name == name) || extra.iter().any(|e| e == name);
        if !known {
            return Err(Error::UnknownParam {
                entry: info.name.to_string(),
                param: name.to_string(),
            });
        }
        if !value.is_finite() {
            return Err(Error::ConstraintViolation(format!(
                "{name} must be finite, got {value}"
            )));
        }
    }
    let mut out = given.clone();
    for p in info.parameters {
        if !out.contains(p.name) {
            out.insert(p.name, p.default)?;
        }
    }
    for name in extra {
        if !out.contains(name) {
            return Err(ExprError::MissingParam(name.clone()).into());
        }
    }
    Ok(out)
}

fn get(params: &Params, name: &str) -> f64 {
    params.get(name).expect("resolved parameter")
}

/// Builds a registry entry.
pub fn instantiate(name: &str, params: &Params, sources: &Sources) -> Result<Instance> {
    let info = entry_info(name)?;
    let expr_arg = match (name, &sources.rho, &sources.k) {
        ("gravity", rho, None) => rho.clone(),
        ("kfamily", None, k) => k.clone(),
        (_, None, None) => None,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "builtin `{name}` does not take this expression argument"
            )))
        }
    };
    let expr = expr_arg.as_deref().map(|t| parse(t, U_ONLY)).transpose()?;
    let extra = expr.as_ref().map(Expr::params).unwrap_or_default();
    let resolved = resolve_params(info, params, &extra)?;
    match name {
        "kappa" => kappa(info, resolved),
        "kzero" => kzero(info, resolved),
        "damped" => damped(info, resolved),
        "gravity" => match expr {
            Some(rho) => {
                if params.contains("rho0") {
                    return Err(Error::ConstraintViolation(
                        "rho0 cannot be combined with a density expression".into(),
                    ));
                }
                let without_rho0 = resolved
                    .iter()
                    .filter(|(k, _)| *k != "rho0")
                    .fold(Params::new(), |p, (k, v)| p.with(k, v));
                gravity_density(info, without_rho0, rho)
            }
            None => gravity_uniform(info, resolved),
        },
        "kfamily" => {
            let k = match expr {
                Some(k) => k,
                None => parse(info.expression.expect("kfamily has K").1, U_ONLY)?,
            };
            kfamily(info, resolved, k)
        }
        _ => unreachable!("entry_info accepted {name}"),
    }
}

fn kappa(info: &'static EntryInfo, params: Params) -> Result<Instance> {
    let k = get(&params, "kappa");
    if k == 0.0 {
        return Err(Error::ConstraintViolation("kappa != 0".into()));
    }
    let ode =
        ode_from("sqrt(1 - kappa*u1^2)", &params)?.with_domain(move |_, v| 1.0 - k * v * v > 0.0);
    let lagrangian = if k > 0.0 {
        "-u - (sqrt(1 - kappa*u1^2) + sqrt(kappa)*u1*arcsin(sqrt(kappa)*u1))/kappa"
    } else {
        "-u - (sqrt(1 - kappa*u1^2) - sqrt(-kappa)*u1*arcsinh(sqrt(-kappa)*u1))/kappa"
    };
    let v_hi = if k > 0.0 { 0.9 / k.sqrt() } else { 2.0 };
    let v_init = if k > 0.0 { 0.5 / k.sqrt() } else { 1.0 };
    Ok(Instance {
        info,
        ode,
        energy: Some(field("u + sqrt(1 - kappa*u1^2)/kappa", &params)?),
        energy_alt: None,
        lagrangian: Some(field(lagrangian, &params)?),
        reference: Reference {
            r1212: Some(field("1/4 + kappa", &params)?),
            r1313: Some(field("-3/4 - 2/u1^2", &params)?),
            r2323: Some(field("1/4 + 1/u1^2 - 3/u1^4", &params)?),
            k_int: Some(field("kappa", &params)?),
        },
        region: Region::square((-1.0, 1.0), (0.1, v_hi), 20),
        lagrangian_region: Region::square((-1.0, 1.0), (0.1, v_hi), 20),
        init_box: ((-1.0, 1.0), (0.1, v_init)),
        horizon: 0.5,
        params,
    })
}

fn kzero(info: &'static EntryInfo, params: Params) -> Result<Instance> {
    let ode = ode_from("(4*u1^2 + u^2 + u)/(4*(2*u + 1))", &params)?
        .with_domain(|u, _| 2.0 * u + 1.0 != 0.0);
    Ok(Instance {
        info,
        ode,
        energy: Some(field(
            "u1^2/(2*u + 1) - (4*u^2 + 2*u + 1)/(32*u + 16)",
            &params,
        )?),
        energy_alt: None,
        lagrangian: Some(field(
            "u1^2/(2*u + 1) + (4*u^2 + 2*u + 1)/(32*u + 16)",
            &params,
        )?),
        reference: Reference {
            r1212: Some(field("0", &params)?),
            r1313: Some(field(
                "-(u^4 + 2*u^3 + 20*u^2*u1^2 + u^2 + 20*u*u1^2 + 4*u1^2)/(8*u1^2*(2*u + 1)^2)",
                &params,
            )?),
            r2323: Some(field(
                "(u^4*u1^2 - 3*u^4 + 2*u^3*u1^2 - 6*u^3 + 16*u^2*u1^4 + 9*u^2*u1^2 - 3*u^2 \
                 + 16*u*u1^4 + 8*u*u1^2 - 16*u1^6 + 20*u1^4 + 4*u1^2)/(16*u1^4*(2*u + 1)^2)",
                &params,
            )?),
            k_int: Some(field("-1/4", &params)?),
        },
        region: Region::square((0.0, 1.0), (0.5, 2.0), 20),
        lagrangian_region: Region::square((0.0, 1.0), (0.5, 2.0), 20),
        init_box: ((0.0, 1.0), (0.5, 1.0)),
        horizon: 0.25,
        params,
    })
}

fn damped(info: &'static EntryInfo, params: Params) -> Result<Instance> {
    let (a, l) = (get(&params, "alpha"), get(&params, "lambda"));
    if !(l > 0.0) {
        return Err(Error::ConstraintViolation(format!("lambda > 0 (got {l})")));
    }
    if !(a * a < 4.0 * l) {
        return Err(Error::ConstraintViolation(format!(
            "alpha^2 < 4*lambda (underdamped only; got alpha = {a}, lambda = {l})"
        )));
    }
    let omega = (4.0 * l - a * a).sqrt() / 2.0;
    let with_omega = params.clone().with("omega", omega);
    let ode = ode_from("-alpha*u1 - lambda*u", &params)?;
    let phase = "arctan((alpha*u1 + 2*lambda*u)/(2*omega*u1))";
    let quad = "(alpha*u*u1 + u1^2 + lambda*u^2)";
    Ok(Instance {
        info,
        ode,
        energy: Some(field(&format!("exp(alpha/omega*{phase})/2*{quad}"), &with_omega)?),
        energy_alt: Some(field(&format!("alpha/omega*{phase} + ln{quad}"), &with_omega)?),
        lagrangian: Some(field(
            &format!(
                "2*u1/(omega*u)*arctan((alpha*u + 2*u1)/(2*u*omega)) - alpha/omega*{phase} - ln{quad}"
            ),
            &with_omega,
        )?),
        reference: Reference {
            r1212: Some(field("1/4 + lambda - alpha^2 - alpha*lambda*u/u1", &params)?),
            r1313: Some(field("-3/4 - lambda - alpha*lambda*u/u1 - 2*lambda^2*u^2/u1^2", &params)?),
            r2323: Some(field(
                "1/4 + alpha*lambda*u/u1 - (lambda - lambda^2*u^2)/u1^2 - 2*alpha*lambda*u/u1^3 - 3*lambda^2*u^2/u1^4",
                &params,
            )?),
            k_int: Some(field("lambda - alpha^2 - alpha*lambda*u/u1", &params)?),
        },
        region: Region::square((0.1, 1.0), (0.1, 1.0), 20),
        lagrangian_region: Region::square((0.2, 1.0), (0.2, 1.0), 20),
        // keeps u > 0 and u1 >= 0.3 up to the horizon
        init_box: ((0.2, 0.5), (0.6, 1.0)),
        horizon: 0.3,
        params,
    })
}

fn gravity_check(params: &Params) -> Result<f64> {
    let g = get(params, "G");
    if !(g > 0.0) {
        return Err(Error::ConstraintViolation(format!("G > 0 (got {g})")));
    }
    Ok(g)
}

fn gravity_uniform(info: &'static EntryInfo, params: Params) -> Result<Instance> {
    gravity_check(&params)?;
    let ode = ode_from("-4*pi*G*rho0*u", &params)?;
    Ok(Instance {
        info,
        ode,
        energy: Some(field("u1^2/2 + 2*pi*G*rho0*u^2", &params)?),
        energy_alt: None,
        lagrangian: Some(field("u1^2/2 - 2*pi*G*rho0*u^2", &params)?),
        reference: Reference {
            r1212: Some(field("1/4 + 4*pi*G*rho0", &params)?),
            r1313: Some(field(
                "-3/4 - 4*pi*G*rho0 - 2*(4*pi*G*rho0*u)^2/u1^2",
                &params,
            )?),
            r2323: Some(field(
                "1/4 + ((4*pi*G*rho0*u)^2 - 4*pi*G*rho0)/u1^2 - 3*(4*pi*G*rho0*u)^2/u1^4",
                &params,
            )?),
            k_int: Some(field("4*pi*G*rho0", &params)?),
        },
        region: Region::square((-1.0, 1.0), (0.2, 2.0), 20),
        lagrangian_region: Region::square((-1.0, 1.0), (0.2, 2.0), 20),
        init_box: ((-1.0, 1.0), (0.5, 2.0)),
        horizon: 0.5,
        params,
    })
}

/// A function of `u` alone with its primitives from `0`.
#[derive(Debug, Clone)]
pub struct Primitive {
    expr: Expr,
    params: Params,
}

impl Primitive {
    pub fn new(expr: Expr, params: Params) -> Result<Self> {
        if expr.uses_var(Var::U1) {
            return Err(Error::InvalidArgument(
                "expected an expression in u only".into(),
            ));
        }
        Ok(Primitive { expr, params })
    }

    /// `(f, f', f'')` at `u`.
    pub fn jet(&self, u: f64) -> Result<[f64; 3]> {
        let j = self.expr.jet(u, 0.0, &self.params)?;
        Ok([j.val, j.d_u, j.d_uu])
    }

    pub fn value(&self, u: f64) -> Result<f64> {
        Ok(self.expr.eval(u, 0.0, &self.params)?)
    }

    /// `int_0^u f`.
    pub fn integral(&self, u: f64) -> Result<f64> {
        Ok(integrate(|s| self.value(s), 0.0, u, DEFAULT_ABS_TOL, 0.0)?.value)
    }

    /// `int_0^u (u - s) f(s) ds`, the primitive of [`Primitive::integral`].
    pub fn moment(&self, u: f64) -> Result<f64> {
        Ok(integrate(
            |s| Ok((u - s) * self.value(s)?),
            0.0,
            u,
            DEFAULT_ABS_TOL,
            0.0,
        )?
        .value)
    }

    pub fn describe(&self) -> String {
        self.expr.to_string()
    }
}

/// `(Phi, Phi_u)` at `u` for density `rho`, normalized by `Phi(0) = Phi_u(0) = 0`.
pub fn gravity_potential(rho: &Expr, params: &Params, g: f64, u: f64) -> Result<(f64, f64)> {
    let p = Primitive::new(rho.clone(), params.clone())?;
    let c = 4.0 * PI * g;
    Ok((c * p.moment(u)?, c * p.integral(u)?))
}

/// `u1 - int_0^u K(s) ds`, conserved along solutions of `u'' = K(u) u'`.
pub fn kfamily_first_integral(k: &Expr, params: &Params, p: &JetPoint) -> Result<f64> {
    Ok(p.u1 - Primitive::new(k.clone(), params.clone())?.integral(p.u)?)
}

fn gravity_density(info: &'static EntryInfo, params: Params, rho: Expr) -> Result<Instance> {
    let g = gravity_check(&params)?;
    let c = 4.0 * PI * g;
    let dens = Arc::new(Primitive::new(rho, params.clone())?);
    let label = dens.describe();

    let d = dens.clone();
    let phi = FnField::new(
        format!("-Phi_u with Phi_uu = 4*pi*G*{label}"),
        move |u: HyperDual2, _| {
            let [r, r1, _] = d.jet(u.val)?;
            Ok(u.chain(-c * d.integral(u.val)?, -c * r, -c * r1))
        },
    )
    .into_field();
    let potential = |sign: f64| {
        let d = dens.clone();
        let name = if sign > 0.0 {
            "u1^2/2 + Phi"
        } else {
            "u1^2/2 - Phi"
        };
        FnField::new(name, move |u: HyperDual2, u1: HyperDual2| {
            let r = d.value(u.val)?;
            let pot = u.chain(c * d.moment(u.val)?, c * d.integral(u.val)?, c * r);
            Ok(u1 * u1 * 0.5 + pot * sign)
        })
        .into_field()
    };
    let d = dens.clone();
    let k_int = FnField::new(format!("4*pi*G*{label}"), move |u: HyperDual2, _| {
        let [r, r1, r2] = d.jet(u.val)?;
        Ok(u.chain(c * r, c * r1, c * r2))
    })
    .into_field();
    // with P = Phi_u: r1212 = 1/4 + P', r1313 = -3/4 - P' - 2P^2/u1^2,
    // r2323 = 1/4 + (P^2 - P')/u1^2 - 3P^2/u1^4
    let curv = |which: usize| {
        let d = dens.clone();
        FnField::new("gravity curvature", move |u: HyperDual2, u1: HyperDual2| {
            let p = c * d.integral(u.val)?;
            let dp = c * d.value(u.val)?;
            let v2 = u1.val * u1.val;
            let val = match which {
                0 => 0.25 + dp,
                1 => -0.75 - dp - 2.0 * p * p / v2,
                _ => 0.25 + (p * p - dp) / v2 - 3.0 * p * p / (v2 * v2),
            };
            Ok(HyperDual2::constant(val))
        })
        .into_field()
    };
    Ok(Instance {
        info,
        ode: OdeRhs::new(phi),
        energy: Some(potential(1.0)),
        energy_alt: None,
        lagrangian: Some(potential(-1.0)),
        reference: Reference {
            r1212: Some(curv(0)),
            r1313: Some(curv(1)),
            r2323: Some(curv(2)),
            k_int: Some(k_int),
        },
        region: Region::square((-1.0, 1.0), (0.2, 2.0), 20),
        lagrangian_region: Region::square((-1.0, 1.0), (0.2, 2.0), 20),
        init_box: ((-1.0, 1.0), (0.5, 2.0)),
        horizon: 0.5,
        params,
    })
}

fn kfamily(info: &'static EntryInfo, params: Params, k: Expr) -> Result<Instance> {
    let prim = Arc::new(Primitive::new(k.clone(), params.clone())?);
    let ode = ode_from(&format!("{k}*u1"), &params)?;
    let p = prim.clone();
    let first_integral = FnField::new(
        format!("u1 - int_0^u {k}"),
        move |u: HyperDual2, u1: HyperDual2| {
            let [kv, k1, _] = p.jet(u.val)?;
            Ok(u1 - u.chain(p.integral(u.val)?, kv, k1))
        },
    )
    .into_field();
    // phi = K u1 gives r1212 = 1/4 - K' u1 - K^2, r1313 = -3/4, r2323 = 1/4
    let p = prim.clone();
    let r1212 = FnField::new(
        "1/4 - K'(u)*u1 - K(u)^2",
        move |u: HyperDual2, u1: HyperDual2| {
            let [kv, k1, _] = p.jet(u.val)?;
            Ok(HyperDual2::constant(0.25 - k1 * u1.val - kv * kv))
        },
    )
    .into_field();
    let p = prim;
    let k_int = FnField::new(
        "-K'(u)*u1 - K(u)^2",
        move |u: HyperDual2, u1: HyperDual2| {
            let [kv, k1, _] = p.jet(u.val)?;
            Ok(HyperDual2::constant(-k1 * u1.val - kv * kv))
        },
    )
    .into_field();
    Ok(Instance {
        info,
        ode,
        energy: Some(first_integral),
        energy_alt: None,
        lagrangian: None,
        reference: Reference {
            r1212: Some(r1212),
            r1313: Some(field("-3/4", &params)?),
            r2323: Some(field("1/4", &params)?),
            k_int: Some(k_int),
        },
        region: Region::square((-1.0, 1.0), (0.2, 2.0), 20),
        lagrangian_region: Region::square((-1.0, 1.0), (0.2, 2.0), 20),
        init_box: ((-1.0, 1.0), (0.2, 2.0)),
        horizon: 0.5,
        params,
    })
}

/// The equation `u'' = u'` with `f(x) = x + e^x`, which is not a solution
/// although its prolongation is a geodesic.
pub struct Counterexample {
    pub ode: OdeRhs,
}

impl Counterexample {
    pub fn new() -> Result<Self> {
        Ok(Counterexample {
            ode: ode_from("u1", &Params::new())?,
        })
    }

    /// `[f, f', f'', f''']` at `x`.
    pub fn jet(x: f64) -> [f64; 4] {
        let e = x.exp();
        [x + e, 1.0 + e, e, e]
    }

    /// `f'' - phi(f, f')`, which is `-1` everywhere.
    pub fn solution_defect(&self, x: f64) -> Result<f64> {
        let [f, f1, f2, _] = Self::jet(x);
        Ok(f2 - self.ode.value(f, f1)?)
    }
}
