//! Energy functions: first integrals `E(u, u1)` whose level sets are the
//! leaves of the foliation spanned by `e1, e2`.
//!
//! `E` is an energy exactly when `E_u + (phi/u1) E_u1 = 0`, i.e. when it is
//! constant along the characteristics `du1/du = phi/u1`.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::Curve;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{JetPoint, OdeRhs};
use crate::integrate::{self, Options, DEFAULT_TOL};
use crate::par;
use crate::sampling::Region;
use crate::table;

pub const DEFAULT_PDE_TOL: f64 = 1e-9;

#[derive(Clone)]
pub enum EnergyModel {
    /// Explicit `E(u, u1)`.
    ClosedForm(Field),
    /// The leaf coordinate of [`energy_label`] at section `u = u_ref`.
    NumericLabel { u_ref: f64 },
}

impl std::fmt::Debug for EnergyModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnergyModel::ClosedForm(e) => write!(f, "ClosedForm({})", e.describe()),
            EnergyModel::NumericLabel { u_ref } => write!(f, "NumericLabel {{ u_ref: {u_ref} }}"),
        }
    }
}

impl EnergyModel {
    pub fn eval(&self, ode: &OdeRhs, p: &JetPoint) -> Result<f64> {
        match self {
            EnergyModel::ClosedForm(e) => e.value(p.u, p.u1),
            EnergyModel::NumericLabel { u_ref } => energy_label(ode, p, *u_ref),
        }
    }

    pub fn closed_form(&self) -> Option<&Field> {
        match self {
            EnergyModel::ClosedForm(e) => Some(e),
            EnergyModel::NumericLabel { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyCheck {
    /// `max |E_u + (phi/u1) E_u1|`.
    pub max_residual: f64,
    /// `max |u1 E_u + phi E_u1|`; this is the one compared to `tol`.
    pub max_scaled_residual: f64,
    /// `min |E_u1|`, the factor in `dE = E_u1 w3`.
    pub min_abs_mu: f64,
    pub samples: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Evaluates the energy equation for `e` on every node of `region`.
pub fn check_energy_candidate(
    ode: &OdeRhs,
    e: &Field,
    region: &Region,
    tol: f64,
) -> Result<EnergyCheck> {
    let points = region.points(ode.eps_u1())?;
    let rows = par::try_map(&points, |&(u, u1)| -> Result<[f64; 3]> {
        ode.check(&JetPoint::new(0.0, u, u1))?;
        let phi = ode.value(u, u1)?;
        let j = e.jet(u, u1)?;
        let scaled = u1 * j.d_u + phi * j.d_v;
        Ok([(scaled / u1).abs(), scaled.abs(), j.d_v.abs()])
    })?;
    let mut out = EnergyCheck {
        max_residual: 0.0,
        max_scaled_residual: 0.0,
        min_abs_mu: f64::INFINITY,
        samples: rows.len(),
        tol,
        passed: false,
    };
    for [r, s, mu] in rows {
        out.max_residual = out.max_residual.max(r);
        out.max_scaled_residual = out.max_scaled_residual.max(s);
        out.min_abs_mu = out.min_abs_mu.min(mu);
    }
    out.passed = out.max_scaled_residual <= tol && out.min_abs_mu > 0.0;
    Ok(out)
}

/// A traced piece of a leaf, projected to the `(u, u1)` plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafTrace {
    pub samples: Vec<[f64; 2]>,
    /// `u` where tracing stopped because `|u1|` fell to `eps_u1`.
    pub fold: Option<f64>,
}

impl LeafTrace {
    pub fn end(&self) -> [f64; 2] {
        *self.samples.last().expect("a trace has at least its start")
    }

    pub fn complete(self) -> Result<LeafTrace> {
        match self.fold {
            Some(u_stop) => Err(Error::SingularCrossing { at: u_stop }),
            None => Ok(self),
        }
    }

    /// Columns `u, u1`, plus `E_closed_form` when `e` is given.
    pub fn write_csv<W: Write>(&self, out: W, e: Option<&Field>) -> Result<()> {
        let mut rows = Vec::with_capacity(self.samples.len());
        for &[u, u1] in &self.samples {
            let mut row = vec![u, u1];
            if let Some(e) = e {
                row.push(e.value(u, u1)?);
            }
            rows.push(row);
        }
        let header: &[&str] = if e.is_some() {
            &["u", "u1", "E_closed_form"]
        } else {
            &["u", "u1"]
        };
        table::write_csv(out, header, &rows).map_err(|err| Error::InvalidArgument(err.to_string()))
    }
}

// Upper bound on the curve parameter while tracing; leaves that need longer
// than this to reach the target are reported as not reachable.
const TRACE_SPAN: f64 = 1e6;

/// Follows the characteristic `du1/du = phi/u1` from `start` to `u = u_target`,
/// stopping early if the leaf folds back at `u1 = 0`.
///
/// The leaf is parametrized by the flow of `u1 d_u + phi d_u1` (the projection
/// of the equation's vector field), which stays regular at the fold; the
/// samples are the same curve as with `u` as parameter.
pub fn trace_leaf_partial(
    ode: &OdeRhs,
    start: (f64, f64),
    u_target: f64,
    tol: f64,
) -> Result<LeafTrace> {
    let (u0, v0) = start;
    ode.check(&JetPoint::new(0.0, u0, v0))?;
    if !u_target.is_finite() {
        return Err(Error::InvalidArgument("target must be finite".into()));
    }
    if u_target == u0 {
        return Ok(LeafTrace {
            samples: vec![[u0, v0]],
            fold: None,
        });
    }
    let dir_u = (u_target - u0).signum();
    let s0 = v0.signum();
    let sigma = dir_u * s0;
    let eps = ode.eps_u1();
    let fold = move |_: f64, y: &[f64; 2]| s0 * y[1] - eps;
    let reach = move |_: f64, y: &[f64; 2]| dir_u * (u_target - y[0]);
    let traj = integrate::solve(
        |_, y: &[f64; 2]| Ok([sigma * y[1], sigma * ode.value(y[0], y[1])?]),
        0.0,
        [u0, v0],
        TRACE_SPAN,
        &Options::with_tol(tol),
        &[&fold, &reach],
    )?;
    let mut samples: Vec<[f64; 2]> = traj.knots().into_iter().map(|(_, y)| y).collect();
    match traj.event {
        Some(hit) if hit.index == 0 => Ok(LeafTrace {
            samples,
            fold: Some(hit.y[0]),
        }),
        Some(hit) => {
            // the located state sits just short of the target; close the gap
            let [u, v] = hit.y;
            let slope = ode.value(u, v)? / v;
            let last = samples.last_mut().expect("non-empty");
            *last = [u_target, v + slope * (u_target - u)];
            Ok(LeafTrace {
                samples,
                fold: None,
            })
        }
        None => Err(Error::NotReachable {
            u_stop: traj.y_final[0],
        }),
    }
}

/// [`trace_leaf_partial`], with a fold turned into [`Error::SingularCrossing`].
pub fn trace_leaf(ode: &OdeRhs, start: (f64, f64), u_target: f64, tol: f64) -> Result<LeafTrace> {
    trace_leaf_partial(ode, start, u_target, tol)?.complete()
}

/// Leaf coordinate of `p`: the `u1` at which its leaf crosses `u = u_ref`.
pub fn energy_label(ode: &OdeRhs, p: &JetPoint, u_ref: f64) -> Result<f64> {
    match trace_leaf(ode, (p.u, p.u1), u_ref, DEFAULT_TOL) {
        Ok(t) => Ok(t.end()[1]),
        Err(Error::SingularCrossing { at }) => Err(Error::NotReachable { u_stop: at }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conservation {
    pub initial: f64,
    /// `max |E - E0| / max(1, |E0|)`.
    pub relative_drift: f64,
    pub max_abs_drift: f64,
    pub samples: usize,
}

/// Drift of `e` over the samples of one or more consecutive curves, measured
/// from the first sample.
pub fn conservation_over(ode: &OdeRhs, e: &EnergyModel, curves: &[Curve]) -> Result<Conservation> {
    let points: Vec<JetPoint> = curves
        .iter()
        .flat_map(|c| c.samples.iter().map(|s| s.point))
        .collect();
    let first = points.first().ok_or(Error::EmptyRegion)?;
    let initial = e.eval(ode, first)?;
    let values = par::try_map(&points, |p| e.eval(ode, p))?;
    let max_abs_drift = values
        .iter()
        .fold(0.0f64, |m, v| m.max((v - initial).abs()));
    Ok(Conservation {
        initial,
        relative_drift: max_abs_drift / initial.abs().max(1.0),
        max_abs_drift,
        samples: points.len(),
    })
}

pub fn conservation_report(
    ode: &OdeRhs,
    e: &EnergyModel,
    trajectory: &Curve,
) -> Result<Conservation> {
    conservation_over(ode, e, std::slice::from_ref(trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_solution, integrate_solution_segments};
    use crate::expr::{parse, Params, PHASE_VARS};
    use crate::field::BoundExpr;
    use crate::geometry::frame_at;
    use approx::assert_abs_diff_eq;

    fn ode(text: &str, params: &Params) -> OdeRhs {
        OdeRhs::from_expr(parse(text, PHASE_VARS).unwrap(), params.clone())
    }

    fn field(text: &str, params: &Params) -> Field {
        BoundExpr::new(parse(text, PHASE_VARS).unwrap(), params.clone()).into_field()
    }

    fn kappa1() -> (OdeRhs, Field) {
        let p = Params::new().with("kappa", 1.0);
        (
            ode("sqrt(1 - kappa*u1^2)", &p),
            field("u + sqrt(1 - kappa*u1^2)/kappa", &p),
        )
    }

    #[test]
    fn kappa_energy_solves_the_equation() {
        let (o, e) = kappa1();
        let r = check_energy_candidate(&o, &e, &Region::square((-1.0, 1.0), (0.1, 0.9), 21), 1e-9)
            .unwrap();
        assert!(r.passed);
        assert!(r.max_scaled_residual <= 1e-12, "{r:?}");
        assert!(r.min_abs_mu > 0.1);
        assert_eq!(r.samples, 441);
    }

    #[test]
    fn wrong_energy_fails() {
        let (o, _) = kappa1();
        let e = field("u + u1^2", &Params::new());
        let r = check_energy_candidate(&o, &e, &Region::square((-1.0, 1.0), (0.1, 0.9), 5), 1e-9)
            .unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn energy_gradient_is_normal_to_the_leaf() {
        let (o, e) = kappa1();
        for &(u, u1) in &[(0.3, 0.2), (-0.7, 0.8), (0.0, 0.5)] {
            let j = e.jet(u, u1).unwrap();
            let grad = [0.0, j.d_u, j.d_v];
            let f = frame_at(&o, &JetPoint::new(0.0, u, u1)).unwrap();
            let along = |v: [f64; 3]| grad[0] * v[0] + grad[1] * v[1] + grad[2] * v[2];
            assert_abs_diff_eq!(along(f.e[0]), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(along(f.e[1]), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(along(f.e[2]), j.d_v, epsilon = 1e-15);
        }
    }

    #[test]
    fn trace_kappa_leaf() {
        let (o, _) = kappa1();
        let t = trace_leaf(&o, (0.0, 0.6), 0.5, 1e-10).unwrap();
        let [u, u1] = t.end();
        assert_eq!(u, 0.5);
        assert_abs_diff_eq!(u1, 0.91f64.sqrt(), epsilon = 1e-8);
        for &[u, u1] in &t.samples {
            assert_abs_diff_eq!(u + (1.0 - u1 * u1).sqrt(), 0.8, epsilon = 1e-8);
        }
    }

    #[test]
    fn trace_backwards_and_with_negative_u1() {
        let o = ode("-u", &Params::new());
        // leaves are circles u^2 + u1^2 = c
        let t = trace_leaf(&o, (0.5, -1.0), -0.5, 1e-10).unwrap();
        assert_abs_diff_eq!(t.end()[1], -1.0, epsilon = 1e-8);
        let t = trace_leaf(&o, (0.5, 1.0), 0.0, 1e-10).unwrap();
        assert_abs_diff_eq!(t.end()[1], 1.25f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn free_particle_leaves_are_horizontal() {
        let o = ode("0", &Params::new());
        let t = trace_leaf(&o, (0.0, 2.0), 5.0, 1e-10).unwrap();
        assert_eq!(t.end(), [5.0, 2.0]);
        let p = JetPoint::new(7.0, 3.0, 2.0);
        assert_eq!(energy_label(&o, &p, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn damped_leaf_folds() {
        let o = ode("-0.2*u1 - u", &Params::new());
        let r = trace_leaf(&o, (1.0, 0.05), 2.0, 1e-10);
        let Err(Error::SingularCrossing { at }) = r else {
            panic!("{r:?}")
        };
        assert!(at > 1.0 && at < 1.01, "{at}");
        let partial = trace_leaf_partial(&o, (1.0, 0.05), 2.0, 1e-10).unwrap();
        assert_eq!(partial.fold, Some(at));
    }

    #[test]
    fn labels_agree_on_a_leaf() {
        let (o, _) = kappa1();
        let a = energy_label(&o, &JetPoint::new(0.0, 0.0, 0.6), 0.0).unwrap();
        assert_eq!(a, 0.6);
        let v = (1.0 - 0.5f64.powi(2)).sqrt();
        let b = energy_label(&o, &JetPoint::new(0.0, 0.3, v), 0.0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        let traced = trace_leaf(&o, (0.0, 0.6), -0.15, 1e-10).unwrap().end();
        let c = energy_label(&o, &JetPoint::new(0.0, traced[0], traced[1]), 0.0).unwrap();
        assert_abs_diff_eq!(a, c, epsilon = 1e-8);
    }

    #[test]
    fn damped_label_reachability() {
        let o = ode("-0.2*u1 - u", &Params::new());
        let p = JetPoint::new(0.0, 1.0, 0.05);
        let r = energy_label(&o, &p, -2.0);
        assert!(matches!(r, Err(Error::NotReachable { .. })), "{r:?}");
        assert!(energy_label(&o, &p, -1.0).unwrap() > 0.0);
    }

    #[test]
    fn conservation_along_kappa_solution() {
        let (o, e) = kappa1();
        let c = integrate_solution(&o, &JetPoint::new(0.0, 0.0, 0.5), 0.9, 1e-10).unwrap();
        let r = conservation_report(&o, &EnergyModel::ClosedForm(e), &c).unwrap();
        assert_abs_diff_eq!(r.initial, 0.75f64.sqrt(), epsilon = 1e-15);
        assert!(r.relative_drift <= 1e-9, "{r:?}");
    }

    #[test]
    fn undamped_energy_over_ten_periods() {
        let o = ode("-u", &Params::new());
        let e = EnergyModel::ClosedForm(field("(u1^2 + u^2)/2", &Params::new()));
        // global error grows over ten periods, so integrate more tightly
        let segs = integrate_solution_segments(
            &o,
            &JetPoint::new(0.0, 0.0, 1.0),
            20.0 * std::f64::consts::PI,
            1e-12,
        )
        .unwrap();
        let r = conservation_over(&o, &e, &segs).unwrap();
        assert_eq!(r.initial, 0.5);
        assert!(r.relative_drift <= 1e-10, "{r:?}");
    }

    #[test]
    fn label_is_a_conserved_quantity() {
        let (o, _) = kappa1();
        let c = integrate_solution(&o, &JetPoint::new(0.0, 0.0, 0.5), 0.5, 1e-10).unwrap();
        let r = conservation_report(&o, &EnergyModel::NumericLabel { u_ref: 0.0 }, &c).unwrap();
        assert!(r.relative_drift <= 1e-8, "{r:?}");
    }

    #[test]
    fn leaf_csv() {
        let (o, e) = kappa1();
        let t = trace_leaf(&o, (0.0, 0.6), 0.1, 1e-10).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, Some(&e)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u,u1,E_closed_form\n"));
    }
}
