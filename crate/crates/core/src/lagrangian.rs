//! Autonomous Lagrangians whose energy function `h = u1 L_u1 - L` is a given
//! energy `E`, and the Euler–Lagrange checks that go with them.
//!
//! For any energy `E`, `L(u, u1) = u1 * int_b^u1 E(u, s) / s^2 ds` satisfies
//! `u1 L_u1 - L = E`. Two such Lagrangians can differ by `u1 g(u)`, a total
//! derivative, so comparisons go through Euler–Lagrange residuals.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::dynamics::Curve;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{JetPoint, OdeRhs, DEFAULT_FD_STEP};
use crate::par;
use crate::quadrature::{integrate, DEFAULT_ABS_TOL};
use crate::sampling::Region;
use crate::table;

/// `L` and the partials the Euler–Lagrange operator needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LPartials {
    pub l: f64,
    pub l_u: f64,
    pub l_u1: f64,
    pub l_uu1: f64,
    pub l_u1u1: f64,
}

impl LPartials {
    /// `h = u1 L_u1 - L`.
    pub fn energy(&self, u1: f64) -> f64 {
        u1 * self.l_u1 - self.l
    }

    /// `u1 L_uu1 + phi L_u1u1 - L_u`.
    pub fn el_residual(&self, u1: f64, phi: f64) -> f64 {
        u1 * self.l_uu1 + phi * self.l_u1u1 - self.l_u
    }
}

type Cache = RwLock<HashMap<(u64, u64), [f64; 2]>>;

/// `u1 * int_{u1_base}^{u1} E(u, s)/s^2 ds`, memoized per `(u, u1)`.
pub struct QuadratureLagrangian {
    energy: Field,
    u1_base: f64,
    step: f64,
    cache: Cache,
}

impl QuadratureLagrangian {
    pub fn energy(&self) -> &Field {
        &self.energy
    }

    pub fn u1_base(&self) -> f64 {
        self.u1_base
    }

    fn check_side(&self, u1: f64) -> Result<()> {
        if !(u1 * self.u1_base > 0.0) {
            return Err(Error::SignCrossing {
                from: self.u1_base,
                to: u1,
            });
        }
        Ok(())
    }

    /// `[L, L_u]`, the latter by differentiating under the integral.
    fn integrals(&self, u: f64, u1: f64) -> Result<[f64; 2]> {
        self.check_side(u1)?;
        let key = (u.to_bits(), u1.to_bits());
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let e = &self.energy;
        let b = self.u1_base;
        let l = integrate(
            |s| Ok(e.value(u, s)? / (s * s)),
            b,
            u1,
            DEFAULT_ABS_TOL,
            0.0,
        )?
        .value;
        let l_u = integrate(
            |s| Ok(e.jet(u, s)?.d_u / (s * s)),
            b,
            u1,
            DEFAULT_ABS_TOL,
            0.0,
        )?
        .value;
        let v = [u1 * l, u1 * l_u];
        self.cache.write().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// `[L, L_u, L_u1]`, with `L_u1 = (L + E)/u1`.
    fn first(&self, u: f64, u1: f64) -> Result<[f64; 3]> {
        let [l, l_u] = self.integrals(u, u1)?;
        let e = self.energy.value(u, u1)?;
        Ok([l, l_u, (l + e) / u1])
    }

    fn partials(&self, u: f64, u1: f64) -> Result<LPartials> {
        let [l, l_u, l_u1] = self.first(u, u1)?;
        let h = self.step;
        self.check_side(u1 - h)?;
        self.check_side(u1 + h)?;
        let [_, pu, pv] = self.first(u, u1 + h)?;
        let [_, mu, mv] = self.first(u, u1 - h)?;
        Ok(LPartials {
            l,
            l_u,
            l_u1,
            l_uu1: (pu - mu) / (2.0 * h),
            l_u1u1: (pv - mv) / (2.0 * h),
        })
    }
}

#[derive(Clone)]
pub enum LagrangianModel {
    /// Explicit `L(u, u1)`; partials by automatic differentiation.
    ClosedForm(Field),
    /// Built from an energy by quadrature.
    Quadrature(Arc<QuadratureLagrangian>),
}

impl std::fmt::Debug for LagrangianModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LagrangianModel::ClosedForm(l) => write!(f, "ClosedForm({})", l.describe()),
            LagrangianModel::Quadrature(q) => write!(
                f,
                "Quadrature {{ energy: {}, u1_base: {} }}",
                q.energy.describe(),
                q.u1_base
            ),
        }
    }
}

impl LagrangianModel {
    pub fn partials(&self, u: f64, u1: f64) -> Result<LPartials> {
        match self {
            LagrangianModel::ClosedForm(l) => {
                let j = l.jet(u, u1)?;
                Ok(LPartials {
                    l: j.val,
                    l_u: j.d_u,
                    l_u1: j.d_v,
                    l_uu1: j.d_uv,
                    l_u1u1: j.d_vv,
                })
            }
            LagrangianModel::Quadrature(q) => q.partials(u, u1),
        }
    }

    pub fn value(&self, u: f64, u1: f64) -> Result<f64> {
        match self {
            LagrangianModel::ClosedForm(l) => l.value(u, u1),
            LagrangianModel::Quadrature(q) => Ok(q.integrals(u, u1)?[0]),
        }
    }

    /// `[L, L_u, L_u1]` without second partials.
    fn first(&self, u: f64, u1: f64) -> Result<[f64; 3]> {
        match self {
            LagrangianModel::ClosedForm(l) => {
                let j = l.jet(u, u1)?;
                Ok([j.val, j.d_u, j.d_v])
            }
            LagrangianModel::Quadrature(q) => q.first(u, u1),
        }
    }
}

/// `L = u1 int_{u1_base}^{u1} E(u, s)/s^2 ds` for a closed-form energy.
pub fn build_lagrangian(e: &EnergyModel, u1_base: f64) -> Result<LagrangianModel> {
    build_lagrangian_with_step(e, u1_base, DEFAULT_FD_STEP)
}

/// [`build_lagrangian`] with an explicit step for the second partials.
pub fn build_lagrangian_with_step(
    e: &EnergyModel,
    u1_base: f64,
    step: f64,
) -> Result<LagrangianModel> {
    let energy =
        match e {
            EnergyModel::ClosedForm(f) => f.clone(),
            EnergyModel::NumericLabel { .. } => return Err(Error::Unsupported(
                "a Lagrangian needs an energy with partial derivatives; numeric labels have none"
                    .into(),
            )),
        };
    if !u1_base.is_finite() || u1_base == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "u1_base must be finite and nonzero, got {u1_base}"
        )));
    }
    if !(step > 0.0 && step < u1_base.abs()) {
        return Err(Error::InvalidArgument(format!(
            "difference step {step} must lie in (0, |u1_base|)"
        )));
    }
    Ok(LagrangianModel::Quadrature(Arc::new(
        QuadratureLagrangian {
            energy,
            u1_base,
            step,
            cache: RwLock::new(HashMap::new()),
        },
    )))
}

/// `u1 L_uu1 + phi L_u1u1 - L_u` at one point.
pub fn el_residual_at(ode: &OdeRhs, l: &LagrangianModel, u: f64, u1: f64) -> Result<f64> {
    let phi = ode.value(u, u1)?;
    Ok(l.partials(u, u1)?.el_residual(u1, phi))
}

/// Largest Euler–Lagrange residual `u1 L_uu1 + u2 L_u1u1 - L_u` over the
/// samples of a trajectory, with `u2` read from the sample tangents. On
/// solutions of `ode` this is `phi`; on other curves it is what the curve
/// actually does, so the residual detects a mismatched equation.
pub fn el_residual(ode: &OdeRhs, l: &LagrangianModel, trajectory: &Curve) -> Result<f64> {
    max_el_residual(ode, trajectory, |u, u1| l.partials(u, u1))
}

/// Step for [`partials_fd`]. Second differences lose `eps/h^2` to rounding,
/// so this is larger than [`DEFAULT_FD_STEP`].
pub const EL_FD_STEP: f64 = 1e-4;

/// Partials of `L` from central differences of its values only.
pub fn partials_fd(l: &LagrangianModel, u: f64, u1: f64, h: f64) -> Result<LPartials> {
    let f = |a: f64, b: f64| l.value(a, b);
    let c = f(u, u1)?;
    let (up, um) = (f(u + h, u1)?, f(u - h, u1)?);
    let (vp, vm) = (f(u, u1 + h)?, f(u, u1 - h)?);
    let cross = f(u + h, u1 + h)? - f(u + h, u1 - h)? - f(u - h, u1 + h)? + f(u - h, u1 - h)?;
    Ok(LPartials {
        l: c,
        l_u: (up - um) / (2.0 * h),
        l_u1: (vp - vm) / (2.0 * h),
        l_uu1: cross / (4.0 * h * h),
        l_u1u1: (vp - 2.0 * c + vm) / (h * h),
    })
}

/// [`el_residual`] with the partials from [`partials_fd`].
pub fn el_residual_fd(
    ode: &OdeRhs,
    l: &LagrangianModel,
    trajectory: &Curve,
    h: f64,
) -> Result<f64> {
    max_el_residual(ode, trajectory, |u, u1| partials_fd(l, u, u1, h))
}

fn max_el_residual<F>(ode: &OdeRhs, trajectory: &Curve, partials: F) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<LPartials> + Sync,
{
    let r = par::try_map(&trajectory.samples, |s| {
        ode.check(&s.point)?;
        let u2 = s.tangent[2] / s.tangent[0];
        Ok::<_, Error>(partials(s.point.u, s.point.u1)?.el_residual(s.point.u1, u2))
    })?;
    Ok(r.into_iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// `h = u1 L_u1 - L`.
pub fn energy_function(l: &LagrangianModel, p: &JetPoint) -> Result<f64> {
    let [lv, _, l_u1] = l.first(p.u, p.u1)?;
    Ok(p.u1 * l_u1 - lv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    /// `dh` and `L_u1u1` from the partials of the model.
    Partials,
    /// `dh` by central differences of `h`, `L_u1u1` by differences of `L_u1`.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DhIdentityReport {
    pub route: Route,
    /// `max |dh - u1 L_u1u1 w3|` over components and samples.
    pub max_defect: f64,
    /// `min |u1 L_u1u1|`.
    pub min_abs_mu: f64,
    pub samples: usize,
}

/// Values of `|u1 L_u1u1|` below this count as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Checks `dh = u1 L_u1u1 w3` with `w3 = du1 - (phi/u1) du` on a grid.
pub fn dh_identity_check(
    ode: &OdeRhs,
    l: &LagrangianModel,
    region: &Region,
    route: Route,
) -> Result<DhIdentityReport> {
    let pts = region.points(ode.eps_u1())?;
    let step = DEFAULT_FD_STEP;
    let rows = par::try_map(&pts, |&(u, u1)| -> Result<[f64; 2]> {
        ode.check(&JetPoint::new(0.0, u, u1))?;
        let phi = ode.value(u, u1)?;
        let (h_u, h_u1, l_u1u1) = match route {
            Route::Partials => {
                let p = l.partials(u, u1)?;
                (u1 * p.l_uu1 - p.l_u, u1 * p.l_u1u1, p.l_u1u1)
            }
            Route::FiniteDifference => {
                let h = |a: f64, b: f64| energy_function(l, &JetPoint::new(0.0, a, b));
                let h_u = (h(u + step, u1)? - h(u - step, u1)?) / (2.0 * step);
                let h_u1 = (h(u, u1 + step)? - h(u, u1 - step)?) / (2.0 * step);
                let l_u1u1 = (l.first(u, u1 + step)?[2] - l.first(u, u1 - step)?[2]) / (2.0 * step);
                (h_u, h_u1, l_u1u1)
            }
        };
        let mu = u1 * l_u1u1;
        if mu.abs() <= DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateLagrangian {
                u,
                u1,
                value: l_u1u1,
            });
        }
        // coordinate components of mu * w3 are (0, -mu phi/u1, mu)
        let defect = (h_u + mu * phi / u1).abs().max((h_u1 - mu).abs());
        Ok([defect, mu.abs()])
    })?;
    let mut rep = DhIdentityReport {
        route,
        max_defect: 0.0,
        min_abs_mu: f64::INFINITY,
        samples: rows.len(),
    };
    for [d, m] in rows {
        rep.max_defect = rep.max_defect.max(d);
        rep.min_abs_mu = rep.min_abs_mu.min(m);
    }
    Ok(rep)
}

pub const LAGRANGIAN_CSV_HEADER: [&str; 7] = ["u", "u1", "L", "L_u", "L_u1", "h", "el_residual"];

/// Rows `u, u1, L, L_u, L_u1, h, el_residual` over a grid, in grid order.
pub fn lagrangian_grid(
    ode: &OdeRhs,
    l: &LagrangianModel,
    region: &Region,
) -> Result<Vec<Vec<f64>>> {
    let pts = region.points(ode.eps_u1())?;
    par::try_map(&pts, |&(u, u1)| {
        ode.check(&JetPoint::new(0.0, u, u1))?;
        let p = l.partials(u, u1)?;
        let phi = ode.value(u, u1)?;
        Ok(vec![
            u,
            u1,
            p.l,
            p.l_u,
            p.l_u1,
            p.energy(u1),
            p.el_residual(u1, phi),
        ])
    })
}

pub fn write_lagrangian_csv<W: Write>(out: W, rows: &[Vec<f64>]) -> std::io::Result<()> {
    table::write_csv(out, &LAGRANGIAN_CSV_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::HyperDual2;
    use crate::dynamics::integrate_solution;
    use crate::expr::{parse, Params, PHASE_VARS};
    use crate::field::{BoundExpr, FnField};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(text: &str, params: &Params) -> Field {
        BoundExpr::new(parse(text, PHASE_VARS).unwrap(), params.clone()).into_field()
    }

    fn ode(text: &str, params: &Params) -> OdeRhs {
        OdeRhs::from_expr(parse(text, PHASE_VARS).unwrap(), params.clone())
    }

    fn closed(e: &str) -> EnergyModel {
        EnergyModel::ClosedForm(field(e, &Params::new()))
    }

    #[test]
    fn constant_energy() {
        let c = 2.5;
        let l = build_lagrangian(&closed("2.5"), 0.5).unwrap();
        for &u1 in &[0.7, 1.0, 3.0] {
            assert_abs_diff_eq!(
                l.value(0.3, u1).unwrap(),
                c * (u1 / 0.5 - 1.0),
                epsilon = 1e-11
            );
            let h = energy_function(&l, &JetPoint::new(0.0, 0.3, u1)).unwrap();
            assert_abs_diff_eq!(h, c, epsilon = 1e-11);
        }
    }

    #[test]
    fn sign_crossing_is_rejected() {
        let l = build_lagrangian(&closed("u1^2/2"), 0.5).unwrap();
        assert!(matches!(
            l.value(0.0, -0.5),
            Err(Error::SignCrossing { .. })
        ));
        assert!(matches!(
            build_lagrangian(&closed("1"), 0.0),
            Err(Error::InvalidArgument(_))
        ));
        let label = EnergyModel::NumericLabel { u_ref: 0.0 };
        assert!(matches!(
            build_lagrangian(&label, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn quadrature_partials_match_exact_identities() {
        // L_u1u1 = E_u1/u1 and L_uu1 = (L_u + E_u)/u1 for this construction
        let e = field("u + sqrt(1 - u1^2)", &Params::new());
        let l = build_lagrangian(&EnergyModel::ClosedForm(e.clone()), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u = rng.gen_range(-1.0..1.0);
            let u1 = rng.gen_range(0.1..0.9);
            let p = l.partials(u, u1).unwrap();
            let ej = e.jet(u, u1).unwrap();
            assert_abs_diff_eq!(p.energy(u1), ej.val, epsilon = 1e-10);
            assert_abs_diff_eq!(p.l_u1u1, ej.d_v / u1, epsilon = 1e-6);
            assert_abs_diff_eq!(p.l_uu1, (p.l_u + ej.d_u) / u1, epsilon = 1e-6);
        }
    }

    #[test]
    fn kappa_closed_form_and_quadrature_share_euler_lagrange() {
        let k = Params::new().with("kappa", 1.0);
        let o = ode("sqrt(1 - kappa*u1^2)", &k);
        let closed_l = LagrangianModel::ClosedForm(field(
            "-u - (sqrt(1 - kappa*u1^2) + sqrt(kappa)*u1*arcsin(sqrt(kappa)*u1))/kappa",
            &k,
        ));
        let quad = build_lagrangian(
            &EnergyModel::ClosedForm(field("u + sqrt(1 - kappa*u1^2)/kappa", &k)),
            0.5,
        )
        .unwrap();
        let c = integrate_solution(&o, &JetPoint::new(0.0, 0.0, 0.5), 0.8, 1e-10).unwrap();
        assert!(el_residual(&o, &closed_l, &c).unwrap() <= 1e-8);
        assert!(el_residual(&o, &quad, &c).unwrap() <= 1e-6);
    }

    #[test]
    fn fd_partials_agree_with_ad() {
        let l = LagrangianModel::ClosedForm(field("u1^3*exp(u) + u*u1 - cos(u1)", &Params::new()));
        let (u, v) = (0.3, 0.8);
        let a = l.partials(u, v).unwrap();
        let b = partials_fd(&l, u, v, EL_FD_STEP).unwrap();
        for (x, y) in [
            (a.l_u, b.l_u),
            (a.l_u1, b.l_u1),
            (a.l_uu1, b.l_uu1),
            (a.l_u1u1, b.l_u1u1),
        ] {
            assert_abs_diff_eq!(x, y, epsilon = 1e-6);
        }
    }

    #[test]
    fn gauge_term_does_not_change_euler_lagrange() {
        let k = Params::new().with("kappa", 1.0);
        let o = ode("sqrt(1 - kappa*u1^2)", &k);
        let base = field("-u - (sqrt(1 - u1^2) + u1*arcsin(u1))", &Params::new());
        let b2 = base.clone();
        let gauged = FnField::new("gauged", move |u: HyperDual2, u1: HyperDual2| {
            Ok(b2.eval_hd(u, u1)? + u1 * u * u + u1 * 3.0)
        })
        .into_field();
        let c = integrate_solution(&o, &JetPoint::new(0.0, 0.0, 0.5), 0.8, 1e-10).unwrap();
        let r0 = el_residual(&o, &LagrangianModel::ClosedForm(base), &c).unwrap();
        let r1 = el_residual(&o, &LagrangianModel::ClosedForm(gauged), &c).unwrap();
        assert!((r0 - r1).abs() <= 1e-9);
    }

    #[test]
    fn perturbed_equation_is_detected() {
        let o = ode("-u", &Params::new());
        let l = LagrangianModel::ClosedForm(field("(u1^2 - u^2)/2", &Params::new()));
        let c = integrate_solution(&o, &JetPoint::new(0.0, 0.0, 1.0), 1.0, 1e-10).unwrap();
        assert!(el_residual(&o, &l, &c).unwrap() <= 1e-12);
        let pert = ode("-u + 0.1", &Params::new());
        let c = integrate_solution(&pert, &JetPoint::new(0.0, 0.0, 1.0), 1.0, 1e-10).unwrap();
        assert!(el_residual(&o, &l, &c).unwrap() > 1e-3);
    }

    #[test]
    fn oscillator_energy_function() {
        let l = LagrangianModel::ClosedForm(field(
            "(u1^2 - lambda*u^2)/2",
            &Params::new().with("lambda", 1.0),
        ));
        assert_eq!(
            energy_function(&l, &JetPoint::new(0.0, 1.0, 1.0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn dh_identity_on_oscillator() {
        let o = ode("-u", &Params::new());
        let l = LagrangianModel::ClosedForm(field("(u1^2 - u^2)/2", &Params::new()));
        let region = Region::square((-1.0, 1.0), (0.2, 1.0), 11);
        let r = dh_identity_check(&o, &l, &region, Route::Partials).unwrap();
        assert!(r.max_defect <= 1e-12, "{r:?}");
        let r = dh_identity_check(&o, &l, &region, Route::FiniteDifference).unwrap();
        assert!(r.max_defect <= 1e-6, "{r:?}");
    }

    #[test]
    fn degenerate_lagrangian() {
        let o = ode("0", &Params::new());
        let l = LagrangianModel::ClosedForm(field("u1 + u", &Params::new()));
        let r = dh_identity_check(
            &o,
            &l,
            &Region::square((0.0, 1.0), (0.5, 1.0), 3),
            Route::Partials,
        );
        assert!(
            matches!(r, Err(Error::DegenerateLagrangian { .. })),
            "{r:?}"
        );
    }

    #[test]
    fn free_particle_quadrature() {
        let o = ode("0", &Params::new());
        let l = build_lagrangian(&closed("u1^2/2"), 1.0).unwrap();
        let c = integrate_solution(&o, &JetPoint::new(0.0, 0.0, 1.5), 2.0, 1e-10).unwrap();
        assert!(el_residual(&o, &l, &c).unwrap() <= 1e-8);
    }

    #[test]
    fn grid_rows() {
        let o = ode("-u", &Params::new());
        let l = build_lagrangian(&closed("(u1^2 + u^2)/2"), 1.0).unwrap();
        let rows = lagrangian_grid(&o, &l, &Region::square((0.0, 1.0), (0.5, 1.5), 3)).unwrap();
        assert_eq!(rows.len(), 9);
        for r in &rows {
            assert_abs_diff_eq!(r[5], (r[0] * r[0] + r[1] * r[1]) / 2.0, epsilon = 1e-10);
            assert!(r[6].abs() <= 1e-6);
        }
    }
}
