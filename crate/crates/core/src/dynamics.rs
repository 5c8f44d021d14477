//! Solutions of the equation, their prolongations, and geodesics of the
//! associated metric.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    christoffel_fd, connection_forms_at, frame_at, inner, metric_at, JetPoint, OdeRhs, Vec3,
    DEFAULT_FD_STEP,
};
use crate::integrate::{self, EventFn, Options, Stats, Trajectory};
use crate::par;
use crate::table;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub t: f64,
    pub point: JetPoint,
    /// Coordinate components of the velocity.
    pub tangent: Vec3,
    /// Frame components of the geodesic defect at this sample.
    pub residual: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurveKind {
    /// Prolongation `x -> (x, u(x), u'(x))` of a solution; `t = x`.
    Solution,
    /// Geodesic with its own parameter `t`.
    Geodesic,
}

/// Why an integration stopped before its end time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Halt {
    /// `|u1|` fell to `eps_u1` at parameter `at`.
    SingularCrossing { at: f64 },
}

type Interp = Arc<dyn Fn(f64) -> (JetPoint, Vec3) + Send + Sync>;

#[derive(Clone)]
pub struct Curve {
    pub kind: CurveKind,
    pub samples: Vec<CurveSample>,
    pub stats: Stats,
    pub halt: Option<Halt>,
    interp: Interp,
    span: (f64, f64),
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("kind", &self.kind)
            .field("samples", &self.samples.len())
            .field("stats", &self.stats)
            .field("halt", &self.halt)
            .finish()
    }
}

pub const CURVE_CSV_HEADER: [&str; 10] = [
    "t",
    "x",
    "u",
    "u1",
    "tangent_x",
    "tangent_u",
    "tangent_u1",
    "res_e1",
    "res_e2",
    "res_e3",
];

impl Curve {
    /// Parameter interval actually covered.
    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    /// Point and coordinate velocity from the continuous extension,
    /// clamped to [`Curve::span`].
    pub fn at(&self, t: f64) -> (JetPoint, Vec3) {
        (self.interp)(t.clamp(self.span.0, self.span.1))
    }

    /// Errors with [`Error::SingularCrossing`] if the integration halted early.
    pub fn complete(self) -> Result<Curve> {
        match self.halt {
            Some(Halt::SingularCrossing { at }) => Err(Error::SingularCrossing { at }),
            None => Ok(self),
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.residual)
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| {
                vec![
                    s.t,
                    s.point.x,
                    s.point.u,
                    s.point.u1,
                    s.tangent[0],
                    s.tangent[1],
                    s.tangent[2],
                    s.residual[0],
                    s.residual[1],
                    s.residual[2],
                ]
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        table::write_csv(out, &CURVE_CSV_HEADER, &self.rows())
    }
}

/// Frame components of `nabla_{c'} c'` for the prolongation `c = j^1 f`,
/// given `jet = [f, f', f'', f''']` at `x`.
///
/// With `d = f'' - phi` the components are
/// `d^2 (phi - u1 phi_u1) / u1`, `d^2 (phi - u1 phi_u1) / u1^2` and
/// `f''' - e1(phi) - (phi/u1) d`.
pub fn geodesic_residual_jet(ode: &OdeRhs, x: f64, jet: [f64; 4]) -> Result<Vec3> {
    let p = JetPoint::new(x, jet[0], jet[1]);
    let j = ode.jet_at(&p)?;
    let u1 = p.u1;
    let d = jet[2] - j.value;
    let k = d * d * (j.value - u1 * j.u1);
    Ok([k / u1, k / (u1 * u1), jet[3] - j.e1(u1) - j.value / u1 * d])
}

/// [`geodesic_residual_jet`] for a curve given as `x -> [f, f', f'', f''']`.
pub fn geodesic_residual<F>(ode: &OdeRhs, curve_eval: F, x: f64) -> Result<Vec3>
where
    F: Fn(f64) -> Result<[f64; 4]>,
{
    geodesic_residual_jet(ode, x, curve_eval(x)?)
}

/// Same quantity as [`geodesic_residual_jet`], computed from Christoffel
/// symbols obtained by differencing the metric with step `h`.
pub fn geodesic_residual_metric_fd(ode: &OdeRhs, x: f64, jet: [f64; 4], h: f64) -> Result<Vec3> {
    let p = JetPoint::new(x, jet[0], jet[1]);
    let v = [1.0, jet[1], jet[2]];
    let acc = [0.0, jet[2], jet[3]];
    coordinate_defect(ode, &p, &v, &acc, h)
}

/// Frame components of `acc + Gamma(v, v)`, with `Gamma` from the metric.
fn coordinate_defect(ode: &OdeRhs, p: &JetPoint, v: &Vec3, acc: &Vec3, h: f64) -> Result<Vec3> {
    let gamma = christoffel_fd(ode, p, h)?;
    let mut r = *acc;
    for (mu, rm) in r.iter_mut().enumerate() {
        for nu in 0..3 {
            for rho in 0..3 {
                *rm += gamma[mu][nu][rho] * v[nu] * v[rho];
            }
        }
    }
    Ok(frame_at(ode, p)?.to_frame(&r))
}

/// `[u, u', u'', u''']` along a solution through `(u, u1)`, where
/// `u'' = phi` and `u''' = e1(phi)`.
pub fn solution_jet(ode: &OdeRhs, u: f64, u1: f64) -> Result<[f64; 4]> {
    let j = ode.jet(u, u1)?;
    Ok([u, u1, j.value, j.e1(u1)])
}

fn sign_event(eps: f64, s0: f64, axis: usize) -> impl Fn(f64, &[f64; 2]) -> f64 {
    move |_, y: &[f64; 2]| s0 * y[axis] - eps
}

fn check_init(ode: &OdeRhs, init: &JetPoint, end: f64, tol: f64) -> Result<()> {
    ode.check(init)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if !(end > init.x) || !end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "end {end} must be finite and greater than the start {}",
            init.x
        )));
    }
    Ok(())
}

fn solution_samples(ode: &OdeRhs, knots: &[(f64, [f64; 2])]) -> Result<Vec<CurveSample>> {
    knots
        .iter()
        .map(|&(x, [u, u1])| {
            let jet = solution_jet(ode, u, u1)?;
            Ok(CurveSample {
                t: x,
                point: JetPoint::new(x, u, u1),
                tangent: [1.0, u1, jet[2]],
                residual: geodesic_residual_jet(ode, x, jet)?,
            })
        })
        .collect()
}

fn solution_rhs(ode: &OdeRhs) -> impl FnMut(f64, &[f64; 2]) -> Result<[f64; 2]> + '_ {
    move |_, y: &[f64; 2]| Ok([y[1], ode.value(y[0], y[1])?])
}

fn solution_curve(ode: &OdeRhs, traj: Trajectory<2>) -> Result<Curve> {
    let samples = solution_samples(ode, &traj.knots())?;
    let halt = traj.event.map(|e| Halt::SingularCrossing { at: e.t });
    let span = (traj.t0, traj.t_final);
    let stats = traj.stats;
    let ode = ode.clone();
    let interp: Interp = Arc::new(move |x| {
        let [u, u1] = traj.eval(x);
        let phi = ode.value(u, u1).unwrap_or(f64::NAN);
        (JetPoint::new(x, u, u1), [1.0, u1, phi])
    });
    Ok(Curve {
        kind: CurveKind::Solution,
        samples,
        stats,
        halt,
        interp,
        span,
    })
}

/// Integrates `u'' = phi(u, u')` from `init` to `x_end` and returns the
/// prolonged curve, sampled at the accepted steps.
///
/// If `|u'|` drops to `eps_u1` the curve ends there and [`Curve::halt`]
/// records the crossing.
pub fn integrate_solution(ode: &OdeRhs, init: &JetPoint, x_end: f64, tol: f64) -> Result<Curve> {
    check_init(ode, init, x_end, tol)?;
    let s0 = init.u1.signum();
    let ev = sign_event(ode.eps_u1(), s0, 1);
    let events: [EventFn<'_, 2>; 1] = [&ev];
    let traj = integrate::solve(
        solution_rhs(ode),
        init.x,
        [init.u, init.u1],
        x_end,
        &Options::with_tol(tol),
        &events,
    )?;
    solution_curve(ode, traj)
}

/// Like [`integrate_solution`], but continues through `u1 = 0` and splits
/// the trajectory into pieces on which `u1` keeps its sign.
pub fn integrate_solution_segments(
    ode: &OdeRhs,
    init: &JetPoint,
    x_end: f64,
    tol: f64,
) -> Result<Vec<Curve>> {
    check_init(ode, init, x_end, tol)?;
    let eps = ode.eps_u1();
    let opts = Options::with_tol(tol);
    let mut out = Vec::new();
    let mut x = init.x;
    let mut y = [init.u, init.u1];
    loop {
        let s0 = y[1].signum();
        let ev = sign_event(eps, s0, 1);
        let traj = integrate::solve(solution_rhs(ode), x, y, x_end, &opts, &[&ev])?;
        let crossing = traj.event;
        out.push(solution_curve(ode, traj)?);
        let Some(hit) = crossing else {
            return Ok(out);
        };
        // carry on without the manifold check until u1 is clearly across zero
        let across = move |_: f64, y: &[f64; 2]| s0 * y[1] + 10.0 * eps;
        let bridge = integrate::solve(solution_rhs(ode), hit.t, hit.y, x_end, &opts, &[&across])?;
        match bridge.event {
            Some(b) => {
                x = b.t;
                y = b.y;
            }
            None => return Ok(out),
        }
    }
}

/// Several solutions in parallel; results keep the order of `inits`.
pub fn integrate_batch(
    ode: &OdeRhs,
    inits: &[JetPoint],
    x_end: f64,
    tol: f64,
) -> Vec<Result<Curve>> {
    par::map(inits, |p| integrate_solution(ode, p, x_end, tol))
}

/// [`integrate_batch`] forced onto the calling thread.
pub fn integrate_batch_seq(
    ode: &OdeRhs,
    inits: &[JetPoint],
    x_end: f64,
    tol: f64,
) -> Vec<Result<Curve>> {
    par::map_seq(inits, |p| integrate_solution(ode, p, x_end, tol))
}

/// Right-hand side of the geodesic equation in the state
/// `(x, u, u1, a1, a2, a3)`, where `a` are frame components of the velocity:
/// `c' = sum a^i e_i`, `a^k' = -sum a^i a^j Gamma^k_ij`.
fn geodesic_rhs(ode: &OdeRhs, y: &[f64; 6]) -> Result<[f64; 6]> {
    let p = JetPoint::new(y[0], y[1], y[2]);
    let a = [y[3], y[4], y[5]];
    let frame = frame_at(ode, &p)?;
    let conn = connection_forms_at(ode, &p)?;
    let v = frame.to_coords(&a);
    let acc = conn.contract(&a, &a);
    Ok([v[0], v[1], v[2], -acc[0], -acc[1], -acc[2]])
}

/// Geodesic from `init` with initial coordinate velocity `init_tangent`,
/// integrated for parameter time `t_end`.
///
/// Sample residuals are the frame components of `c'' + Gamma(c', c')`
/// with `c''` differenced from the continuous output and `Gamma` from the
/// metric, an independent check on the connection used for the integration.
pub fn integrate_geodesic(
    ode: &OdeRhs,
    init: &JetPoint,
    init_tangent: Vec3,
    t_end: f64,
    tol: f64,
) -> Result<Curve> {
    let probe = JetPoint::new(0.0, init.u, init.u1);
    check_init(ode, &probe, t_end, tol)?;
    if init_tangent.iter().all(|&c| c == 0.0) {
        return Err(Error::ZeroTangent);
    }
    if !init_tangent.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidArgument("tangent must be finite".into()));
    }
    let a0 = frame_at(ode, init)?.to_frame(&init_tangent);
    let s0 = init.u1.signum();
    let eps = ode.eps_u1();
    let ev = move |_: f64, y: &[f64; 6]| s0 * y[2] - eps;
    let traj = integrate::solve(
        |_, y: &[f64; 6]| geodesic_rhs(ode, y),
        0.0,
        [init.x, init.u, init.u1, a0[0], a0[1], a0[2]],
        t_end,
        &Options::with_tol(tol),
        &[&ev],
    )?;
    let halt = traj.event.map(|e| Halt::SingularCrossing { at: e.t });
    let span = (traj.t0, traj.t_final);
    let stats = traj.stats;
    let knots = traj.knots();
    let ode_i = ode.clone();
    let interp: Interp = Arc::new(move |t| {
        let y = traj.eval(t);
        let p = JetPoint::new(y[0], y[1], y[2]);
        let v = frame_at(&ode_i, &p)
            .map(|f| f.to_coords(&[y[3], y[4], y[5]]))
            .unwrap_or([f64::NAN; 3]);
        (p, v)
    });
    let mut curve = Curve {
        kind: CurveKind::Geodesic,
        samples: Vec::with_capacity(knots.len()),
        stats,
        halt,
        interp,
        span,
    };
    for (t, _) in knots {
        let (point, tangent) = curve.at(t);
        let residual = geodesic_defect_fd(ode, &curve, t, GEODESIC_FD_DT)?;
        curve.samples.push(CurveSample {
            t,
            point,
            tangent,
            residual,
        });
    }
    Ok(curve)
}

/// Parameter step used to difference the velocity of a geodesic.
pub const GEODESIC_FD_DT: f64 = 1e-3;

/// Frame components of `c'' + Gamma(c', c')` at parameter `t`, with `c''`
/// from second-order differences of the continuous velocity (one-sided
/// near the ends) and `Gamma` from [`christoffel_fd`].
pub fn geodesic_defect_fd(ode: &OdeRhs, curve: &Curve, t: f64, dt: f64) -> Result<Vec3> {
    let (lo, hi) = curve.span();
    let vel = |s: f64| curve.at(s).1;
    let acc = if t - dt >= lo && t + dt <= hi {
        let (a, b) = (vel(t - dt), vel(t + dt));
        [0, 1, 2].map(|k| (b[k] - a[k]) / (2.0 * dt))
    } else if t + 2.0 * dt <= hi {
        let (a, b, c) = (vel(t), vel(t + dt), vel(t + 2.0 * dt));
        [0, 1, 2].map(|k| (-3.0 * a[k] + 4.0 * b[k] - c[k]) / (2.0 * dt))
    } else if t - 2.0 * dt >= lo {
        let (a, b, c) = (vel(t), vel(t - dt), vel(t - 2.0 * dt));
        [0, 1, 2].map(|k| (3.0 * a[k] - 4.0 * b[k] + c[k]) / (2.0 * dt))
    } else {
        return Err(Error::StepTooLarge { radius: dt });
    };
    let (p, v) = curve.at(t);
    coordinate_defect(ode, &p, &v, &acc, DEFAULT_FD_STEP)
}

/// `g(c', c')` at every sample.
pub fn speeds_squared(ode: &OdeRhs, curve: &Curve) -> Result<Vec<f64>> {
    curve
        .samples
        .iter()
        .map(|s| Ok(inner(&metric_at(ode, &s.point)?, &s.tangent, &s.tangent)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Params, PHASE_VARS};
    use approx::assert_abs_diff_eq;

    fn ode(text: &str, params: Params) -> OdeRhs {
        OdeRhs::from_expr(parse(text, PHASE_VARS).unwrap(), params)
    }

    fn damped(alpha: f64, lambda: f64) -> OdeRhs {
        ode(
            "-alpha*u1 - lambda*u",
            Params::new().with("alpha", alpha).with("lambda", lambda),
        )
    }

    #[test]
    fn free_particle_is_a_line() {
        let c = integrate_solution(
            &ode("0", Params::new()),
            &JetPoint::new(0.0, 0.0, 1.0),
            2.0,
            1e-10,
        )
        .unwrap();
        assert!(c.halt.is_none());
        assert_eq!(c.samples.last().unwrap().t, 2.0);
        for s in &c.samples {
            assert_abs_diff_eq!(s.point.u, s.t, epsilon = 1e-14);
            assert_eq!(s.point.u1, 1.0);
            assert_eq!(s.tangent, [1.0, 1.0, 0.0]);
        }
        let ts: Vec<f64> = c.samples.iter().map(|s| s.t).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn exponential_and_its_first_integral() {
        let c = integrate_solution(
            &ode("u1", Params::new()),
            &JetPoint::new(0.0, 1.0, 1.0),
            1.0,
            1e-10,
        )
        .unwrap();
        for s in &c.samples {
            assert_abs_diff_eq!(s.point.u, s.t.exp(), epsilon = 1e-8);
            assert_abs_diff_eq!(s.point.u1 - s.point.u, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn damped_oscillator_stops_at_turning_point() {
        let c = integrate_solution(&damped(0.2, 1.0), &JetPoint::new(0.0, 0.0, 1.0), 3.0, 1e-10)
            .unwrap();
        let Some(Halt::SingularCrossing { at }) = c.halt else {
            panic!("expected a crossing");
        };
        // u' = e^{-x/10} (cos wx - sin(wx)/(10 w)) vanishes at tan(wx) = 10 w
        let w = 0.99f64.sqrt();
        let want = (10.0 * w).atan() / w;
        // the event is at u1 = eps_u1, not at u1 = 0
        let u_turn = (-0.1 * want).exp() * (w * want).sin() / w;
        assert_abs_diff_eq!(at, want - 1e-9 / u_turn, epsilon = 1e-10);
        assert!(at < std::f64::consts::FRAC_PI_2 / w);
        assert_eq!(
            c.clone().complete().unwrap_err(),
            Error::SingularCrossing { at }
        );
        let last = c.samples.last().unwrap();
        assert!(last.point.u1 > 0.0 && last.point.u1 < 1e-8);
    }

    #[test]
    fn segments_follow_the_oscillator() {
        let o = damped(0.0, 1.0);
        let x_end = 20.0 * std::f64::consts::PI;
        let segs =
            integrate_solution_segments(&o, &JetPoint::new(0.0, 0.0, 1.0), x_end, 1e-10).unwrap();
        assert_eq!(segs.len(), 21);
        for seg in &segs {
            let sign = seg.samples[0].point.u1.signum();
            for s in &seg.samples {
                assert_eq!(s.point.u1.signum(), sign);
                assert_abs_diff_eq!(s.point.u, s.t.sin(), epsilon = 1e-7);
            }
        }
        assert_abs_diff_eq!(segs.last().unwrap().span().1, x_end, epsilon = 1e-12);
    }

    #[test]
    fn residual_vanishes_on_solutions() {
        let k = ode("sqrt(1 - kappa*u1^2)", Params::new().with("kappa", 1.0));
        let c = integrate_solution(&k, &JetPoint::new(0.0, 0.0, 0.5), 0.9, 1e-10).unwrap();
        assert!(c.max_residual() <= 1e-12, "{}", c.max_residual());
        for s in c.samples.iter().step_by(3) {
            let jet = solution_jet(&k, s.point.u, s.point.u1).unwrap();
            let fd = geodesic_residual_metric_fd(&k, s.t, jet, 1e-5).unwrap();
            for r in fd {
                assert!(r.abs() <= 1e-7, "{fd:?}");
            }
        }
    }

    #[test]
    fn non_solution_is_detected() {
        let k = ode("sqrt(1 - kappa*u1^2)", Params::new().with("kappa", 0.5));
        // f(x) = x: f'' = 0 while phi(0, 1) = sqrt(1/2)
        let line = |x: f64| Ok([x, 1.0, 0.0, 0.0]);
        let r = geodesic_residual(&k, line, 0.0).unwrap();
        let phi = 0.5f64.sqrt();
        let phi_v = -0.5 / phi;
        let defect = phi * phi * (phi - phi_v);
        assert_abs_diff_eq!(r[0], defect, epsilon = 1e-14);
        assert_abs_diff_eq!(r[1], defect, epsilon = 1e-14);
        assert_abs_diff_eq!(r[2], -(phi * phi_v) + phi * phi, epsilon = 1e-14);
        let fd = geodesic_residual_metric_fd(&k, 0.0, [0.0, 1.0, 0.0, 0.0], 1e-5).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(fd[i], r[i], epsilon = 1e-7);
        }
    }

    #[test]
    fn residual_at_domain_edge_is_an_error() {
        // kappa = 1 at u1 = 1 puts phi on the boundary of sqrt
        let k = ode("sqrt(1 - kappa*u1^2)", Params::new().with("kappa", 1.0));
        assert!(geodesic_residual(&k, |x| Ok([x, 1.0, 0.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn singular_start_is_rejected() {
        let o = ode("0", Params::new());
        let r = integrate_solution(&o, &JetPoint::new(0.0, 0.0, 0.0), 1.0, 1e-10);
        assert!(matches!(r, Err(Error::SingularPoint { .. })));
        let r = integrate_solution(&o, &JetPoint::new(0.0, 0.0, 1.0), -1.0, 1e-10);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn geodesic_along_e1_is_the_prolonged_solution() {
        let k = ode("sqrt(1 - kappa*u1^2)", Params::new().with("kappa", 1.0));
        let init = JetPoint::new(0.0, 0.0, 0.5);
        let e1 = frame_at(&k, &init).unwrap().e[0];
        let g = integrate_geodesic(&k, &init, e1, 1.0, 1e-10).unwrap();
        let s = integrate_solution(&k, &init, 1.0, 1e-10).unwrap();
        assert!(g.halt.is_none());
        let mut sup = 0.0f64;
        for i in 0..=100 {
            let t = i as f64 * 0.01;
            let (pg, _) = g.at(t);
            let (ps, _) = s.at(t);
            sup = sup
                .max((pg.x - ps.x).abs())
                .max((pg.u - ps.u).abs())
                .max((pg.u1 - ps.u1).abs());
        }
        assert!(sup <= 1e-6, "{sup}");
    }

    #[test]
    fn geodesic_satisfies_metric_equation() {
        let o = ode("0", Params::new());
        let g = integrate_geodesic(
            &o,
            &JetPoint::new(0.0, 1.0, 2.0),
            [0.0, 0.0, 1.0],
            1.0,
            1e-12,
        )
        .unwrap();
        assert!(g.max_residual() <= 1e-6, "{}", g.max_residual());
        let speeds = speeds_squared(&o, &g).unwrap();
        for s in &speeds {
            assert_abs_diff_eq!(*s, speeds[0], epsilon = 1e-6 * speeds[0]);
        }
    }

    #[test]
    fn zero_tangent_is_rejected() {
        let o = ode("0", Params::new());
        let r = integrate_geodesic(&o, &JetPoint::new(0.0, 1.0, 2.0), [0.0; 3], 1.0, 1e-10);
        assert_eq!(r.unwrap_err(), Error::ZeroTangent);
    }

    #[test]
    fn batch_matches_sequential() {
        let o = damped(0.1, 2.0);
        let inits: Vec<JetPoint> = (1..=6)
            .map(|i| JetPoint::new(0.0, 0.1 * i as f64, 1.0))
            .collect();
        let a = integrate_batch(&o, &inits, 0.5, 1e-10);
        let b = integrate_batch_seq(&o, &inits, 0.5, 1e-10);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.as_ref().unwrap().samples, y.as_ref().unwrap().samples);
        }
    }

    #[test]
    fn csv_header() {
        let c = integrate_solution(
            &ode("0", Params::new()),
            &JetPoint::new(0.0, 0.0, 1.0),
            0.1,
            1e-10,
        )
        .unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,u,u1,tangent_x,tangent_u,tangent_u1,res_e1,res_e2,res_e3\n"));
        assert_eq!(text.lines().count(), c.samples.len() + 1);
    }
}
