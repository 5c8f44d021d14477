//! Dormand–Prince 5(4) with PI step control, continuous output and
//! sign-change events.

use serde::Serialize;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub const DEFAULT_TOL: f64 = 1e-10;
/// Events are located to this width in the independent variable.
pub const EVENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options::with_tol(DEFAULT_TOL)
    }
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Options {
            rtol: tol,
            atol: tol,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument("max_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest scaled error norm among accepted steps (at most 1).
    pub max_error: f64,
}

/// Continuous extension of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            let r = |k: usize| self.r[k][i];
            *yi = r(0) + s * (r(1) + s1 * (r(2) + s * (r(3) + s1 * r(4))));
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    /// Index into the event slice passed to [`solve`].
    pub index: usize,
    pub t: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
    pub t0: f64,
    pub y0: [f64; N],
    pub t_final: f64,
    pub y_final: [f64; N],
    pub event: Option<EventHit<N>>,
    pub stats: Stats,
}

impl<const N: usize> Trajectory<N> {
    /// State at `t`, clamped to the integrated interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let dir = (self.t_final - self.t0).signum();
        if self.steps.is_empty() || (t - self.t0) * dir <= 0.0 {
            return self.y0;
        }
        if (t - self.t_final) * dir >= 0.0 {
            return self.y_final;
        }
        let k = self.steps.partition_point(|s| (s.t1() - t) * dir < 0.0);
        self.steps[k.min(self.steps.len() - 1)].eval(t)
    }

    /// Accepted step boundaries, starting at `t0` and ending at `t_final`.
    pub fn knots(&self) -> Vec<(f64, [f64; N])> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push((self.t0, self.y0));
        for s in &self.steps {
            out.push((s.t1(), s.eval(s.t1())));
        }
        if let Some(last) = out.last_mut() {
            *last = (self.t_final, self.y_final);
        }
        out
    }
}

/// Scalar event function. A root is reported when its value goes from
/// positive to non-positive; the reported state is the last one located
/// on the positive side.
pub type EventFn<'a, const N: usize> = &'a dyn Fn(f64, &[f64; N]) -> f64;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        *o += h * s;
    }
    out
}

fn err_norm<const N: usize>(e: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &Options) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        s += (e[i] / sc).powi(2);
    }
    (s / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    opts: &Options,
    stats: &mut Stats,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let scale = |v: &[f64; N]| {
        let mut s = 0.0;
        for i in 0..N {
            let sc = opts.atol + opts.rtol * y0[i].abs();
            s += (v[i] / sc).powi(2);
        }
        (s / N as f64).sqrt()
    };
    let d0 = scale(y0);
    let d1 = scale(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(opts.max_step);
    let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
    stats.evaluations += 1;
    let Ok(f1) = f(t0 + dir * h0, &y1) else {
        return h0 * 1e-3;
    };
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = scale(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.max_step)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// Stops early at the first event root. A right-hand side error inside a
/// step is treated as a rejected step; it is returned only if the step size
/// collapses while it persists.
pub fn solve<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Options,
    events: &[EventFn<'_, N>],
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    opts.validate()?;
    if !(t0.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidArgument(
            "integration bounds must be finite".into(),
        ));
    }
    let mut stats = Stats::default();
    let mut traj = Trajectory {
        steps: Vec::new(),
        t0,
        y0,
        t_final: t0,
        y_final: y0,
        event: None,
        stats,
    };
    for (index, g) in events.iter().enumerate() {
        if g(t0, &y0) <= 0.0 {
            traj.event = Some(EventHit {
                index,
                t: t0,
                y: y0,
            });
            return Ok(traj);
        }
    }
    if t_end == t0 {
        return Ok(traj);
    }
    let dir = (t_end - t0).signum();

    let mut t = t0;
    let mut y = y0;
    stats.evaluations += 1;
    let mut k1 = f(t, &y)?;
    let mut h = initial_step(&mut f, t, &y, &k1, dir, opts, &mut stats);
    let mut facold: f64;
    let mut last_rhs_err: Option<Error> = None;
    let mut reject = false;

    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    const SAFE: f64 = 0.9;

    loop {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(Error::StepFailure { t });
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(last_rhs_err.unwrap_or(Error::StepFailure { t }));
        }
        let hs = dir * h;

        let stages = (|| -> Result<_> {
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(
                t + C4 * hs,
                &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            )?;
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let ys = axpy(
                &y,
                hs,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            let k6 = f(t + hs, &ys)?;
            let y1 = axpy(
                &y,
                hs,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = f(t + hs, &y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        stats.evaluations += 6;

        let (_k2, k3, k4, k5, k6, k7, y1) = match stages {
            Ok(v) => v,
            Err(e) => {
                last_rhs_err = Some(e);
                stats.rejected += 1;
                h *= 0.25;
                reject = true;
                continue;
            }
        };

        let mut e = [0.0; N];
        for i in 0..N {
            e[i] =
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = err_norm(&e, &y, &y1, opts);
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.25;
            reject = true;
            continue;
        }
        let fac11 = err.powf(EXPO1);

        if err <= 1.0 {
            last_rhs_err = None;
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - hs * k7[i] - bspl;
                r[4][i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep { t0: t, h: hs, r };
            stats.steps += 1;
            stats.max_error = stats.max_error.max(err);
            let t1 = if last { t_end } else { t + hs };

            if let Some(hit) = first_event(events, &step, t, &y, t1, &y1) {
                traj.steps.push(step);
                traj.t_final = hit.t;
                traj.y_final = hit.y;
                traj.event = Some(hit);
                traj.stats = stats;
                return Ok(traj);
            }
            traj.steps.push(step);
            t = t1;
            y = y1;
            if last {
                traj.t_final = t;
                traj.y_final = y;
                traj.stats = stats;
                return Ok(traj);
            }
            k1 = k7;

            facold = err.max(1e-4);
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(0.2, 10.0);
            let mut hnew = (h / fac).min(opts.max_step);
            if reject {
                hnew = hnew.min(h);
            }
            reject = false;
            h = hnew;
        } else {
            stats.rejected += 1;
            reject = true;
            h /= (fac11 / SAFE).min(5.0);
        }
    }
}

fn first_event<const N: usize>(
    events: &[EventFn<'_, N>],
    step: &DenseStep<N>,
    t0: f64,
    y0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
) -> Option<EventHit<N>> {
    let mut best: Option<EventHit<N>> = None;
    for (index, g) in events.iter().enumerate() {
        if g(t0, y0) > 0.0 && g(t1, y1) <= 0.0 {
            // bisection on the continuous extension, keeping g(lo) > 0
            let (mut lo, mut hi) = (t0, t1);
            while (hi - lo).abs() > EVENT_TOL * t1.abs().max(1.0) {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if g(mid, &step.eval(mid)) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let earlier = best.is_none_or(|b| (lo - b.t) * (t1 - t0).signum() < 0.0);
            if earlier {
                best = Some(EventHit {
                    index,
                    t: lo,
                    y: step.eval(lo),
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn oscillator(_t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn exponential_growth() {
        let tr = solve(
            |_, y: &[f64; 1]| Ok([y[0]]),
            0.0,
            [1.0],
            2.0,
            &Options::default(),
            &[],
        )
        .unwrap();
        assert_abs_diff_eq!(tr.y_final[0], 2f64.exp(), epsilon = 1e-8);
        assert_eq!(tr.t_final, 2.0);
        assert!(tr.stats.max_error <= 1.0);
    }

    #[test]
    fn dense_output_tracks_exact_solution() {
        let tr = solve(
            |_, y: &[f64; 1]| Ok([y[0]]),
            0.0,
            [1.0],
            3.0,
            &Options::default(),
            &[],
        )
        .unwrap();
        for i in 0..=300 {
            let t = i as f64 * 0.01;
            assert_abs_diff_eq!(tr.eval(t)[0], t.exp(), epsilon = 1e-8 * t.exp());
        }
    }

    #[test]
    fn harmonic_oscillator_over_ten_periods() {
        let t_end = 20.0 * std::f64::consts::PI;
        let tr = solve(oscillator, 0.0, [0.0, 1.0], t_end, &Options::default(), &[]).unwrap();
        assert_abs_diff_eq!(tr.y_final[0], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(tr.y_final[1], 1.0, epsilon = 1e-8);
        for (t, y) in tr.knots() {
            assert_abs_diff_eq!(y[0], t.sin(), epsilon = 1e-8);
        }
    }

    #[test]
    fn backwards_in_time() {
        let tr = solve(oscillator, 0.0, [0.0, 1.0], -1.0, &Options::default(), &[]).unwrap();
        assert_abs_diff_eq!(tr.y_final[0], (-1f64).sin(), epsilon = 1e-9);
        assert_abs_diff_eq!(tr.eval(-0.5)[0], (-0.5f64).sin(), epsilon = 1e-9);
    }

    #[test]
    fn event_is_located() {
        // y[1] = cos t first vanishes at pi/2
        let g = |_t: f64, y: &[f64; 2]| y[1];
        let tr = solve(
            oscillator,
            0.0,
            [0.0, 1.0],
            10.0,
            &Options::default(),
            &[&g],
        )
        .unwrap();
        let hit = tr.event.unwrap();
        assert_eq!(hit.index, 0);
        assert_abs_diff_eq!(hit.t, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert_eq!(tr.t_final, hit.t);
    }

    #[test]
    fn earliest_of_several_events() {
        let late = |_t: f64, y: &[f64; 2]| y[1];
        let early = |t: f64, _y: &[f64; 2]| 0.5 - t;
        let tr = solve(
            oscillator,
            0.0,
            [0.0, 1.0],
            10.0,
            &Options::default(),
            &[&late, &early],
        )
        .unwrap();
        let hit = tr.event.unwrap();
        assert_eq!(hit.index, 1);
        assert_abs_diff_eq!(hit.t, 0.5, epsilon = 1e-11);
    }

    #[test]
    fn rhs_error_shrinks_the_step() {
        // undefined beyond t = 1, so the step is cut back until it fails there
        let f = |t: f64, _y: &[f64; 1]| {
            if t > 1.0 {
                Err(Error::OutsideDomain { u: t, u1: 0.0 })
            } else {
                Ok([1.0])
            }
        };
        let r = solve(f, 0.0, [0.0], 2.0, &Options::default(), &[]);
        assert!(matches!(r, Err(Error::OutsideDomain { .. })), "{r:?}");
    }

    #[test]
    fn bad_options() {
        let o = Options {
            rtol: 0.0,
            ..Options::default()
        };
        assert!(solve(oscillator, 0.0, [0.0, 1.0], 1.0, &o, &[]).is_err());
    }
}
