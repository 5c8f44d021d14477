//! The per-builtin check suite behind `jetflow verify`.

use std::io::Write;

use anyhow::Result;
use jetflow::dynamics::{geodesic_defect_fd, integrate_solution, Curve, GEODESIC_FD_DT};
use jetflow::energy::{
    check_energy_candidate, conservation_report, trace_leaf_partial, EnergyModel, DEFAULT_PDE_TOL,
};
use jetflow::field::Field;
use jetflow::geometry::{
    cartan_residuals, converse_certificate, det3, frame_at, inner, leaf_geometry, metric_at,
    sectional_curvatures, JetPoint, DEFAULT_FD_STEP,
};
use jetflow::lagrangian::{
    build_lagrangian, dh_identity_check, el_residual, el_residual_fd, energy_function,
    LagrangianModel, Route, EL_FD_STEP,
};
use jetflow::par;
use jetflow::registry::Instance;
use serde::Serialize;

use crate::args::{ReportFormat, VerifyArgs};
use crate::output;
use crate::source::{self, SourceInfo};

pub const SOLUTION_TOL: f64 = 1e-10;
const METRIC_POINTS: usize = 200;
const SAMPLE_POINTS: usize = 50;
const SOLUTIONS: usize = 10;
const LAGRANGIAN_SOLUTIONS: usize = 5;
const LEAVES: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub source: SourceInfo,
    pub checks: Vec<CheckLine>,
    pub passed: bool,
}

struct Suite {
    lines: Vec<CheckLine>,
}

impl Suite {
    fn at_most(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        let passed = value <= tol;
        self.lines.push(CheckLine {
            name: name.into(),
            value,
            tol,
            passed,
        });
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

fn solutions(inst: &Instance, n: usize) -> Result<Vec<Curve>> {
    let inits = inst.initial_conditions(n);
    Ok(par::try_map(&inits, |p| {
        integrate_solution(&inst.ode, p, inst.horizon, SOLUTION_TOL)
    })?)
}

fn metric_checks(s: &mut Suite, inst: &Instance) -> Result<()> {
    let pts = inst.sample_points(METRIC_POINTS);
    let rows = par::try_map(&pts, |p| -> jetflow::Result<[f64; 2]> {
        let g = metric_at(&inst.ode, p)?;
        let f = frame_at(&inst.ode, p)?;
        let mut orth = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                orth = orth.max((inner(&g, &f.e[i], &f.e[j]) - want).abs());
            }
        }
        Ok([(det3(&g) - 1.0).abs(), orth])
    })?;
    s.at_most("metric.det", max_of(rows.iter().map(|r| r[0])), 1e-12);
    s.at_most(
        "metric.orthonormal_frame",
        max_of(rows.iter().map(|r| r[1])),
        1e-12,
    );
    Ok(())
}

fn geodesic_checks(s: &mut Suite, curves: &[Curve], inst: &Instance) -> Result<()> {
    s.at_most(
        "geodesic.solution_residual",
        max_of(curves.iter().map(Curve::max_residual)),
        1e-7,
    );
    // independent route: differenced velocity and metric Christoffel symbols
    let mut fd = 0.0f64;
    for c in curves {
        let (lo, hi) = c.span();
        if hi - lo < 2.0 * GEODESIC_FD_DT {
            continue;
        }
        for smp in &c.samples {
            let r = geodesic_defect_fd(&inst.ode, c, smp.t, GEODESIC_FD_DT)?;
            fd = fd.max(max_of(r.map(f64::abs)));
        }
    }
    s.at_most("geodesic.solution_residual_metric_fd", fd, 1e-5);
    Ok(())
}

fn field_max_rel(
    pts: &[JetPoint],
    f: &Field,
    got: impl Fn(&JetPoint) -> jetflow::Result<f64> + Sync,
) -> Result<f64> {
    let d = par::try_map(pts, |p| -> jetflow::Result<f64> {
        let want = f.value(p.u, p.u1)?;
        Ok((got(p)? - want).abs() / want.abs().max(1.0))
    })?;
    Ok(max_of(d))
}

fn curvature_checks(s: &mut Suite, inst: &Instance) -> Result<()> {
    let ode = &inst.ode;
    let grid = inst.region.jet_points(ode.eps_u1())?;
    let r = &inst.reference;
    let comps: [(&str, &Option<Field>, usize); 3] = [
        ("r1212", &r.r1212, 0),
        ("r1313", &r.r1313, 1),
        ("r2323", &r.r2323, 2),
    ];
    for (name, f, k) in comps {
        if let Some(f) = f {
            let d = field_max_rel(
                &grid,
                f,
                |p| Ok(sectional_curvatures(ode, p)?.as_array()[k]),
            )?;
            s.at_most(format!("curvature.{name}_reference"), d, 1e-10);
        }
    }
    if inst.name() == "kzero" {
        let r = par::try_map(&grid, |p| {
            Ok::<_, jetflow::Error>(sectional_curvatures(ode, p)?.r1212.abs())
        })?;
        s.at_most("curvature.r1212_zero", max_of(r), 1e-10);
    }

    let pts = inst.sample_points(SAMPLE_POINTS);
    let cartan = par::try_map(&pts, |p| cartan_residuals(ode, p, DEFAULT_FD_STEP))?;
    s.at_most(
        "cartan.first_structure",
        max_of(cartan.iter().map(|c| c.first_structure)),
        1e-6,
    );
    s.at_most(
        "cartan.torsion",
        max_of(cartan.iter().map(|c| c.torsion)),
        1e-6,
    );
    s.at_most(
        "cartan.second_structure",
        max_of(cartan.iter().map(|c| c.curvature)),
        1e-5,
    );

    let leaf = par::try_map(&pts, |p| leaf_geometry(ode, p))?;
    // both hold by construction of the frame, so the comparison is exact
    s.at_most(
        "leaf.mean_curvature",
        max_of(leaf.iter().map(|l| l.mean_curvature.abs())),
        0.0,
    );
    s.at_most(
        "leaf.k_ext_plus_quarter",
        max_of(leaf.iter().map(|l| (l.k_ext + 0.25).abs())),
        0.0,
    );
    s.at_most(
        "leaf.gauss_equation",
        max_of(leaf.iter().map(|l| l.gauss_residual)),
        1e-12,
    );
    if let Some(k) = &r.k_int {
        let d = field_max_rel(&pts, k, |p| Ok(leaf_geometry(ode, p)?.k_int))?;
        s.at_most("leaf.k_int_reference", d, 1e-10);
    }
    if inst.name() == "kfamily" {
        let c = converse_certificate(ode, &pts)?;
        s.at_most("converse.ratio_u1_vanishes", c.max_abs_ratio_u1, 0.0);
    }
    Ok(())
}

fn energy_checks(s: &mut Suite, curves: &[Curve], inst: &Instance) -> Result<()> {
    let ode = &inst.ode;
    let named = [("energy", &inst.energy), ("energy_alt", &inst.energy_alt)];
    for (name, e) in named {
        let Some(e) = e else { continue };
        let c = check_energy_candidate(ode, e, &inst.region, DEFAULT_PDE_TOL)?;
        s.at_most(
            format!("{name}.pde_scaled_residual"),
            c.max_scaled_residual,
            DEFAULT_PDE_TOL,
        );
    }
    let Some(e) = &inst.energy else { return Ok(()) };

    // towards lower u every builtin leaf either arrives or folds at u1 = 0;
    // towards higher u some leave the domain (kappa at u1 = 1/sqrt(kappa))
    let target = inst.region.u.0;
    let starts = inst.sample_points(LEAVES);
    let ends = par::try_map(&starts, |p| {
        trace_leaf_partial(ode, (p.u, p.u1), target, SOLUTION_TOL).map(|t| t.end())
    })?;
    let mut leaf_err = 0.0f64;
    for (p, [u, u1]) in starts.iter().zip(ends) {
        let e0 = e.value(p.u, p.u1)?;
        leaf_err = leaf_err.max((e.value(u, u1)? - e0).abs() / e0.abs().max(1.0));
    }
    s.at_most("energy.leaf_trace_endpoint", leaf_err, 1e-8);

    let model = EnergyModel::ClosedForm(e.clone());
    let mut drift = 0.0f64;
    for c in curves {
        let d = conservation_report(ode, &model, c)?;
        drift = drift.max(if inst.name() == "kfamily" {
            d.max_abs_drift
        } else {
            d.relative_drift
        });
    }
    if inst.name() == "kfamily" {
        s.at_most("energy.first_integral_drift", drift, 1e-9);
    } else {
        s.at_most("energy.conservation_drift", drift, 1e-8);
    }
    Ok(())
}

fn lagrangian_checks(s: &mut Suite, curves: &[Curve], inst: &Instance) -> Result<()> {
    let ode = &inst.ode;
    let region = inst.lagrangian_region;
    if let Some(e) = &inst.energy {
        let base = 0.5 * (region.u1.0 + region.u1.1);
        let q = build_lagrangian(&EnergyModel::ClosedForm(e.clone()), base)?;
        let pts = region.jet_points(ode.eps_u1())?;
        let d = par::try_map(&pts, |p| -> jetflow::Result<f64> {
            Ok((energy_function(&q, p)? - e.value(p.u, p.u1)?).abs())
        })?;
        s.at_most("lagrangian.quadrature_energy_function", max_of(d), 1e-10);
        let t = dh_identity_check(ode, &q, &region, Route::Partials)?;
        s.at_most("lagrangian.quadrature_dh_identity", t.max_defect, 1e-6);
    }
    if let Some(l) = &inst.lagrangian {
        let l = LagrangianModel::ClosedForm(l.clone());
        let few = &curves[..LAGRANGIAN_SOLUTIONS.min(curves.len())];
        let ad = par::try_map(few, |c| el_residual(ode, &l, c))?;
        s.at_most("lagrangian.closed_form_el_ad", max_of(ad), 1e-7);
        let fd = par::try_map(few, |c| el_residual_fd(ode, &l, c, EL_FD_STEP))?;
        s.at_most("lagrangian.closed_form_el_fd", max_of(fd), 1e-6);
        for (route, name) in [
            (Route::Partials, "partials"),
            (Route::FiniteDifference, "finite_difference"),
        ] {
            let t = dh_identity_check(ode, &l, &region, route)?;
            s.at_most(format!("lagrangian.dh_identity_{name}"), t.max_defect, 1e-6);
        }
    }
    Ok(())
}

/// Every check for one instance, in a fixed order.
pub fn run_checks(inst: &Instance) -> Result<Vec<CheckLine>> {
    let mut s = Suite { lines: Vec::new() };
    let curves = solutions(inst, SOLUTIONS)?;
    metric_checks(&mut s, inst)?;
    geodesic_checks(&mut s, &curves, inst)?;
    curvature_checks(&mut s, inst)?;
    energy_checks(&mut s, &curves, inst)?;
    lagrangian_checks(&mut s, &curves, inst)?;
    Ok(s.lines)
}

pub fn run(a: VerifyArgs) -> Result<bool> {
    let src = source::builtin(&a.builtin, &a.params, a.rho.clone(), a.k.clone())?;
    let inst = src.instance.as_ref().expect("builtin source");
    let checks = run_checks(inst)?;
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport {
        source: src.describe,
        checks,
        passed,
    };
    match a.format {
        ReportFormat::Json => output::json(&a.out, &report)?,
        ReportFormat::Text => {
            let mut w = output::open(&a.out)?;
            write_text(&mut w, &report)?;
            w.flush()?;
        }
    }
    Ok(passed)
}

fn write_text(w: &mut dyn Write, r: &VerifyReport) -> std::io::Result<()> {
    let name = r.source.builtin.as_deref().unwrap_or("?");
    let params: Vec<String> = r
        .source
        .params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    writeln!(w, "builtin {name} [{}]", params.join(", "))?;
    writeln!(w, "phi = {}", r.source.phi)?;
    for c in &r.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(
            w,
            "{tag} {:<42} {:>12.3e} <= {:.0e}",
            c.name, c.value, c.tol
        )?;
    }
    let failed = r.checks.iter().filter(|c| !c.passed).count();
    writeln!(w, "{} checks, {failed} failed", r.checks.len())
}
