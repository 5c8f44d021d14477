use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{Context, Result};
use jetflow::dynamics::{
    integrate_geodesic, integrate_solution, integrate_solution_segments, Curve,
};
use jetflow::energy::{
    check_energy_candidate, conservation_over, trace_leaf_partial, Conservation, EnergyCheck,
    EnergyModel,
};
use jetflow::expr::{parse, PHASE_VARS};
use jetflow::field::{BoundExpr, Field};
use jetflow::geometry::{
    connection_forms_at, det3, frame_at, leaf_geometry, metric_at, sectional_curvatures, ConnForms,
    CurvTriple, FrameData, JetPoint, LeafGeom, Mat3, PhiJet, CONVERSE_THRESHOLD,
};
use jetflow::integrate::DEFAULT_TOL;
use jetflow::lagrangian::{
    build_lagrangian, dh_identity_check, el_residual_at, energy_function, lagrangian_grid,
    DhIdentityReport, LagrangianModel, Route, LAGRANGIAN_CSV_HEADER,
};
use jetflow::par;
use jetflow::registry::ENTRIES;
use jetflow::sampling::Region;
use jetflow::table;
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, CurvatureMapArgs, CurveChoice, EnergyArgs, Format, GeodesicArgs, LagrangianArgs,
    ListArgs,
};
use crate::output;
use crate::source::{self, Source, SourceInfo, DEFAULT_REGION};
use crate::usage;

pub const CURVATURE_CSV_HEADER: [&str; 6] = ["u", "u1", "r1212", "r1313", "r2323", "k_int"];
pub const LEAVES_CSV_HEADER: [&str; 3] = ["leaf", "u", "u1"];

pub fn list(a: ListArgs) -> Result<bool> {
    output::json(&a.out, &ENTRIES)?;
    Ok(true)
}

#[derive(Serialize)]
struct PointOut {
    x: f64,
    u: f64,
    u1: f64,
}

#[derive(Serialize)]
struct Converse {
    ratio_u1: f64,
    holds: bool,
}

#[derive(Serialize)]
struct ReferenceOut {
    r1212: Option<f64>,
    r1313: Option<f64>,
    r2323: Option<f64>,
    k_int: Option<f64>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    source: SourceInfo,
    point: PointOut,
    phi: PhiJet,
    metric: Mat3,
    det_metric: f64,
    frame: FrameData,
    connection: ConnForms,
    curvatures: CurvTriple,
    leaf: LeafGeom,
    converse_hypothesis: Converse,
    reference: Option<ReferenceOut>,
}

pub fn analyze(a: AnalyzeArgs) -> Result<bool> {
    let src = source::resolve(&a.source)?;
    let [x, u, u1] = a.point;
    let p = JetPoint::new(x, u, u1);
    let ode = &src.ode;
    ode.check(&p)?;
    let jet = ode.jet_at(&p)?;
    let metric = metric_at(ode, &p)?;
    let ratio = jet.ratio_u1(u1);
    let reference = match &src.instance {
        Some(inst) => {
            let eval = |f: &Option<Field>| f.as_ref().map(|f| f.value(u, u1)).transpose();
            let r = &inst.reference;
            Some(ReferenceOut {
                r1212: eval(&r.r1212)?,
                r1313: eval(&r.r1313)?,
                r2323: eval(&r.r2323)?,
                k_int: eval(&r.k_int)?,
            })
        }
        None => None,
    };
    let report = AnalyzeReport {
        point: PointOut { x, u, u1 },
        phi: jet,
        det_metric: det3(&metric),
        metric,
        frame: frame_at(ode, &p)?,
        connection: connection_forms_at(ode, &p)?,
        curvatures: sectional_curvatures(ode, &p)?,
        leaf: leaf_geometry(ode, &p)?,
        converse_hypothesis: Converse {
            ratio_u1: ratio,
            holds: ratio.abs() > CONVERSE_THRESHOLD,
        },
        reference,
        source: src.describe,
    };
    output::json(&a.out, &report)?;
    Ok(true)
}

pub fn geodesic(a: GeodesicArgs) -> Result<bool> {
    let src = source::resolve(&a.source)?;
    let [x, u, u1] = a.init;
    let init = JetPoint::new(x, u, u1);
    let curve = match a.kind {
        CurveChoice::Solution => {
            let x_end = a
                .x_end
                .ok_or_else(|| usage("--kind solution needs --x-end"))?;
            integrate_solution(&src.ode, &init, x_end, a.tol)?
        }
        CurveChoice::Geodesic => {
            let t_end = a
                .t_end
                .ok_or_else(|| usage("--kind geodesic needs --t-end"))?;
            let tangent = match a.tangent {
                Some(v) => v,
                None => [1.0, u1, src.ode.value(u, u1)?],
            };
            integrate_geodesic(&src.ode, &init, tangent, t_end, a.tol)?
        }
    };
    if let Some(h) = &curve.halt {
        eprintln!("note: curve stopped early: {h:?}");
    }
    let mut w = output::open(&a.out)?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    Ok(true)
}

#[derive(Serialize)]
struct LeafSummary {
    start: [f64; 2],
    end: Option<[f64; 2]>,
    fold: Option<f64>,
    /// `|E(end) - E(start)|` for a closed-form energy.
    invariant_change: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ConservationOut {
    init: [f64; 3],
    x_end: f64,
    /// Where the trajectory crossed `u1 = 0`.
    crossings: Vec<f64>,
    #[serde(flatten)]
    drift: Conservation,
}

#[derive(Serialize)]
struct EnergyReport {
    source: SourceInfo,
    energy: String,
    check: Option<EnergyCheck>,
    leaves: Option<Vec<LeafSummary>>,
    conservation: Option<ConservationOut>,
}

fn parse_field(text: &str, src: &Source) -> Result<Field> {
    let expr = parse(text, PHASE_VARS).map_err(jetflow::Error::from)?;
    let params = match &src.instance {
        Some(inst) => inst.params.clone(),
        None => src.ode_params(),
    };
    Ok(BoundExpr::new(expr, params).into_field())
}

impl Source {
    fn ode_params(&self) -> jetflow::expr::Params {
        let mut p = jetflow::expr::Params::new();
        for (k, v) in &self.describe.params {
            p.insert(k, *v).expect("validated on input");
        }
        p
    }

    fn default_region(&self) -> Region {
        self.instance
            .as_ref()
            .map(|i| i.region)
            .unwrap_or(DEFAULT_REGION)
    }
}

fn write_leaves(
    path: &std::path::Path,
    traces: &[(usize, Vec<[f64; 2]>)],
    e: Option<&Field>,
) -> Result<()> {
    let mut rows = Vec::new();
    for (i, samples) in traces {
        for &[u, u1] in samples {
            let mut row = vec![*i as f64, u, u1];
            if let Some(e) = e {
                row.push(e.value(u, u1)?);
            }
            rows.push(row);
        }
    }
    let mut header = LEAVES_CSV_HEADER.to_vec();
    if e.is_some() {
        header.push("E");
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    table::write_csv(&mut w, &header, &rows)?;
    w.flush()?;
    Ok(())
}

pub fn energy(a: EnergyArgs) -> Result<bool> {
    let src = source::resolve(&a.source)?;
    let ode = &src.ode;
    let closed = match &a.energy_expr {
        Some(text) => Some(parse_field(text, &src)?),
        None => src.instance.as_ref().and_then(|i| i.energy.clone()),
    };
    let model = match (&closed, a.u_ref) {
        (Some(e), _) => EnergyModel::ClosedForm(e.clone()),
        (None, Some(u_ref)) => EnergyModel::NumericLabel { u_ref },
        (None, None) => {
            return Err(usage(
                "no closed-form energy: pass --energy-expr or --u-ref",
            ))
        }
    };
    let region = source::region(&a.grid, src.default_region())?;

    let check = match &closed {
        Some(e) => Some(check_energy_candidate(ode, e, &region, a.pde_tol)?),
        None => None,
    };

    let leaves = match a.trace_to {
        Some(target) => {
            let starts = region.points(ode.eps_u1())?;
            let traces = par::map(&starts, |&(u, u1)| {
                trace_leaf_partial(ode, (u, u1), target, DEFAULT_TOL)
            });
            let mut summaries = Vec::with_capacity(starts.len());
            let mut kept = Vec::new();
            for (i, (&(u, u1), t)) in starts.iter().zip(traces).enumerate() {
                summaries.push(match t {
                    Ok(t) => {
                        let end = t.end();
                        let change = match &closed {
                            Some(e) => Some((e.value(end[0], end[1])? - e.value(u, u1)?).abs()),
                            None => None,
                        };
                        let s = LeafSummary {
                            start: [u, u1],
                            end: Some(end),
                            fold: t.fold,
                            invariant_change: change,
                            error: None,
                        };
                        kept.push((i, t.samples));
                        s
                    }
                    Err(err) => LeafSummary {
                        start: [u, u1],
                        end: None,
                        fold: None,
                        invariant_change: None,
                        error: Some(err.to_string()),
                    },
                });
            }
            if let Some(path) = &a.leaves {
                write_leaves(path, &kept, closed.as_ref())?;
            }
            Some(summaries)
        }
        None => {
            if a.leaves.is_some() {
                return Err(usage("--leaves needs --trace-to"));
            }
            None
        }
    };

    let conservation = match a.traj_init {
        Some([x, u, u1]) => {
            let x_end = a.x_end.ok_or_else(|| usage("--traj-init needs --x-end"))?;
            let segments: Vec<Curve> =
                integrate_solution_segments(ode, &JetPoint::new(x, u, u1), x_end, a.tol)?;
            let crossings = segments
                .iter()
                .filter_map(|c| {
                    c.halt
                        .as_ref()
                        .map(|jetflow::dynamics::Halt::SingularCrossing { at }| *at)
                })
                .collect();
            Some(ConservationOut {
                init: [x, u, u1],
                x_end,
                crossings,
                drift: conservation_over(ode, &model, &segments)?,
            })
        }
        None => None,
    };

    let passed = check.as_ref().is_none_or(|c| c.passed);
    let energy = match &model {
        EnergyModel::ClosedForm(e) => e.describe(),
        EnergyModel::NumericLabel { u_ref } => format!("leaf label at u = {u_ref}"),
    };
    let report = EnergyReport {
        source: src.describe,
        energy,
        check,
        leaves,
        conservation,
    };
    output::json(&a.out, &report)?;
    Ok(passed)
}

#[derive(Serialize)]
struct DhIdentityOut {
    partials: DhIdentityReport,
    finite_difference: DhIdentityReport,
}

#[derive(Serialize)]
struct LagrangianReport {
    source: SourceInfo,
    lagrangian: String,
    region: Region,
    dh_identity: DhIdentityOut,
    /// `max |u1 L_uu1 + phi L_u1u1 - L_u|` on the grid.
    max_el_residual: f64,
    /// `max |u1 L_u1 - L - E|` on the grid, when `E` is known.
    max_energy_mismatch: Option<f64>,
}

pub fn lagrangian(a: LagrangianArgs) -> Result<bool> {
    let src = source::resolve(&a.source)?;
    let ode = &src.ode;
    let base = src
        .instance
        .as_ref()
        .map(|i| i.lagrangian_region)
        .unwrap_or(DEFAULT_REGION);
    let region = source::region(&a.grid, base)?;
    let energy = match &a.energy_expr {
        Some(text) => Some(parse_field(text, &src)?),
        None => src.instance.as_ref().and_then(|i| i.energy.clone()),
    };
    let closed = src.instance.as_ref().and_then(|i| i.lagrangian.clone());
    let model = match (closed, a.quadrature || a.energy_expr.is_some()) {
        (Some(l), false) => LagrangianModel::ClosedForm(l),
        _ => {
            let e = energy
                .clone()
                .ok_or_else(|| usage("no energy to build L from: pass --energy-expr"))?;
            let u1_base = a.u1_base.unwrap_or(0.5 * (region.u1.0 + region.u1.1));
            build_lagrangian(&EnergyModel::ClosedForm(e), u1_base)?
        }
    };
    match a.format {
        Format::Csv => {
            let rows = lagrangian_grid(ode, &model, &region)?;
            output::csv(&a.out, &LAGRANGIAN_CSV_HEADER, &rows)?;
        }
        Format::Json => {
            let pts = region.points(ode.eps_u1())?;
            let el = par::try_map(&pts, |&(u, u1)| el_residual_at(ode, &model, u, u1))?;
            let max_energy_mismatch = match &energy {
                Some(e) => {
                    let d = par::try_map(&pts, |&(u, u1)| -> jetflow::Result<f64> {
                        Ok((energy_function(&model, &JetPoint::new(0.0, u, u1))?
                            - e.value(u, u1)?)
                        .abs())
                    })?;
                    Some(d.into_iter().fold(0.0, f64::max))
                }
                None => None,
            };
            let report = LagrangianReport {
                lagrangian: format!("{model:?}"),
                region,
                dh_identity: DhIdentityOut {
                    partials: dh_identity_check(ode, &model, &region, Route::Partials)?,
                    finite_difference: dh_identity_check(
                        ode,
                        &model,
                        &region,
                        Route::FiniteDifference,
                    )?,
                },
                max_el_residual: el.into_iter().fold(0.0, |m, v| m.max(v.abs())),
                max_energy_mismatch,
                source: src.describe,
            };
            output::json(&a.out, &report)?;
        }
    }
    Ok(true)
}

pub fn curvature_rows(src: &Source, region: &Region) -> Result<Vec<Vec<f64>>> {
    let ode = &src.ode;
    let pts = region.points(ode.eps_u1())?;
    Ok(par::try_map(
        &pts,
        |&(u, u1)| -> jetflow::Result<Vec<f64>> {
            let p = JetPoint::new(0.0, u, u1);
            let c = sectional_curvatures(ode, &p)?;
            let k = leaf_geometry(ode, &p)?.k_int;
            Ok(vec![u, u1, c.r1212, c.r1313, c.r2323, k])
        },
    )?)
}

pub fn curvature_map(a: CurvatureMapArgs) -> Result<bool> {
    let src = source::resolve(&a.source)?;
    let region = source::region(&a.grid, src.default_region())?;
    let rows = curvature_rows(&src, &region)?;
    output::csv(&a.out, &CURVATURE_CSV_HEADER, &rows)?;
    Ok(true)
}
