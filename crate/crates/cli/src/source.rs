use std::collections::BTreeMap;

use anyhow::Result;
use jetflow::expr::{parse, Params, PHASE_VARS};
use jetflow::geometry::{OdeRhs, DEFAULT_EPS_U1};
use jetflow::registry::{instantiate, Instance, Sources};
use jetflow::sampling::Region;
use jetflow::Error;
use serde::Serialize;

use crate::args::{GridArgs, SourceArgs};
use crate::usage;

pub const EPS_ENV: &str = "JETFLOW_EPS_U1";

/// Grid used for `--phi` sources when no range is given.
pub const DEFAULT_REGION: Region = Region::square((-1.0, 1.0), (0.1, 1.0), 20);

pub struct Source {
    pub ode: OdeRhs,
    pub instance: Option<Instance>,
    pub describe: SourceInfo,
}

/// How the equation was specified, echoed into JSON reports.
#[derive(Debug, Clone, Serialize)]
pub struct SourceInfo {
    pub builtin: Option<String>,
    pub phi: String,
    pub params: BTreeMap<String, f64>,
    pub eps_u1: f64,
}

pub fn eps_u1() -> Result<f64> {
    match std::env::var(EPS_ENV) {
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(usage(format!(
                "{EPS_ENV} must be a positive number, got `{text}`"
            ))),
        },
        Err(_) => Ok(DEFAULT_EPS_U1),
    }
}

pub fn collect_params(pairs: &[(String, f64)]) -> Result<Params> {
    let mut p = Params::new();
    for (k, v) in pairs {
        if p.contains(k) {
            return Err(usage(format!("parameter `{k}` given twice")));
        }
        p.insert(k, *v).map_err(Error::from)?;
    }
    Ok(p)
}

pub fn builtin(
    name: &str,
    pairs: &[(String, f64)],
    rho: Option<String>,
    k: Option<String>,
) -> Result<Source> {
    let params = collect_params(pairs)?;
    let inst = instantiate(name, &params, &Sources { rho, k })?.with_eps_u1(eps_u1()?);
    let describe = SourceInfo {
        builtin: Some(name.to_string()),
        phi: inst.ode.describe(),
        params: inst
            .params
            .iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        eps_u1: inst.ode.eps_u1(),
    };
    Ok(Source {
        ode: inst.ode.clone(),
        instance: Some(inst),
        describe,
    })
}

pub fn resolve(a: &SourceArgs) -> Result<Source> {
    match (&a.builtin, &a.phi) {
        (Some(name), None) => builtin(name, &a.params, a.rho.clone(), a.k.clone()),
        (None, Some(text)) => {
            if a.rho.is_some() || a.k.is_some() {
                return Err(usage("--rho and --K only apply to builtins"));
            }
            let expr = parse(text, PHASE_VARS).map_err(Error::from)?;
            let params = collect_params(&a.params)?;
            let used = expr.params();
            for (k, _) in params.iter() {
                if !used.iter().any(|u| u == k) {
                    return Err(Error::UnknownParam {
                        entry: "--phi".into(),
                        param: k.to_string(),
                    }
                    .into());
                }
            }
            if let Some(missing) = used.iter().find(|u| !params.contains(u)) {
                return Err(usage(format!(
                    "--phi uses parameter `{missing}`; pass --param {missing}=VALUE"
                )));
            }
            let ode = OdeRhs::from_expr(expr, params.clone()).with_eps_u1(eps_u1()?);
            let describe = SourceInfo {
                builtin: None,
                phi: ode.describe(),
                params: params.iter().map(|(k, v)| (k.to_string(), v)).collect(),
                eps_u1: ode.eps_u1(),
            };
            Ok(Source {
                ode,
                instance: None,
                describe,
            })
        }
        _ => Err(usage("give exactly one of --builtin or --phi")),
    }
}

/// Grid from the flags, falling back to `base` for unset values.
pub fn region(grid: &GridArgs, base: Region) -> Result<Region> {
    let mut r = base;
    if let Some(u) = grid.u_range {
        r.u = u;
    }
    if let Some(u1) = grid.u1_range {
        r.u1 = u1;
    }
    if let Some(n) = grid.n {
        if n == 0 {
            return Err(usage("--n must be positive"));
        }
        r.n_u = n;
        r.n_u1 = n;
    }
    Ok(r)
}
