use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "jetflow",
    version,
    about = "Geometry of u'' = phi(u, u') on the first jet bundle"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the built-in equations as JSON.
    List(ListArgs),
    /// Metric, frame, connection, curvatures and leaf geometry at one point (JSON).
    Analyze(AnalyzeArgs),
    /// Integrate a solution or a geodesic and write the curve as CSV.
    Geodesic(GeodesicArgs),
    /// Energy checks, leaf tracing and conservation along a trajectory (JSON).
    Energy(EnergyArgs),
    /// Lagrangian grid (CSV) or Euler–Lagrange report (JSON).
    Lagrangian(LagrangianArgs),
    /// Sectional and leaf curvatures on a grid (CSV).
    CurvatureMap(CurvatureMapArgs),
    /// Run the full check suite for one builtin; exits 1 on any failure.
    Verify(VerifyArgs),
}

/// Where `phi` comes from: a builtin with parameters, or an expression.
#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["builtin", "phi"])))]
pub struct SourceArgs {
    /// Name of a built-in equation (see `jetflow list`).
    #[arg(long, allow_hyphen_values = true)]
    pub builtin: Option<String>,
    /// Right-hand side as an expression in u and u1.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Parameter value, repeatable. Unknown names are errors.
    #[arg(long = "param", allow_hyphen_values = true, value_name = "KEY=VALUE", value_parser = parse_kv)]
    pub params: Vec<(String, f64)>,
    /// Density rho(u) for `--builtin gravity`.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<String>,
    /// Coefficient K(u) for `--builtin kfamily`.
    #[arg(long = "K", allow_hyphen_values = true, value_name = "EXPR")]
    pub k: Option<String>,
}

/// Sampling grid; unset values fall back to the builtin's documented region.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true, value_name = "LO,HI", value_parser = parse_pair)]
    pub u_range: Option<(f64, f64)>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO,HI", value_parser = parse_pair)]
    pub u1_range: Option<(f64, f64)>,
    /// Nodes per axis.
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, allow_hyphen_values = true, value_name = "X,U,U1", value_parser = parse_triple)]
    pub point: [f64; 3],
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveChoice {
    Solution,
    Geodesic,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(
        long,
        allow_hyphen_values = true,
        value_enum,
        default_value = "solution"
    )]
    pub kind: CurveChoice,
    /// Initial point.
    #[arg(long, allow_hyphen_values = true, value_name = "X,U,U1", value_parser = parse_triple)]
    pub init: [f64; 3],
    /// End of the x interval for solutions.
    #[arg(long, allow_hyphen_values = true)]
    pub x_end: Option<f64>,
    /// Parameter length for geodesics.
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    /// Initial coordinate velocity of a geodesic; defaults to the prolongation tangent.
    #[arg(long, allow_hyphen_values = true, value_name = "VX,VU,VU1", value_parser = parse_triple)]
    pub tangent: Option<[f64; 3]>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Candidate energy E(u, u1); defaults to the builtin's closed form.
    #[arg(long, allow_hyphen_values = true)]
    pub energy_expr: Option<String>,
    /// Without a closed form, label leaves by their u1 at this section.
    #[arg(long, allow_hyphen_values = true)]
    pub u_ref: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1e-9)]
    pub pde_tol: f64,
    /// Trace the leaf through every grid node to this u.
    #[arg(long, allow_hyphen_values = true)]
    pub trace_to: Option<f64>,
    /// CSV file for the traced leaves.
    #[arg(long, allow_hyphen_values = true)]
    pub leaves: Option<PathBuf>,
    /// Initial point of a trajectory for the conservation report.
    #[arg(long, allow_hyphen_values = true, value_name = "X,U,U1", value_parser = parse_triple)]
    pub traj_init: Option<[f64; 3]>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_end: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct LagrangianArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Energy to build L from; defaults to the builtin's closed form.
    #[arg(long, allow_hyphen_values = true)]
    pub energy_expr: Option<String>,
    /// Build L by quadrature even when a closed form is available.
    #[arg(long)]
    pub quadrature: bool,
    /// Lower limit of the u1 integral in the quadrature construction.
    #[arg(long, allow_hyphen_values = true)]
    pub u1_base: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, allow_hyphen_values = true, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CurvatureMapArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub builtin: String,
    #[arg(long = "param", allow_hyphen_values = true, value_name = "KEY=VALUE", value_parser = parse_kv)]
    pub params: Vec<(String, f64)>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<String>,
    #[arg(long = "K", allow_hyphen_values = true, value_name = "EXPR")]
    pub k: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_enum, default_value = "text")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got `{s}`"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_number(p)?;
    }
    Ok(out)
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    parse_list::<3>(s)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let [a, b] = parse_list::<2>(s)?;
    Ok((a, b))
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty parameter name in `{s}`"));
    }
    Ok((k.to_string(), parse_number(v)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers() {
        assert_eq!(parse_triple("0, 1.5,-2").unwrap(), [0.0, 1.5, -2.0]);
        assert!(parse_triple("0,1").is_err());
        assert!(parse_triple("0,1,nan").is_err());
        assert_eq!(parse_pair("-1,1").unwrap(), (-1.0, 1.0));
        assert_eq!(parse_kv("kappa=2").unwrap(), ("kappa".into(), 2.0));
        assert!(parse_kv("kappa").is_err());
        assert!(parse_kv("=1").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
