//! Argument handling, dispatch and report formatting for the `grassdeg` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use grassdeg::edeg::{
    edeg_general, edeg_lines_asymptotic, edeg_lines_quadrature, edeg_upper_bound, epsilon_k,
    laplace_validate, log_edeg_leading, log_edeg_lines_asymptotic, EdegResult, GeneralMethod, LaplaceProblem,
};
use grassdeg::incidence::{edeg24_transversal_mc, rig_union_of_lines_mc};
use grassdeg::mc::{
    alpha_complex_exact_f64, alpha_complex_mc, alpha_mc, density_gof, density_normalization,
    schubert_ratio_exact, schubert_ratio_mc, vitale_check, vitale_closed_form,
};
use grassdeg::specfun::vol_grassmann_real;
use grassdeg::zonoid::{
    build_radial_profile_2, log_vol_c_quadrature, vol_c_vitale_mc, Differentiation, DEFAULT_PROFILE_GRID,
    DEFAULT_QUAD_POINTS,
};
use grassdeg::{Error, Estimate, McConfig, RadialProfile2, DEFAULT_SEED};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "grassdeg", version, about = "Expected degrees of real Grassmannians")]
pub struct Cli {
    /// Master seed of every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads for Monte Carlo runs (results do not depend on it).
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report file (for `profile-build`: the profile file). Stdout otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EdegCliMethod {
    /// Radial-function quadrature (k = 2 or n − k = 2).
    Quadrature,
    /// Segre zonoid volume by Vitale Monte Carlo (k(n−k) ≤ 36).
    ZonoidVitale,
    /// Counting real transversals (only (2,4)).
    Transversal,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VolumeMethod {
    Quadrature,
    Vitale,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Load the radial profile from this file instead of building it.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Grid size when the profile is built on the fly.
    #[arg(long, default_value_t = DEFAULT_PROFILE_GRID)]
    pub grid: usize,
    /// Total Gauss–Legendre nodes (32 per panel).
    #[arg(long, default_value_t = DEFAULT_QUAD_POINTS)]
    pub quad_points: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected degree of G(k,n).
    Edeg {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = EdegCliMethod::Quadrature)]
        method: EdegCliMethod,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Expected degree of the Grassmannian of lines G(2, n+1) with its asymptotic.
    EdegLines {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Average scaling factor α(k,m), real or complex.
    Alpha {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long)]
        complex: bool,
    },
    /// Mean number of real lines meeting four random lines.
    Transversals {
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Transversals to four unions of random lines.
    Rig {
        /// Comma-separated multiplicities r1,r2,r3,r4.
        #[arg(long)]
        r: Multiplicities,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Volume of the Segre zonoid C(k,m).
    ZonoidVolume {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = VolumeMethod::Quadrature)]
        method: VolumeMethod,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Tabulate the radial function of D(2) and write it to --out.
    ProfileBuild {
        #[arg(long, default_value_t = DEFAULT_PROFILE_GRID)]
        grid: usize,
        /// Use finite differences instead of the analytic gradient.
        #[arg(long)]
        numeric: bool,
    },
    /// Principal-angle density: normalization and goodness of fit.
    DensityCheck {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Volume ratio of the special Schubert variety.
    SchubertRatio {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Also run the tube Monte Carlo estimate.
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// E|det G| for a d×d Gaussian matrix against its closed form.
    Vitale {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Laplace-method leading terms against quadrature.
    LaplaceDemo {
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Upper bound and growth exponents for G(k,n).
    Bounds {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
    },
}

/// Four positive integers given as `r1,r2,r3,r4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplicities(pub [usize; 4]);

impl std::str::FromStr for Multiplicities {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}")))
            .collect::<Result<_, _>>()?;
        let arr: [usize; 4] = parts
            .try_into()
            .map_err(|v: Vec<usize>| format!("expected four values, got {}", v.len()))?;
        if arr.contains(&0) {
            return Err("multiplicities must be positive".into());
        }
        Ok(Multiplicities(arr))
    }
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: u32,
    pub tool_version: String,
    pub quantity: String,
    pub params: BTreeMap<String, Value>,
    /// `None` when only the logarithm is representable.
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_value: Option<f64>,
    pub stderr: f64,
    pub n_samples: u64,
    pub degenerate_count: u64,
    pub seed: u64,
    pub method: String,
    pub runtime_ms: u64,
}

impl RunRecord {
    fn new(quantity: &str, params: &Value, method: &str, seed: u64) -> Self {
        let params = params
            .as_object()
            .map(|m| m.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
            .unwrap_or_default();
        RunRecord {
            version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            quantity: quantity.to_string(),
            params,
            value: None,
            log_value: None,
            stderr: 0.0,
            n_samples: 0,
            degenerate_count: 0,
            seed,
            method: method.to_string(),
            runtime_ms: 0,
        }
    }

    fn exact(quantity: &str, params: &Value, method: &str, value: f64) -> Self {
        RunRecord { value: Some(value), ..RunRecord::new(quantity, params, method, 0) }
    }

    fn from_estimate(quantity: &str, params: &Value, e: &Estimate) -> Self {
        RunRecord {
            value: Some(e.value),
            stderr: e.stderr,
            n_samples: e.n_samples,
            degenerate_count: e.degenerate_count,
            ..RunRecord::new(quantity, params, &e.method, e.seed)
        }
    }

    fn from_edeg(params: &Value, r: &EdegResult, seed: u64) -> Self {
        let (value, stderr) = match (r.value(), r.error_estimate()) {
            (Ok(v), Ok(e)) => (Some(v), e),
            _ => (None, 0.0),
        };
        RunRecord {
            value,
            log_value: Some(r.log_value.ln()),
            stderr,
            n_samples: r.n_samples,
            degenerate_count: r.degenerate_count,
            ..RunRecord::new("edeg", params, r.method.as_str(), if r.n_samples > 0 { seed } else { 0 })
        }
    }
}

/// Failure of a run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Arguments outside what the methods accept (exit 2).
    Usage(String),
    /// A numerical routine failed (exit 1).
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. } | Error::Dimension(_) | Error::Unsupported(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

fn load_profile(args: &ProfileArgs) -> Result<RadialProfile2, CliError> {
    match &args.profile {
        Some(p) => Ok(RadialProfile2::from_json(&fs::read_to_string(p)?)?),
        None => Ok(build_radial_profile_2(args.grid, Differentiation::Analytic)?),
    }
}

fn profile_params(args: &ProfileArgs) -> Value {
    match &args.profile {
        Some(p) => json!({ "profile": p.display().to_string(), "quad_points": args.quad_points }),
        None => json!({ "grid": args.grid, "quad_points": args.quad_points }),
    }
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

/// Runs the parsed command and returns its records (without writing them).
pub fn execute(cli: &Cli) -> Result<Vec<RunRecord>, CliError> {
    let cfg = McConfig::new(cli.seed, cli.workers);
    let seed = cli.seed;
    let start = Instant::now();
    let mut records = match &cli.command {
        Command::Edeg { k, n, method, samples, profile } => {
            let (k, n) = (*k, *n);
            let base = json!({ "k": k, "n": n });
            match method {
                EdegCliMethod::Quadrature => {
                    let p = load_profile(profile)?;
                    let r = edeg_general(
                        k,
                        n,
                        GeneralMethod::ZonoidQuadrature { profile: &p, quad_points: profile.quad_points },
                    )?;
                    vec![RunRecord::from_edeg(&merge(base, profile_params(profile)), &r, seed)]
                }
                EdegCliMethod::ZonoidVitale => {
                    let r = edeg_general(k, n, GeneralMethod::ZonoidVitale { cfg, samples: *samples })?;
                    vec![RunRecord::from_edeg(&merge(base, json!({ "samples": samples })), &r, seed)]
                }
                EdegCliMethod::Transversal => {
                    if (k, n) != (2, 4) {
                        return Err(CliError::Usage("transversal counting supports only k = 2, n = 4".into()));
                    }
                    let e = edeg24_transversal_mc(cfg, *samples)?;
                    vec![RunRecord::from_estimate("edeg", &merge(base, json!({ "samples": samples })), &e)]
                }
                EdegCliMethod::UpperBound => {
                    vec![RunRecord::from_edeg(&base, &edeg_upper_bound(k, n)?, seed)]
                }
            }
        }
        Command::EdegLines { n, profile } => {
            let p = load_profile(profile)?;
            let params = merge(json!({ "n": n }), profile_params(profile));
            let q = edeg_lines_quadrature(*n, &p, profile.quad_points)?;
            let mut rec = RunRecord::from_edeg(&params, &q, seed);
            rec.quantity = "edeg_lines".into();
            let log_asym = log_edeg_lines_asymptotic(*n)?.ln();
            let mut asym = RunRecord::new("edeg_lines", &params, "asymptotic", 0);
            asym.log_value = Some(log_asym);
            asym.value = edeg_lines_asymptotic(*n).ok().filter(|_| q.is_direct());
            let mut ratio = RunRecord::exact(
                "edeg_lines_ratio_to_asymptotic",
                &params,
                "quadrature",
                (q.log_value.ln() - log_asym).exp(),
            );
            ratio.stderr = q.rel_error * ratio.value.unwrap_or(0.0);
            vec![rec, asym, ratio]
        }
        Command::Alpha { k, m, samples, complex } => {
            let params = json!({ "k": k, "m": m, "samples": samples });
            if *complex {
                let mut out = vec![RunRecord::from_estimate("alpha_complex", &params, &alpha_complex_mc(*k, *m, cfg, *samples)?)];
                if k * m <= 20 {
                    out.push(RunRecord::exact(
                        "alpha_complex",
                        &json!({ "k": k, "m": m }),
                        "exact",
                        alpha_complex_exact_f64(*k, *m)?,
                    ));
                }
                out
            } else {
                vec![RunRecord::from_estimate("alpha", &params, &alpha_mc(*k, *m, cfg, *samples)?)]
            }
        }
        Command::Transversals { samples } => {
            let e = edeg24_transversal_mc(cfg, *samples)?;
            vec![RunRecord::from_estimate("transversals", &json!({ "samples": samples }), &e)]
        }
        Command::Rig { r, samples } => {
            let e = rig_union_of_lines_mc(r.0, cfg, *samples)?;
            vec![RunRecord::from_estimate("rig", &json!({ "r": r.0, "samples": samples }), &e)]
        }
        Command::ZonoidVolume { k, m, method, samples, profile } => match method {
            VolumeMethod::Quadrature => {
                if *k != 2 {
                    return Err(CliError::Usage("quadrature volume needs k = 2".into()));
                }
                let p = load_profile(profile)?;
                let q = log_vol_c_quadrature(*m, &p, profile.quad_points)?;
                let params = merge(json!({ "k": k, "m": m }), profile_params(profile));
                let mut rec = RunRecord::exact("zonoid_volume", &params, "quadrature", q.value());
                rec.log_value = Some(q.log_value.ln());
                rec.stderr = q.abs_error();
                vec![rec]
            }
            VolumeMethod::Vitale => {
                let e = vol_c_vitale_mc(*k, *m, cfg, *samples)?;
                vec![RunRecord::from_estimate("zonoid_volume", &json!({ "k": k, "m": m, "samples": samples }), &e)]
            }
        },
        Command::ProfileBuild { grid, numeric } => {
            let path = cli
                .out
                .as_ref()
                .ok_or_else(|| CliError::Usage("profile-build needs --out PATH".into()))?;
            let diff = if *numeric { Differentiation::Numeric } else { Differentiation::Analytic };
            let p = build_radial_profile_2(*grid, diff)?;
            fs::write(path, p.to_json())?;
            let params = json!({ "grid": grid, "differentiation": if *numeric { "numeric" } else { "analytic" } });
            vec![RunRecord::exact("radial_profile_r_at_pi_4", &params, "profile", p.eval(std::f64::consts::FRAC_PI_4))]
        }
        Command::DensityCheck { k, l, n, samples } => {
            let mut out = Vec::new();
            let params = json!({ "k": k, "l": l, "n": n });
            if *k <= 3 {
                out.push(RunRecord::exact(
                    "density_normalization",
                    &params,
                    "gauss_legendre",
                    density_normalization(*k, *l, *n, 48)?,
                ));
            }
            if *k <= 2 {
                let d = density_gof(*k, *l, *n, cfg, *samples)?;
                let mut rec = RunRecord::new("density_gof_l1", &merge(params, json!({ "samples": samples })), "binned_mc", seed);
                rec.value = Some(d);
                rec.n_samples = *samples;
                out.push(rec);
            }
            if out.is_empty() {
                return Err(CliError::Usage(format!("density checks support k <= 3, got {k}")));
            }
            out
        }
        Command::SchubertRatio { k, n, mc, eps, delta, samples } => {
            let mut out = vec![RunRecord::exact(
                "schubert_ratio",
                &json!({ "k": k, "n": n }),
                "exact",
                schubert_ratio_exact(*k, *n)?,
            )];
            if *mc {
                let e = schubert_ratio_mc(*k, *n, *eps, *delta, cfg, *samples)?;
                let params = json!({ "k": k, "n": n, "eps": eps, "delta": delta, "samples": samples });
                out.push(RunRecord::from_estimate("schubert_ratio", &params, &e));
            }
            out
        }
        Command::Vitale { d, samples } => {
            let e = vitale_check(*d, cfg, *samples)?;
            vec![
                RunRecord::from_estimate("vitale_mean_abs_det", &json!({ "d": d, "samples": samples }), &e),
                RunRecord::exact("vitale_mean_abs_det", &json!({ "d": d }), "closed_form", vitale_closed_form(*d)),
            ]
        }
        Command::LaplaceDemo { profile } => {
            let grid = [10.0, 40.0, 160.0, 640.0];
            let mut out = Vec::new();
            let gauss = LaplaceProblem { a_at_min: 0.0, a0: 1.0, mu: 2.0, b0: 1.0, nu: 1.0, min_at_right_endpoint: false };
            for row in laplace_validate(|t| t * t, |_| 1.0, 0.0, 1.0, &gauss, &grid)? {
                let mut rec = RunRecord::exact("laplace_rel_error", &json!({ "problem": "gaussian", "lambda": row.lambda }), "adaptive_gk", row.rel_error);
                rec.params.insert("leading".into(), json!(row.leading));
                rec.params.insert("quadrature".into(), json!(row.quadrature));
                out.push(rec);
            }
            let p = load_profile(profile)?;
            let a = |t: f64| -(p.eval(t).powi(2) * t.cos() * t.sin()).ln();
            let b = |t: f64| (t.cos().powi(2) - t.sin().powi(2)) / (t.cos() * t.sin()).powi(2);
            for row in laplace_validate(a, b, 0.05, std::f64::consts::FRAC_PI_4, &LaplaceProblem::lines(), &grid)? {
                let mut rec = RunRecord::exact("laplace_rel_error", &json!({ "problem": "lines", "lambda": row.lambda }), "adaptive_gk", row.rel_error);
                rec.params.insert("leading".into(), json!(row.leading));
                rec.params.insert("quadrature".into(), json!(row.quadrature));
                out.push(rec);
            }
            out
        }
        Command::Bounds { k, n } => {
            let (k, n) = (*k, *n);
            let params = json!({ "k": k, "n": n });
            let mut out = vec![RunRecord::from_edeg(&params, &edeg_upper_bound(k, n)?, seed)];
            out[0].quantity = "edeg_upper_bound".into();
            if k >= 2 {
                out.push(RunRecord::exact("epsilon_k", &json!({ "k": k }), "closed_form", epsilon_k(k)?));
            }
            let mut lead = RunRecord::new("log_edeg_leading", &params, "closed_form", 0);
            lead.log_value = Some(log_edeg_leading(k, n)?);
            out.push(lead);
            if k == 2 || n - k == 2 {
                let mut lines = RunRecord::new("lines_bound", &params, "closed_form", 0);
                let l = (n as f64 - 2.0) * (std::f64::consts::PI.powi(2) / 4.0).ln();
                lines.log_value = Some(l);
                lines.value = (k * (n - k) <= 30).then(|| l.exp());
                out.push(lines);
            }
            out.push(RunRecord::exact("vol_grassmann", &params, "closed_form", vol_grassmann_real(k, n)?));
            out
        }
    };
    let ms = start.elapsed().as_millis() as u64;
    for r in &mut records {
        r.runtime_ms = ms;
    }
    Ok(records)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    version: u32,
    tool_version: &'a str,
    quantity: &'a str,
    params: String,
    value: Option<f64>,
    log_value: Option<f64>,
    stderr: f64,
    n_samples: u64,
    degenerate_count: u64,
    seed: u64,
    method: &'a str,
    runtime_ms: u64,
}

/// Renders records as JSON lines or as CSV with a header row.
pub fn render(records: &[RunRecord], format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = String::new();
            for r in records {
                s.push_str(&serde_json::to_string(r).map_err(|e| CliError::Failure(e.to_string()))?);
                s.push('\n');
            }
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in records {
                let params = r
                    .params
                    .iter()
                    .map(|(k, v)| format!("{k}={}", v.to_string().trim_matches('"')))
                    .collect::<Vec<_>>()
                    .join(";");
                w.serialize(CsvRow {
                    version: r.version,
                    tool_version: &r.tool_version,
                    quantity: &r.quantity,
                    params,
                    value: r.value,
                    log_value: r.log_value,
                    stderr: r.stderr,
                    n_samples: r.n_samples,
                    degenerate_count: r.degenerate_count,
                    seed: r.seed,
                    method: &r.method,
                    runtime_ms: r.runtime_ms,
                })
                .map_err(|e| CliError::Failure(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Failure(e.to_string()))
        }
    }
}

fn write_report(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Executes a parsed command line and writes its report.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let records = execute(cli)?;
    let text = render(&records, cli.format)?;
    // profile-build's --out names the profile file; its report goes to stdout.
    let out = match cli.command {
        Command::ProfileBuild { .. } => None,
        _ => cli.out.as_deref(),
    };
    write_report(&text, out)
}
