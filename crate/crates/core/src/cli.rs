//! Command-line front end: argument and config parsing, dispatch, and
//! atomic persistence of JSON/CSV artifacts.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::estimates::{lookup, registry, run_scaling, ScalingOptions, ScalingReport, THETA_SWEEP};
use crate::field::FourierField;
use crate::gauge::{validate_gauge_sign, GaugeSignCheck};
use crate::lattice::{certify_counting_bound, CountingFamily, CountingRange};
use crate::nonlinearity::{decompose_j_with, identity_error, quintic_fourier_fft, SumStrategy};
use crate::random_data::{
    check_independence_cancellation, check_sup_bound, gaussian, hs_norm_equivalence, randomized_datum, tail_estimate,
    MultilinearForm,
};
use crate::solver::{integrate, smoothing_experiment, Equation, Integrator, SmoothingReport, SolveConfig};
use crate::spaces::{hs_norm, sup_hs};
use crate::stats::quantile;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "QUINTIC_LAB_OUTPUT";

#[derive(Parser, Debug)]
#[command(name = "quintic-lab", version, about = "Numerical lab for the randomized quintic NLS on T^3")]
pub struct Cli {
    /// JSON experiment config; replaces the subcommand flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest physical grid (points) a solver run may allocate.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify a lattice-point counting bound by exhaustive sweep.
    Counting(CountingArgs),
    /// Monte Carlo checks of the randomized data.
    Randomness(RandomnessArgs),
    /// J-decomposition of |u|⁴u for a random field.
    Decompose(DecomposeArgs),
    /// Integrate the quintic equation from randomized data.
    Solve(SolveArgs),
    /// Smoothing of w = v − S(t)φ^ω along a list of truncations.
    Smoothing(SmoothingArgs),
    /// Dyadic scaling runs for the registered estimates.
    Estimates(EstimatesArgs),
    /// Turn a report into plot series files.
    Plot(PlotArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Sphere,
    SphereBall,
    PlaneBall,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountingArgs {
    #[arg(long, value_enum, default_value_t = Family::Sphere)]
    pub family: Family,
    #[arg(long, default_value_t = 10_000)]
    pub max_r2: u64,
    /// Ball radii for the sphere∩ball and plane∩ball families.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 4.0, 8.0, 16.0])]
    pub radii: Vec<f64>,
}

impl Default for CountingArgs {
    fn default() -> Self {
        CountingArgs { family: Family::Sphere, max_r2: 10_000, radii: vec![2.0, 4.0, 8.0, 16.0] }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomnessCheck {
    Tail,
    SupBound,
    Moments,
    HsEquivalence,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomnessArgs {
    #[arg(long, value_enum, default_value_t = RandomnessCheck::Tail)]
    pub check: RandomnessCheck,
    /// Degree k of the product form G₁⋯G_k for the tail check.
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 4.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 40)]
    pub lambda_steps: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1.0 / 15.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.3)]
    pub s: f64,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 3.0)]
    pub constant: f64,
}

impl Default for RandomnessArgs {
    fn default() -> Self {
        RandomnessArgs {
            check: RandomnessCheck::Tail,
            degree: 1,
            samples: 100_000,
            lambda_max: 4.0,
            lambda_steps: 40,
            n_max: 8,
            alpha: 1.0 / 15.0,
            s: 1.3,
            seeds: 20,
            epsilon: 0.1,
            constant: 3.0,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Auto,
    Enumerate,
    InclusionExclusion,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecomposeArgs {
    #[arg(long, default_value_t = 1)]
    pub n_max: usize,
    #[arg(long, value_enum, default_value_t = Strategy::Auto)]
    pub strategy: Strategy,
}

impl Default for DecomposeArgs {
    fn default() -> Self {
        DecomposeArgs { n_max: 1, strategy: Strategy::Auto }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationArg {
    Original,
    Gauged,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorArg {
    Strang,
    Erk2,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.01)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = EquationArg::Gauged)]
    pub equation: EquationArg,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Strang)]
    pub integrator: IntegratorArg,
    /// Regularity parameter of the randomized datum.
    #[arg(long, default_value_t = 1.0 / 15.0)]
    pub alpha: f64,
    /// Pad the grid so quintic products are alias-free (M ≥ 10N+1).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub dealias: bool,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
}

impl Default for SolveArgs {
    fn default() -> Self {
        SolveArgs {
            n_max: 8,
            dt: 1e-3,
            t_final: 0.01,
            lambda: 1.0,
            equation: EquationArg::Gauged,
            integrator: IntegratorArg::Strang,
            alpha: 1.0 / 15.0,
            dealias: true,
            record_every: 1,
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingArgs {
    #[arg(long, default_value_t = 1.0 / 15.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.3)]
    pub s: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![8, 16, 32])]
    pub nmax: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Number of seeds, starting at the global seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0.8)]
    pub quantile: f64,
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub dealias: bool,
}

impl Default for SmoothingArgs {
    fn default() -> Self {
        SmoothingArgs {
            alpha: 1.0 / 15.0,
            s: 1.3,
            nmax: vec![8, 16, 32],
            delta: 0.01,
            dt: 1e-3,
            lambda: 1.0,
            seeds: 1,
            quantile: 0.8,
            dealias: false,
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesArgs {
    /// Estimate id; see --list.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub list: bool,
    #[arg(long, value_delimiter = ',')]
    pub n1: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub n2: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub n3: Vec<u32>,
    #[arg(long, default_value_t = 50)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0.95)]
    pub quantile: f64,
    /// Interpolation parameters; defaults to {0, 1/2, 1} where applicable.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
}

impl Default for EstimatesArgs {
    fn default() -> Self {
        EstimatesArgs {
            id: None,
            list: false,
            n1: vec![],
            n2: vec![],
            n3: vec![],
            seeds: 50,
            quantile: 0.95,
            theta: vec![],
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotArgs {
    /// Report written by another subcommand.
    pub report: PathBuf,
}

/// A complete experiment description, as accepted by --config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub budget: Option<usize>,
    pub command: Payload,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Counting(CountingArgs),
    Randomness(RandomnessArgs),
    Decompose(DecomposeArgs),
    Solve(SolveArgs),
    Smoothing(SmoothingArgs),
    Estimates(EstimatesArgs),
}

impl Payload {
    pub fn name(&self) -> &'static str {
        match self {
            Payload::Counting(_) => "counting",
            Payload::Randomness(_) => "randomness",
            Payload::Decompose(_) => "decompose",
            Payload::Solve(_) => "solve",
            Payload::Smoothing(_) => "smoothing",
            Payload::Estimates(_) => "estimates",
        }
    }

    fn lambda(&self) -> f64 {
        match self {
            Payload::Solve(a) => a.lambda,
            Payload::Smoothing(a) => a.lambda,
            _ => 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(invalid("threads must be positive"));
        }
        if self.budget == Some(0) {
            return Err(invalid("budget must be positive"));
        }
        match &self.command {
            Payload::Counting(a) => {
                if a.max_r2 == 0 {
                    return Err(invalid("max_r2 must be positive"));
                }
                if a.family != Family::Sphere && a.radii.iter().any(|r| !(*r > 0.0)) {
                    return Err(invalid("radii must be positive"));
                }
            }
            Payload::Randomness(a) => {
                if a.lambda_steps == 0 || !(a.lambda_max > 0.0) {
                    return Err(invalid("λ grid must be nonempty and positive"));
                }
            }
            Payload::Decompose(a) => {
                if a.n_max == 0 {
                    return Err(invalid("n_max must be positive"));
                }
            }
            Payload::Solve(a) => {
                if a.n_max == 0 || !(a.dt > 0.0) || !(a.t_final > 0.0) {
                    return Err(invalid("solve needs n_max, dt, t_final > 0"));
                }
            }
            Payload::Smoothing(a) => {
                if a.seeds == 0 || a.nmax.is_empty() || !(a.quantile > 0.0 && a.quantile <= 1.0) {
                    return Err(invalid("smoothing needs seeds ≥ 1, a nonempty N list and a quantile in (0, 1]"));
                }
            }
            Payload::Estimates(a) => {
                if !a.list {
                    match &a.id {
                        None => return Err(invalid("estimates needs --id or --list")),
                        Some(id) => {
                            lookup(id)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Gauge metadata embedded in every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeMeta {
    pub sign: i32,
    pub lambda: f64,
    pub quadrature: String,
    pub residual_plus: f64,
    pub residual_minus: f64,
}

impl From<GaugeSignCheck> for GaugeMeta {
    fn from(c: GaugeSignCheck) -> Self {
        GaugeMeta {
            sign: c.sign,
            lambda: c.lambda,
            quadrature: c.quadrature,
            residual_plus: c.residual_plus,
            residual_minus: c.residual_minus,
        }
    }
}

/// The JSON document written for each run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub gauge: GaugeMeta,
    pub report: Value,
}

/// Write via a temporary sibling and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| invalid("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn random_field(seed: u64, n_max: usize) -> FourierField {
    FourierField::from_fn(n_max, |n| gaussian(seed, n))
}

fn lambda_grid(max: f64, steps: usize) -> Vec<f64> {
    (1..=steps).map(|i| max * i as f64 / steps as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSummary {
    pub runs: Vec<SmoothingReport>,
    pub n_list: Vec<usize>,
    pub quantile: f64,
    /// Per-N quantile of the ratio over seeds.
    pub ratio_quantile: Vec<f64>,
    pub ratio_quantile_decreasing: bool,
    /// ‖φ^ω_{≤N}‖_{Hˢ} increases with N for every seed.
    pub phi_increasing: bool,
}

/// Execute a validated config and write its artifacts. Returns the paths
/// written.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if let Some(t) = cfg.threads {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let out_dir = cfg
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let gauge: GaugeMeta = validate_gauge_sign(1.0, cfg.command.lambda())?.into();
    let seed = cfg.seed;
    let mut extra: Vec<(String, String)> = Vec::new();
    let report: Value = match &cfg.command {
        Payload::Counting(a) => {
            let (family, range) = match a.family {
                Family::Sphere => (CountingFamily::Sphere, CountingRange::sphere(a.max_r2)),
                Family::SphereBall => (CountingFamily::SphereBall, CountingRange::sphere_ball(a.max_r2, a.radii.clone())),
                Family::PlaneBall => (CountingFamily::PlaneBall, CountingRange::plane_ball(a.radii.clone())),
            };
            serde_json::to_value(certify_counting_bound(family, &range)?)?
        }
        Payload::Randomness(a) => match a.check {
            RandomnessCheck::Tail => serde_json::to_value(tail_estimate(
                &MultilinearForm::product(a.degree),
                seed,
                a.samples,
                &lambda_grid(a.lambda_max, a.lambda_steps),
            )?)?,
            RandomnessCheck::SupBound => {
                let frac = check_sup_bound(seed, a.seeds, a.epsilon, a.n_max, a.constant)?;
                json!({ "fraction_within_bound": frac, "seeds": a.seeds, "epsilon": a.epsilon, "n_max": a.n_max, "constant": a.constant })
            }
            RandomnessCheck::Moments => serde_json::to_value(check_independence_cancellation(seed, a.samples)?)?,
            RandomnessCheck::HsEquivalence => {
                serde_json::to_value(hs_norm_equivalence(seed, a.seeds, a.s, a.n_max, a.alpha)?)?
            }
        },
        Payload::Decompose(a) => {
            let u = random_field(seed, a.n_max);
            let strategy = match a.strategy {
                Strategy::Auto => SumStrategy::Auto,
                Strategy::Enumerate => SumStrategy::Enumerate,
                Strategy::InclusionExclusion => SumStrategy::InclusionExclusion,
            };
            let d = decompose_j_with(&u, strategy);
            let err = identity_error(&u, &d);
            json!({
                "n_max": a.n_max,
                "identity_relative_error": err,
                "j_l2_norms": d.j.iter().map(|f| f.l2_norm()).collect::<Vec<_>>(),
                "resonant_l2_norm": d.resonant.l2_norm(),
                "quintic_l2_norm": quintic_fourier_fft(&u).l2_norm(),
                "mass": d.mass,
                "quartic_integral": d.quartic,
            })
        }
        Payload::Solve(a) => {
            let equation = match a.equation {
                EquationArg::Original => Equation::Original,
                EquationArg::Gauged => Equation::Gauged,
            };
            let integrator = match a.integrator {
                IntegratorArg::Strang => Integrator::StrangSplitting,
                IntegratorArg::Erk2 => Integrator::ExponentialRk2,
            };
            let mut sc = SolveConfig::new(a.n_max, a.dt, a.t_final, a.lambda, equation, integrator);
            sc.dealias = a.dealias;
            sc.record_every = a.record_every;
            if let Some(b) = cfg.budget {
                sc.grid_budget = b;
            }
            let phi = randomized_datum(seed, a.alpha, a.n_max)?.phi_omega;
            let traj = integrate(&phi, &sc)?;
            let m0 = phi.mass();
            let rows: Vec<Value> = traj
                .times()
                .iter()
                .zip(traj.fields())
                .map(|(t, f)| json!({ "t": t, "mass": f.mass(), "h1": hs_norm(f, 1.0) }))
                .collect();
            let drift = traj.fields().iter().map(|f| (f.mass() - m0).abs() / m0).fold(0.0, f64::max);
            let traj_path = out_dir.join("solve-trajectory.qltr");
            write_atomic(&traj_path, &traj.to_bytes())?;
            json!({
                "solve_config": sc,
                "grid_side": sc.grid_side(),
                "max_relative_mass_drift": drift,
                "sup_h1": sup_hs(&traj, 1.0),
                "rows": rows,
                "final_field": traj.fields().last().map(|f| f.to_json()),
                "trajectory_file": traj_path.file_name().map(|s| s.to_string_lossy().into_owned()),
            })
        }
        Payload::Smoothing(a) => {
            let mut sc = SolveConfig::new(a.nmax[0], a.dt, a.delta, a.lambda, Equation::Gauged, Integrator::StrangSplitting);
            sc.dealias = a.dealias;
            if let Some(b) = cfg.budget {
                sc.grid_budget = b;
            }
            let runs = (0..a.seeds as u64)
                .map(|k| smoothing_experiment(seed + k, a.alpha, a.s, &a.nmax, a.delta, &sc))
                .collect::<Result<Vec<_>>>()?;
            serde_json::to_value(summarize_smoothing(runs, &a.nmax, a.quantile))?
        }
        Payload::Estimates(a) => {
            if a.list {
                serde_json::to_value(registry())?
            } else {
                let id = a.id.as_deref().unwrap_or_default();
                let spec = lookup(id)?;
                let grid = estimate_grid(a, &spec.default_grid());
                let thetas: Vec<f64> = if !a.theta.is_empty() {
                    a.theta.clone()
                } else if spec.uses_theta {
                    THETA_SWEEP.to_vec()
                } else {
                    vec![1.0]
                };
                let mut reports: Vec<ScalingReport> = Vec::new();
                for theta in thetas {
                    let opts = ScalingOptions { seeds: a.seeds, base_seed: seed, quantile: a.quantile, theta };
                    let r = run_scaling(id, &grid, &opts)?;
                    let suffix = if spec.uses_theta { format!("-theta{theta}") } else { String::new() };
                    extra.push((format!("estimates-{id}{suffix}.csv"), r.csv()));
                    reports.push(r);
                }
                serde_json::to_value(reports)?
            }
        }
    };
    let artifact = Artifact {
        version: VERSION.to_string(),
        command: cfg.command.name().to_string(),
        config: cfg.clone(),
        gauge,
        report,
    };
    let main_name = match &cfg.command {
        Payload::Estimates(a) if !a.list => format!("estimates-{}.json", a.id.as_deref().unwrap_or_default()),
        p => format!("{}.json", p.name()),
    };
    let mut written = Vec::new();
    let path = out_dir.join(main_name);
    write_atomic(&path, serde_json::to_string_pretty(&artifact)?.as_bytes())?;
    written.push(path);
    for (name, text) in extra {
        let p = out_dir.join(name);
        write_atomic(&p, text.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

fn estimate_grid(a: &EstimatesArgs, default: &[[u32; 3]]) -> Vec<[u32; 3]> {
    if a.n1.is_empty() && a.n2.is_empty() && a.n3.is_empty() {
        return default.to_vec();
    }
    let pick = |given: &Vec<u32>, i: usize| if given.is_empty() { vec![default[0][i]] } else { given.clone() };
    let (l1, l2, l3) = (pick(&a.n1, 0), pick(&a.n2, 1), pick(&a.n3, 2));
    let mut grid = Vec::new();
    for &x in &l1 {
        for &y in &l2 {
            for &z in &l3 {
                grid.push([x, y, z]);
            }
        }
    }
    grid
}

pub fn summarize_smoothing(runs: Vec<SmoothingReport>, n_list: &[usize], q: f64) -> SmoothingSummary {
    let ratio_quantile: Vec<f64> = (0..n_list.len())
        .map(|i| quantile(&runs.iter().map(|r| r.rows[i].ratio).collect::<Vec<_>>(), q))
        .collect();
    let ratio_quantile_decreasing = ratio_quantile.windows(2).all(|w| w[1] < w[0]);
    let phi_increasing = runs.iter().all(|r| r.rows.windows(2).all(|w| w[1].phi_hs > w[0].phi_hs));
    SmoothingSummary { runs, n_list: n_list.to_vec(), quantile: q, ratio_quantile, ratio_quantile_decreasing, phi_increasing }
}

fn series_file(rows: &[(f64, f64)], header: &str) -> String {
    let mut s = format!("# {header}\n");
    for (x, y) in rows {
        s.push_str(&format!("{x:.17e}\t{y:.17e}\n"));
    }
    s
}

/// Write one tab-separated series per estimate or experiment next to the
/// report; the first line names the columns.
pub fn emit_plot_data(report: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(report)?;
    let art: Artifact = serde_json::from_str(&text)?;
    let dir = report.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let mut files: Vec<(String, String)> = Vec::new();
    match art.command.as_str() {
        "estimates" => {
            let reports: Vec<ScalingReport> = serde_json::from_value(art.report)
                .map_err(|_| Error::Format("estimate listings have no plot series".into()))?;
            for r in reports {
                let suffix = r.theta.map(|t| format!("-theta{t}")).unwrap_or_default();
                files.push((
                    format!("{}{}.series.tsv", r.estimate_id, suffix),
                    series_file(&r.plot_series(), "log2_N\tlog2_ratio_quantile"),
                ));
            }
        }
        "smoothing" => {
            let s: SmoothingSummary = serde_json::from_value(art.report)?;
            let rows: Vec<(f64, f64)> =
                s.n_list.iter().zip(&s.ratio_quantile).map(|(&n, &r)| ((n as f64).log2(), r)).collect();
            files.push((format!("{stem}.series.tsv"), series_file(&rows, "log2_N\tratio_quantile")));
        }
        "randomness" => {
            let degree = art.report.get("degree").and_then(Value::as_u64);
            let (Some(k), Some(lam), Some(tail)) =
                (degree, art.report.get("lambda_grid"), art.report.get("empirical_tail"))
            else {
                return Err(Error::Format("only tail reports have plot series".into()));
            };
            let lam: Vec<f64> = serde_json::from_value(lam.clone())?;
            let tail: Vec<f64> = serde_json::from_value(tail.clone())?;
            let rows: Vec<(f64, f64)> = lam
                .iter()
                .zip(&tail)
                .filter(|(_, &p)| p > 0.0)
                .map(|(&l, &p)| (l.powf(2.0 / k as f64), -p.ln()))
                .collect();
            files.push((format!("{stem}.series.tsv"), series_file(&rows, "lambda_pow_2_over_k\tminus_log_tail")));
        }
        other => return Err(Error::Format(format!("no plot series for `{other}` reports"))),
    }
    let mut written = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write_atomic(&p, text.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

fn config_from_cli(cli: &Cli) -> Result<Option<ExperimentConfig>> {
    let mut cfg = if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        Some(cfg)
    } else {
        let payload = match &cli.command {
            None | Some(Command::Plot(_)) => None,
            Some(Command::Counting(a)) => Some(Payload::Counting(a.clone())),
            Some(Command::Randomness(a)) => Some(Payload::Randomness(a.clone())),
            Some(Command::Decompose(a)) => Some(Payload::Decompose(a.clone())),
            Some(Command::Solve(a)) => Some(Payload::Solve(a.clone())),
            Some(Command::Smoothing(a)) => Some(Payload::Smoothing(a.clone())),
            Some(Command::Estimates(a)) => Some(Payload::Estimates(a.clone())),
        };
        payload.map(|command| ExperimentConfig { seed: 0, output_dir: None, threads: None, budget: None, command })
    };
    if let Some(c) = cfg.as_mut() {
        if let Some(s) = cli.seed {
            c.seed = s;
        }
        if cli.output_dir.is_some() {
            c.output_dir = cli.output_dir.clone();
        }
        if cli.threads.is_some() {
            c.threads = cli.threads;
        }
        if cli.budget.is_some() {
            c.budget = cli.budget;
        }
        c.validate()?;
    }
    Ok(cfg)
}

fn report_error(e: &Error) -> i32 {
    let code = e.exit_code();
    let doc = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code });
    eprintln!("{doc}");
    code
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let _ = e.print();
                    1
                }
            };
        }
    };
    if let Some(Command::Plot(p)) = &cli.command {
        return match emit_plot_data(&p.report) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                0
            }
            Err(e) => report_error(&e),
        };
    }
    match config_from_cli(&cli) {
        Ok(None) => {
            use clap::CommandFactory;
            eprintln!("{}", Cli::command().render_usage());
            eprintln!("a subcommand or --config is required; see --help");
            1
        }
        Ok(Some(cfg)) => match run(&cfg) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                0
            }
            Err(e) => report_error(&e),
        },
        Err(e) => report_error(&e),
    }
}
