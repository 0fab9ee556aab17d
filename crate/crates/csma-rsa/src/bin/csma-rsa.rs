//! Command-line front end: runs each experiment as a CSV-producing
//! subcommand plus the self-validation suite.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 validation failure.

use clap::{Parser, Subcommand};
use csma_rsa::availability::{solve_density, AvailabilityFunction};
use csma_rsa::geom::Window;
use csma_rsa::mc::{mc_coverage, mc_density, mc_map};
use csma_rsa::metrics::{coverage_curve, map_mhpp2, map_rsa, CoverageOptions};
use csma_rsa::pcf::{estimate_pcf, fit_exponential, solve_pcf_numerical, PcfTable};
use csma_rsa::process::grow_rsa_to_coverage;
use csma_rsa::radio::{derive_inhibition, DeploymentConfig, RadioConfig};
use csma_rsa::rng::{stream, Purpose};
use csma_rsa::validation::{run_acceptance, DEFAULT_SEED};
use serde::Deserialize;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "csma-rsa", version, about = "CSMA-as-RSA analytical and simulation toolkit")]
struct Cli {
    /// JSON experiment configuration; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configured deployment seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replicated simulation (results are independent
    /// of this number)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output CSV path; stdout when omitted
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Suppress the timestamp in the provenance header
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Medium-access probability vs density: analytical RSA, Matern
    /// type-II, and simulation
    MapCurve,
    /// Active-density trajectory over the back-off slot: ODE vs simulation
    DensityCurve,
    /// Empirical pair correlation from grown RSA patterns
    PcfEstimate,
    /// Pair correlation from the first-order kinetic closure
    PcfSolve,
    /// Exponential fit of the empirical pair correlation
    PcfFit,
    /// SINR coverage vs threshold (optionally with simulation overlay)
    CoverageCurve,
    /// Run the full acceptance suite
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::MapCurve => "map-curve",
            Command::DensityCurve => "density-curve",
            Command::PcfEstimate => "pcf-estimate",
            Command::PcfSolve => "pcf-solve",
            Command::PcfFit => "pcf-fit",
            Command::CoverageCurve => "coverage-curve",
            Command::Validate => "validate",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    #[serde(default = "RadioConfig::default_wlan")]
    radio: RadioConfig,
    #[serde(default = "default_deployment")]
    deployment: DeploymentConfig,
    #[serde(default)]
    sweep: SweepConfig,
    /// Monte Carlo replications (attempts, for conditional estimators)
    #[serde(default = "default_replications")]
    replications: u64,
    #[serde(default)]
    pcf: PcfConfig,
    /// Add simulated coverage columns to coverage-curve (slow when dense)
    #[serde(default)]
    coverage_mc: bool,
}

fn default_deployment() -> DeploymentConfig {
    DeploymentConfig {
        ap_density_per_m2: 1e-4,
        window: Window::Torus { side_m: 5334.0 },
        master_seed: DEFAULT_SEED,
    }
}

fn default_replications() -> u64 {
    10_000
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            radio: RadioConfig::default_wlan(),
            deployment: default_deployment(),
            sweep: SweepConfig::default(),
            replications: default_replications(),
            pcf: PcfConfig::default(),
            coverage_mc: false,
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    /// AP densities for map-curve (strictly ascending)
    lambda_grid_per_m2: Option<Vec<f64>>,
    /// SINR thresholds for coverage-curve (strictly ascending, dB)
    beta_grid_db: Option<Vec<f64>>,
    /// Back-off times for density-curve (strictly ascending, in [0, 1])
    time_grid: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PcfConfig {
    target_coverage: f64,
    bin_width: f64,
    r_max_over_d: f64,
    patterns: u64,
    side_over_d: f64,
}

impl Default for PcfConfig {
    fn default() -> Self {
        PcfConfig {
            target_coverage: 0.3,
            bin_width: 0.05,
            r_max_over_d: 3.5,
            patterns: 20,
            side_over_d: 25.0,
        }
    }
}

fn ascending(grid: &[f64], what: &str) -> Result<(), String> {
    if grid.is_empty() {
        return Err(format!("{what} must be non-empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("{what} must be strictly ascending"));
    }
    Ok(())
}

struct CliFailure {
    code: u8,
    message: String,
}

fn config_err(message: String) -> CliFailure {
    CliFailure { code: 1, message }
}

fn numeric_err(e: csma_rsa::Error) -> CliFailure {
    CliFailure { code: 2, message: e.to_string() }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliFailure> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.deployment.master_seed = seed;
    }
    config.radio.validate().map_err(|e| config_err(e.to_string()))?;
    let geo = derive_inhibition(&config.radio).map_err(|e| config_err(e.to_string()))?;
    config
        .deployment
        .validate(&geo)
        .map_err(|e| config_err(e.to_string()))?;
    if let Some(g) = &config.sweep.lambda_grid_per_m2 {
        ascending(g, "sweep.lambda_grid_per_m2").map_err(config_err)?;
    }
    if let Some(g) = &config.sweep.beta_grid_db {
        ascending(g, "sweep.beta_grid_db").map_err(config_err)?;
    }
    if let Some(g) = &config.sweep.time_grid {
        ascending(g, "sweep.time_grid").map_err(config_err)?;
        if g.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(config_err("sweep.time_grid must lie within [0, 1]".into()));
        }
    }
    let p = &config.pcf;
    if !(p.target_coverage > 0.0
        && p.target_coverage < 0.547
        && p.bin_width > 0.0
        && p.r_max_over_d > 1.0
        && p.patterns >= 1
        && p.side_over_d >= 2.0 * p.r_max_over_d)
    {
        return Err(config_err(
            "pcf section invalid: need 0 < target_coverage < 0.547, bin_width > 0, \
             r_max_over_d > 1, patterns >= 1, side_over_d >= 2 r_max_over_d"
                .into(),
        ));
    }
    Ok(config)
}

fn provenance(cli: &Cli, config: &ExperimentConfig) -> String {
    let mut line = format!(
        "# csma-rsa {} | command={} | seed={} | tx={} dBm | sense={} dBm | alpha={} | bw={} Hz | nf={} dB | lambda_a={} /m2 | window={:?} | replications={}",
        env!("CARGO_PKG_VERSION"),
        cli.command.name(),
        config.deployment.master_seed,
        config.radio.tx_power_dbm,
        config.radio.sense_threshold_dbm,
        config.radio.path_loss_exponent,
        config.radio.bandwidth_hz,
        config.radio.noise_figure_db,
        config.deployment.ap_density_per_m2,
        config.deployment.window,
        config.replications,
    );
    if !cli.no_timestamp {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        line.push_str(&format!(" | generated_unix={now}"));
    }
    line.push('\n');
    line
}

fn emit(cli: &Cli, body: String) -> Result<(), CliFailure> {
    match &cli.output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| config_err(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(body.as_bytes())
                .map_err(|e| CliFailure { code: 2, message: e.to_string() })
        }
    }
}

fn run_map_curve(config: &ExperimentConfig) -> Result<String, CliFailure> {
    let av = AvailabilityFunction::standard();
    let geo = derive_inhibition(&config.radio).map_err(numeric_err)?;
    let default_grid: Vec<f64> = (0..9).map(|i| 1e-5 * 10f64.powf(i as f64 / 4.0)).collect();
    let grid = config.sweep.lambda_grid_per_m2.as_deref().unwrap_or(&default_grid);
    let mut body = String::from("lambda_a_per_m2,map_rsa,map_mhpp2,map_mc,map_mc_ci\n");
    for &lam in grid {
        let analytic = map_rsa(av, lam, &geo).map_err(numeric_err)?;
        let matern = map_mhpp2(lam, geo.d_inh_m);
        let dep = DeploymentConfig {
            ap_density_per_m2: lam,
            ..config.deployment
        };
        let sim = mc_map(&dep, &config.radio, config.replications).map_err(numeric_err)?;
        body.push_str(&format!(
            "{lam},{analytic},{matern},{},{}\n",
            sim.mean, sim.ci95_halfwidth
        ));
    }
    Ok(body)
}

fn run_density_curve(config: &ExperimentConfig) -> Result<String, CliFailure> {
    let av = AvailabilityFunction::standard();
    let geo = derive_inhibition(&config.radio).map_err(numeric_err)?;
    let default_grid: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let grid = config.sweep.time_grid.as_deref().unwrap_or(&default_grid);
    let ode = solve_density(av, config.deployment.ap_density_per_m2, geo.kappa_m2, grid)
        .map_err(numeric_err)?;
    let sim = mc_density(&config.deployment, &config.radio, grid, config.replications)
        .map_err(numeric_err)?;
    let mut body =
        String::from("t,rho_ode_per_m2,theta_ode,rho_mc_per_m2,theta_mc,rho_mc_ci_per_m2\n");
    for j in 0..grid.len() {
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            grid[j],
            ode.rho[j],
            ode.theta[j],
            sim.curve.rho[j],
            sim.curve.theta[j],
            sim.rho_ci95_per_m2[j]
        ));
    }
    Ok(body)
}

fn grown_pcf_table(config: &ExperimentConfig) -> Result<PcfTable, CliFailure> {
    let p = &config.pcf;
    let side = p.side_over_d;
    let window = Window::Torus { side_m: side };
    let seed = config.deployment.master_seed;
    let patterns = (0..p.patterns)
        .map(|i| {
            let mut rng = stream(seed, Purpose::PcfPattern, i);
            grow_rsa_to_coverage(side, 1.0, p.target_coverage, &mut rng)
        })
        .collect::<csma_rsa::Result<Vec<_>>>()
        .map_err(numeric_err)?;
    estimate_pcf(&window, &patterns, 1.0, p.bin_width, p.r_max_over_d).map_err(numeric_err)
}

fn run_coverage_curve(cli: &Cli, config: &ExperimentConfig) -> Result<String, CliFailure> {
    let av = AvailabilityFunction::standard();
    let default_grid: Vec<f64> = (0..13).map(|i| -10.0 + 2.5 * i as f64).collect();
    let grid = config.sweep.beta_grid_db.clone().unwrap_or(default_grid);
    let curve = coverage_curve(
        av,
        &grid,
        &config.radio,
        config.deployment.ap_density_per_m2,
        &CoverageOptions::default(),
    )
    .map_err(numeric_err)?;
    let _ = cli;
    if !config.coverage_mc {
        return Ok(curve.to_csv());
    }
    let sim = mc_coverage(&config.deployment, &config.radio, &grid, config.replications)
        .map_err(numeric_err)?;
    let mut body = String::from("beta_db,p_cov,p_cov_mc,p_cov_mc_ci\n");
    for j in 0..grid.len() {
        body.push_str(&format!(
            "{},{},{},{}\n",
            grid[j], curve.p_cov[j], sim.estimates[j].mean, sim.estimates[j].ci95_halfwidth
        ));
    }
    Ok(body)
}

fn run_validate(config: &ExperimentConfig) -> Result<(), CliFailure> {
    let results = run_acceptance(config.deployment.master_seed);
    let mut all_ok = true;
    for r in &results {
        println!("{}", r.report_line());
        all_ok &= r.passed;
    }
    if all_ok {
        Ok(())
    } else {
        Err(CliFailure { code: 3, message: "acceptance suite failed".into() })
    }
}

fn run(cli: &Cli) -> Result<(), CliFailure> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| config_err(format!("--workers: {e}")))?;
    }
    let config = load_config(cli)?;
    let body = match cli.command {
        Command::MapCurve => run_map_curve(&config)?,
        Command::DensityCurve => run_density_curve(&config)?,
        Command::PcfEstimate => grown_pcf_table(&config)?.to_csv(),
        Command::PcfSolve => {
            solve_pcf_numerical(config.pcf.target_coverage, 16.0, 1024, 200)
                .map_err(numeric_err)?
                .to_csv()
        }
        Command::PcfFit => {
            let table = grown_pcf_table(&config)?;
            fit_exponential(&table).map_err(numeric_err)?.to_csv()
        }
        Command::CoverageCurve => run_coverage_curve(cli, &config)?,
        Command::Validate => return run_validate(&config),
    };
    emit(cli, format!("{}{body}", provenance(cli, &config)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
