//! Replicated Monte Carlo estimators: medium-access probability, density
//! trajectories, retention probability, and conditional SINR coverage.
//!
//! Replication `i` always draws from the stream derived from
//! `(master_seed, purpose, i)`, so estimates are independent of how
//! replications are partitioned across worker threads.

use crate::availability::DensityCurve;
use crate::error::{Error, Result};
use crate::geom::{Point, Window};
use crate::process::{
    backoff_order, grow_rsa_to_coverage, sample_ppp, PointPattern, SpatialGrid,
};
use crate::radio::{derive_inhibition, path_loss, DeploymentConfig, RadioConfig};
use crate::rng::{stream, Purpose};
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Monte Carlo mean with a normal-approximation 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub ci95_halfwidth: f64,
    pub replications: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Sample mean and 1.96 * s / sqrt(n) half-width. Needs n >= 2.
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Invalid(format!(
                "confidence interval needs at least 2 samples (got {n})"
            )));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n as f64 - 1.0);
        Ok(McEstimate {
            mean,
            ci95_halfwidth: 1.96 * var.sqrt() / (n as f64).sqrt(),
            replications: n as u64,
            seed,
        })
    }
}

/// One accepted coverage replication.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SinrSample {
    pub replication: u64,
    pub sinr_linear: f64,
    pub serving_distance_m: f64,
    pub num_interferers: u64,
    /// Diagnostic: hard core plus service-disk geometry guarantees this is
    /// at least r_inh. Infinite when there are no interferers.
    pub min_interferer_distance_m: f64,
}

fn typical_position(window: &Window) -> Point {
    match *window {
        Window::Torus { side_m } => [side_m / 2.0, side_m / 2.0],
        Window::Disk { .. } => [0.0, 0.0],
    }
}

/// Fraction of replications in which the typical AP, placed at the window
/// center with its own uniform back-off, wins the slotted contention.
pub fn mc_map(
    deployment: &DeploymentConfig,
    radio: &RadioConfig,
    replications: u64,
) -> Result<McEstimate> {
    let geo = derive_inhibition(radio)?;
    deployment.validate(&geo)?;
    let window = deployment.window;
    let lam = deployment.ap_density_per_m2;
    let seed = deployment.master_seed;
    let typical = typical_position(&window);
    let wins: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, Purpose::MapReplication, rep);
            let pattern = sample_ppp(lam, &window, &mut rng);
            let t0 = 1.0 - rng.gen::<f64>();
            match contend_with_typical(&pattern, typical, t0, geo.d_inh_m) {
                Some(_) => 1.0,
                None => 0.0,
            }
        })
        .collect();
    McEstimate::from_samples(&wins, seed)
}

/// Runs the contention with an extra typical point. Returns the active
/// parent positions at t = 1 if the typical point is retained, or `None`
/// as soon as it is blocked.
fn contend_with_typical(
    pattern: &PointPattern,
    typical: Point,
    typical_backoff: f64,
    d_inh: f64,
) -> Option<Vec<Point>> {
    let mut grid = SpatialGrid::new(&pattern.window, d_inh);
    let mut active = Vec::new();
    let mut typical_placed = false;
    for &i in &backoff_order(pattern) {
        let p = &pattern.points[i as usize];
        if !typical_placed && p.backoff > typical_backoff {
            if grid.has_neighbor_within(typical) {
                return None;
            }
            grid.insert(typical);
            typical_placed = true;
        }
        if !grid.has_neighbor_within(p.position) {
            grid.insert(p.position);
            active.push(p.position);
        }
    }
    if !typical_placed && grid.has_neighbor_within(typical) {
        return None;
    }
    Some(active)
}

/// Simulated density trajectory with per-time confidence intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McDensityCurve {
    pub curve: DensityCurve,
    pub rho_ci95_per_m2: Vec<f64>,
    pub replications: u64,
    pub seed: u64,
}

/// Average active density over replicated contention runs on a torus.
pub fn mc_density(
    deployment: &DeploymentConfig,
    radio: &RadioConfig,
    t_grid: &[f64],
    replications: u64,
) -> Result<McDensityCurve> {
    let geo = derive_inhibition(radio)?;
    deployment.validate(&geo)?;
    let Window::Torus { .. } = deployment.window else {
        return Err(Error::Config(
            "mc_density requires a torus window".to_string(),
        ));
    };
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::Invalid("t_grid must be non-empty within [0, 1]".to_string()));
    }
    if replications < 2 {
        return Err(Error::Invalid("mc_density needs at least 2 replications".to_string()));
    }
    let area = deployment.window.area();
    let seed = deployment.master_seed;
    let counts: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, Purpose::DensityReplication, rep);
            let pattern = sample_ppp(deployment.ap_density_per_m2, &deployment.window, &mut rng);
            let outcome = crate::process::rsa_thinning(&pattern, geo.d_inh_m, 1.0);
            // activation_times is ascending by construction
            t_grid
                .iter()
                .map(|&t| outcome.activation_times.partition_point(|&a| a <= t) as f64)
                .collect()
        })
        .collect();
    let n = replications as f64;
    let mut rho = Vec::with_capacity(t_grid.len());
    let mut ci = Vec::with_capacity(t_grid.len());
    for j in 0..t_grid.len() {
        let mean = counts.iter().map(|c| c[j]).sum::<f64>() / n;
        let var = counts.iter().map(|c| (c[j] - mean) * (c[j] - mean)).sum::<f64>() / (n - 1.0);
        rho.push(mean / area);
        ci.push(1.96 * var.sqrt() / n.sqrt() / area);
    }
    let theta = rho.iter().map(|r| r * geo.kappa_m2).collect();
    Ok(McDensityCurve {
        curve: DensityCurve {
            time_grid: t_grid.to_vec(),
            rho,
            theta,
        },
        rho_ci95_per_m2: ci,
        replications,
        seed,
    })
}

/// Simulated conditional coverage with the accepted raw samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageSimulation {
    pub beta_grid_db: Vec<f64>,
    pub estimates: Vec<McEstimate>,
    pub samples: Vec<SinrSample>,
    /// Back-offs of the typical AP in accepted replications (conditioning
    /// diagnostics).
    pub accepted_backoffs: Vec<f64>,
    pub attempted: u64,
}

impl CoverageSimulation {
    pub fn samples_to_csv(&self) -> String {
        let mut out =
            String::from("replication,beta_db,sinr_db,serving_distance_m,num_interferers\n");
        for s in &self.samples {
            let sinr_db = 10.0 * s.sinr_linear.log10();
            for b in &self.beta_grid_db {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    s.replication, b, sinr_db, s.serving_distance_m, s.num_interferers
                ));
            }
        }
        out
    }
}

/// SINR coverage of the typical link, conditioned on the typical AP
/// winning contention. Replications where it loses are rejected.
pub fn mc_coverage(
    deployment: &DeploymentConfig,
    radio: &RadioConfig,
    beta_grid_db: &[f64],
    replications: u64,
) -> Result<CoverageSimulation> {
    mc_coverage_opts(deployment, radio, beta_grid_db, replications, None)
}

/// As [`mc_coverage`], with an optional noise-power override in mW
/// (`Some(0.0)` gives pure SIR).
pub fn mc_coverage_opts(
    deployment: &DeploymentConfig,
    radio: &RadioConfig,
    beta_grid_db: &[f64],
    replications: u64,
    sigma2_mw: Option<f64>,
) -> Result<CoverageSimulation> {
    let geo = derive_inhibition(radio)?;
    deployment.validate(&geo)?;
    if beta_grid_db.is_empty() {
        return Err(Error::Invalid("beta_grid_db must be non-empty".to_string()));
    }
    let window = deployment.window;
    let lam = deployment.ap_density_per_m2;
    let seed = deployment.master_seed;
    let alpha = radio.path_loss_exponent;
    let sigma2_over_pt = sigma2_mw.unwrap_or_else(|| radio.noise_power_mw()) / radio.tx_power_mw();
    let typical = typical_position(&window);
    let r_inh = geo.r_inh_m;

    let accepted: Vec<(u64, f64, SinrSample)> = (0..replications)
        .into_par_iter()
        .filter_map(|rep| {
            let mut rng = stream(seed, Purpose::CoverageReplication, rep);
            let pattern = sample_ppp(lam, &window, &mut rng);
            let t0 = 1.0 - rng.gen::<f64>();
            let interferers = contend_with_typical(&pattern, typical, t0, geo.d_inh_m)?;
            // area-uniform user in the service disk around the typical AP
            let r0 = r_inh * (1.0 - rng.gen::<f64>()).sqrt();
            let phi = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            let user = [typical[0] + r0 * phi.cos(), typical[1] + r0 * phi.sin()];
            let h0: f64 = rng.sample(Exp1);
            let signal = h0 * path_loss(r0, alpha).expect("r0 > 0");
            let mut interference = 0.0;
            let mut min_dist = f64::INFINITY;
            for &q in &interferers {
                let h: f64 = rng.sample(Exp1);
                let dist = window.distance(user, q);
                min_dist = min_dist.min(dist);
                interference += h * path_loss(dist, alpha).expect("dist > 0");
            }
            let sinr = signal / (interference + sigma2_over_pt);
            Some((
                rep,
                t0,
                SinrSample {
                    replication: rep,
                    sinr_linear: sinr,
                    serving_distance_m: r0,
                    num_interferers: interferers.len() as u64,
                    min_interferer_distance_m: min_dist,
                },
            ))
        })
        .collect();

    let rate = accepted.len() as f64 / replications as f64;
    if lam > 0.0 && rate < 0.01 {
        return Err(Error::AcceptanceTooLow(rate));
    }
    let samples: Vec<SinrSample> = accepted.iter().map(|&(_, _, s)| s).collect();
    let accepted_backoffs: Vec<f64> = accepted.iter().map(|&(_, t0, _)| t0).collect();
    let estimates = beta_grid_db
        .iter()
        .map(|&b_db| {
            let beta = 10f64.powf(b_db / 10.0);
            let hits: Vec<f64> = samples
                .iter()
                .map(|s| if s.sinr_linear >= beta { 1.0 } else { 0.0 })
                .collect();
            McEstimate::from_samples(&hits, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageSimulation {
        beta_grid_db: beta_grid_db.to_vec(),
        estimates,
        samples,
        accepted_backoffs,
        attempted: replications,
    })
}

/// Insertion-acceptance probability of a uniform test point into RSA
/// patterns grown to occupied fraction `theta` — the direct oracle for the
/// availability function.
pub fn mc_retention_probability(theta: f64, trials: u64, master_seed: u64) -> Result<McEstimate> {
    if !(0.0..=0.5).contains(&theta) {
        return Err(Error::CoverageOutOfRange(theta, "[0, 0.5]"));
    }
    // dimensionless geometry: d_inh = 1 on a 40 x 40 torus
    let side = 40.0;
    let window = Window::Torus { side_m: side };
    let n_patterns: u64 = 8;
    let trials_per = (trials / n_patterns).max(1);
    let fractions: Vec<f64> = (0..n_patterns)
        .into_par_iter()
        .map(|p| -> Result<f64> {
            let mut grow_rng = stream(master_seed, Purpose::RetentionGrowth, p);
            let points = grow_rsa_to_coverage(side, 1.0, theta, &mut grow_rng)?;
            let mut grid = SpatialGrid::new(&window, 1.0);
            for &q in &points {
                grid.insert(q);
            }
            let mut trial_rng = stream(master_seed, Purpose::RetentionTrials, p);
            let mut free = 0u64;
            for _ in 0..trials_per {
                let x = [
                    trial_rng.gen::<f64>() * side,
                    trial_rng.gen::<f64>() * side,
                ];
                if !grid.has_neighbor_within(x) {
                    free += 1;
                }
            }
            Ok(free as f64 / trials_per as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    McEstimate::from_samples(&fractions, master_seed)
}
