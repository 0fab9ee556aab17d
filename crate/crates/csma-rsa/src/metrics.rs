//! Analytical network metrics: medium-access probability under sequential
//! and Matern type-II contention, and SINR coverage of the typical link.

use crate::availability::{solve_density, AvailabilityFunction};
use crate::error::{Error, Result};
use crate::pcf::{table1_interpolate, PairCorrelation, PcfFit};
use crate::quad::gauss_legendre_on;
use crate::radio::{derive_inhibition, InhibitionGeometry, RadioConfig};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Medium-access probability of the typical AP under sequential (RSA)
/// contention: the back-off average of the retention probability along the
/// density trajectory.
pub fn map_rsa(
    availability: &AvailabilityFunction,
    ap_density_per_m2: f64,
    geometry: &InhibitionGeometry,
) -> Result<f64> {
    // theta(t) on the composite-Simpson grid, then one Simpson pass.
    let n = 401;
    let t_grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let curve = solve_density(availability, ap_density_per_m2, geometry.kappa_m2, &t_grid)?;
    let h = 1.0 / (n - 1) as f64;
    let mut sum = 0.0;
    for (i, &theta) in curve.theta.iter().enumerate() {
        let w = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * availability.phi_fit(theta.min(availability.jamming_fraction))?;
    }
    Ok(sum * h / 3.0)
}

/// Medium-access probability under Matern type-II contention:
/// (1 - exp(-pi lambda d^2)) / (pi lambda d^2), with limit 1 at zero
/// density.
///
/// ```
/// use csma_rsa::metrics::map_mhpp2;
///
/// let a: f64 = 2.0; // lambda * pi * d_inh^2
/// let lam = a / (std::f64::consts::PI * 100.0f64 * 100.0);
/// let expected = (1.0 - (-a).exp()) / a;
/// assert!((map_mhpp2(lam, 100.0) - expected).abs() < 1e-12);
/// assert_eq!(map_mhpp2(0.0, 100.0), 1.0);
/// ```
pub fn map_mhpp2(ap_density_per_m2: f64, d_inh_m: f64) -> f64 {
    let a = PI * ap_density_per_m2 * d_inh_m * d_inh_m;
    if a == 0.0 {
        1.0
    } else {
        -(-a).exp_m1() / a
    }
}

/// Quadrature sizes for the coverage integral. The defaults satisfy the
/// node-doubling convergence check for every parameter set exercised by
/// the validation suite.
#[derive(Debug, Clone, Copy)]
pub struct CoverageOptions {
    /// Override of the noise power in mW; `Some(0.0)` gives pure SIR.
    pub sigma2_mw: Option<f64>,
    /// Truncation radius of the interference integral, in units of d_inh.
    pub r_max_over_d: f64,
    pub n_serving: usize,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        CoverageOptions {
            sigma2_mw: None,
            r_max_over_d: 20.0,
            n_serving: 64,
            n_radial: 256,
            n_angular: 64,
        }
    }
}

/// SINR coverage probability of the typical link for a linear threshold
/// `beta`, treating the interferers as a non-homogeneous PPP with radial
/// intensity `lambda_active * g(r)`.
pub fn coverage_probability(
    beta: f64,
    radio: &RadioConfig,
    lambda_active_per_m2: f64,
    fit: &PcfFit,
) -> Result<f64> {
    coverage_probability_opts(beta, radio, lambda_active_per_m2, fit, &CoverageOptions::default())
}

pub fn coverage_probability_opts(
    beta: f64,
    radio: &RadioConfig,
    lambda_active_per_m2: f64,
    fit: &PcfFit,
    opts: &CoverageOptions,
) -> Result<f64> {
    radio.validate()?;
    if !(lambda_active_per_m2 > 0.0) {
        return Err(Error::Invalid(format!(
            "lambda_active must be positive (got {lambda_active_per_m2})"
        )));
    }
    let coarse = coverage_once(beta, radio, lambda_active_per_m2, fit, opts)?;
    let doubled = CoverageOptions {
        n_serving: opts.n_serving * 2,
        n_radial: opts.n_radial * 2,
        n_angular: opts.n_angular * 2,
        ..*opts
    };
    let fine = coverage_once(beta, radio, lambda_active_per_m2, fit, &doubled)?;
    if (fine - coarse).abs() > 1e-4 {
        return Err(Error::QuadratureDiverged(format!(
            "coverage node-doubling delta {:.2e} at beta = {beta}",
            (fine - coarse).abs()
        )));
    }
    if !(0.0..=1.0).contains(&fine) {
        return Err(Error::QuadratureDiverged(format!(
            "coverage {fine} outside [0, 1] at beta = {beta}"
        )));
    }
    Ok(fine)
}

fn coverage_once(
    beta: f64,
    radio: &RadioConfig,
    lambda_active: f64,
    fit: &PcfFit,
    opts: &CoverageOptions,
) -> Result<f64> {
    let geo = derive_inhibition(radio)?;
    let alpha = radio.path_loss_exponent;
    let d = geo.d_inh_m;
    let r_inh = geo.r_inh_m;
    let sigma2 = opts.sigma2_mw.unwrap_or_else(|| radio.noise_power_mw());
    let pt = radio.tx_power_mw();
    let r_max = opts.r_max_over_d * d;

    let (r_nodes, r_weights) = gauss_legendre_on(opts.n_radial, 0.0, r_max);
    // the angular integrand is symmetric about theta = pi
    let (a_nodes, a_weights) = gauss_legendre_on(opts.n_angular, 0.0, PI);
    let cos_a: Vec<f64> = a_nodes.iter().map(|&a| a.cos()).collect();
    let (s_nodes, s_weights) = gauss_legendre_on(opts.n_serving, 0.0, r_inh);

    let mut total = 0.0;
    for (&r0, &w0) in s_nodes.iter().zip(&s_weights) {
        // interference exponent: int int g(dist) / (1 + (r/r0)^alpha / beta) r dtheta dr
        let mut interference = 0.0;
        for (&r, &wr) in r_nodes.iter().zip(&r_weights) {
            let frac = 1.0 / (1.0 + (r / r0).powf(alpha) / beta);
            let mut ang = 0.0;
            for (&ca, &wa) in cos_a.iter().zip(&a_weights) {
                let dist = (r * r + r0 * r0 - 2.0 * r * r0 * ca).sqrt();
                ang += wa * fit.eval(dist / d);
            }
            interference += wr * r * frac * 2.0 * ang;
        }
        interference += tail_integral(beta, alpha, r0, r_max)?;
        let noise_term = (-beta * sigma2 * r0.powf(alpha) / pt).exp();
        total += w0 * noise_term * (-lambda_active * interference).exp() * 2.0 * r0 / (r_inh * r_inh);
    }
    Ok(total)
}

/// Tail of the interference integral beyond r_max, with g taken as 1:
/// 2 pi \int_{r_max}^inf r / (1 + (r/r0)^alpha / beta) dr. The geometric
/// expansion of the denominator integrates term by term; the ratio
/// beta (r0/r_max)^alpha is far below 1 for every supported configuration.
fn tail_integral(beta: f64, alpha: f64, r0: f64, r_max: f64) -> Result<f64> {
    let x = beta * (r0 / r_max).powf(alpha);
    if x >= 0.5 {
        return Err(Error::QuadratureDiverged(format!(
            "tail expansion ratio {x:.3} too large; increase r_max"
        )));
    }
    let mut sum = 0.0;
    let mut term_pow = x; // (beta r0^alpha)^(n+1) r_max^(2 - alpha (n+1)) = x^(n+1) r_max^2
    let mut n = 0u32;
    loop {
        let term = term_pow * r_max * r_max / (alpha * (n as f64 + 1.0) - 2.0);
        let signed = if n % 2 == 0 { term } else { -term };
        sum += signed;
        if term < 1e-14 * sum.abs().max(1e-300) || n > 200 {
            break;
        }
        term_pow *= x;
        n += 1;
    }
    Ok(2.0 * PI * sum)
}

/// Coverage as a function of the threshold grid, with the analytical
/// parameters that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub beta_grid_db: Vec<f64>,
    pub p_cov: Vec<f64>,
    pub lambda_active_per_m2: f64,
    pub fit: PcfFit,
}

impl CoverageCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta_db,p_cov\n");
        for (b, p) in self.beta_grid_db.iter().zip(&self.p_cov) {
            out.push_str(&format!("{b},{p}\n"));
        }
        out
    }
}

/// Resolve the end-of-slot active density and the tabulated fit at that
/// coverage, then evaluate the coverage probability over the grid.
pub fn coverage_curve(
    availability: &AvailabilityFunction,
    beta_grid_db: &[f64],
    radio: &RadioConfig,
    ap_density_per_m2: f64,
    opts: &CoverageOptions,
) -> Result<CoverageCurve> {
    let geo = derive_inhibition(radio)?;
    let curve = solve_density(availability, ap_density_per_m2, geo.kappa_m2, &[1.0])?;
    let theta1 = curve.theta[0];
    let lambda_active = curve.rho[0];
    let fit = table1_interpolate(theta1)?;
    let p_cov = beta_grid_db
        .iter()
        .map(|&b_db| {
            coverage_probability_opts(10f64.powf(b_db / 10.0), radio, lambda_active, &fit, opts)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CoverageCurve {
        beta_grid_db: beta_grid_db.to_vec(),
        p_cov,
        lambda_active_per_m2: lambda_active,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::availability::AvailabilityFunction;
    use approx::assert_relative_eq;

    fn wlan_geometry() -> InhibitionGeometry {
        derive_inhibition(&RadioConfig::default_wlan()).unwrap()
    }

    #[test]
    fn map_rsa_limits_and_reference_values() {
        let av = AvailabilityFunction::standard();
        let geo = wlan_geometry();
        assert_relative_eq!(map_rsa(av, 0.0, &geo).unwrap(), 1.0, max_relative = 1e-10);
        // reference values from an independent adaptive integration of the
        // same kinetics (lambda pi d^2 in {0.5, 1, 2, 4, 8})
        let d2 = geo.d_inh_m * geo.d_inh_m;
        for (lpd2, expect) in [
            (0.5, 0.79812),
            (1.0, 0.66241),
            (2.0, 0.49344),
            (4.0, 0.32706),
            (8.0, 0.19648),
        ] {
            let lam = lpd2 / (PI * d2);
            let m = map_rsa(av, lam, &geo).unwrap();
            assert_relative_eq!(m, expect, max_relative = 2e-4);
        }
    }

    #[test]
    fn map_consistency_with_density() {
        // lambda_a * MAP equals the active density rho(1)
        let av = AvailabilityFunction::standard();
        let geo = wlan_geometry();
        for lam_kappa in [1.0, 5.0, 20.0] {
            let lam = lam_kappa / geo.kappa_m2;
            let m = map_rsa(av, lam, &geo).unwrap();
            let rho1 = solve_density(av, lam, geo.kappa_m2, &[1.0]).unwrap().rho[0];
            assert_relative_eq!(lam * m, rho1, max_relative = 1e-3);
        }
    }

    #[test]
    fn map_mhpp2_values() {
        assert_eq!(map_mhpp2(0.0, 100.0), 1.0);
        let lam = 1.0 / (PI * 100.0 * 100.0);
        assert_relative_eq!(map_mhpp2(lam, 100.0), 1.0 - (-1f64).exp(), max_relative = 1e-12);
        // tiny argument stays continuous at the limit
        assert!((map_mhpp2(1e-18, 100.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn map_rsa_dominates_mhpp2() {
        let av = AvailabilityFunction::standard();
        let geo = wlan_geometry();
        let d2 = geo.d_inh_m * geo.d_inh_m;
        let mut prev = 1.0 + 1e-9;
        for lpd2 in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let lam = lpd2 / (PI * d2);
            let rsa = map_rsa(av, lam, &geo).unwrap();
            assert!(rsa >= map_mhpp2(lam, geo.d_inh_m));
            assert!(rsa < prev, "map_rsa not strictly decreasing at {lpd2}");
            prev = rsa;
        }
    }

    #[test]
    fn coverage_low_threshold_is_one() {
        let radio = RadioConfig::default_wlan();
        let fit = PcfFit { c1: 0.47, c2: 3.4, coverage: 0.3 };
        let p = coverage_probability(1e-9, &radio, 2e-5, &fit).unwrap();
        assert!(p > 0.999, "p = {p}");
    }

    #[test]
    fn coverage_monotone_in_beta() {
        let radio = RadioConfig::default_wlan();
        let fit = PcfFit { c1: 0.47, c2: 3.4, coverage: 0.3 };
        let mut prev = 1.1;
        for b_db in [-10.0, 0.0, 10.0, 20.0] {
            let p = coverage_probability(10f64.powf(b_db / 10.0), &radio, 2e-5, &fit).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn coverage_against_independent_oracle() {
        // values computed with an independent high-order implementation of
        // the same double integral (different node layout and tail rule)
        let av = AvailabilityFunction::standard();
        let radio = RadioConfig::default_wlan();
        let cases = [
            (1e-4, -10.0, 0.994276),
            (1e-4, 0.0, 0.949048),
            (1e-4, 10.0, 0.711459),
            (1e-4, 20.0, 0.301949),
            (1e-3, -10.0, 0.990830),
            (1e-3, 0.0, 0.921318),
            (1e-3, 10.0, 0.615496),
            (1e-3, 20.0, 0.234120),
        ];
        for (lam, b_db, expect) in cases {
            let curve = coverage_curve(av, &[b_db], &radio, lam, &CoverageOptions::default()).unwrap();
            assert!(
                (curve.p_cov[0] - expect).abs() < 3e-3,
                "lam={lam} beta={b_db}: {} vs {expect}",
                curve.p_cov[0]
            );
        }
    }

    #[test]
    fn coverage_densification_lowers_curve() {
        let av = AvailabilityFunction::standard();
        let radio = RadioConfig::default_wlan();
        let grid = [0.0, 5.0, 10.0];
        let sparse = coverage_curve(av, &grid, &radio, 1e-4, &CoverageOptions::default()).unwrap();
        let dense = coverage_curve(av, &grid, &radio, 1e-3, &CoverageOptions::default()).unwrap();
        for i in 0..grid.len() {
            assert!(dense.p_cov[i] < sparse.p_cov[i]);
        }
    }

    #[test]
    fn coverage_scale_invariant_without_noise() {
        // joint rescaling of all distances by k with lambda scaled by k^-2
        // leaves the no-noise coverage unchanged
        let base = RadioConfig::default_wlan();
        let k: f64 = 2.0;
        let scaled = RadioConfig {
            tx_power_dbm: base.tx_power_dbm + 10.0 * k.powf(4.0).log10(),
            ..base
        };
        let fit = PcfFit { c1: 0.47, c2: 3.4, coverage: 0.3 };
        let opts = CoverageOptions { sigma2_mw: Some(0.0), ..Default::default() };
        let lam = 2e-5;
        for b_db in [0.0, 10.0] {
            let beta = 10f64.powf(b_db / 10.0);
            let a = coverage_probability_opts(beta, &base, lam, &fit, &opts).unwrap();
            let b = coverage_probability_opts(beta, &scaled, lam / (k * k), &fit, &opts).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
    }

    #[test]
    fn descending_grid_equals_reversed_ascending() {
        let av = AvailabilityFunction::standard();
        let radio = RadioConfig::default_wlan();
        let asc = coverage_curve(av, &[0.0, 5.0, 10.0], &radio, 1e-4, &CoverageOptions::default())
            .unwrap();
        let desc = coverage_curve(av, &[10.0, 5.0, 0.0], &radio, 1e-4, &CoverageOptions::default())
            .unwrap();
        let mut reversed = desc.p_cov.clone();
        reversed.reverse();
        assert_eq!(asc.p_cov, reversed);
    }
}
