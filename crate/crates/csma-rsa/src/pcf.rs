//! Pair correlation function of the active-AP process: kinetic
//! integral-equation solver, empirical estimator, exponential fit, and the
//! tabulated fit parameters with interpolation.
//!
//! All radial coordinates in this module are in units of the inhibition
//! distance d_inh unless a `_m` suffix says otherwise.

use crate::error::{Error, Result};
use crate::geom::{Point, Window};
use crate::hankel::HankelGrid;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PcfSource {
    Numerical,
    Empirical,
}

/// Tabulated g(r) on a radial grid starting at 0, r in units of d_inh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcfTable {
    pub r_grid: Vec<f64>,
    pub g_values: Vec<f64>,
    /// Occupied fraction the table was produced at.
    pub coverage: f64,
    pub source: PcfSource,
}

/// Two-parameter exponential fit g(r) = 1 + c1 exp(-c2 (r - 1)), r >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcfFit {
    pub c1: f64,
    pub c2: f64,
    pub coverage: f64,
}

/// Evaluation of a pair correlation model at a radius in d_inh units.
/// Inside the hard core (r < 1) every implementation returns 0.
pub trait PairCorrelation {
    fn eval(&self, r_over_d: f64) -> f64;
}

impl PairCorrelation for PcfFit {
    fn eval(&self, r_over_d: f64) -> f64 {
        if r_over_d < 1.0 {
            0.0
        } else {
            1.0 + self.c1 * (-self.c2 * (r_over_d - 1.0)).exp()
        }
    }
}

impl PairCorrelation for PcfTable {
    fn eval(&self, r_over_d: f64) -> f64 {
        if r_over_d < 1.0 {
            return 0.0;
        }
        let n = self.r_grid.len();
        if n == 0 || r_over_d >= self.r_grid[n - 1] {
            return 1.0;
        }
        match self.r_grid.binary_search_by(|x| x.partial_cmp(&r_over_d).unwrap()) {
            Ok(i) => self.g_values[i],
            Err(i) => {
                if i == 0 {
                    self.g_values[0]
                } else {
                    let (r0, r1) = (self.r_grid[i - 1], self.r_grid[i]);
                    let t = (r_over_d - r0) / (r1 - r0);
                    self.g_values[i - 1] * (1.0 - t) + self.g_values[i] * t
                }
            }
        }
    }
}

/// Convenience front-end matching either representation.
pub fn pcf_eval<P: PairCorrelation + ?Sized>(model: &P, r_over_d: f64) -> f64 {
    model.eval(r_over_d)
}

/// Intensity of the non-homogeneous PPP seen from a typical active AP:
/// rho * g(r).
pub fn nonhom_intensity(rho_per_m2: f64, fit: &PcfFit, r_m: f64, d_inh_m: f64) -> f64 {
    rho_per_m2 * fit.eval(r_m / d_inh_m)
}

// Fitted (c1, c2) per occupied fraction, as published; kept verbatim
// including the non-monotone c2 entries.
pub const TABLE1_COVERAGE: [f64; 10] = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.547];
pub const TABLE1_C1: [f64; 10] = [0.14, 0.2, 0.28, 0.41, 0.47, 0.66, 0.87, 1.42, 1.83, 2.5];
pub const TABLE1_C2: [f64; 10] = [2.0, 2.8, 2.25, 4.0, 3.4, 3.96, 4.38, 5.92, 6.78, 7.24];

/// Linear interpolation of the tabulated (c1, c2) at the given coverage.
/// Below the first row the parameters are extrapolated linearly toward
/// (c1, c2) = (0, 2) at zero coverage, with a warning.
///
/// ```
/// use csma_rsa::pcf::{table1_interpolate, PairCorrelation};
///
/// let fit = table1_interpolate(0.3).unwrap();
/// assert_eq!((fit.c1, fit.c2), (0.47, 3.4));
/// assert_eq!(fit.eval(0.8), 0.0);          // hard core
/// assert!((fit.eval(1.0) - 1.47).abs() < 1e-12); // contact value 1 + c1
/// assert!((fit.eval(10.0) - 1.0).abs() < 1e-6);  // Poisson far field
/// ```
pub fn table1_interpolate(coverage: f64) -> Result<PcfFit> {
    if coverage > TABLE1_COVERAGE[9] {
        return Err(Error::CoverageOutOfRange(coverage, "[0, 0.547]"));
    }
    if coverage < 0.0 {
        return Err(Error::CoverageOutOfRange(coverage, "[0, 0.547]"));
    }
    let (c1, c2) = if coverage < TABLE1_COVERAGE[0] {
        eprintln!(
            "warning: coverage {coverage:.3} below the tabulated range; \
             extrapolating toward (c1, c2) = (0, 2) at zero coverage"
        );
        let t = coverage / TABLE1_COVERAGE[0];
        (TABLE1_C1[0] * t, 2.0 + (TABLE1_C2[0] - 2.0) * t)
    } else {
        let i = TABLE1_COVERAGE
            .iter()
            .rposition(|&x| x <= coverage)
            .unwrap()
            .min(8);
        let t = (coverage - TABLE1_COVERAGE[i]) / (TABLE1_COVERAGE[i + 1] - TABLE1_COVERAGE[i]);
        (
            TABLE1_C1[i] * (1.0 - t) + TABLE1_C1[i + 1] * t,
            TABLE1_C2[i] * (1.0 - t) + TABLE1_C2[i + 1] * t,
        )
    };
    Ok(PcfFit { c1, c2, coverage })
}

/// Solve the first-order kinetic closure for the pair statistics by
/// marching the coupled (Y2, C, h) system in density.
///
/// The march starts from the dilute initial condition h = f (h = -1 inside
/// the hard core, 0 outside) and advances `n_rho_steps` fixed steps to the
/// density matching `target_coverage`. Each step evaluates the radial
/// convolution through the Hankel grid, updates Y2 = 1 + rho * conv,
/// closes with C = f * Y2, and advances rho^2 h explicitly.
pub fn solve_pcf_numerical(
    target_coverage: f64,
    r_max: f64,
    n_r: usize,
    n_rho_steps: usize,
) -> Result<PcfTable> {
    if !(target_coverage > 0.0 && target_coverage <= 0.45) {
        return Err(Error::CoverageOutOfRange(target_coverage, "(0, 0.45]"));
    }
    if target_coverage > 0.40 {
        eprintln!(
            "warning: the first-order closure degrades above 40% coverage \
             (requested {target_coverage:.3})"
        );
    }
    let grid = HankelGrid::new(n_r, r_max);
    let f: Vec<f64> = grid.r.iter().map(|&r| if r < 1.0 { -1.0 } else { 0.0 }).collect();
    let rho_target = 4.0 * target_coverage / PI;
    let d_rho = rho_target / n_rho_steps as f64;
    let mut h = f.clone();
    let mut u = vec![0.0; n_r]; // rho^2 h
    let mut rho = 0.0;
    let mut y2 = vec![1.0; n_r];
    let contact_idx = grid.r.iter().position(|&r| r >= 1.0).unwrap();
    for _ in 0..n_rho_steps {
        let h_fwd = grid.forward(&h);
        // fixed-point refinement of the (Y2, C) pair at the current rho
        let mut conv = vec![0.0; n_r];
        for _ in 0..3 {
            let c: Vec<f64> = f.iter().zip(&y2).map(|(&fi, &yi)| fi * yi).collect();
            conv = grid.convolve(&c, &h_fwd);
            for j in 0..n_r {
                y2[j] = 1.0 + rho * conv[j];
            }
        }
        let c: Vec<f64> = f.iter().zip(&y2).map(|(&fi, &yi)| fi * yi).collect();
        for j in 0..n_r {
            u[j] += d_rho * 2.0 * rho * (c[j] + rho * conv[j]);
        }
        rho += d_rho;
        for j in 0..n_r {
            h[j] = u[j] / (rho * rho);
        }
        let max_h = h.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_h > 10.0 || h[contact_idx] + 1.0 < 0.0 {
            return Err(Error::PcfDiverged {
                rho,
                reason: format!("max|h| = {max_h:.3}, contact g = {:.3}", h[contact_idx] + 1.0),
            });
        }
        if y2.iter().any(|&v| v <= 0.0) {
            return Err(Error::PcfDiverged {
                rho,
                reason: "Y2 lost positivity".into(),
            });
        }
    }
    let g_values: Vec<f64> = grid
        .r
        .iter()
        .zip(&h)
        .map(|(&r, &hv)| if r < 1.0 { 0.0 } else { (hv + 1.0).max(0.0) })
        .collect();
    Ok(PcfTable {
        r_grid: grid.r,
        g_values,
        coverage: target_coverage,
        source: PcfSource::Numerical,
    })
}

/// Histogram estimator of g(r) from active-point sets on a torus. No edge
/// correction is needed; every ordered pair within `r_max` (in d_inh
/// units) is binned and normalized by N * rho * annulus area per pattern.
pub fn estimate_pcf(
    window: &Window,
    active_sets: &[Vec<Point>],
    d_inh_m: f64,
    bin_width: f64,
    r_max: f64,
) -> Result<PcfTable> {
    let side = match *window {
        Window::Torus { side_m } => side_m,
        _ => return Err(Error::Invalid("empirical PCF estimation requires a torus".into())),
    };
    if active_sets.is_empty() || active_sets.iter().all(|p| p.is_empty()) {
        return Err(Error::Invalid("no points supplied to the PCF estimator".into()));
    }
    let n_bins = (r_max / bin_width).ceil() as usize;
    let area = side * side;
    let mut g_sum = vec![0.0; n_bins];
    let mut n_patterns = 0usize;
    let mut coverage_sum = 0.0;
    let kappa = PI * (d_inh_m / 2.0) * (d_inh_m / 2.0);
    let r_max_m_sq = (r_max * d_inh_m) * (r_max * d_inh_m);
    for pts in active_sets {
        if pts.len() < 2 {
            continue;
        }
        let n = pts.len();
        let rho_hat = n as f64 / area;
        coverage_sum += rho_hat * kappa;
        let mut counts = vec![0u64; n_bins];
        for i in 0..n {
            for j in (i + 1)..n {
                let d_sq = window.distance_sq(pts[i], pts[j]);
                if d_sq < r_max_m_sq {
                    let bin = (d_sq.sqrt() / d_inh_m / bin_width) as usize;
                    if bin < n_bins {
                        counts[bin] += 2; // both directions
                    }
                }
            }
        }
        for (k, &c) in counts.iter().enumerate() {
            let r_lo = k as f64 * bin_width * d_inh_m;
            let r_hi = r_lo + bin_width * d_inh_m;
            let annulus = PI * (r_hi * r_hi - r_lo * r_lo);
            g_sum[k] += c as f64 / (n as f64 * rho_hat * annulus);
        }
        n_patterns += 1;
    }
    if n_patterns == 0 {
        return Err(Error::Invalid("all supplied patterns have fewer than 2 points".into()));
    }
    let r_grid: Vec<f64> = (0..n_bins).map(|k| (k as f64 + 0.5) * bin_width).collect();
    let g_values: Vec<f64> = g_sum.iter().map(|&s| s / n_patterns as f64).collect();
    Ok(PcfTable {
        r_grid,
        g_values,
        coverage: coverage_sum / n_patterns as f64,
        source: PcfSource::Empirical,
    })
}

/// Regression window for [`fit_exponential_windowed`]. Bins with
/// r < `r_min` are excluded; the window ends at the first bin whose g
/// falls below `stop_below_g` (the curve has decayed into estimator
/// noise or crossed into the anticorrelation trough, which the
/// exponential surrogate — g >= 1 by construction — cannot represent),
/// and never extends past `r_cut`.
#[derive(Debug, Clone, Copy)]
pub struct FitWindow {
    pub r_min: f64,
    pub stop_below_g: f64,
    pub r_cut: f64,
}

impl Default for FitWindow {
    /// Start at contact, stop once |g - 1| < 0.01, cap at r = 3.
    fn default() -> Self {
        FitWindow { r_min: 1.0, stop_below_g: 1.01, r_cut: 3.0 }
    }
}

/// Nonlinear least squares of g(r) = 1 + c1 exp(-c2 (r - 1)) over
/// r in [1, r_cut] by damped Gauss-Newton, where r_cut is the first bin
/// with |g - 1| < 0.01 (capped at 3).
pub fn fit_exponential(table: &PcfTable) -> Result<PcfFit> {
    fit_exponential_windowed(table, FitWindow::default())
}

pub fn fit_exponential_windowed(table: &PcfTable, window: FitWindow) -> Result<PcfFit> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (&r, &g) in table.r_grid.iter().zip(&table.g_values) {
        if r < window.r_min || r > window.r_cut {
            continue;
        }
        if g < window.stop_below_g {
            break;
        }
        pts.push((r, g));
    }
    if pts.len() < 5 {
        return Err(Error::Invalid(format!(
            "need at least 5 usable bins with r >= 1 (got {})",
            pts.len()
        )));
    }
    let mut c1 = (pts[0].1 - 1.0).max(1e-3);
    let mut c2 = 3.0;
    let sse = |c1: f64, c2: f64| -> f64 {
        pts.iter()
            .map(|&(r, g)| {
                let m = 1.0 + c1 * (-c2 * (r - 1.0)).exp();
                (g - m) * (g - m)
            })
            .sum()
    };
    let mut current = sse(c1, c2);
    for iter in 0..500 {
        // normal equations for the 2x2 Gauss-Newton step
        let (mut jtj11, mut jtj12, mut jtj22, mut jtr1, mut jtr2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(r, g) in &pts {
            let e = (-c2 * (r - 1.0)).exp();
            let resid = g - (1.0 + c1 * e);
            let j1 = e;
            let j2 = -c1 * (r - 1.0) * e;
            jtj11 += j1 * j1;
            jtj12 += j1 * j2;
            jtj22 += j2 * j2;
            jtr1 += j1 * resid;
            jtr2 += j2 * resid;
        }
        let det = jtj11 * jtj22 - jtj12 * jtj12;
        if det.abs() < 1e-300 {
            return Err(Error::FitDidNotConverge { iterations: iter, c1, c2 });
        }
        let dc1 = (jtj22 * jtr1 - jtj12 * jtr2) / det;
        let dc2 = (jtj11 * jtr2 - jtj12 * jtr1) / det;
        // damping: halve the step until the residual stops increasing
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let t1 = c1 + lambda * dc1;
            let t2 = c2 + lambda * dc2;
            if t2 > 0.0 && t1 > -1.0 {
                let trial = sse(t1, t2);
                if trial <= current {
                    c1 = t1;
                    c2 = t2;
                    current = trial;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted || (lambda * dc1.hypot(dc2)) < 1e-9 {
            return Ok(PcfFit {
                c1,
                c2,
                coverage: table.coverage,
            });
        }
    }
    Err(Error::FitDidNotConverge { iterations: 500, c1, c2 })
}

impl PcfTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r_over_dinh,g\n");
        for (r, g) in self.r_grid.iter().zip(&self.g_values) {
            out.push_str(&format!("{r},{g}\n"));
        }
        out
    }

    /// Root-mean-square deviation from another pair-correlation model over
    /// r in [lo, hi] on this table's grid.
    pub fn rmse_against<P: PairCorrelation>(&self, other: &P, lo: f64, hi: f64) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (&r, &g) in self.r_grid.iter().zip(&self.g_values) {
            if r >= lo && r <= hi {
                let d = g - other.eval(r);
                sum += d * d;
                n += 1;
            }
        }
        (sum / n as f64).sqrt()
    }
}

impl PcfFit {
    pub fn to_csv(&self) -> String {
        format!("coverage,c1,c2\n{},{},{}\n", self.coverage, self.c1, self.c2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{grow_rsa_to_coverage, sample_ppp};
    use crate::rng::{stream, Purpose};
    use approx::assert_relative_eq;

    #[test]
    fn table1_exact_rows_and_midpoint() {
        let f = table1_interpolate(0.2).unwrap();
        assert_relative_eq!(f.c1, 0.28);
        assert_relative_eq!(f.c2, 2.25);
        let f = table1_interpolate(0.547).unwrap();
        assert_relative_eq!(f.c1, 2.5);
        assert_relative_eq!(f.c2, 7.24);
        let f = table1_interpolate(0.225).unwrap();
        assert_relative_eq!(f.c1, 0.345, max_relative = 1e-12);
        assert!(table1_interpolate(0.6).is_err());
        // below-range extrapolation heads toward (0, 2)
        let f = table1_interpolate(0.05).unwrap();
        assert_relative_eq!(f.c1, 0.07, max_relative = 1e-12);
        assert_relative_eq!(f.c2, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn fit_eval_and_hard_core() {
        let fit = PcfFit { c1: 0.47, c2: 3.4, coverage: 0.3 };
        assert_eq!(fit.eval(0.5), 0.0);
        assert_relative_eq!(fit.eval(1.0), 1.47);
        assert!((fit.eval(50.0) - 1.0).abs() < 1e-12);
        assert_relative_eq!(
            nonhom_intensity(2.0, &fit, 100.0, 100.0),
            2.0 * 1.47,
            max_relative = 1e-12
        );
        assert_eq!(nonhom_intensity(2.0, &fit, 40.0, 100.0), 0.0);
    }

    #[test]
    fn table_interpolation() {
        let t = PcfTable {
            r_grid: vec![0.5, 1.5, 2.5],
            g_values: vec![0.0, 1.4, 1.0],
            coverage: 0.3,
            source: PcfSource::Empirical,
        };
        assert_eq!(t.eval(0.9), 0.0);
        assert_relative_eq!(t.eval(2.0), 1.2);
        assert_relative_eq!(t.eval(10.0), 1.0);
    }

    #[test]
    fn fit_round_trip_exact() {
        let r_grid: Vec<f64> = (0..60).map(|i| 1.0 + 0.05 * i as f64).collect();
        let g_values: Vec<f64> = r_grid.iter().map(|&r| 1.0 + 0.5 * (-3.0 * (r - 1.0)).exp()).collect();
        let table = PcfTable { r_grid, g_values, coverage: 0.3, source: PcfSource::Empirical };
        let fit = fit_exponential(&table).unwrap();
        assert_relative_eq!(fit.c1, 0.5, max_relative = 1e-6);
        assert_relative_eq!(fit.c2, 3.0, max_relative = 1e-6);
    }

    #[test]
    fn fit_with_noise() {
        use rand::Rng;
        let mut rng = stream(17, Purpose::PcfPattern, 0);
        let r_grid: Vec<f64> = (0..60).map(|i| 1.0 + 0.05 * i as f64).collect();
        let g_values: Vec<f64> = r_grid
            .iter()
            .map(|&r| 1.0 + 0.5 * (-3.0 * (r - 1.0)).exp() + (rng.gen::<f64>() - 0.5) * 0.02)
            .collect();
        let table = PcfTable { r_grid, g_values, coverage: 0.3, source: PcfSource::Empirical };
        let fit = fit_exponential(&table).unwrap();
        assert!((fit.c1 - 0.5).abs() < 0.05, "c1 = {}", fit.c1);
        assert!((fit.c2 - 3.0).abs() < 0.5, "c2 = {}", fit.c2);
    }

    #[test]
    fn fit_rejects_sparse_tables() {
        let table = PcfTable {
            r_grid: vec![1.0, 1.2],
            g_values: vec![1.5, 1.3],
            coverage: 0.3,
            source: PcfSource::Empirical,
        };
        assert!(fit_exponential(&table).is_err());
    }

    #[test]
    fn solver_vanishing_coverage_is_step_function() {
        let table = solve_pcf_numerical(1e-6, 8.0, 256, 10).unwrap();
        for (&r, &g) in table.r_grid.iter().zip(&table.g_values) {
            if r < 1.0 {
                assert_eq!(g, 0.0);
            } else {
                assert!((g - 1.0).abs() < 1e-3, "r={r} g={g}");
            }
        }
    }

    #[test]
    fn solver_contact_peak_at_intermediate_coverage() {
        let table = solve_pcf_numerical(0.3, 16.0, 1024, 200).unwrap();
        let contact = table.eval(1.02);
        assert!((1.2..1.8).contains(&contact), "contact g = {contact}");
        // decays toward 1 at the tail
        let tail = table.eval(table.r_grid[table.r_grid.len() - 1] - 0.5);
        assert!((tail - 1.0).abs() < 0.02, "tail g = {tail}");
        // monotone decay from contact region toward r = 2
        assert!(table.eval(1.5) < contact);
        assert!(table.eval(1.5) >= 1.0 - 0.05);
    }

    #[test]
    fn solver_rejects_high_coverage() {
        assert!(solve_pcf_numerical(0.5, 8.0, 128, 10).is_err());
    }

    #[test]
    fn empirical_ppp_is_flat() {
        let w = Window::Torus { side_m: 1000.0 };
        let sets: Vec<Vec<Point>> = (0..40)
            .map(|i| {
                sample_ppp(2e-3, &w, &mut stream(31, Purpose::PcfPattern, i))
                    .points
                    .iter()
                    .map(|p| p.position)
                    .collect()
            })
            .collect();
        let table = estimate_pcf(&w, &sets, 20.0, 0.25, 5.0).unwrap();
        for (&r, &g) in table.r_grid.iter().zip(&table.g_values) {
            assert!((g - 1.0).abs() < 0.05, "r={r} g={g}");
        }
    }

    #[test]
    fn empirical_rsa_has_hard_core() {
        let sets: Vec<Vec<Point>> = (0..5)
            .map(|i| {
                grow_rsa_to_coverage(30.0, 1.0, 0.3, &mut stream(37, Purpose::PcfPattern, i)).unwrap()
            })
            .collect();
        let w = Window::Torus { side_m: 30.0 };
        let table = estimate_pcf(&w, &sets, 1.0, 0.1, 4.0).unwrap();
        for (&r, &g) in table.r_grid.iter().zip(&table.g_values) {
            if r < 0.95 {
                assert_eq!(g, 0.0, "hard core violated at r={r}");
            }
        }
        assert!(table.eval(1.05) > 1.0);
    }

    #[test]
    fn estimator_rejects_empty_input() {
        let w = Window::Torus { side_m: 30.0 };
        assert!(estimate_pcf(&w, &[], 1.0, 0.1, 4.0).is_err());
        assert!(estimate_pcf(&w, &[vec![]], 1.0, 0.1, 4.0).is_err());
    }
}
