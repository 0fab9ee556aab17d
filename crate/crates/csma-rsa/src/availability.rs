//! Available-surface (retention) probability of the RSA process and the
//! density kinetics built on it.
//!
//! Everything here is expressed in the occupied fraction
//! `theta = kappa * rho`, which makes the retention probability
//! independent of the inhibition distance.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Saturation value of the occupied fraction for 2-D disks.
pub const JAMMING_FRACTION: f64 = 0.5474;

/// Intersection area of two circles of radius `d` whose centers are `r`
/// apart; zero once the circles no longer overlap.
pub fn lens_area(r: f64, d: f64) -> f64 {
    if r >= 2.0 * d {
        return 0.0;
    }
    2.0 * d * d * (r / (2.0 * d)).acos() - (r / 2.0) * (4.0 * d * d - r * r).sqrt()
}

/// Shape of the polynomial factor that forces the fitted availability to
/// vanish at the jamming fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitForm {
    /// `(1 + b1 x + b2 x^2 + b3 x^3) (1 - x)^3` — vanishes cubically at
    /// jamming, which is what the insertion-acceptance simulation shows.
    CubicOfOneMinusX,
    /// `(1 + b1 x + b2 x^2 + b3 x^3) (1 - x^3)` — vanishes linearly.
    OneMinusXCubed,
}

impl FitForm {
    /// Coefficients of the vanishing factor as a polynomial in x.
    fn factor(self) -> [f64; 4] {
        match self {
            FitForm::CubicOfOneMinusX => [1.0, -3.0, 3.0, -1.0],
            FitForm::OneMinusXCubed => [1.0, 0.0, 0.0, -1.0],
        }
    }
}

/// Low-coverage series coefficients of the retention probability,
/// `phi(theta) = 1 + a1 theta + a2 theta^2 + a3 theta^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

fn series_coeffs() -> SeriesCoeffs {
    // Radial integrals in units of d_inh = 1, to 1e-10 relative tolerance.
    // i2 = int_1^2 2 pi r A2(r) dr, i3 = int_1^2 2 pi r A2(r)^2 dr.
    let i2 = adaptive_simpson(&|r| 2.0 * PI * r * lens_area(r, 1.0), 1.0, 2.0, 1e-10);
    let i3 = adaptive_simpson(
        &|r| 2.0 * PI * r * lens_area(r, 1.0) * lens_area(r, 1.0),
        1.0,
        2.0,
        1e-10,
    );
    // With rho = 4 theta / pi:
    //   first order:  pi d^2 rho                    -> -4 theta
    //   second order: (rho^2 / 2) i2                -> a2 theta^2
    //   third order:  (rho^3 / 3) i3 - S3_eq        -> a3 theta^3
    // where S3_eq = (rho^3 / 8) pi (sqrt(3) pi - 14/3).
    let a2 = 8.0 * i2 / (PI * PI);
    let s3_eq = (PI / 8.0) * (3f64.sqrt() * PI - 14.0 / 3.0);
    let a3 = (64.0 / (PI * PI * PI)) * (i3 / 3.0 - s3_eq);
    SeriesCoeffs { a1: -4.0, a2, a3 }
}

/// Retention probability: truncated series plus the fitted form valid over
/// the whole coverage range.
///
/// ```
/// use csma_rsa::availability::AvailabilityFunction;
///
/// let av = AvailabilityFunction::standard();
/// assert_eq!(av.phi_fit(0.0).unwrap(), 1.0);
/// assert!(av.phi_fit(av.jamming_fraction).unwrap() < 1e-12);
/// // series and fit agree closely at low coverage
/// let (s, f) = (av.phi_series(0.1).unwrap(), av.phi_fit(0.1).unwrap());
/// assert!((s - f).abs() < 1e-3);
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityFunction {
    pub series: SeriesCoeffs,
    pub fit_form: FitForm,
    /// (b1, b2, b3) of the fitted polynomial prefactor.
    pub fit_coeffs: [f64; 3],
    pub jamming_fraction: f64,
}

/// Match the fitted form to the series through theta^3. With
/// `x = theta / jamming` the series reads `1 + s1 x + s2 x^2 + s3 x^3`;
/// equating coefficients against the product of the prefactor and the
/// vanishing factor gives a triangular system in (b1, b2, b3).
pub fn match_fit_coeffs(series: &SeriesCoeffs, form: FitForm) -> Result<[f64; 3]> {
    let x = JAMMING_FRACTION;
    let s = [series.a1 * x, series.a2 * x * x, series.a3 * x * x * x];
    let q = form.factor();
    if q[0].abs() < 1e-14 {
        return Err(Error::Invalid("singular fit-matching system".into()));
    }
    let b1 = (s[0] - q[1]) / q[0];
    let b2 = (s[1] - b1 * q[1] - q[2]) / q[0];
    let b3 = (s[2] - b2 * q[1] - b1 * q[2] - q[3]) / q[0];
    Ok([b1, b2, b3])
}

impl AvailabilityFunction {
    pub fn with_form(form: FitForm) -> Self {
        let series = series_coeffs();
        let fit_coeffs = match_fit_coeffs(&series, form).expect("non-singular for both forms");
        AvailabilityFunction {
            series,
            fit_form: form,
            fit_coeffs,
            jamming_fraction: JAMMING_FRACTION,
        }
    }

    /// The default form, `(1 + b1 x + b2 x^2 + b3 x^3)(1 - x)^3`, selected
    /// by minimizing the maximum deviation from the insertion-acceptance
    /// simulation over theta in [0.05, 0.5] (max deviation ~0.009 against
    /// ~0.22 for the alternative).
    pub fn standard() -> &'static Self {
        static INSTANCE: OnceLock<AvailabilityFunction> = OnceLock::new();
        INSTANCE.get_or_init(|| AvailabilityFunction::with_form(FitForm::CubicOfOneMinusX))
    }

    /// Truncated series, valid for low to intermediate coverage.
    pub fn phi_series(&self, theta: f64) -> Result<f64> {
        if !(0.0..self.jamming_fraction).contains(&theta) {
            return Err(Error::CoverageOutOfRange(theta, "[0, jamming)"));
        }
        let SeriesCoeffs { a1, a2, a3 } = self.series;
        Ok(1.0 + a1 * theta + a2 * theta * theta + a3 * theta * theta * theta)
    }

    /// Fitted form, valid over the whole coverage range; exactly 1 at
    /// theta = 0 and exactly 0 at the jamming fraction.
    pub fn phi_fit(&self, theta: f64) -> Result<f64> {
        if !(0.0..=self.jamming_fraction).contains(&theta) {
            return Err(Error::CoverageOutOfRange(theta, "[0, jamming]"));
        }
        Ok(self.phi_fit_unchecked(theta))
    }

    fn phi_fit_unchecked(&self, theta: f64) -> f64 {
        let x = theta / self.jamming_fraction;
        let [b1, b2, b3] = self.fit_coeffs;
        let pre = 1.0 + b1 * x + b2 * x * x + b3 * x * x * x;
        let q = self.fit_form.factor();
        let factor = q[0] + q[1] * x + q[2] * x * x + q[3] * x * x * x;
        let v = pre * factor;
        if v < 0.0 && v > -1e-12 {
            0.0
        } else {
            v
        }
    }

    /// phi_fit with theta clamped into the valid range; used inside the
    /// ODE right-hand side where Runge-Kutta stages may step past jamming.
    fn phi_fit_clamped(&self, theta: f64) -> f64 {
        self.phi_fit_unchecked(theta.clamp(0.0, self.jamming_fraction))
    }
}

/// RSA density over the contention slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityCurve {
    pub time_grid: Vec<f64>,
    /// Active density per square meter at each grid time.
    pub rho: Vec<f64>,
    /// Occupied fraction kappa * rho.
    pub theta: Vec<f64>,
}

impl DensityCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,rho_per_m2,theta\n");
        for i in 0..self.time_grid.len() {
            out.push_str(&format!("{},{},{}\n", self.time_grid[i], self.rho[i], self.theta[i]));
        }
        out
    }
}

/// Integrate d rho / dt = lambda * phi_fit(kappa rho) from rho(0) = 0 with
/// classical RK4, refining the step until the occupied fraction at t = 1
/// changes by less than 1e-6, and sample the result on `t_grid`.
///
/// ```
/// use csma_rsa::availability::{solve_density, AvailabilityFunction};
///
/// let av = AvailabilityFunction::standard();
/// // dimensionless run: kappa = 1, lambda*kappa = 5
/// let curve = solve_density(av, 5.0, 1.0, &[0.0, 0.5, 1.0]).unwrap();
/// assert_eq!(curve.theta[0], 0.0);
/// assert!((curve.theta[2] - 0.4531).abs() < 1e-3);
/// ```
pub fn solve_density(
    availability: &AvailabilityFunction,
    arrival_density_per_m2: f64,
    kappa_m2: f64,
    t_grid: &[f64],
) -> Result<DensityCurve> {
    if !(arrival_density_per_m2 >= 0.0) {
        return Err(Error::Invalid(format!(
            "arrival density must be non-negative (got {arrival_density_per_m2})"
        )));
    }
    let rate = arrival_density_per_m2 * kappa_m2; // d theta / dt = rate * phi(theta)
    let t_end = t_grid.iter().cloned().fold(1.0f64, f64::max);
    let theta_at = |n_steps: usize| -> Vec<f64> {
        let h = t_end / n_steps as f64;
        let mut theta = 0.0;
        let mut out = Vec::with_capacity(n_steps + 1);
        out.push(0.0);
        let f = |th: f64| rate * availability.phi_fit_clamped(th);
        for _ in 0..n_steps {
            let k1 = f(theta);
            let k2 = f(theta + 0.5 * h * k1);
            let k3 = f(theta + 0.5 * h * k2);
            let k4 = f(theta + h * k3);
            theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            theta = theta.min(JAMMING_FRACTION);
            out.push(theta);
        }
        out
    };
    let mut n_steps = 256;
    let mut fine = theta_at(n_steps);
    loop {
        let finer = theta_at(2 * n_steps);
        if (finer[finer.len() - 1] - fine[fine.len() - 1]).abs() < 1e-6 || n_steps >= 1 << 16 {
            fine = finer;
            n_steps *= 2;
            break;
        }
        n_steps *= 2;
        fine = finer;
    }
    let h = t_end / n_steps as f64;
    let sample = |t: f64| -> f64 {
        let s = (t / h).clamp(0.0, n_steps as f64);
        let i = (s.floor() as usize).min(n_steps - 1);
        let frac = s - i as f64;
        fine[i] * (1.0 - frac) + fine[i + 1] * frac
    };
    let theta: Vec<f64> = t_grid.iter().map(|&t| sample(t)).collect();
    let rho = theta
        .iter()
        .map(|&th| if kappa_m2 > 0.0 { th / kappa_m2 } else { 0.0 })
        .collect();
    Ok(DensityCurve {
        time_grid: t_grid.to_vec(),
        rho,
        theta,
    })
}

/// Evenly spaced time grid over [0, 1] with `n` points.
pub fn uniform_time_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}
