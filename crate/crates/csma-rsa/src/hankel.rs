//! Zeroth-order Hankel transform pair on a uniform radial grid.
//!
//! An isotropic 2-D convolution reduces to a pointwise product under the
//! zeroth-order Hankel transform, which is how the pair-correlation march
//! evaluates its convolution integral at every density step.

use libm::j0;

pub struct HankelGrid {
    pub r: Vec<f64>,
    pub k: Vec<f64>,
    dr: f64,
    dk: f64,
    /// J0(k_i r_j), row-major over k.
    bessel: Vec<f64>,
}

impl HankelGrid {
    pub fn new(n: usize, r_max: f64) -> Self {
        let dr = r_max / n as f64;
        let r: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * dr).collect();
        // conjugate grid up to the Nyquist-like limit pi / dr
        let dk = std::f64::consts::PI / r_max;
        let k: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dk).collect();
        let mut bessel = vec![0.0; n * n];
        for (i, &ki) in k.iter().enumerate() {
            for (j, &rj) in r.iter().enumerate() {
                bessel[i * n + j] = j0(ki * rj);
            }
        }
        HankelGrid { r, k, dr, dk, bessel }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// F(k_i) = 2 pi \int f(r) J0(k_i r) r dr
    pub fn forward(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = &self.bessel[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * f[j] * self.r[j];
            }
            out[i] = 2.0 * std::f64::consts::PI * acc * self.dr;
        }
        out
    }

    /// f(r_j) = (1 / 2 pi) \int F(k) J0(k r_j) k dk
    pub fn inverse(&self, big_f: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = &self.bessel[i * n..(i + 1) * n];
            let w = big_f[i] * self.k[i];
            for j in 0..n {
                out[j] += row[j] * w;
            }
        }
        let scale = self.dk / (2.0 * std::f64::consts::PI);
        for v in &mut out {
            *v *= scale;
        }
        out
    }

    /// 2-D radial convolution of two radial functions sampled on the grid.
    pub fn convolve(&self, f: &[f64], g_fwd: &[f64]) -> Vec<f64> {
        let ff = self.forward(f);
        let prod: Vec<f64> = ff.iter().zip(g_fwd).map(|(a, b)| a * b).collect();
        self.inverse(&prod)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_self_convolution() {
        // conv of exp(-r^2) with itself is (pi/2) exp(-r^2/2)
        let grid = HankelGrid::new(1024, 12.0);
        let f: Vec<f64> = grid.r.iter().map(|&r| (-r * r).exp()).collect();
        let ff = grid.forward(&f);
        let conv = grid.convolve(&f, &ff);
        for (j, &r) in grid.r.iter().enumerate().step_by(40) {
            if r > 6.0 {
                break;
            }
            let expect = std::f64::consts::PI / 2.0 * (-r * r / 2.0).exp();
            assert!(
                (conv[j] - expect).abs() < 8e-3,
                "r={r}: got {} expect {expect}",
                conv[j]
            );
        }
    }

    #[test]
    fn unit_disk_transform() {
        // Hankel transform of the unit-disk indicator is 2 pi J1(k)/k
        let grid = HankelGrid::new(1024, 16.0);
        let f: Vec<f64> = grid.r.iter().map(|&r| if r < 1.0 { 1.0 } else { 0.0 }).collect();
        let ff = grid.forward(&f);
        for (i, &k) in grid.k.iter().enumerate().step_by(64) {
            if k > 20.0 {
                break;
            }
            let expect = 2.0 * std::f64::consts::PI * libm::j1(k) / k;
            assert!((ff[i] - expect).abs() < 5e-3, "k={k}: {} vs {expect}", ff[i]);
        }
    }
}
