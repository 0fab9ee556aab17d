//! Physical-layer configuration: transmit power, carrier sensing, path
//! loss, and the inhibition geometry they imply.

use crate::error::{Error, Result};
use crate::geom::Window;
use crate::units::{dbm_to_mw, noise_power_dbm};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub sense_threshold_dbm: f64,
    /// Path-loss exponent alpha; must exceed 2 for the interference
    /// integrals to converge.
    pub path_loss_exponent: f64,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub noise_figure_db: f64,
}

impl RadioConfig {
    /// Parameters used for the coverage validation runs: 20 dBm over
    /// 10 MHz, -65 dBm sense threshold, alpha = 4.
    pub fn default_wlan() -> Self {
        RadioConfig {
            tx_power_dbm: 20.0,
            sense_threshold_dbm: -65.0,
            path_loss_exponent: 4.0,
            bandwidth_hz: 10e6,
            noise_figure_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_loss_exponent <= 2.0 {
            return Err(Error::PathLossExponent(self.path_loss_exponent));
        }
        if self.tx_power_dbm <= self.sense_threshold_dbm {
            return Err(Error::DegenerateInhibition {
                tx_dbm: self.tx_power_dbm,
                threshold_dbm: self.sense_threshold_dbm,
            });
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth_hz must be positive (got {})",
                self.bandwidth_hz
            )));
        }
        Ok(())
    }

    pub fn tx_power_mw(&self) -> f64 {
        dbm_to_mw(self.tx_power_dbm)
    }

    /// Thermal noise power over the configured bandwidth, in milliwatts.
    pub fn noise_power_mw(&self) -> f64 {
        dbm_to_mw(noise_power_dbm(self.bandwidth_hz, self.noise_figure_db))
    }
}

/// Contention radius and the per-circle service geometry derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhibitionGeometry {
    /// Contention radius d_inh in meters.
    pub d_inh_m: f64,
    /// Service radius r_inh = d_inh / 2.
    pub r_inh_m: f64,
    /// Unique area per retained circle, pi * r_inh^2.
    pub kappa_m2: f64,
}

impl InhibitionGeometry {
    pub fn from_d_inh(d_inh_m: f64) -> Self {
        let r_inh_m = d_inh_m / 2.0;
        InhibitionGeometry {
            d_inh_m,
            r_inh_m,
            kappa_m2: std::f64::consts::PI * r_inh_m * r_inh_m,
        }
    }
}

/// Contention radius from the sensing condition tau_cs = P_t * l(d_inh),
/// i.e. d_inh = (P_t / tau_cs)^(1/alpha) with powers in linear units.
pub fn derive_inhibition(radio: &RadioConfig) -> Result<InhibitionGeometry> {
    radio.validate()?;
    let ratio = dbm_to_mw(radio.tx_power_dbm) / dbm_to_mw(radio.sense_threshold_dbm);
    let d_inh = ratio.powf(1.0 / radio.path_loss_exponent);
    Ok(InhibitionGeometry::from_d_inh(d_inh))
}

/// Power-law path loss l(r) = r^(-alpha), as a linear gain.
pub fn path_loss(r_m: f64, alpha: f64) -> Result<f64> {
    if r_m <= 0.0 {
        return Err(Error::PathLossSingularity(r_m));
    }
    Ok(r_m.powf(-alpha))
}

/// Deployment description shared by the analytical and simulation paths.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentConfig {
    /// Parent AP density lambda_a per square meter.
    pub ap_density_per_m2: f64,
    pub window: Window,
    pub master_seed: u64,
}

impl DeploymentConfig {
    pub fn validate(&self, geometry: &InhibitionGeometry) -> Result<()> {
        if !(self.ap_density_per_m2 >= 0.0) {
            return Err(Error::Config(format!(
                "ap_density_per_m2 must be non-negative (got {})",
                self.ap_density_per_m2
            )));
        }
        let dim = match self.window {
            Window::Torus { side_m } => side_m,
            Window::Disk { radius_m } => 2.0 * radius_m,
        };
        if dim <= 0.0 {
            return Err(Error::Config("window dimension must be positive".into()));
        }
        if dim < 10.0 * geometry.d_inh_m {
            eprintln!(
                "warning: window dimension {:.1} m is below 10*d_inh = {:.1} m; \
                 boundary effects will dominate",
                dim,
                10.0 * geometry.d_inh_m
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inhibition_distance_wlan_params() {
        // 20 dBm over -65 dBm at alpha = 4: d_inh = 10^(85/40)
        let geo = derive_inhibition(&RadioConfig::default_wlan()).unwrap();
        assert_relative_eq!(geo.d_inh_m, 10f64.powf(85.0 / 40.0), max_relative = 1e-12);
        assert_relative_eq!(geo.d_inh_m, 133.352, max_relative = 1e-4);
        assert_relative_eq!(geo.r_inh_m, geo.d_inh_m / 2.0);
        assert_relative_eq!(geo.kappa_m2, std::f64::consts::PI * geo.r_inh_m.powi(2));
    }

    #[test]
    fn inhibition_80db_ratio() {
        let radio = RadioConfig {
            tx_power_dbm: 15.0,
            sense_threshold_dbm: -65.0,
            ..RadioConfig::default_wlan()
        };
        let geo = derive_inhibition(&radio).unwrap();
        assert_relative_eq!(geo.d_inh_m, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_inhibition_rejected() {
        let radio = RadioConfig {
            tx_power_dbm: -65.0,
            sense_threshold_dbm: -65.0,
            ..RadioConfig::default_wlan()
        };
        assert!(matches!(
            derive_inhibition(&radio),
            Err(Error::DegenerateInhibition { .. })
        ));
    }

    #[test]
    fn small_alpha_rejected() {
        let radio = RadioConfig {
            path_loss_exponent: 2.0,
            ..RadioConfig::default_wlan()
        };
        assert!(matches!(
            derive_inhibition(&radio),
            Err(Error::PathLossExponent(_))
        ));
    }

    #[test]
    fn path_loss_values() {
        assert_relative_eq!(path_loss(1.0, 4.0).unwrap(), 1.0);
        assert_relative_eq!(path_loss(10.0, 4.0).unwrap(), 1e-4, max_relative = 1e-12);
        assert!(path_loss(0.0, 4.0).is_err());
        assert!(path_loss(-1.0, 4.0).is_err());
    }

    #[test]
    fn sensing_threshold_consistency() {
        // Received power at d_inh equals the sense threshold within 0.1 dB.
        let radio = RadioConfig::default_wlan();
        let geo = derive_inhibition(&radio).unwrap();
        let rx_mw = radio.tx_power_mw() * path_loss(geo.d_inh_m, 4.0).unwrap();
        let rx_dbm = crate::units::mw_to_dbm(rx_mw);
        assert!((rx_dbm - radio.sense_threshold_dbm).abs() < 0.1);
    }

    #[test]
    fn scale_consistency() {
        // Multiplying linear tx power by k^alpha multiplies d_inh by k.
        let base = RadioConfig::default_wlan();
        let geo0 = derive_inhibition(&base).unwrap();
        let k: f64 = 3.0;
        let boosted = RadioConfig {
            tx_power_dbm: base.tx_power_dbm + 10.0 * (k.powf(4.0)).log10(),
            ..base
        };
        let geo1 = derive_inhibition(&boosted).unwrap();
        assert_relative_eq!(geo1.d_inh_m, k * geo0.d_inh_m, max_relative = 1e-10);
    }

    #[test]
    fn path_loss_monotone() {
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let r = 0.5 * i as f64;
            let v = path_loss(r, 4.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        // strictly decreasing in alpha for r > 1
        assert!(path_loss(2.0, 3.0).unwrap() > path_loss(2.0, 4.0).unwrap());
    }
}
