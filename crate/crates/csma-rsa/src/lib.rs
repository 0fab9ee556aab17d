//! Analytical and simulation toolkit for dense CSMA networks modeled as a
//! random sequential adsorption (RSA) process.
//!
//! The crate has two halves that check each other:
//!
//! * analytical: retention probability and density kinetics
//!   ([`availability`]), pair correlation ([`pcf`]), medium-access and
//!   SINR coverage probabilities ([`metrics`]);
//! * simulation: Poisson sampling and hard-core thinning ([`process`]),
//!   replicated Monte Carlo estimators with confidence intervals ([`mc`]).
//!
//! ```
//! use csma_rsa::radio::{derive_inhibition, RadioConfig};
//!
//! let geo = derive_inhibition(&RadioConfig::default_wlan()).unwrap();
//! assert!((geo.d_inh_m - 133.35).abs() < 0.01);
//! ```

pub mod availability;
pub mod error;
pub mod geom;
pub mod hankel;
pub mod mc;
pub mod metrics;
pub mod pcf;
pub mod process;
pub mod quad;
pub mod radio;
pub mod rng;
pub mod units;
pub mod validation;

pub use error::{Error, Result};
