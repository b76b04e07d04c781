//! Photon-pair Monte Carlo for ranging without a returning photon.
//!
//! One photon of a polarization-anti-correlated pair flies to a target while
//! its partner is sampled at a sequence of locations along a delay path. If
//! the target collapses the pair with a bias, the H/V statistics of photon 2
//! change from the location whose optical path equals photon 1's flight, and
//! the adjacent-location correlation [`correlation::g_series`] steps up there.
//!
//! ```
//! use ranger_core::{correlation, engine, scheme::SchemeConfig};
//!
//! let config = engine::RunConfig {
//!     pairs: 200_000,
//!     scheme: SchemeConfig::chain(200, 0.005),
//!     hit_index: Some(120),
//!     ..Default::default()
//! };
//! let out = engine::run(&config).unwrap();
//! let (_, hit) = correlation::analyze(&out.counts, &config.scheme, 5.0, 50).unwrap();
//! assert!(hit.detected());
//! ```

pub mod correlation;
pub mod engine;
mod error;
pub mod quantum;
pub mod scheme;
pub mod stream;

pub use error::{Error, Result};
