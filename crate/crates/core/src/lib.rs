//! Analytic models and particle-based simulation of media-modulation
//! molecular communication with photoswitchable signaling molecules.
//!
//! The link is a duct in uniform flow. A transmitter illuminates a block of
//! the duct to switch molecules already present there from state B to
//! state A (on-off keying), the switched block drifts and diffuses
//! downstream, and a transparent receiver counts state-A molecules at the
//! sampling time `t_s = d/v`.
//!
//! - [`photochem`]: photon flux, Beer–Lambert switching, `p_switch`
//! - [`channel`]: hit probability `h(t)` and expected impulse response
//! - [`stats`]: binomial reception law and transmitter noise
//! - [`detect`]: threshold detection and bit error rate
//! - [`pbs`]: seeded particle simulation used to check all of the above
//! - [`harness`]: CSV experiment drivers for the `mediamod` binary

pub mod channel;
pub mod config;
pub mod detect;
pub mod error;
pub mod harness;
pub mod pbs;
pub mod photochem;
pub mod rng;
pub mod special;
pub mod stats;

pub use channel::{expected_cir, ChannelModel};
pub use config::{load_config, validate_static_assumption, Interval, SystemConfig, ValidityReport};
pub use detect::{ber_analytic, ber_empirical, detect, DetectorConfig, EmpiricalBer};
pub use error::{Error, Result};
pub use pbs::{run_ensemble, EnsembleStats, PbsEnsemble};
pub use photochem::SwitchingModel;
pub use stats::{Bit, LinkParams, ReceptionDistribution, Stage};
