//! Outage interference predictors and MCS selection.

pub mod config;
pub mod lognormal;
pub mod mcs;
pub mod mq;
pub mod olla;

pub use config::{delta_nack, Method, PredictorConfig};
pub use lognormal::{lognormal_predict, LognormalModel};
pub use mcs::{read_mcs_table, select_mcs};
pub use mq::{conditional_density, outage_quantile, FitInfo, MqPrediction, MqPredictor, MIN_EVIDENCE};
pub use olla::{olla_lpp_predict, OllaLppState, OllaPrediction};

/// SINR implied by an outage IPV: `signal / (ipv + noise)`.
pub fn predicted_sinr(signal_power: f64, ipv: f64, noise_power: f64) -> f64 {
    signal_power / (ipv + noise_power)
}
