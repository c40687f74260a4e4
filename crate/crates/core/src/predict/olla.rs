//! Outer-loop link adaptation with low-pass filtering of the interference.

use crate::channel::{db_to_linear, linear_to_db};
use crate::predict::config::delta_nack;

/// Filter memory and SINR offset of one OLLA-LPP stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OllaLppState {
    /// Filtered IPV for the current TTI.
    last: f64,
    /// Filtered IPV one TTI earlier.
    prev: f64,
    /// Offset added to the SINR estimate, in dB.
    delta_db: f64,
}

impl OllaLppState {
    /// Starts both filter taps at the first measured IPV with no offset.
    pub fn new(first_ipv: f64) -> Self {
        Self { last: first_ipv, prev: first_ipv, delta_db: 0.0 }
    }

    pub fn filtered_ipv(&self) -> f64 {
        self.last
    }

    pub fn delta_db(&self) -> f64 {
        self.delta_db
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OllaPrediction {
    /// Filtered IPV `phi_hat(t+1)`.
    pub filtered_ipv: f64,
    /// SINR estimate with the outer-loop offset applied (linear).
    pub sinr: f64,
    /// IPV implied by `sinr`: `S / sinr - noise`, floored at zero.
    pub ipv: f64,
}

/// One OLLA-LPP step. `ack` reports whether the transmission at TTI `t` was
/// decoded; `signal_power` is the useful power `|h g|^2 P` at `t+1`.
#[allow(clippy::too_many_arguments)]
pub fn olla_lpp_predict(
    state: &OllaLppState,
    measured_ipv: f64,
    ack: bool,
    signal_power: f64,
    noise_power: f64,
    alpha: f64,
    delta_ack_db: f64,
    epsilon: f64,
) -> (OllaPrediction, OllaLppState) {
    let filtered = alpha * measured_ipv + (1.0 - alpha) * state.prev;
    let step = if ack { delta_ack_db } else { delta_nack(delta_ack_db, epsilon) };
    let delta_db = state.delta_db + step;
    let sinr_db = linear_to_db(signal_power / (filtered + noise_power)) + delta_db;
    let sinr = db_to_linear(sinr_db);
    let ipv = (signal_power / sinr - noise_power).max(0.0);
    let next = OllaLppState { last: filtered, prev: state.last, delta_db };
    (OllaPrediction { filtered_ipv: filtered, sinr, ipv }, next)
}
