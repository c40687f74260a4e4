//! Reliability, spectral efficiency, complexity counters and the sweep.

pub mod complexity;
pub mod metrics;
pub mod sweep;

pub use complexity::{complexity_dct, complexity_kde, complexity_root, complexity_totals, ComplexityParams};
pub use metrics::{
    blocklength_penalty, dispersion, q_inv, reliability_theta, spectral_efficiency, DEFAULT_BLOCKLENGTH,
};
pub use sweep::{
    oracle_prediction, read_results_csv, run_sweep, score_window, write_results_csv, EvalRecord, FittedPredictor,
    SweepConfig, WindowPrediction, WindowScore,
};
