use std::f64::consts::SQRT_2;

use serde::Serialize;
use statrs::function::erf::erf_inv;

use crate::error::{Error, Result};
use crate::series::{IpvSeries, IPV_FLOOR_W};

/// Log-normal fit from the mean and standard deviation of the natural-log
/// training IPVs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LognormalModel {
    pub mu: f64,
    pub sigma: f64,
}

impl LognormalModel {
    pub fn fit(training: &IpvSeries) -> Result<Self> {
        let n = training.len();
        if n < 2 {
            return Err(Error::SeriesTooShort { needed: 2, got: n });
        }
        let logs: Vec<f64> = training.values().iter().map(|v| v.max(IPV_FLOOR_W).ln()).collect();
        let mu = logs.iter().sum::<f64>() / n as f64;
        let var = logs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self { mu, sigma: var.sqrt() })
    }

    /// `(1 - epsilon)`-quantile of the fitted log-normal.
    pub fn predict(&self, epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon {epsilon} outside (0, 1)")));
        }
        if self.sigma == 0.0 {
            return Ok(self.mu.exp());
        }
        Ok((erf_inv(1.0 - 2.0 * epsilon) * SQRT_2 * self.sigma + self.mu).exp())
    }
}

pub fn lognormal_predict(training: &IpvSeries, epsilon: f64) -> Result<f64> {
    LognormalModel::fit(training)?.predict(epsilon)
}
