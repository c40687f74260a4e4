use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{PartitionPolicy, DEFAULT_EPS_KL, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MqEcdf,
    MqKde,
    MqSbsse,
    MqLcsb,
    OllaLpp,
    Lognormal,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::MqEcdf,
        Method::MqKde,
        Method::MqSbsse,
        Method::MqLcsb,
        Method::OllaLpp,
        Method::Lognormal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::MqEcdf => "mq-ecdf",
            Method::MqKde => "mq-kde",
            Method::MqSbsse => "mq-sbsse",
            Method::MqLcsb => "mq-lcsb",
            Method::OllaLpp => "olla-lpp",
            Method::Lognormal => "lognormal",
        }
    }

    /// Maximum-quantile methods that fit a conditional density.
    pub fn is_mq(self) -> bool {
        matches!(self, Method::MqEcdf | Method::MqKde | Method::MqSbsse | Method::MqLcsb)
    }

    /// Subsets per dimension used when the config leaves `subsets` unset.
    pub fn default_subsets(self) -> usize {
        match self {
            Method::MqLcsb => 4,
            Method::MqSbsse => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// One predictor with its knobs. In a sweep, `epsilon` and `training_len`
/// are overwritten per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub method: Method,
    /// Label written to result files; defaults to the method name.
    pub name: Option<String>,
    pub epsilon: f64,
    pub n_prev: usize,
    pub training_len: usize,
    /// Subsets per dimension for mq-sbsse and mq-lcsb.
    pub subsets: Option<usize>,
    pub policy: PartitionPolicy,
    pub eps_kl: f64,
    pub max_iter: usize,
    /// Low-pass coefficient of the OLLA-LPP interference filter.
    pub alpha: f64,
    /// OLLA step after an ACK, in dB.
    pub delta_ack_db: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            method: Method::MqKde,
            name: None,
            epsilon: 0.1,
            n_prev: 1,
            training_len: 1000,
            subsets: None,
            policy: PartitionPolicy::ValueBased,
            eps_kl: DEFAULT_EPS_KL,
            max_iter: DEFAULT_MAX_ITER,
            alpha: 0.1,
            delta_ack_db: 0.01,
        }
    }
}

impl PredictorConfig {
    pub fn new(method: Method, epsilon: f64, training_len: usize) -> Self {
        Self { method, epsilon, training_len, ..Default::default() }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.method.to_string())
    }

    pub fn subsets(&self) -> usize {
        self.subsets.unwrap_or_else(|| self.method.default_subsets())
    }

    /// OLLA step after a NACK, chosen so the long-run ACK rate is `1 - epsilon`.
    pub fn delta_nack_db(&self) -> f64 {
        delta_nack(self.delta_ack_db, self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: String| Err(Error::Config(format!("{key}: {why}")));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", format!("{} outside (0, 1)", self.epsilon));
        }
        if self.n_prev == 0 {
            return bad("n_prev", "must be at least 1".into());
        }
        if self.n_prev != 1 && self.method != Method::MqLcsb {
            return bad("n_prev", format!("{} supports a single conditioning lag only", self.method));
        }
        if self.training_len <= self.n_prev + 2 {
            return bad(
                "training_len",
                format!("{} must exceed n_prev + 2 = {}", self.training_len, self.n_prev + 2),
            );
        }
        if self.subsets == Some(0) {
            return bad("subsets", "must be at least 1".into());
        }
        if self.policy == PartitionPolicy::Explicit && matches!(self.method, Method::MqSbsse | Method::MqLcsb) {
            return bad("policy", "explicit subsets cannot be built from a trace".into());
        }
        if !(self.eps_kl > 0.0) {
            return bad("eps_kl", "must be positive".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha", format!("{} outside (0, 1]", self.alpha));
        }
        if !(self.delta_ack_db > 0.0 && self.delta_ack_db.is_finite()) {
            return bad("delta_ack_db", "must be positive".into());
        }
        Ok(())
    }
}

/// `-((1 - eps) / eps) delta_ack`.
pub fn delta_nack(delta_ack: f64, epsilon: f64) -> f64 {
    -(1.0 - epsilon) / epsilon * delta_ack
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
        assert!("mq-foo".parse::<Method>().is_err());
    }

    #[test]
    fn nack_step() {
        assert!((delta_nack(0.1, 0.1) + 0.9).abs() < 1e-15);
        let c = PredictorConfig { epsilon: 0.01, delta_ack_db: 0.01, ..Default::default() };
        assert!((c.delta_nack_db() + 0.99).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        PredictorConfig::default().validate().unwrap();
        let c = PredictorConfig { epsilon: 1.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.starts_with("epsilon")));
        let c = PredictorConfig { training_len: 3, ..Default::default() };
        assert!(c.validate().is_err());
        let c = PredictorConfig { n_prev: 2, ..Default::default() };
        assert!(c.validate().is_err());
        let c = PredictorConfig { n_prev: 2, method: Method::MqLcsb, ..Default::default() };
        c.validate().unwrap();
        let c = PredictorConfig { alpha: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_defaults_and_unknown_keys() {
        let c: PredictorConfig = serde_json::from_str(r#"{"method": "mq-lcsb", "policy": "count-based"}"#).unwrap();
        assert_eq!(c.subsets(), 4);
        assert_eq!(c.policy, PartitionPolicy::CountBased);
        assert_eq!(c.label(), "mq-lcsb");
        assert!(serde_json::from_str::<PredictorConfig>(r#"{"methd": "mq-kde"}"#).is_err());
    }
}
