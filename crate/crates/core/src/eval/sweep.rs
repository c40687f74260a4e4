//! One-step-ahead evaluation of the predictors on a trace.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::TraceBundle;
use crate::error::{Error, Result};
use crate::eval::complexity::{complexity_totals, ComplexityParams};
use crate::eval::metrics::{reliability_theta, spectral_efficiency, DEFAULT_BLOCKLENGTH};
use crate::predict::{olla_lpp_predict, predicted_sinr, LognormalModel, Method, MqPredictor, OllaLppState, PredictorConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    pub training_lens: Vec<usize>,
    pub test_len: usize,
    pub blocklength: u64,
    /// Wall times make result files differ between runs; off by default.
    pub record_wall_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1, 0.01, 0.001],
            training_lens: vec![1000],
            test_len: 5000,
            blocklength: DEFAULT_BLOCKLENGTH,
            record_wall_time: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("epsilons", "need at least one value in (0, 1)");
        }
        if self.training_lens.is_empty() || self.training_lens.contains(&0) {
            return bad("training_lens", "need at least one positive length");
        }
        if self.test_len < 2 {
            return bad("test_len", "must be at least 2");
        }
        if self.blocklength == 0 {
            return bad("blocklength", "must be at least 1");
        }
        Ok(())
    }

    pub fn max_training_len(&self) -> usize {
        self.training_lens.iter().copied().max().unwrap_or(0)
    }

    /// Trace length needed: the longest training window plus the test window.
    pub fn required_len(&self) -> usize {
        self.max_training_len() + self.test_len
    }
}

/// One row of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub method: String,
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub training_len: usize,
    pub seed: u64,
    pub theta: f64,
    pub avg_se: f64,
    pub op_count: u64,
    pub wall_time_s: f64,
}

/// Predicted outage IPVs and SINRs over a test window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPrediction {
    pub ipv: Vec<f64>,
    pub sinr: Vec<f64>,
    /// TTIs where an MQ predictor fell back to the unconditional marginal.
    pub fallbacks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowScore {
    pub theta: f64,
    pub avg_se: f64,
}

/// Scores predictions for TTIs `start..start + n`. TTI `start` is not scored,
/// matching [`reliability_theta`].
pub fn score_window(
    trace: &TraceBundle,
    start: usize,
    pred: &WindowPrediction,
    epsilon: f64,
    blocklength: u64,
) -> Result<WindowScore> {
    let n = pred.ipv.len();
    if pred.sinr.len() != n || start + n > trace.len() {
        return Err(Error::Domain("prediction window does not fit the trace".into()));
    }
    let actual = &trace.ipv.values()[start..start + n];
    let theta = reliability_theta(&pred.ipv, actual)?;
    let se: f64 = (1..n)
        .map(|k| spectral_efficiency(pred.sinr[k], pred.ipv[k] < actual[k], epsilon, blocklength))
        .sum();
    Ok(WindowScore { theta, avg_se: se / (n - 1) as f64 })
}

/// Perfect predictor: the actual IPV of every TTI.
pub fn oracle_prediction(trace: &TraceBundle, start: usize, n: usize) -> WindowPrediction {
    let ipv = trace.ipv.values()[start..start + n].to_vec();
    let sinr = (start..start + n)
        .map(|t| predicted_sinr(trace.signal_power(t), trace.ipv.values()[t], trace.noise_power_w))
        .collect();
    WindowPrediction { ipv, sinr, fallbacks: 0 }
}

enum Model {
    Mq(MqPredictor),
    Lognormal(LognormalModel),
    Olla,
}

/// Fitted predictor for one `(method, L)` pair, reused across epsilons.
pub struct FittedPredictor {
    cfg: PredictorConfig,
    model: Model,
    train_start: usize,
    start: usize,
    op_count: u64,
}

impl FittedPredictor {
    /// Fits on `trace[start - L .. start]`.
    pub fn fit(trace: &TraceBundle, cfg: &PredictorConfig, start: usize) -> Result<Self> {
        cfg.validate()?;
        let l = cfg.training_len;
        if l > start || start > trace.len() {
            return Err(Error::SeriesTooShort { needed: l, got: start.min(trace.len()) });
        }
        let train_start = start - l;
        let training = trace.ipv.slice(train_start, start)?;
        let (model, op_count) = match cfg.method {
            m if m.is_mq() => {
                let p = MqPredictor::fit(&training, cfg)?;
                let ops = complexity_totals(m, &ComplexityParams::from_fit(p.info()))?;
                (Model::Mq(p), ops)
            }
            Method::Lognormal => (Model::Lognormal(LognormalModel::fit(&training)?), l as f64),
            _ => (Model::Olla, 0.0),
        };
        Ok(Self { cfg: cfg.clone(), model, train_start, start, op_count: op_count.round() as u64 })
    }

    pub fn op_count(&self) -> u64 {
        self.op_count
    }

    /// One-step-ahead predictions for TTIs `start..start + n`.
    pub fn predict_window(&self, trace: &TraceBundle, n: usize, epsilon: f64) -> Result<WindowPrediction> {
        if self.start + n > trace.len() {
            return Err(Error::SeriesTooShort { needed: self.start + n, got: trace.len() });
        }
        let v = trace.ipv.values();
        let noise = trace.noise_power_w;
        let mut ipv = Vec::with_capacity(n);
        let mut sinr = Vec::with_capacity(n);
        let mut fallbacks = 0;
        match &self.model {
            Model::Mq(p) => {
                let k = p.n_prev();
                if self.start < k {
                    return Err(Error::SeriesTooShort { needed: k, got: self.start });
                }
                let mut recent = vec![0.0; k];
                for t in self.start..self.start + n {
                    for (j, r) in recent.iter_mut().enumerate() {
                        *r = v[t - 1 - j];
                    }
                    let pred = p.predict_or_marginal(&recent, epsilon)?;
                    fallbacks += pred.fallback as usize;
                    ipv.push(pred.ipv);
                    sinr.push(predicted_sinr(trace.signal_power(t), pred.ipv, noise));
                }
            }
            Model::Lognormal(m) => {
                let phi = m.predict(epsilon)?;
                for t in self.start..self.start + n {
                    ipv.push(phi);
                    sinr.push(predicted_sinr(trace.signal_power(t), phi, noise));
                }
            }
            Model::Olla => {
                // the training window warms up the filter and the offset
                let mut state = OllaLppState::new(v[self.train_start]);
                let mut ack = true;
                for t in self.train_start + 1..self.start + n {
                    let (pred, next) = olla_lpp_predict(
                        &state,
                        v[t - 1],
                        ack,
                        trace.signal_power(t),
                        noise,
                        self.cfg.alpha,
                        self.cfg.delta_ack_db,
                        epsilon,
                    );
                    state = next;
                    ack = pred.ipv >= v[t];
                    if t >= self.start {
                        ipv.push(pred.ipv);
                        sinr.push(pred.sinr);
                    }
                }
            }
        }
        Ok(WindowPrediction { ipv, sinr, fallbacks })
    }
}

/// Evaluates every `(method, epsilon, L)` point. All methods share the test
/// window `[max L, max L + T)`; each model is fitted once on the `L` samples
/// preceding it. Records come back in `(method, epsilon, L)` order.
pub fn run_sweep(
    trace: &TraceBundle,
    methods: &[PredictorConfig],
    cfg: &SweepConfig,
    seed: u64,
) -> Result<Vec<EvalRecord>> {
    cfg.validate()?;
    if methods.is_empty() {
        return Err(Error::Config("methods: need at least one predictor".into()));
    }
    if trace.len() < cfg.required_len() {
        return Err(Error::SeriesTooShort { needed: cfg.required_len(), got: trace.len() });
    }
    let start = cfg.max_training_len();
    let mut keyed = Vec::new();
    for (mi, method) in methods.iter().enumerate() {
        for (li, &l) in cfg.training_lens.iter().enumerate() {
            let pc = PredictorConfig { training_len: l, epsilon: cfg.epsilons[0], ..method.clone() };
            let clock = Instant::now();
            let fitted = FittedPredictor::fit(trace, &pc, start)?;
            let fit_time = clock.elapsed().as_secs_f64();
            for (ei, &eps) in cfg.epsilons.iter().enumerate() {
                let clock = Instant::now();
                let pred = fitted.predict_window(trace, cfg.test_len, eps)?;
                let score = score_window(trace, start, &pred, eps, cfg.blocklength)?;
                let elapsed = fit_time + clock.elapsed().as_secs_f64();
                if pred.fallbacks > 0 {
                    log::debug!("{} eps={eps} L={l}: {} unconditional fallbacks", pc.label(), pred.fallbacks);
                }
                let record = EvalRecord {
                    method: pc.label(),
                    epsilon: eps,
                    training_len: l,
                    seed,
                    theta: score.theta,
                    avg_se: score.avg_se,
                    op_count: fitted.op_count(),
                    wall_time_s: if cfg.record_wall_time { elapsed } else { 0.0 },
                };
                keyed.push(((mi, ei, li), record));
            }
        }
    }
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

pub fn write_results_csv<W: Write>(records: &[EvalRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record(["method", "epsilon", "L", "seed", "theta", "avg_se", "op_count", "wall_time_s"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<EvalRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate, NetworkConfig};

    fn small_trace(seed: u64) -> TraceBundle {
        let cfg = NetworkConfig { num_ttis: 1600, seed, ..Default::default() };
        simulate(&cfg).unwrap()
    }

    fn sweep_cfg() -> SweepConfig {
        SweepConfig { epsilons: vec![0.1, 0.01], training_lens: vec![300, 600], test_len: 1000, ..Default::default() }
    }

    #[test]
    fn oracle_is_never_violated() {
        let trace = small_trace(1);
        let pred = oracle_prediction(&trace, 500, 1000);
        let score = score_window(&trace, 500, &pred, 0.01, 128).unwrap();
        assert_eq!(score.theta, 0.0);
        let genie: f64 = (501..1500)
            .map(|t| spectral_efficiency(trace.sinr[t], false, 0.01, 128))
            .sum::<f64>()
            / 999.0;
        assert!((score.avg_se - genie).abs() < 1e-9 * genie.max(1.0));
    }

    #[test]
    fn grid_cardinality_order_and_determinism() {
        let trace = small_trace(2);
        let methods = vec![
            PredictorConfig { method: Method::MqKde, ..Default::default() },
            PredictorConfig { method: Method::Lognormal, ..Default::default() },
        ];
        let a = run_sweep(&trace, &methods, &sweep_cfg(), 2).unwrap();
        assert_eq!(a.len(), 8);
        let keys: Vec<(String, f64, usize)> = a.iter().map(|r| (r.method.clone(), r.epsilon, r.training_len)).collect();
        assert_eq!(keys[0], ("mq-kde".into(), 0.1, 300));
        assert_eq!(keys[1], ("mq-kde".into(), 0.1, 600));
        assert_eq!(keys[2], ("mq-kde".into(), 0.01, 300));
        assert_eq!(keys[4].0, "lognormal");
        let b = run_sweep(&trace, &methods, &sweep_cfg(), 2).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert!((0.0..=1.0).contains(&r.theta));
            assert!(r.avg_se >= 0.0);
            assert_eq!(r.wall_time_s, 0.0);
        }
    }

    #[test]
    fn results_csv_round_trip() {
        let trace = small_trace(3);
        let methods = vec![PredictorConfig { method: Method::OllaLpp, ..Default::default() }];
        let recs = run_sweep(&trace, &methods, &sweep_cfg(), 3).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,epsilon,L,seed,theta,avg_se,op_count,wall_time_s\n"));
        assert_eq!(read_results_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn short_trace_is_rejected() {
        let trace = small_trace(4);
        let cfg = SweepConfig { training_lens: vec![1000], test_len: 1000, ..Default::default() };
        let methods = vec![PredictorConfig::default()];
        assert!(matches!(run_sweep(&trace, &methods, &cfg, 4), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn olla_tracks_its_target() {
        let trace = simulate(&NetworkConfig { num_ttis: 12_000, seed: 5, ..Default::default() }).unwrap();
        let pc = PredictorConfig { method: Method::OllaLpp, training_len: 2000, delta_ack_db: 0.01, ..Default::default() };
        let fitted = FittedPredictor::fit(&trace, &pc, 2000).unwrap();
        let pred = fitted.predict_window(&trace, 10_000, 0.1).unwrap();
        let score = score_window(&trace, 2000, &pred, 0.1, 128).unwrap();
        assert!((score.theta - 0.1).abs() < 0.03, "theta {}", score.theta);
    }
}
