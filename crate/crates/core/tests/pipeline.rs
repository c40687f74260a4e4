use std::fs::File;
use std::io::BufReader;

use sbsse_core::channel::{simulate, NetworkConfig, TraceBundle};
use sbsse_core::eval::{oracle_prediction, read_results_csv, run_sweep, score_window, write_results_csv, SweepConfig};
use sbsse_core::predict::{Method, MqPredictor, PredictorConfig};

fn small_net(seed: u64) -> NetworkConfig {
    NetworkConfig { num_ttis: 2500, seed, ..Default::default() }
}

#[test]
fn trace_file_round_trip() {
    let cfg = small_net(3);
    let trace = simulate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    trace.write_csv(File::create(&path).unwrap()).unwrap();
    let back = TraceBundle::read_csv(BufReader::new(File::open(&path).unwrap()), cfg.noise_power_w()).unwrap();
    assert_eq!(back.ipv.values(), trace.ipv.values());
    assert_eq!(back.sinr, trace.sinr);
    assert_eq!(back.schedule, trace.schedule);
}

#[test]
fn every_method_sweeps_a_simulated_trace() {
    let trace = simulate(&small_net(11)).unwrap();
    let methods: Vec<_> = Method::ALL.iter().map(|&m| PredictorConfig { method: m, ..Default::default() }).collect();
    let cfg = SweepConfig { epsilons: vec![0.1, 0.01], training_lens: vec![500, 1000], test_len: 1500, ..Default::default() };
    let records = run_sweep(&trace, &methods, &cfg, 11).unwrap();
    assert_eq!(records.len(), Method::ALL.len() * 4);
    for r in &records {
        assert!((0.0..=1.0).contains(&r.theta), "{r:?}");
        assert!(r.avg_se >= 0.0 && r.avg_se.is_finite(), "{r:?}");
    }
    let mut buf = Vec::new();
    write_results_csv(&records, &mut buf).unwrap();
    assert_eq!(read_results_csv(buf.as_slice()).unwrap(), records);

    // no predictor beats the oracle on spectral efficiency at zero violations
    let oracle = oracle_prediction(&trace, 1000, 1500);
    let best = score_window(&trace, 1000, &oracle, 0.01, cfg.blocklength).unwrap();
    assert_eq!(best.theta, 0.0);
    for r in records.iter().filter(|r| r.epsilon == 0.01) {
        assert!(r.avg_se <= best.avg_se + 1e-12, "{r:?} vs {best:?}");
    }
}

#[test]
fn mq_density_integrates_to_one_on_trace() {
    let trace = simulate(&small_net(5)).unwrap();
    let training = trace.ipv.slice(0, 1500).unwrap();
    for m in [Method::MqKde, Method::MqSbsse, Method::MqLcsb] {
        let p = MqPredictor::fit(&training, &PredictorConfig::new(m, 0.01, 1500)).unwrap();
        let mass = p.joint().unwrap().total_mass();
        assert!((mass - 1.0).abs() < 1e-3, "{m}: {mass}");
        let lo = p.predict_unconditional(0.1).unwrap();
        let hi = p.predict_unconditional(0.01).unwrap();
        assert!(hi >= lo, "{m}: {lo} {hi}");
    }
}
