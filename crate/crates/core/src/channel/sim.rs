//! Rice-fading multi-cell downlink with MRT precoding and round-robin
//! scheduling. The victim UE sits in cell 0 and is served every TTI.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::config::NetworkConfig;
use crate::channel::mrt::{effective_gain, mrt_precoder};
use crate::error::{Error, Result};
use crate::series::{column, parse_field, IpvSeries, IPV_FLOOR_W};

/// UEs closer than this to their gNB are redrawn.
const MIN_DISTANCE_M: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceBundle {
    pub ipv: IpvSeries,
    /// Victim SINR per TTI (linear).
    pub sinr: Vec<f64>,
    /// Served-UE index of every cell, one row per TTI.
    pub schedule: Vec<Vec<usize>>,
    /// UE count per cell; cell 0 only holds the victim.
    pub ues_per_cell: Vec<usize>,
    pub noise_power_w: f64,
}

impl TraceBundle {
    pub fn len(&self) -> usize {
        self.sinr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sinr.is_empty()
    }

    /// Useful received power `rho (phi + sigma^2)` at TTI `t`.
    pub fn signal_power(&self, t: usize) -> f64 {
        self.sinr[t] * (self.ipv.values()[t] + self.noise_power_w)
    }

    /// Writes `tti,ipv_watts,sinr_linear,sched_cell0,...`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let cells = self.ues_per_cell.len();
        let mut header = vec!["tti".to_string(), "ipv_watts".into(), "sinr_linear".into()];
        header.extend((0..cells).map(|c| format!("sched_cell{c}")));
        w.write_record(&header)?;
        let t0 = self.ipv.tti_start();
        for (t, (phi, rho)) in self.ipv.values().iter().zip(&self.sinr).enumerate() {
            let mut rec = vec![(t0 + t as i64).to_string(), phi.to_string(), rho.to_string()];
            rec.extend(self.schedule[t].iter().map(|s| s.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a trace written by [`TraceBundle::write_csv`]. The noise power is
    /// not part of the file and must come from the scenario.
    pub fn read_csv<R: Read>(reader: R, noise_power_w: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let tti_col = column(&headers, "tti")?;
        let ipv_col = column(&headers, "ipv_watts")?;
        let sinr_col = column(&headers, "sinr_linear")?;
        let mut sched_cols = Vec::new();
        while let Ok(c) = column(&headers, &format!("sched_cell{}", sched_cols.len())) {
            sched_cols.push(c);
        }
        let (mut ipv, mut sinr, mut schedule) = (Vec::new(), Vec::new(), Vec::new());
        let mut tti_start = 0;
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if line == 0 {
                tti_start = parse_field(&rec, tti_col, line)?;
            }
            ipv.push(parse_field(&rec, ipv_col, line)?);
            sinr.push(parse_field(&rec, sinr_col, line)?);
            schedule.push(
                sched_cols
                    .iter()
                    .map(|&c| parse_field(&rec, c, line))
                    .collect::<Result<Vec<usize>>>()?,
            );
        }
        // the file only records served indices; counts are inferred from them
        let ues_per_cell = (0..sched_cols.len())
            .map(|c| schedule.iter().map(|s| s[c] + 1).max().unwrap_or(1))
            .collect();
        Ok(Self { ipv: IpvSeries::new(ipv, tti_start)?, sinr, schedule, ues_per_cell, noise_power_w })
    }
}

/// gNB positions on a square lattice, nearest to the origin first.
pub fn cell_positions(num_cells: usize, isd: f64) -> Vec<(f64, f64)> {
    let r = (num_cells as f64).sqrt().ceil() as i64;
    let mut pts: Vec<(i64, i64)> = (-r..=r).flat_map(|i| (-r..=r).map(move |j| (i, j))).collect();
    pts.sort_by_key(|&(i, j)| (i * i + j * j, i, j));
    pts.into_iter()
        .take(num_cells)
        .map(|(i, j)| (i as f64 * isd, j as f64 * isd))
        .collect()
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One gNB-to-UE link: fixed line-of-sight part plus an AR(1) scattered part.
struct Link {
    los: Vec<Complex64>,
    scatter: Vec<Complex64>,
    los_weight: f64,
    nlos_weight: f64,
}

impl Link {
    fn new(gnb: (f64, f64), ue: (f64, f64), cfg: &NetworkConfig, rng: &mut ChaCha8Rng) -> Self {
        let (dx, dy) = (ue.0 - gnb.0, ue.1 - gnb.1);
        let gain = cfg.pathloss_gain(dx.hypot(dy));
        let angle = dy.atan2(dx);
        let phase = rng.random::<f64>() * 2.0 * PI;
        // half-wavelength uniform linear array
        let los = (0..cfg.antennas_per_gnb)
            .map(|a| Complex64::from_polar(1.0, phase + PI * a as f64 * angle.sin()))
            .collect();
        let scatter = (0..cfg.antennas_per_gnb).map(|_| complex_normal(rng)).collect();
        let k = cfg.rice_k();
        Self {
            los,
            scatter,
            los_weight: (gain * k / (k + 1.0)).sqrt(),
            nlos_weight: (gain / (k + 1.0)).sqrt(),
        }
    }

    fn channel(&self) -> Vec<Complex64> {
        self.los
            .iter()
            .zip(&self.scatter)
            .map(|(l, w)| l * self.los_weight + w * self.nlos_weight)
            .collect()
    }

    fn evolve(&mut self, a: f64, rng: &mut ChaCha8Rng) {
        let innovation = (1.0 - a * a).sqrt();
        for w in &mut self.scatter {
            *w = *w * a + complex_normal(rng) * innovation;
        }
    }
}

fn uniform_in_cell(center: (f64, f64), isd: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let x = (rng.random::<f64>() - 0.5) * isd;
        let y = (rng.random::<f64>() - 0.5) * isd;
        if x.hypot(y) >= MIN_DISTANCE_M.min(0.25 * isd) {
            return (center.0 + x, center.1 + y);
        }
    }
}

/// Generates the victim's IPV and SINR trace. Deterministic in `cfg.seed`.
pub fn simulate(cfg: &NetworkConfig) -> Result<TraceBundle> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let isd = cfg.inter_site_distance_m;
    let cells = cell_positions(cfg.num_cells, isd);
    let p = cfg.tx_power_w();
    let noise = cfg.noise_power_w();
    let [lo, hi] = cfg.ues_per_cell_range;

    let victim = uniform_in_cell(cells[0], isd, &mut rng);
    let mut serving = Link::new(cells[0], victim, cfg, &mut rng);
    let mut ues_per_cell = vec![1];
    let mut own: Vec<Vec<Link>> = vec![Vec::new()];
    let mut cross: Vec<Link> = Vec::new();
    for &gnb in &cells[1..] {
        let k = rng.random_range(lo..=hi);
        ues_per_cell.push(k);
        own.push(
            (0..k)
                .map(|_| {
                    let ue = uniform_in_cell(gnb, isd, &mut rng);
                    Link::new(gnb, ue, cfg, &mut rng)
                })
                .collect(),
        );
        cross.push(Link::new(gnb, victim, cfg, &mut rng));
    }

    let a = cfg.fading_correlation;
    let mut ipv = Vec::with_capacity(cfg.num_ttis);
    let mut sinr = Vec::with_capacity(cfg.num_ttis);
    let mut schedule = Vec::with_capacity(cfg.num_ttis);
    for t in 0..cfg.num_ttis {
        if t > 0 {
            serving.evolve(a, &mut rng);
            for (links, x) in own.iter_mut().skip(1).zip(&mut cross) {
                x.evolve(a, &mut rng);
                links.iter_mut().for_each(|l| l.evolve(a, &mut rng));
            }
        }
        let sched: Vec<usize> = ues_per_cell.iter().map(|&k| t % k).collect();
        let mut phi = 0.0;
        for (l, x) in cross.iter().enumerate() {
            let g = mrt_precoder(&own[l + 1][sched[l + 1]].channel())?;
            phi += p * effective_gain(&x.channel(), &g).norm_sqr();
        }
        let h = serving.channel();
        let signal = p * effective_gain(&h, &mrt_precoder(&h)?).norm_sqr();
        let phi = phi.max(IPV_FLOOR_W);
        ipv.push(phi);
        sinr.push(signal / (phi + noise));
        schedule.push(sched);
    }
    if ipv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite interference power".into()));
    }
    Ok(TraceBundle { ipv: IpvSeries::new(ipv, 0)?, sinr, schedule, ues_per_cell, noise_power_w: noise })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cells: usize, ttis: usize) -> NetworkConfig {
        NetworkConfig { num_cells: cells, num_ttis: ttis, ..Default::default() }
    }

    #[test]
    fn lattice_starts_at_origin() {
        let c = cell_positions(9, 200.0);
        assert_eq!(c[0], (0.0, 0.0));
        assert!(c.iter().all(|&(x, y)| x.abs() <= 200.0 && y.abs() <= 200.0));
        assert_eq!(c.len(), 9);
    }

    #[test]
    fn single_cell_has_no_interference() {
        let cfg = small(1, 200);
        let tr = simulate(&cfg).unwrap();
        assert!(tr.ipv.values().iter().all(|&v| v == IPV_FLOOR_W));
        for t in 0..tr.len() {
            let snr = tr.signal_power(t) / cfg.noise_power_w();
            assert!((tr.sinr[t] / snr - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = simulate(&small(9, 300)).unwrap();
        let b = simulate(&small(9, 300)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&NetworkConfig { seed: 43, ..small(9, 300) }).unwrap();
        assert_ne!(a.ipv, c.ipv);
    }

    #[test]
    fn stored_trace_is_consistent() {
        let cfg = small(9, 500);
        let tr = simulate(&cfg).unwrap();
        let noise = cfg.noise_power_w();
        for t in 0..tr.len() {
            let s = tr.sinr[t] * (tr.ipv.values()[t] + noise);
            assert!((s / tr.signal_power(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_robin_is_periodic() {
        let tr = simulate(&small(9, 900)).unwrap();
        let lcm = tr.ues_per_cell.iter().fold(1, |acc, &k| {
            let (mut a, mut b) = (acc, k);
            while b != 0 {
                (a, b) = (b, a % b);
            }
            acc / a * k
        });
        for t in 0..tr.len().saturating_sub(lcm) {
            assert_eq!(tr.schedule[t], tr.schedule[t + lcm]);
        }
        assert!(tr.ues_per_cell[1..].iter().all(|&k| (2..=8).contains(&k)));
    }

    #[test]
    fn default_scenario_is_interference_limited() {
        let cfg = small(9, 10_000);
        let tr = simulate(&cfg).unwrap();
        let noise = cfg.noise_power_w();
        let above = tr.ipv.values().iter().filter(|&&v| v > noise).count() as f64 / tr.len() as f64;
        assert!(above > 0.5, "fraction above noise {above}");
        let mean = tr.sinr.iter().sum::<f64>() / tr.len() as f64;
        assert!(mean.is_finite() && mean > 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let cfg = small(4, 50);
        let tr = simulate(&cfg).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tti,ipv_watts,sinr_linear,sched_cell0,sched_cell1,sched_cell2,sched_cell3\n"));
        let back = TraceBundle::read_csv(buf.as_slice(), cfg.noise_power_w()).unwrap();
        assert_eq!(back.ipv, tr.ipv);
        assert_eq!(back.sinr, tr.sinr);
        assert_eq!(back.schedule, tr.schedule);
    }
}
