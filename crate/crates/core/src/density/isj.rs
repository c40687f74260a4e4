//! Improved Sheather-Jones plug-in bandwidth via the DCT of binned data.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DEFAULT_POINTS_1D;

/// Minimum sample count for the plug-in estimate; smaller sets use the
/// Gaussian reference rule.
pub const ISJ_MIN_SAMPLES: usize = 50;
/// Absolute tolerance of the bisection on `t = h^2` (in units of the squared
/// binned range).
pub const ISJ_ROOT_TOL: f64 = 1e-14;
/// Largest bracket end tried for `t = h^2` (in squared units of the data range).
pub const ISJ_BRACKET_MAX: f64 = 0.1;
const FUNCTIONAL_ORDER: i32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthMethod {
    Isj,
    /// `1.06 sigma N^(-1/5)`, used for small samples or when the fixed point
    /// has no root.
    GaussianReference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub h: f64,
    pub method: BandwidthMethod,
}

impl Bandwidth {
    pub fn is_fallback(&self) -> bool {
        self.method == BandwidthMethod::GaussianReference
    }
}

fn mean_sd(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Gaussian reference rule `1.06 sigma N^(-1/5)`.
pub fn gaussian_reference_bandwidth(data: &[f64]) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    let (_, sd) = mean_sd(data);
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(1.06 * sd * (data.len() as f64).powf(-0.2))
}

/// Unnormalized DCT-II, `X_k = 2 sum_m x_m cos(pi k (2m + 1) / 2n)`, through
/// an FFT of the even/odd reordered input.
pub(crate) fn dct2(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut v: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n];
    for k in 0..n.div_ceil(2) {
        v[k] = Complex::new(x[2 * k], 0.0);
    }
    for k in 0..n / 2 {
        v[n - 1 - k] = Complex::new(x[2 * k + 1], 0.0);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut v);
    v.iter()
        .enumerate()
        .map(|(k, c)| {
            let w = Complex::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64));
            2.0 * (c * w).re
        })
        .collect()
}

/// Fixed-point map `t - xi * gamma^[l](t)` of the diffusion estimator.
fn fixed_point(t: f64, n: f64, sq_index: &[f64], coef2: &[f64]) -> f64 {
    let functional = |s: i32, time: f64| -> f64 {
        2.0 * PI.powi(2 * s)
            * sq_index
                .iter()
                .zip(coef2)
                .map(|(&i, &a)| i.powi(s) * a * (-i * PI * PI * time).exp())
                .sum::<f64>()
    };
    let mut f = functional(FUNCTIONAL_ORDER, t);
    for s in (2..FUNCTIONAL_ORDER).rev() {
        let k0 = (1..2 * s).step_by(2).map(f64::from).product::<f64>() / (2.0 * PI).sqrt();
        let c = (1.0 + 0.5f64.powf(s as f64 + 0.5)) / 3.0;
        let time = (2.0 * c * k0 / n / f).powf(2.0 / (3.0 + 2.0 * s as f64));
        f = functional(s, time);
    }
    t - (2.0 * n * PI.sqrt() * f).powf(-0.4)
}

/// Bisection for the root of `g` on `[lo, hi]`, given `g(lo) < 0 < g(hi)`.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v.is_nan() || v > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Diffusion (ISJ) bandwidth on `bins` histogram bins, `None` if the fixed
/// point has no root in `(0, 0.1]`.
pub(crate) fn isj_on_bins(data: &[f64], bins: usize) -> Option<f64> {
    let (min, max) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = max - min;
    if !(span > 0.0) {
        return None;
    }
    let lo = min - span / 10.0;
    let range = span * 1.2;
    let dx = range / (bins - 1) as f64;
    let mut hist = vec![0.0; bins];
    for &x in data {
        let k = (((x - lo) / dx).floor() as usize).min(bins - 1);
        hist[k] += 1.0;
    }
    let total: f64 = hist.iter().sum();
    hist.iter_mut().for_each(|h| *h /= total);

    let a = dct2(&hist);
    let sq_index: Vec<f64> = (1..bins).map(|i| (i * i) as f64).collect();
    let coef2: Vec<f64> = a[1..].iter().map(|v| (v / 2.0).powi(2)).collect();
    let n = data.len() as f64;
    let g = |t: f64| fixed_point(t, n, &sq_index, &coef2);

    let nc = n.clamp(50.0, 1050.0);
    let mut upper = 1e-12 + 0.01 * (nc - 50.0) / 1000.0;
    loop {
        let hi = g(upper);
        if hi.is_finite() && hi > 0.0 {
            let t = bisect(g, 0.0, upper, ISJ_ROOT_TOL);
            let h = t.sqrt() * range;
            return (h.is_finite() && h > 0.0).then_some(h);
        }
        if upper >= ISJ_BRACKET_MAX {
            return None;
        }
        upper = (upper * 2.0).min(ISJ_BRACKET_MAX);
    }
}

/// Improved Sheather-Jones bandwidth for one-dimensional data.
///
/// Falls back to the Gaussian reference rule below [`ISJ_MIN_SAMPLES`] points
/// or when the fixed-point equation has no root. Constant data is an error.
pub fn isj_bandwidth(data: &[f64]) -> Result<Bandwidth> {
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    let reference = gaussian_reference_bandwidth(data)?;
    if data.len() >= ISJ_MIN_SAMPLES {
        if let Some(h) = isj_on_bins(data, DEFAULT_POINTS_1D) {
            return Ok(Bandwidth { h, method: BandwidthMethod::Isj });
        }
        log::warn!("ISJ fixed point failed on {} samples; using reference rule", data.len());
    }
    Ok(Bandwidth { h: reference, method: BandwidthMethod::GaussianReference })
}
