//! Closed-form AMISE expressions for the Gaussian-kernel KDE and SBSSE, and
//! the known-mixture setup used to compare them.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityEstimate, Grid};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// `(1/4) Y h^4 + 1 / (2 N sqrt(pi) h)`.
pub fn amise_kde(h: f64, n: usize, upsilon_f2: f64) -> f64 {
    0.25 * upsilon_f2 * h.powi(4) + 1.0 / (2.0 * n as f64 * PI.sqrt() * h)
}

/// `(1 / (2 N sqrt(pi) Y))^(1/5)`, the minimizer of [`amise_kde`].
pub fn optimal_bandwidth_kde(n: usize, upsilon_f2: f64) -> f64 {
    (1.0 / (2.0 * n as f64 * PI.sqrt() * upsilon_f2)).powf(0.2)
}

/// SBSSE AMISE for per-subset bandwidths:
/// `sum_i [ (1/4) Y_i h_i^4 P_i^2 + 1 / (2 B^2 |X_i| sqrt(pi) h_i) ]`.
///
/// The factor `1/4` multiplies only the bias term, which makes `B = 1`
/// coincide with [`amise_kde`] and the minimizer coincide with
/// [`optimal_bandwidth_sbsse`].
pub fn amise_sbsse(h: &[f64], subset_sizes: &[usize], probs: &[f64], upsilon_f2: &[f64]) -> Result<f64> {
    let b = h.len();
    if b == 0 || subset_sizes.len() != b || probs.len() != b || upsilon_f2.len() != b {
        return Err(Error::Domain("amise_sbsse needs equally long, non-empty inputs".into()));
    }
    let b2 = (b * b) as f64;
    let mut total = 0.0;
    for i in 0..b {
        check_positive("bandwidth", h[i])?;
        if subset_sizes[i] == 0 {
            return Err(Error::Domain("empty subset".into()));
        }
        total += 0.25 * upsilon_f2[i] * h[i].powi(4) * probs[i] * probs[i]
            + 1.0 / (2.0 * b2 * subset_sizes[i] as f64 * PI.sqrt() * h[i]);
    }
    Ok(total)
}

/// `(1 / (2 B^2 |X_i| sqrt(pi) Y_i P_i^2))^(1/5)`.
pub fn optimal_bandwidth_sbsse(b: usize, subset_size: usize, prob: f64, upsilon_f2: f64) -> f64 {
    let b2 = (b * b) as f64;
    (1.0 / (2.0 * b2 * subset_size as f64 * PI.sqrt() * upsilon_f2 * prob * prob)).powf(0.2)
}

/// `Y(f'') = integral of f''^2`, with `f''` from central differences on the
/// interior nodes and a trapezoid rule over them.
pub fn upsilon(values: &[f64], grid: &Grid) -> Result<f64> {
    if grid.dims() != 1 || values.len() != grid.len() {
        return Err(Error::GridMismatch("upsilon needs one value per node of a 1-D grid".into()));
    }
    let dx = grid.step(0);
    let f2: Vec<f64> = values
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]) / (dx * dx))
        .collect();
    let sq: Vec<f64> = f2.iter().map(|v| v * v).collect();
    let inner: f64 = sq.iter().sum::<f64>() - 0.5 * (sq[0] + sq[sq.len() - 1]);
    Ok(inner * dx)
}

/// Known mixture whose AMISE curves reproduce the KDE/SBSSE comparison: the
/// true density is an SBSSE with `true_bandwidths.len()` subsets over the
/// points `{0, .., s_max}`, and the estimator uses `estimator_subsets`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmiseConfig {
    pub true_bandwidths: Vec<f64>,
    pub s_max: usize,
    pub estimator_subsets: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub curve_points: usize,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for AmiseConfig {
    fn default() -> Self {
        Self {
            true_bandwidths: vec![1.5, 2.7, 1.2],
            s_max: 100,
            estimator_subsets: 2,
            seed: 1,
            grid_points: 1 << 14,
            curve_points: 200,
            h_min: 0.05,
            h_max: 20.0,
        }
    }
}

/// Ingredients of both AMISE expressions for an [`AmiseConfig`].
#[derive(Debug, Clone)]
pub struct AmiseSetup {
    /// Total number of points, `s_max + 1`.
    pub n: usize,
    pub upsilon_true: f64,
    pub subset_sizes: Vec<usize>,
    pub subset_probs: Vec<f64>,
    pub subset_upsilon: Vec<f64>,
    pub true_density: DensityEstimate,
}

impl AmiseSetup {
    pub fn kde_optimum(&self) -> f64 {
        optimal_bandwidth_kde(self.n, self.upsilon_true)
    }

    pub fn sbsse_optimum(&self) -> Vec<f64> {
        let b = self.subset_sizes.len();
        (0..b)
            .map(|i| optimal_bandwidth_sbsse(b, self.subset_sizes[i], self.subset_probs[i], self.subset_upsilon[i]))
            .collect()
    }

    pub fn amise_kde(&self, h: f64) -> f64 {
        amise_kde(h, self.n, self.upsilon_true)
    }

    /// SBSSE AMISE with bandwidth `i` set to `h` and the others at their optimum.
    pub fn amise_sbsse_vary(&self, i: usize, h: f64) -> Result<f64> {
        let mut hs = self.sbsse_optimum();
        hs[i] = h;
        amise_sbsse(&hs, &self.subset_sizes, &self.subset_probs, &self.subset_upsilon)
    }

    /// Length of the bandwidth interval on which `curve` stays within
    /// `(1 + tol)` times its minimum at `h_opt`.
    pub fn near_optimal_width(curve: impl Fn(f64) -> f64, h_opt: f64, tol: f64) -> f64 {
        let level = (1.0 + tol) * curve(h_opt);
        let edge = |mut inside: f64, mut outside: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if curve(mid) <= level {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            0.5 * (inside + outside)
        };
        let mut hi = 2.0 * h_opt;
        while curve(hi) <= level {
            hi *= 2.0;
        }
        let mut lo = 0.5 * h_opt;
        while curve(lo) <= level {
            lo *= 0.5;
        }
        edge(h_opt, hi) - edge(h_opt, lo)
    }
}

fn normal_pdf(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// Seeded split of `items` into `parts` non-empty groups of near-equal size.
fn random_split(items: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items).collect();
    order.shuffle(rng);
    let mut label = vec![0; items];
    for (k, &s) in order.iter().enumerate() {
        label[s] = k * parts / items;
    }
    label
}

/// Builds the true mixture, its curvature functional, and the per-subset
/// quantities of the estimator partition.
///
/// Points of `{0, .., s_max}` are shuffled into the true subsets. The
/// estimator subsets are contiguous, equally populated value ranges, and
/// `f(x | X_j)` is the true density restricted to range `j` and renormalized
/// by its mass `P_j`. The curvature of each restriction is integrated over
/// its own range only, so the per-subset functionals add up to `Y(f'')`.
pub fn amise_setup(cfg: &AmiseConfig) -> Result<AmiseSetup> {
    let b_true = cfg.true_bandwidths.len();
    let n = cfg.s_max + 1;
    if b_true == 0 || b_true > n || cfg.estimator_subsets == 0 || cfg.estimator_subsets > n {
        return Err(Error::Config(format!(
            "need 1..={n} true and estimator subsets, got {b_true} and {}",
            cfg.estimator_subsets
        )));
    }
    for &h in &cfg.true_bandwidths {
        check_positive("true bandwidth", h)?;
    }
    if !(cfg.h_min > 0.0 && cfg.h_max > cfg.h_min) || cfg.curve_points < 2 {
        return Err(Error::Config("bandwidth range must satisfy 0 < h_min < h_max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let true_label = random_split(n, b_true, &mut rng);
    // estimator subsets are value ranges, as the value-based policy builds them
    let est_label: Vec<usize> = (0..n).map(|s| s * cfg.estimator_subsets / n).collect();
    let mut true_sizes = vec![0usize; b_true];
    for &l in &true_label {
        true_sizes[l] += 1;
    }

    let h_big = cfg.true_bandwidths.iter().cloned().fold(0.0, f64::max);
    let grid = Grid::linear_1d(-10.0 * h_big, cfg.s_max as f64 + 10.0 * h_big, cfg.grid_points)?;
    let axis = grid.axis(0);
    let mut total = vec![0.0; grid.len()];
    for s in 0..n {
        let i = true_label[s];
        let w = 1.0 / (b_true as f64 * true_sizes[i] as f64);
        let h = cfg.true_bandwidths[i];
        for (v, &x) in total.iter_mut().zip(&axis) {
            *v += w * normal_pdf(x, s as f64, h);
        }
    }
    let true_density = DensityEstimate::new(grid.clone(), total)?;

    // region j ends halfway between its last point and the next region's first
    let b = cfg.estimator_subsets;
    let mut subset_sizes = vec![0usize; b];
    for &l in &est_label {
        subset_sizes[l] += 1;
    }
    let boundaries: Vec<f64> = (1..b)
        .map(|j| {
            let first_next = est_label.partition_point(|&l| l < j);
            first_next as f64 - 0.5
        })
        .collect();
    let region = |x: f64| boundaries.partition_point(|&e| e <= x);
    let dx = grid.step(0);
    let f = true_density.values();
    let mut probs = vec![0.0; b];
    for ((&x, m), _) in axis.iter().zip(true_density.node_masses()).zip(f) {
        probs[region(x)] += m;
    }
    // f'' restricted to each region; the regions split the integral of f''^2
    let mut curvature = vec![0.0; b];
    for k in 1..f.len() - 1 {
        let f2 = (f[k - 1] - 2.0 * f[k] + f[k + 1]) / (dx * dx);
        curvature[region(axis[k])] += f2 * f2 * dx;
    }
    let upsilon_true = curvature.iter().sum();
    let subset_upsilon = curvature.iter().zip(&probs).map(|(c, p)| c / (p * p)).collect();
    let subset_probs = probs;
    Ok(AmiseSetup { n, upsilon_true, subset_sizes, subset_probs, subset_upsilon, true_density })
}

/// One row of the AMISE comparison curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmiseRow {
    pub bandwidth: f64,
    pub amise_kde: f64,
    /// First bandwidth fixed at its optimum, second one varied.
    pub amise_sbsse_h1_fixed: f64,
    /// Second bandwidth fixed at its optimum, first one varied.
    pub amise_sbsse_h2_fixed: f64,
}

/// AMISE of KDE and SBSSE on a log-spaced bandwidth grid.
///
/// With a single estimator subset both SBSSE columns reduce to the KDE curve.
pub fn amise_curves(cfg: &AmiseConfig) -> Result<Vec<AmiseRow>> {
    let setup = amise_setup(cfg)?;
    let b = setup.subset_sizes.len();
    let (free_a, free_b) = if b >= 2 { (1, 0) } else { (0, 0) };
    let ratio = (cfg.h_max / cfg.h_min).ln();
    (0..cfg.curve_points)
        .map(|k| {
            let h = cfg.h_min * (ratio * k as f64 / (cfg.curve_points - 1) as f64).exp();
            Ok(AmiseRow {
                bandwidth: h,
                amise_kde: setup.amise_kde(h),
                amise_sbsse_h1_fixed: setup.amise_sbsse_vary(free_a, h)?,
                amise_sbsse_h2_fixed: setup.amise_sbsse_vary(free_b, h)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn amise_kde_direct_value() {
        let want = 0.25 * 0.0081 + 1.0 / (60.0 * PI.sqrt());
        assert!((amise_kde(0.3, 100, 1.0) - want).abs() < 1e-15);
        assert!((amise_kde(0.3, 100, 1.0) - 0.011428).abs() < 1e-6);
        assert!(amise_kde(1e3, 100, 1.0) > 1e10);
    }

    #[test]
    fn kde_optimum_matches_numeric_argmin() {
        let h = optimal_bandwidth_kde(100, 1.0);
        assert!((h - 0.3091).abs() < 1e-4);
        let num = golden_min(|h| amise_kde(h, 100, 1.0), 0.01, 5.0);
        assert!((num / h - 1.0).abs() < 1e-6);
        let h4 = optimal_bandwidth_kde(100, 4.0);
        assert!((h / h4 - 4f64.powf(0.2)).abs() < 1e-12);
    }

    #[test]
    fn sbsse_reduces_to_kde() {
        for h in [0.1, 0.3, 2.0] {
            let a = amise_sbsse(&[h], &[250], &[1.0], &[0.7]).unwrap();
            assert_eq!(a, amise_kde(h, 250, 0.7));
        }
        assert_eq!(optimal_bandwidth_sbsse(1, 250, 1.0, 0.7), optimal_bandwidth_kde(250, 0.7));
        let r = optimal_bandwidth_sbsse(2, 50, 0.25, 1.0) / optimal_bandwidth_sbsse(2, 50, 0.5, 1.0);
        assert!((r - 2f64.powf(0.4)).abs() < 1e-12);
    }

    #[test]
    fn sbsse_coordinate_minimum() {
        let sizes = [60, 40];
        let probs = [0.55, 0.45];
        let ups = [0.3, 1.2];
        let mut h = [0.5, 0.5];
        for i in 0..2 {
            let star = optimal_bandwidth_sbsse(2, sizes[i], probs[i], ups[i]);
            let num = golden_min(
                |x| {
                    let mut hx = h;
                    hx[i] = x;
                    amise_sbsse(&hx, &sizes, &probs, &ups).unwrap()
                },
                0.01,
                10.0,
            );
            assert!((num / star - 1.0).abs() < 1e-6);
            h[i] = star;
        }
    }

    #[test]
    fn upsilon_of_standard_normal() {
        let g = Grid::linear_1d(-10.0, 10.0, 4096).unwrap();
        let f: Vec<f64> = g.axis(0).iter().map(|&x| normal_pdf(x, 0.0, 1.0)).collect();
        let u = upsilon(&f, &g).unwrap();
        assert!((u / (3.0 / (8.0 * PI.sqrt())) - 1.0).abs() < 1e-3);
        let lin: Vec<f64> = g.axis(0).iter().map(|&x| 2.0 * x + 1.0).collect();
        assert!(upsilon(&lin, &g).unwrap() < 1e-12);
        let scaled: Vec<f64> = f.iter().map(|v| 3.0 * v).collect();
        assert!((upsilon(&scaled, &g).unwrap() / u - 9.0).abs() < 1e-9);
    }

    #[test]
    fn single_estimator_subset_matches_kde_curve() {
        let cfg = AmiseConfig { estimator_subsets: 1, grid_points: 4096, curve_points: 20, ..Default::default() };
        for row in amise_curves(&cfg).unwrap() {
            assert!((row.amise_sbsse_h1_fixed - row.amise_kde).abs() <= 1e-12 * row.amise_kde);
            assert!((row.amise_sbsse_h2_fixed - row.amise_kde).abs() <= 1e-12 * row.amise_kde);
        }
    }

    #[test]
    fn rejects_bad_mixture() {
        let cfg = AmiseConfig { true_bandwidths: vec![1.0, -1.0], ..Default::default() };
        assert!(matches!(amise_setup(&cfg), Err(Error::Domain(_))));
        let cfg = AmiseConfig { estimator_subsets: 0, ..Default::default() };
        assert!(matches!(amise_setup(&cfg), Err(Error::Config(_))));
    }
}
