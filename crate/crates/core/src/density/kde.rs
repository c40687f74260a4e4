//! Fixed-bandwidth Gaussian KDE and the pointwise balloon estimator.

use std::f64::consts::PI;

use crate::density::isj::{isj_bandwidth, BandwidthMethod};
use crate::density::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::grid::{default_points_per_dim, DensityEstimate, Grid, GridDomain, DEFAULT_PAD_BANDWIDTHS};
use crate::series::SampleMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthChoice {
    /// Per-dimension ISJ bandwidths, averaged into one scalar.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct KdeFit {
    pub bandwidth: f64,
    pub method: Option<BandwidthMethod>,
    pub density: DensityEstimate,
}

/// Scalar bandwidth for (possibly multivariate) samples: the arithmetic mean
/// of the per-dimension ISJ bandwidths. ISJ is scale-equivariant, so this is
/// the mean of standardized-data bandwidths mapped back by each column's
/// standard deviation.
pub fn auto_bandwidth(samples: &SampleMatrix) -> Result<(f64, BandwidthMethod)> {
    let mut sum = 0.0;
    let mut method = BandwidthMethod::Isj;
    for d in 0..samples.dim() {
        let bw = isj_bandwidth(&samples.column(d))?;
        if bw.is_fallback() {
            method = BandwidthMethod::GaussianReference;
        }
        sum += bw.h;
    }
    Ok((sum / samples.dim() as f64, method))
}

/// Data bounds padded by [`DEFAULT_PAD_BANDWIDTHS`] times `h_max` on each side.
pub fn default_grid(samples: &SampleMatrix, h_max: f64, domain: GridDomain) -> Result<Grid> {
    Grid::covering(
        &samples.bounds(),
        DEFAULT_PAD_BANDWIDTHS * h_max,
        default_points_per_dim(samples.dim()),
        domain,
    )
}

fn resolve(samples: &SampleMatrix, bandwidth: BandwidthChoice) -> Result<(f64, Option<BandwidthMethod>)> {
    if samples.is_empty() {
        return Err(Error::Domain("kde needs at least one sample".into()));
    }
    match bandwidth {
        BandwidthChoice::Fixed(h) => {
            KernelSpec::scalar(h)?;
            Ok((h, None))
        }
        BandwidthChoice::Auto => auto_bandwidth(samples).map(|(h, m)| (h, Some(m))),
    }
}

/// Gaussian KDE on the default grid.
pub fn kde_fit(samples: &SampleMatrix, bandwidth: BandwidthChoice) -> Result<KdeFit> {
    let (h, method) = resolve(samples, bandwidth)?;
    let grid = default_grid(samples, h, GridDomain::Linear)?;
    let density = kde_grid(samples, h, &grid)?;
    Ok(KdeFit { bandwidth: h, method, density })
}

/// Gaussian KDE on a caller-supplied grid.
pub fn kde_fit_on(samples: &SampleMatrix, bandwidth: BandwidthChoice, grid: &Grid) -> Result<KdeFit> {
    let (h, method) = resolve(samples, bandwidth)?;
    let density = kde_grid(samples, h, grid)?;
    Ok(KdeFit { bandwidth: h, method, density })
}

/// `(1/N) sum_n K_h(x - s_n)` at every node of `grid`.
pub fn kde_grid(samples: &SampleMatrix, h: f64, grid: &Grid) -> Result<DensityEstimate> {
    if grid.dims() != samples.dim() {
        return Err(Error::GridMismatch(format!(
            "{}-D grid for {}-D samples",
            grid.dims(),
            samples.dim()
        )));
    }
    let kernel = KernelSpec::scalar(h)?.prepare(samples.dim())?;
    let mut out = vec![0.0; grid.len()];
    kernel.accumulate(grid, samples.rows(), 1.0 / samples.len() as f64, &mut out);
    DensityEstimate::new(grid.clone(), out)
}

/// Isotropic Gaussian kernel with standard deviation `h` in `y.len()` dimensions.
pub fn gaussian_kernel(y: &[f64], h: f64) -> f64 {
    let d = y.len() as f64;
    let q: f64 = y.iter().map(|v| v * v).sum::<f64>() / (h * h);
    (-0.5 * q).exp() / ((2.0 * PI).powf(0.5 * d) * h.powf(d))
}

/// Fixed-bandwidth KDE evaluated at a single point.
pub fn kde_at(samples: &SampleMatrix, h: f64, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    let sum: f64 = samples
        .rows()
        .map(|s| {
            for (k, v) in y.iter_mut().enumerate() {
                *v = s[k] - x[k];
            }
            gaussian_kernel(&y, h)
        })
        .sum();
    sum / samples.len() as f64
}

/// Balloon estimator: the bandwidth depends on the evaluation point only.
pub fn balloon_estimate(
    samples: &SampleMatrix,
    bandwidth_fn: impl Fn(&[f64]) -> f64,
    x: &[f64],
) -> Result<f64> {
    let h = bandwidth_fn(x);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("balloon bandwidth {h} at {x:?}")));
    }
    Ok(kde_at(samples, h, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn phi(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn single_sample_gives_standard_normal() {
        let s = SampleMatrix::from_values(&[0.0]).unwrap();
        let fit = kde_fit(&s, BandwidthChoice::Fixed(1.0)).unwrap();
        let g = fit.density.grid();
        for i in (0..g.points_per_dim()).step_by(97) {
            let x = g.node(0, i);
            assert!((fit.density.values()[i] - phi(x)).abs() < 1e-14);
        }
        assert!((fit.density.total_mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn non_positive_bandwidth_rejected() {
        let s = SampleMatrix::from_values(&[0.0, 1.0]).unwrap();
        assert!(kde_fit(&s, BandwidthChoice::Fixed(0.0)).is_err());
        assert!(kde_fit(&s, BandwidthChoice::Fixed(-1.0)).is_err());
    }

    #[test]
    fn large_gaussian_sample_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let fit = kde_fit(&SampleMatrix::from_values(&draws).unwrap(), BandwidthChoice::Auto).unwrap();
        assert_eq!(fit.method, Some(BandwidthMethod::Isj));
        let mut worst: f64 = 0.0;
        for k in -30..=30 {
            let x = k as f64 / 10.0;
            worst = worst.max((fit.density.evaluate(&[x]) - phi(x)).abs());
        }
        assert!(worst <= 0.02, "max deviation {worst}");
        assert!((fit.density.total_mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn two_dimensional_fit_normalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                vec![a, 0.5 * a + b]
            })
            .collect();
        let fit = kde_fit(&SampleMatrix::from_rows(&rows).unwrap(), BandwidthChoice::Auto).unwrap();
        assert!((fit.density.total_mass() - 1.0).abs() < 1e-3);
        let x = [0.3, -0.2];
        let direct = kde_at(&SampleMatrix::from_rows(&rows).unwrap(), fit.bandwidth, &x);
        assert!((fit.density.evaluate(&x) - direct).abs() < 2e-3);
    }

    #[test]
    fn balloon_reduces_to_fixed_kde() {
        let s = SampleMatrix::from_values(&[-1.0, 0.2, 0.4, 2.0]).unwrap();
        for x in [-2.0, 0.0, 0.3, 1.7] {
            let b = balloon_estimate(&s, |_| 0.6, &[x]).unwrap();
            assert!((b - kde_at(&s, 0.6, &[x])).abs() < 1e-15);
        }
    }

    #[test]
    fn balloon_single_sample_peak() {
        let s = SampleMatrix::from_values(&[0.0]).unwrap();
        let v = balloon_estimate(&s, |_| 1.0, &[0.0]).unwrap();
        assert!((v - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn balloon_uses_point_bandwidth() {
        let s = SampleMatrix::from_values(&[0.0, 1.0]).unwrap();
        let h_at = |x: &[f64]| if x[0] > 0.4 { 1.0 } else { 0.5 };
        let x = 0.5;
        let want = 0.5 * (phi(x / 1.0) + phi((x - 1.0) / 1.0)) / 1.0;
        assert!((balloon_estimate(&s, h_at, &[x]).unwrap() - want).abs() < 1e-15);
        assert!(balloon_estimate(&s, |_| 0.0, &[x]).is_err());
    }
}
