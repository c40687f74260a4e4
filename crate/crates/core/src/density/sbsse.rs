//! Subsets-based sample smoothing estimator with iterative bandwidth search.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::density::kde::{auto_bandwidth, default_grid};
use crate::density::kernel::KernelSpec;
use crate::density::kl::kl_divergence;
use crate::density::partition::{PartitionPolicy, Region, SubsetPartition};
use crate::error::{Error, Result};
use crate::grid::{DensityEstimate, Grid, GridDomain};
use crate::series::SampleMatrix;

pub const DEFAULT_EPS_KL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 50;
/// Bandwidth of a constant subset, relative to the spread of all samples.
const DEGENERATE_SUBSET_SCALE: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct SbsseModel {
    #[serde(skip)]
    pub partition: SubsetPartition,
    #[serde(rename = "B")]
    pub num_subsets: usize,
    pub subset_sizes: Vec<usize>,
    pub initial_bandwidths: Vec<f64>,
    pub bandwidths: Vec<f64>,
    /// Subset probabilities estimated at the last update.
    pub subset_probs: Vec<f64>,
    pub n_it: usize,
    pub kl_history: Vec<f64>,
    pub converged: bool,
}

impl SbsseModel {
    pub fn kernels(&self) -> Vec<KernelSpec> {
        self.bandwidths.iter().map(|&h| KernelSpec::GaussianScalar { h }).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn column_spread(samples: &SampleMatrix) -> f64 {
    let n = samples.len() as f64;
    let mut total = 0.0;
    for d in 0..samples.dim() {
        let col = samples.column(d);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        total += var.sqrt();
    }
    total / samples.dim() as f64
}

fn initial_bandwidths(samples: &SampleMatrix, partition: &SubsetPartition) -> Result<Vec<f64>> {
    (0..partition.num_subsets())
        .map(|i| match auto_bandwidth(&samples.select(partition.rows(i))) {
            Ok((h, _)) => Ok(h),
            Err(Error::ZeroVariance) => {
                let h = DEGENERATE_SUBSET_SCALE * column_spread(samples);
                if h > 0.0 {
                    log::warn!("subset {i} has zero variance; using bandwidth {h:e}");
                    Ok(h)
                } else {
                    Err(Error::ZeroVariance)
                }
            }
            Err(e) => Err(e),
        })
        .collect()
}

fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Mass of an isotropic Gaussian with centre `s` and scale `h` inside `region`.
fn box_mass(s: &[f64], h: f64, region: &Region) -> f64 {
    s.iter()
        .zip(region)
        .map(|(&x, &(lo, hi))| phi((hi - x) / h) - phi((lo - x) / h))
        .product()
}

/// Probability that subset `i`'s own KDE (bandwidth `h`) assigns to the
/// subset's region.
fn subset_probability(samples: &SampleMatrix, partition: &SubsetPartition, i: usize, h: f64) -> Result<f64> {
    let regions = partition
        .regions(i)
        .ok_or_else(|| Error::Config("subset probabilities need value- or count-based subsets".into()))?;
    let rows = partition.rows(i);
    let mass: f64 = rows
        .iter()
        .map(|&r| regions.iter().map(|reg| box_mass(samples.row(r), h, reg)).sum::<f64>())
        .sum();
    Ok(mass / rows.len() as f64)
}

/// `(1/B) sum_i (1/|X_i|) sum_{s in X_i} K_{h_i}(x - s)` at every node.
pub fn sbsse_density(
    samples: &SampleMatrix,
    partition: &SubsetPartition,
    bandwidths: &[f64],
    grid: &Grid,
) -> Result<DensityEstimate> {
    let kernels = bandwidths
        .iter()
        .map(|&h| KernelSpec::scalar(h))
        .collect::<Result<Vec<_>>>()?;
    mixture_density(samples, partition, &kernels, grid)
}

pub(crate) fn mixture_density(
    samples: &SampleMatrix,
    partition: &SubsetPartition,
    kernels: &[KernelSpec],
    grid: &Grid,
) -> Result<DensityEstimate> {
    let b = partition.num_subsets();
    if kernels.len() != b {
        return Err(Error::Domain(format!("{} kernels for {b} subsets", kernels.len())));
    }
    if grid.dims() != samples.dim() {
        return Err(Error::GridMismatch(format!(
            "{}-D grid for {}-D samples",
            grid.dims(),
            samples.dim()
        )));
    }
    let mut out = vec![0.0; grid.len()];
    for (i, kernel) in kernels.iter().enumerate() {
        let rows = partition.rows(i);
        let weight = 1.0 / (b as f64 * rows.len() as f64);
        kernel
            .prepare(samples.dim())?
            .accumulate(grid, rows.iter().map(|&r| samples.row(r)), weight, &mut out);
    }
    DensityEstimate::new(grid.clone(), out)
}

/// The SBSSE evaluated at a single point.
pub fn sbsse_at(samples: &SampleMatrix, partition: &SubsetPartition, bandwidths: &[f64], x: &[f64]) -> f64 {
    let b = partition.num_subsets() as f64;
    let d = x.len() as f64;
    (0..partition.num_subsets())
        .map(|i| {
            let h = bandwidths[i];
            let norm = 1.0 / ((2.0 * PI).powf(0.5 * d) * h.powf(d));
            let rows = partition.rows(i);
            let sum: f64 = rows
                .iter()
                .map(|&r| {
                    let q: f64 = samples.row(r).iter().zip(x).map(|(s, x)| (s - x) * (s - x)).sum();
                    (-0.5 * q / (h * h)).exp()
                })
                .sum();
            norm * sum / (b * rows.len() as f64)
        })
        .sum()
}

/// Fits the SBSSE with the bandwidth search of Algorithm 1 on the default grid.
pub fn sbsse_fit(
    samples: &SampleMatrix,
    partition: &SubsetPartition,
    eps_kl: f64,
    max_iter: usize,
) -> Result<(SbsseModel, DensityEstimate)> {
    sbsse_fit_on(samples, partition, eps_kl, max_iter, None)
}

/// Algorithm 1 with an optional caller grid for both the convergence check
/// and the returned density.
///
/// Each update rescales the initial per-subset plug-in bandwidth,
/// `h_i = h_i^(0) (N / (B^2 |X_i| P_i^2))^(1/5)`, where `P_i` is the mass
/// that subset `i`'s KDE at the previous bandwidth puts on the subset's
/// region. Iteration stops when the KL divergence between consecutive
/// estimates drops to `eps_kl`.
pub fn sbsse_fit_on(
    samples: &SampleMatrix,
    partition: &SubsetPartition,
    eps_kl: f64,
    max_iter: usize,
    grid: Option<&Grid>,
) -> Result<(SbsseModel, DensityEstimate)> {
    if !(eps_kl > 0.0) {
        return Err(Error::Domain(format!("eps_kl must be positive, got {eps_kl}")));
    }
    if max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    if partition.assignment().len() != samples.len() {
        return Err(Error::Domain("partition does not match the samples".into()));
    }
    if partition.policy() == PartitionPolicy::Explicit {
        return Err(Error::Config("the bandwidth search needs value- or count-based subsets".into()));
    }
    let partition = partition.with_min_size(2);
    let b = partition.num_subsets();
    let n = samples.len() as f64;
    let sizes = partition.sizes();
    let h0 = initial_bandwidths(samples, &partition)?;

    let update = |h_prev: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut probs = Vec::with_capacity(b);
        let mut next = Vec::with_capacity(b);
        for i in 0..b {
            let p = subset_probability(samples, &partition, i, h_prev[i])?.max(1e-12);
            let factor = (n / ((b * b) as f64 * sizes[i] as f64 * p * p)).powf(0.2);
            probs.push(p);
            next.push(h0[i] * factor);
        }
        Ok((next, probs))
    };

    let (mut h, mut probs) = update(&h0)?;
    let h_top = h0.iter().chain(&h).cloned().fold(0.0, f64::max);
    let kl_grid = match grid {
        Some(g) => g.clone(),
        None => default_grid(samples, h_top, GridDomain::Linear)?,
    };
    let mut prev = sbsse_density(samples, &partition, &h, &kl_grid)?;
    let mut kl_history = Vec::new();
    let mut converged = false;
    while kl_history.len() < max_iter {
        let (next, p) = update(&h)?;
        let current = sbsse_density(samples, &partition, &next, &kl_grid)?;
        let kl = kl_divergence(&current, &prev)?;
        kl_history.push(kl);
        h = next;
        probs = p;
        prev = current;
        if kl <= eps_kl {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("SBSSE bandwidth search stopped after {max_iter} iterations without converging");
    }

    let density = match grid {
        Some(_) => prev,
        None => {
            let h_max = h.iter().cloned().fold(0.0, f64::max);
            let final_grid = default_grid(samples, h_max, GridDomain::Linear)?;
            if final_grid == kl_grid {
                prev
            } else {
                sbsse_density(samples, &partition, &h, &final_grid)?
            }
        }
    };
    let model = SbsseModel {
        num_subsets: b,
        subset_sizes: sizes,
        initial_bandwidths: h0,
        bandwidths: h,
        subset_probs: probs,
        n_it: kl_history.len(),
        kl_history,
        converged,
        partition,
    };
    Ok((model, density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::kde::{kde_fit, BandwidthChoice};
    use crate::density::partition::partition_samples;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn single_subset_is_plain_kde() {
        let s = SampleMatrix::from_values(&normals(2000, 1)).unwrap();
        let p = partition_samples(&s, 1, PartitionPolicy::ValueBased).unwrap();
        let (model, est) = sbsse_fit(&s, &p, DEFAULT_EPS_KL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(model.n_it, 1);
        assert!(model.converged);
        assert_eq!(model.subset_probs, vec![1.0]);
        assert_eq!(model.bandwidths, model.initial_bandwidths);
        let kde = kde_fit(&s, BandwidthChoice::Auto).unwrap();
        assert_eq!(kde.density.grid(), est.grid());
        let worst = kde
            .density
            .values()
            .iter()
            .zip(est.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12);
    }

    #[test]
    fn separated_mixture_gets_matching_bandwidths() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let narrow = Normal::new(-10.0, 0.5).unwrap();
        let wide = Normal::new(14.0, 2.0).unwrap();
        let mut v: Vec<f64> = (0..3000).map(|_| narrow.sample(&mut rng)).collect();
        v.extend((0..3000).map(|_| wide.sample(&mut rng)));
        let s = SampleMatrix::from_values(&v).unwrap();
        let p = partition_samples(&s, 2, PartitionPolicy::ValueBased).unwrap();
        assert_eq!(p.sizes(), vec![3000, 3000]);
        let (model, est) = sbsse_fit(&s, &p, DEFAULT_EPS_KL, DEFAULT_MAX_ITER).unwrap();
        assert!(model.converged);
        assert!(*model.kl_history.last().unwrap() <= DEFAULT_EPS_KL);
        let ratio = model.bandwidths[1] / model.bandwidths[0];
        assert!((ratio / 4.0 - 1.0).abs() < 0.3, "ratio {ratio}");
        assert!((est.total_mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn point_evaluation_matches_grid() {
        let s = SampleMatrix::from_values(&normals(300, 9)).unwrap();
        let p = partition_samples(&s, 3, PartitionPolicy::CountBased).unwrap();
        let h = [0.2, 0.3, 0.25];
        let g = Grid::linear_1d(-6.0, 6.0, 4096).unwrap();
        let est = sbsse_density(&s, &p, &h, &g).unwrap();
        for k in [100, 2000, 3000] {
            let x = g.node(0, k);
            assert!((est.values()[k] - sbsse_at(&s, &p, &h, &[x])).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_partition_is_rejected() {
        let s = SampleMatrix::from_values(&normals(100, 2)).unwrap();
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let p = SubsetPartition::from_labels(&labels).unwrap();
        assert!(matches!(sbsse_fit(&s, &p, 1e-3, 10), Err(Error::Config(_))));
    }

    #[test]
    fn model_exports_json() {
        let s = SampleMatrix::from_values(&normals(500, 4)).unwrap();
        let p = partition_samples(&s, 2, PartitionPolicy::CountBased).unwrap();
        let (model, _) = sbsse_fit(&s, &p, DEFAULT_EPS_KL, DEFAULT_MAX_ITER).unwrap();
        let v: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();
        assert_eq!(v["B"], 2);
        assert_eq!(v["n_it"].as_u64().unwrap() as usize, model.kl_history.len());
    }
}
