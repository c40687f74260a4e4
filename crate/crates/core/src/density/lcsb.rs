//! Low-complexity SBSSE: one sample-covariance kernel per subset.

use nalgebra::DMatrix;

use crate::density::kernel::KernelSpec;
use crate::density::partition::SubsetPartition;
use crate::density::sbsse::mixture_density;
use crate::error::{Error, Result};
use crate::grid::{default_points_per_dim, DensityEstimate, Grid, GridDomain, DEFAULT_PAD_BANDWIDTHS};
use crate::series::SampleMatrix;

const REGULARIZE_BELOW: f64 = 1e-10;
const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LcsbModel {
    pub partition: SubsetPartition,
    pub covariances: Vec<DMatrix<f64>>,
    /// Whether each covariance needed the ridge.
    pub regularized: Vec<bool>,
}

impl LcsbModel {
    pub fn kernels(&self) -> Result<Vec<KernelSpec>> {
        self.covariances.iter().map(KernelSpec::matrix).collect()
    }
}

/// Mean-centred sample covariance with `1/(n-1)` normalization.
pub fn sample_covariance(samples: &SampleMatrix, rows: &[usize]) -> DMatrix<f64> {
    let d = samples.dim();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for &r in rows {
        for (m, v) in mean.iter_mut().zip(samples.row(r)) {
            *m += v / n;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for &r in rows {
        let s = samples.row(r);
        for q in 0..d {
            for j in 0..d {
                cov[(q, j)] += (s[q] - mean[q]) * (s[j] - mean[j]);
            }
        }
    }
    cov / (n - 1.0).max(1.0)
}

/// Adds `1e-6 trace/D` to the diagonal when the smallest eigenvalue is below
/// `1e-10 trace`. Returns the matrix and whether the ridge was applied.
pub fn regularize(cov: DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let d = cov.nrows();
    let trace = cov.trace();
    let min_eig = cov.clone().symmetric_eigen().eigenvalues.min();
    if min_eig < REGULARIZE_BELOW * trace || trace <= 0.0 {
        let ridge = RIDGE * trace / d as f64;
        (cov + DMatrix::identity(d, d) * ridge, true)
    } else {
        (cov, false)
    }
}

fn fit_kernels(samples: &SampleMatrix, partition: &SubsetPartition) -> Result<LcsbModel> {
    if partition.assignment().len() != samples.len() {
        return Err(Error::Domain("partition does not match the samples".into()));
    }
    let partition = partition.with_min_size(samples.dim() + 1);
    let mut covariances = Vec::new();
    let mut regularized = Vec::new();
    for i in 0..partition.num_subsets() {
        let (cov, reg) = regularize(sample_covariance(samples, partition.rows(i)));
        KernelSpec::matrix(&cov)
            .map_err(|_| Error::Numerical(format!("covariance of subset {i} is singular")))?;
        covariances.push(cov);
        regularized.push(reg);
    }
    Ok(LcsbModel { partition, covariances, regularized })
}

/// LC-SB on the default grid (data range padded by [`DEFAULT_PAD_BANDWIDTHS`]
/// kernel standard deviations).
pub fn lcsb_fit(samples: &SampleMatrix, partition: &SubsetPartition) -> Result<(LcsbModel, DensityEstimate)> {
    let model = fit_kernels(samples, partition)?;
    let pad = model
        .covariances
        .iter()
        .flat_map(|c| (0..c.nrows()).map(move |d| c[(d, d)].sqrt()))
        .fold(0.0, f64::max);
    let grid = Grid::covering(
        &samples.bounds(),
        DEFAULT_PAD_BANDWIDTHS * pad,
        default_points_per_dim(samples.dim()),
        GridDomain::Linear,
    )?;
    let density = mixture_density(samples, &model.partition, &model.kernels()?, &grid)?;
    Ok((model, density))
}

pub fn lcsb_fit_on(
    samples: &SampleMatrix,
    partition: &SubsetPartition,
    grid: &Grid,
) -> Result<(LcsbModel, DensityEstimate)> {
    let model = fit_kernels(samples, partition)?;
    let density = mixture_density(samples, &model.partition, &model.kernels()?, grid)?;
    Ok((model, density))
}
