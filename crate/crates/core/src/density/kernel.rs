//! Gaussian kernels and their accumulation onto grids.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Kernels are truncated beyond this Mahalanobis radius (relative mass < 1e-17).
const CUTOFF: f64 = 9.0;
/// The row recurrence is re-seeded with an exact `exp` this often.
const RESEED: usize = 32;

/// Gaussian kernel shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// Isotropic kernel with standard deviation `h` on every axis.
    GaussianScalar { h: f64 },
    /// Full covariance `h` (row-major, `dim x dim`).
    GaussianMatrix { dim: usize, h: Vec<f64> },
}

impl KernelSpec {
    pub fn scalar(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
        }
        Ok(Self::GaussianScalar { h })
    }

    pub fn matrix(cov: &DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if dim == 0 || cov.ncols() != dim {
            return Err(Error::Domain("covariance must be square and non-empty".into()));
        }
        if (cov - cov.transpose()).abs().max() > 1e-12 * cov.abs().max().max(1.0) {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        let min_eig = cov.clone().symmetric_eigen().eigenvalues.min();
        if !(min_eig > 0.0) {
            return Err(Error::Numerical(format!(
                "covariance not positive definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self::GaussianMatrix { dim, h: cov.iter().copied().collect::<Vec<_>>() })
    }

    /// Largest per-axis standard deviation, used to size grids.
    pub fn max_scale(&self) -> f64 {
        match self {
            Self::GaussianScalar { h } => *h,
            Self::GaussianMatrix { dim, h } => {
                (0..*dim).map(|d| h[d * dim + d].sqrt()).fold(0.0, f64::max)
            }
        }
    }

    /// Covariance matrix of the kernel in `dim` dimensions.
    pub fn covariance(&self, dim: usize) -> DMatrix<f64> {
        match self {
            Self::GaussianScalar { h } => DMatrix::identity(dim, dim) * (h * h),
            Self::GaussianMatrix { dim: k, h } => DMatrix::from_column_slice(*k, *k, h),
        }
    }

    pub(crate) fn prepare(&self, dim: usize) -> Result<PreparedKernel> {
        if let Self::GaussianMatrix { dim: k, .. } = self {
            if *k != dim {
                return Err(Error::Domain(format!("kernel of dimension {k} used on {dim}-D data")));
            }
        }
        PreparedKernel::new(&self.covariance(dim))
    }
}

/// Gaussian kernel with precomputed precision matrix and normalization.
#[derive(Debug, Clone)]
pub(crate) struct PreparedKernel {
    dim: usize,
    precision: Vec<f64>,
    sd: Vec<f64>,
    log_norm: f64,
}

impl PreparedKernel {
    pub(crate) fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("kernel covariance not positive definite".into()))?;
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let inv = chol.inverse();
        let mut precision = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                precision[r * dim + c] = inv[(r, c)];
            }
        }
        Ok(Self {
            dim,
            precision,
            sd: (0..dim).map(|d| cov[(d, d)].sqrt()).collect(),
            log_norm: -0.5 * (dim as f64 * (2.0 * std::f64::consts::PI).ln() + log_det),
        })
    }

    /// Kernel value at displacement `y`.
    #[cfg(test)]
    pub(crate) fn eval(&self, y: &[f64]) -> f64 {
        let d = self.dim;
        let mut q = 0.0;
        for r in 0..d {
            let mut acc = 0.0;
            for c in 0..d {
                acc += self.precision[r * d + c] * y[c];
            }
            q += y[r] * acc;
        }
        (self.log_norm - 0.5 * q).exp()
    }

    /// Adds `weight * K(x - s)` at every grid node `x` for each sample `s`.
    pub(crate) fn accumulate<'a>(
        &self,
        grid: &Grid,
        samples: impl IntoIterator<Item = &'a [f64]>,
        weight: f64,
        out: &mut [f64],
    ) {
        let d = self.dim;
        debug_assert_eq!(grid.dims(), d);
        let n = grid.points_per_dim();
        let last = d - 1;
        let p_ll = self.precision[last * d + last];
        let half_width_last = CUTOFF / p_ll.sqrt();
        let scale = weight * self.log_norm.exp();
        let steps: Vec<f64> = (0..d).map(|k| grid.step(k)).collect();
        let mut row = vec![0.0; n];

        for s in samples {
            // Index box on the leading axes.
            let mut ranges = Vec::with_capacity(d);
            let mut empty = false;
            for k in 0..d {
                let (lo, _) = grid.bounds()[k];
                let reach = CUTOFF * self.sd[k];
                let a = ((s[k] - reach - lo) / steps[k]).ceil().max(0.0);
                let b = ((s[k] + reach - lo) / steps[k]).floor().min((n - 1) as f64);
                if a > b {
                    empty = true;
                    break;
                }
                ranges.push((a as usize, b as usize));
            }
            if empty {
                continue;
            }

            let mut idx: Vec<usize> = ranges[..last].iter().map(|r| r.0).collect();
            let mut y = vec![0.0; d];
            loop {
                let mut flat_prefix = 0;
                for k in 0..last {
                    y[k] = grid.node(k, idx[k]) - s[k];
                    flat_prefix = flat_prefix * n + idx[k];
                }
                // q(y) = p_ll (y_L - m)^2 + c over the last axis.
                let mut cross = 0.0;
                let mut prefix_q = 0.0;
                for r in 0..last {
                    cross += self.precision[last * d + r] * y[r];
                    for c in 0..last {
                        prefix_q += y[r] * self.precision[r * d + c] * y[c];
                    }
                }
                let m = -cross / p_ll;
                let c = prefix_q - cross * cross / p_ll;
                if c <= CUTOFF * CUTOFF {
                    let (lo_l, _) = grid.bounds()[last];
                    let center = s[last] + m;
                    let a = ((center - half_width_last - lo_l) / steps[last]).ceil().max(0.0);
                    let b = ((center + half_width_last - lo_l) / steps[last])
                        .floor()
                        .min((n - 1) as f64);
                    if a <= b {
                        let (a, b) = (a as usize, b as usize);
                        let amp = scale * (-0.5 * c).exp();
                        gaussian_row(grid, last, center, 0.5 * p_ll, a, b, &mut row);
                        let base = flat_prefix * n;
                        for j in a..=b {
                            out[base + j] += amp * row[j];
                        }
                    }
                }
                // odometer over the leading axes
                let mut done = true;
                let mut k = last;
                while k > 0 {
                    k -= 1;
                    if idx[k] < ranges[k].1 {
                        idx[k] += 1;
                        for kk in k + 1..last {
                            idx[kk] = ranges[kk].0;
                        }
                        done = false;
                        break;
                    }
                }
                if done {
                    break;
                }
            }
        }
    }
}

/// Fills `row[a..=b]` with `exp(-alpha (x_j - center)^2)` on axis `axis`
/// using a multiplicative recurrence outward from the peak.
fn gaussian_row(grid: &Grid, axis: usize, center: f64, alpha: f64, a: usize, b: usize, row: &mut [f64]) {
    let dx = grid.step(axis);
    let (lo, _) = grid.bounds()[axis];
    let x = |j: usize| lo + j as f64 * dx;
    let peak = (((center - lo) / dx).round().max(a as f64) as usize).min(b);
    let exact = |j: usize| {
        let t = x(j) - center;
        (-alpha * t * t).exp()
    };
    let step_decay = (-2.0 * alpha * dx * dx).exp();
    // upward
    let mut j = peak;
    while j <= b {
        let mut g = exact(j);
        let t = x(j) - center;
        let mut ratio = (-alpha * (2.0 * t * dx + dx * dx)).exp();
        let stop = (j + RESEED).min(b + 1);
        while j < stop {
            row[j] = g;
            g *= ratio;
            ratio *= step_decay;
            j += 1;
        }
    }
    // downward
    let mut j = peak as isize - 1;
    while j >= a as isize {
        let ju = j as usize;
        let mut g = exact(ju);
        let t = x(ju) - center;
        let mut ratio = (-alpha * (-2.0 * t * dx + dx * dx)).exp();
        let stop = (j - RESEED as isize).max(a as isize - 1);
        while j > stop {
            row[j as usize] = g;
            g *= ratio;
            ratio *= step_decay;
            j -= 1;
        }
    }
}
