//! Evaluation grids and gridded densities: integration, marginals, slices and
//! quantile inversion.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of nodes for one-dimensional grids.
pub const DEFAULT_POINTS_1D: usize = 1 << 12;
/// Padding around the data, in units of the largest bandwidth in use. Four
/// standard deviations keep the truncated kernel mass below 1e-4.
pub const DEFAULT_PAD_BANDWIDTHS: f64 = 4.0;

/// Coordinate system of the grid axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridDomain {
    Linear,
    Log10,
}

/// Nodes per dimension used by default for a `dims`-dimensional grid.
///
/// One-dimensional grids use 4096 nodes; higher dimensions keep the total node
/// count at or below 2^16 (256 x 256 in two dimensions, never below 16).
pub fn default_points_per_dim(dims: usize) -> usize {
    let exp = (16 / dims.max(1)).clamp(4, 12);
    1 << exp
}

/// Regular tensor-product grid with the same number of nodes on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    bounds: Vec<(f64, f64)>,
    points_per_dim: usize,
    domain: GridDomain,
}

impl Grid {
    pub fn new(bounds: Vec<(f64, f64)>, points_per_dim: usize, domain: GridDomain) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Domain("grid needs at least one dimension".into()));
        }
        if points_per_dim < 16 || !points_per_dim.is_power_of_two() {
            return Err(Error::Domain(format!(
                "points per dimension must be a power of two >= 16, got {points_per_dim}"
            )));
        }
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Domain(format!("invalid bounds [{lo}, {hi}] on axis {d}")));
            }
        }
        Ok(Self { bounds, points_per_dim, domain })
    }

    /// One-dimensional linear grid.
    pub fn linear_1d(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![(lo, hi)], points, GridDomain::Linear)
    }

    /// Grid covering per-dimension data bounds padded by `pad` on each side.
    pub fn covering(
        data_bounds: &[(f64, f64)],
        pad: f64,
        points_per_dim: usize,
        domain: GridDomain,
    ) -> Result<Self> {
        let bounds = data_bounds
            .iter()
            .map(|&(lo, hi)| {
                let pad = if pad > 0.0 && pad.is_finite() {
                    pad
                } else {
                    (hi - lo).abs().max(1.0) * 0.05
                };
                (lo - pad, hi + pad)
            })
            .collect();
        Self::new(bounds, points_per_dim, domain)
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn domain(&self) -> GridDomain {
        self.domain
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dims() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self, d: usize) -> f64 {
        let (lo, hi) = self.bounds[d];
        (hi - lo) / (self.points_per_dim - 1) as f64
    }

    pub fn node(&self, d: usize, i: usize) -> f64 {
        let (lo, hi) = self.bounds[d];
        if i + 1 == self.points_per_dim {
            hi
        } else {
            lo + i as f64 * self.step(d)
        }
    }

    pub fn axis(&self, d: usize) -> Vec<f64> {
        (0..self.points_per_dim).map(|i| self.node(d, i)).collect()
    }

    /// Trapezoid weights along axis `d`.
    pub fn axis_weights(&self, d: usize) -> Vec<f64> {
        let h = self.step(d);
        let n = self.points_per_dim;
        (0..n)
            .map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h })
            .collect()
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|d| self.step(d)).product()
    }

    /// Multi-index of the flat (row-major, first axis slowest) node index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let n = self.points_per_dim;
        let mut idx = vec![0; self.dims()];
        for d in (0..self.dims()).rev() {
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    /// Coordinates of a flat node index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .into_iter()
            .enumerate()
            .map(|(d, i)| self.node(d, i))
            .collect()
    }

    /// Trapezoid weight of every node (product of axis weights).
    pub fn node_weights(&self) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..self.dims()).map(|d| self.axis_weights(d)).collect();
        let mut out = vec![1.0; self.len()];
        for (flat, w) in out.iter_mut().enumerate() {
            for (d, i) in self.unflatten(flat).into_iter().enumerate() {
                *w *= axes[d][i];
            }
        }
        out
    }

    /// Grid made of axes `from..` of this grid.
    pub fn tail(&self, from: usize) -> Result<Self> {
        Self::new(self.bounds[from..].to_vec(), self.points_per_dim, self.domain)
    }

    /// Grid restricted to a single axis.
    pub fn single_axis(&self, d: usize) -> Self {
        Self {
            bounds: vec![self.bounds[d]],
            points_per_dim: self.points_per_dim,
            domain: self.domain,
        }
    }

    /// Position of `x` on axis `d` as `(cell index, fraction)`, or `None`
    /// outside the axis.
    pub fn locate(&self, d: usize, x: f64) -> Option<(usize, f64)> {
        let (lo, hi) = self.bounds[d];
        if !(x >= lo && x <= hi) {
            return None;
        }
        let pos = (x - lo) / self.step(d);
        let i = (pos.floor() as usize).min(self.points_per_dim - 2);
        Some((i, (pos - i as f64).clamp(0.0, 1.0)))
    }

    /// Nearest node index on axis `d`, clamped to the axis.
    pub fn nearest(&self, d: usize, x: f64) -> usize {
        let (lo, _) = self.bounds[d];
        let pos = ((x - lo) / self.step(d)).round();
        (pos.max(0.0) as usize).min(self.points_per_dim - 1)
    }
}

/// Density values at the nodes of a [`Grid`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    grid: Grid,
    density: Vec<f64>,
}

impl DensityEstimate {
    pub fn new(grid: Grid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                density.len(),
                grid.len()
            )));
        }
        if let Some(v) = density.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Numerical(format!("invalid density value {v}")));
        }
        Ok(Self { grid, density })
    }

    /// Samples `f` at every node of `grid`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let density = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::new(grid, density)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn values(&self) -> &[f64] {
        &self.density
    }

    /// Probability mass carried by each node (density times trapezoid weight).
    pub fn node_masses(&self) -> Vec<f64> {
        self.density
            .iter()
            .zip(self.grid.node_weights())
            .map(|(f, w)| f * w)
            .collect()
    }

    /// Trapezoid integral over the whole grid.
    pub fn total_mass(&self) -> f64 {
        if self.dims() == 1 {
            let w = self.grid.axis_weights(0);
            return self.density.iter().zip(&w).map(|(f, w)| f * w).sum();
        }
        self.density
            .iter()
            .zip(self.grid.node_weights())
            .map(|(f, w)| f * w)
            .sum()
    }

    /// Copy scaled so the trapezoid integral is one.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.total_mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Numerical(format!("cannot normalize density of mass {mass}")));
        }
        Ok(Self {
            grid: self.grid.clone(),
            density: self.density.iter().map(|v| v / mass).collect(),
        })
    }

    /// Integral over `[lo, hi]` of the piecewise-linear interpolant of a 1-D
    /// density. Bounds are clamped to the grid.
    pub fn trapezoid_integral(&self, lo: f64, hi: f64) -> f64 {
        assert_eq!(self.dims(), 1, "trapezoid_integral needs a 1-D density");
        let (glo, ghi) = self.grid.bounds()[0];
        let a = lo.clamp(glo, ghi);
        let b = hi.clamp(glo, ghi);
        if b <= a {
            return 0.0;
        }
        let step = self.grid.step(0);
        let f = &self.density;
        let value_at = |i: usize, x: f64| {
            let x0 = self.grid.node(0, i);
            let t = ((x - x0) / step).clamp(0.0, 1.0);
            f[i] + t * (f[i + 1] - f[i])
        };
        let n = f.len();
        let first = ((a - glo) / step).floor().max(0.0) as usize;
        let mut total = 0.0;
        for i in first.min(n - 2)..n - 1 {
            let x0 = self.grid.node(0, i);
            let x1 = self.grid.node(0, i + 1);
            if x0 >= b {
                break;
            }
            let s = a.max(x0);
            let e = b.min(x1);
            if e > s {
                total += 0.5 * (value_at(i, s) + value_at(i, e)) * (e - s);
            }
        }
        total
    }

    /// Cumulative trapezoid sums at the nodes of a 1-D density.
    pub fn cumulative(&self) -> Vec<f64> {
        assert_eq!(self.dims(), 1, "cumulative needs a 1-D density");
        let step = self.grid.step(0);
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.density.len());
        out.push(0.0);
        for w in self.density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * step;
            out.push(acc);
        }
        out
    }

    /// Smallest `x` whose cumulative mass reaches `p` of the total, linearly
    /// interpolated between grid nodes.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if self.dims() != 1 {
            return Err(Error::Domain("quantile needs a 1-D density".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} outside (0, 1)")));
        }
        let cdf = self.cumulative();
        let total = *cdf.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::Numerical("quantile of a zero density".into()));
        }
        let target = p * total;
        let k = cdf.partition_point(|&c| c < target);
        if k == 0 {
            return Ok(self.grid.node(0, 0));
        }
        if k >= cdf.len() {
            return Ok(self.grid.node(0, cdf.len() - 1));
        }
        let (c0, c1) = (cdf[k - 1], cdf[k]);
        let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 1.0 };
        let x0 = self.grid.node(0, k - 1);
        Ok(x0 + t * self.grid.step(0))
    }

    /// Multilinear interpolation at `x`; zero outside the grid.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dims());
        let mut cells = Vec::with_capacity(x.len());
        for (d, &xd) in x.iter().enumerate() {
            match self.grid.locate(d, xd) {
                Some(c) => cells.push(c),
                None => return 0.0,
            }
        }
        let n = self.grid.points_per_dim();
        let dims = x.len();
        let mut acc = 0.0;
        for corner in 0..(1usize << dims) {
            let mut weight = 1.0;
            let mut flat = 0;
            for (d, &(i, t)) in cells.iter().enumerate() {
                let up = (corner >> d) & 1 == 1;
                weight *= if up { t } else { 1.0 - t };
                flat = flat * n + i + up as usize;
            }
            if weight > 0.0 {
                acc += weight * self.density[flat];
            }
        }
        acc
    }

    /// Integrates out the first axis, leaving a density over the remaining ones.
    pub fn integrate_out_first(&self) -> Result<Self> {
        if self.dims() < 2 {
            return Err(Error::Domain("need at least two dimensions to marginalize".into()));
        }
        let w = self.grid.axis_weights(0);
        let inner = self.density.len() / w.len();
        let mut out = vec![0.0; inner];
        for (i, wi) in w.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&self.density[i * inner..(i + 1) * inner]) {
                *o += wi * v;
            }
        }
        Self::new(self.grid.tail(1)?, out)
    }

    /// Marginal of the first coordinate: every other axis integrated out.
    pub fn marginal_first(&self) -> Result<Self> {
        if self.dims() == 1 {
            return Ok(self.clone());
        }
        let n = self.grid.points_per_dim();
        let inner = self.density.len() / n;
        let w = self.grid.tail(1)?.node_weights();
        let out = (0..n)
            .map(|a| self.density[a * inner..(a + 1) * inner].iter().zip(&w).map(|(v, w)| v * w).sum())
            .collect();
        Self::new(self.grid.single_axis(0), out)
    }

    /// Density along the first axis with the remaining coordinates fixed at
    /// `rest` (multilinear interpolation). `None` when `rest` is off-grid.
    pub fn slice_first(&self, rest: &[f64]) -> Option<Self> {
        assert_eq!(rest.len() + 1, self.dims());
        let n = self.grid.points_per_dim();
        let mut cells = Vec::with_capacity(rest.len());
        for (k, &x) in rest.iter().enumerate() {
            cells.push(self.grid.locate(k + 1, x)?);
        }
        let inner = self.density.len() / n;
        let mut out = vec![0.0; n];
        for corner in 0..(1usize << rest.len()) {
            let mut weight = 1.0;
            let mut offset = 0;
            for (k, &(i, t)) in cells.iter().enumerate() {
                let up = (corner >> k) & 1 == 1;
                weight *= if up { t } else { 1.0 - t };
                offset = offset * n + i + up as usize;
            }
            if weight == 0.0 {
                continue;
            }
            for (a, o) in out.iter_mut().enumerate() {
                *o += weight * self.density[a * inner + offset];
            }
        }
        Some(Self { grid: self.grid.single_axis(0), density: out })
    }

    /// Writes `grid_value,density` rows (1-D) or `grid_value_0,..,density` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.dims() == 1 {
            w.write_record(["grid_value", "density"])?;
        } else {
            let mut header: Vec<String> =
                (0..self.dims()).map(|d| format!("grid_value_{d}")).collect();
            header.push("density".into());
            w.write_record(&header)?;
        }
        for (i, v) in self.density.iter().enumerate() {
            let mut rec: Vec<String> = self.grid.point(i).iter().map(f64::to_string).collect();
            rec.push(v.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn std_normal() -> DensityEstimate {
        let grid = Grid::linear_1d(-8.0, 8.0, 4096).unwrap();
        DensityEstimate::from_fn(grid, |x| (-0.5 * x[0] * x[0]).exp() / (2.0 * PI).sqrt()).unwrap()
    }

    fn uniform_unit() -> DensityEstimate {
        DensityEstimate::from_fn(Grid::linear_1d(0.0, 1.0, 1024).unwrap(), |_| 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::linear_1d(0.0, 1.0, 8).is_err());
        assert!(Grid::linear_1d(0.0, 1.0, 100).is_err());
        assert!(Grid::linear_1d(1.0, 1.0, 64).is_err());
    }

    #[test]
    fn uniform_half_mass() {
        let u = uniform_unit();
        assert!((u.trapezoid_integral(0.0, 0.5) - 0.5).abs() < 1e-12);
        assert_eq!(u.trapezoid_integral(0.3, 0.3), 0.0);
        // clamped to the grid
        assert!((u.trapezoid_integral(-5.0, 5.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_one_sigma_mass() {
        // erf(1/sqrt 2)
        let m = std_normal().trapezoid_integral(-1.0, 1.0);
        assert!((m - 0.682_689_492_137_086).abs() < 1e-5, "{m}");
    }

    #[test]
    fn quantiles() {
        let u = uniform_unit();
        let step = u.grid().step(0);
        assert!((u.quantile(0.95).unwrap() - 0.95).abs() <= step);
        let n = std_normal();
        assert!(n.quantile(0.5).unwrap().abs() <= n.grid().step(0));
        // inverse normal cdf at 0.9
        assert!((n.quantile(0.9).unwrap() - 1.281_551_565_544_6).abs() < 1e-3);
        assert!(n.quantile(0.0).is_err());
        assert!(n.quantile(1.0).is_err());
    }

    #[test]
    fn quantile_monotone_sweep() {
        let n = std_normal();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..1000 {
            let q = n.quantile(k as f64 / 1000.0).unwrap();
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn marginal_and_slice_of_product() {
        let grid = Grid::new(vec![(-6.0, 6.0), (-5.0, 7.0)], 128, GridDomain::Linear).unwrap();
        let g = |x: f64, m: f64, s: f64| (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * PI).sqrt());
        let joint = DensityEstimate::from_fn(grid, |x| g(x[0], 0.0, 1.0) * g(x[1], 1.0, 1.2)).unwrap();
        assert!((joint.total_mass() - 1.0).abs() < 1e-6);
        let marg = joint.integrate_out_first().unwrap();
        assert!((marg.total_mass() - 1.0).abs() < 1e-6);
        assert!((marg.evaluate(&[1.0]) - g(1.0, 1.0, 1.2)).abs() < 1e-3);
        let slice = joint.slice_first(&[0.3]).unwrap().normalized().unwrap();
        assert!((slice.evaluate(&[0.5]) - g(0.5, 0.0, 1.0)).abs() < 1e-3);
        assert!(joint.slice_first(&[50.0]).is_none());
        let first = joint.marginal_first().unwrap();
        assert!((first.total_mass() - 1.0).abs() < 1e-6);
        assert!((first.evaluate(&[0.4]) - g(0.4, 0.0, 1.0)).abs() < 1e-3);
    }
}
