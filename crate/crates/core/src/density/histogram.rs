use crate::error::Result;
use crate::grid::{default_points_per_dim, DensityEstimate, Grid, GridDomain};
use crate::series::SampleMatrix;

/// Grid used when no bandwidth is involved: data bounds padded by 5% of the
/// widest range.
pub fn default_histogram_grid(samples: &SampleMatrix) -> Result<Grid> {
    let bounds = samples.bounds();
    let widest = bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    let pad = if widest > 0.0 { 0.05 * widest } else { 1.0 };
    Grid::covering(&bounds, pad, default_points_per_dim(samples.dim()), GridDomain::Linear)
}

/// Relative-frequency histogram on the default grid.
pub fn histogram_pdf(samples: &SampleMatrix) -> Result<DensityEstimate> {
    histogram_pdf_on(samples, &default_histogram_grid(samples)?)
}

/// Puts mass `1/N` on the grid node nearest to each sample. Node densities are
/// divided by the node's trapezoid weight so the grid integral is one.
pub fn histogram_pdf_on(samples: &SampleMatrix, grid: &Grid) -> Result<DensityEstimate> {
    let n = grid.points_per_dim();
    let weights = grid.node_weights();
    let mut density = vec![0.0; grid.len()];
    let unit = 1.0 / samples.len() as f64;
    for row in samples.rows() {
        let flat = row
            .iter()
            .enumerate()
            .fold(0, |acc, (d, &x)| acc * n + grid.nearest(d, x));
        density[flat] += unit;
    }
    for (v, w) in density.iter_mut().zip(&weights) {
        *v /= w;
    }
    DensityEstimate::new(grid.clone(), density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_become_masses() {
        let s = SampleMatrix::from_values(&[1.0, 1.0, 3.0]).unwrap();
        let est = histogram_pdf(&s).unwrap();
        let masses = est.node_masses();
        let g = est.grid();
        assert!((masses[g.nearest(0, 1.0)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((masses[g.nearest(0, 3.0)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((est.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_sample_has_unit_mass() {
        let s = SampleMatrix::from_values(&[4.2]).unwrap();
        let est = histogram_pdf(&s).unwrap();
        let masses = est.node_masses();
        assert!((masses[est.grid().nearest(0, 4.2)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discrete_law_within_binomial_band() {
        let atoms = [0.0, 1.0, 2.0, 5.0];
        let probs = [0.1, 0.4, 0.3, 0.2];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, p) in atoms.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *a;
                    }
                }
                atoms[3]
            })
            .collect();
        let est = histogram_pdf(&SampleMatrix::from_values(&draws).unwrap()).unwrap();
        let masses = est.node_masses();
        for (a, p) in atoms.iter().zip(probs) {
            let got = masses[est.grid().nearest(0, *a)];
            let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!((got - p).abs() <= band, "atom {a}: {got} vs {p}");
        }
    }

    #[test]
    fn two_dimensional_histogram_normalizes() {
        let rows = vec![vec![0.0, 1.0], vec![0.5, 2.0], vec![0.0, 1.0]];
        let est = histogram_pdf(&SampleMatrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(est.dims(), 2);
        assert!((est.total_mass() - 1.0).abs() < 1e-12);
    }
}
