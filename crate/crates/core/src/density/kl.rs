use crate::error::{Error, Result};
use crate::grid::DensityEstimate;

/// Densities below this are treated as this value in the denominator.
pub const KL_FLOOR: f64 = 1e-300;

/// Kullback-Leibler divergence `D(p || q)` in bits, integrated with trapezoid
/// weights over the nodes where `p > 0`.
pub fn kl_divergence(p: &DensityEstimate, q: &DensityEstimate) -> Result<f64> {
    if p.grid() != q.grid() {
        return Err(Error::GridMismatch("KL divergence needs both densities on one grid".into()));
    }
    let weights = p.grid().node_weights();
    Ok(p.values()
        .iter()
        .zip(q.values())
        .zip(&weights)
        .filter(|((&pv, _), _)| pv > 0.0)
        .map(|((&pv, &qv), &w)| w * pv * (pv / qv.max(KL_FLOOR)).log2())
        .sum())
}
