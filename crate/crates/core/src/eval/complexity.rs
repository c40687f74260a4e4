//! Closed-form operation counts of the density estimators.

use crate::density::isj::{ISJ_BRACKET_MAX, ISJ_ROOT_TOL};
use crate::error::{Error, Result};
use crate::predict::{FitInfo, Method};

/// Additions and multiplications of a two-dimensional DCT of size `mu`.
pub fn complexity_dct(mu: u64) -> Result<f64> {
    if mu < 2 || !mu.is_power_of_two() {
        return Err(Error::Domain(format!("DCT size {mu} is not a power of two >= 2")));
    }
    // nine times the count is an integer
    let beta = mu.trailing_zeros() as i64;
    let sign = if beta % 2 == 0 { 1 } else { -1 };
    let mu = mu as i64;
    Ok((21 * mu * beta - 20 * mu + 2 * sign + 18) as f64 / 9.0)
}

/// Bisection steps to shrink a bracket of width `eta0` to `eta`.
pub fn complexity_root(eta0: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta0 > eta) {
        return Err(Error::Domain(format!("need eta0 > eta > 0, got {eta0} and {eta}")));
    }
    Ok(2.0 * (eta0 / eta).log2())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityParams {
    /// DCT size (grid nodes per dimension).
    pub mu: u64,
    pub eta0: f64,
    pub eta: f64,
    pub subset_sizes: Vec<usize>,
    pub n_it: usize,
}

impl ComplexityParams {
    /// Parameters of a fitted predictor, with the ISJ bisection bracket.
    pub fn from_fit(info: &FitInfo) -> Self {
        Self {
            mu: info.grid_points as u64,
            eta0: ISJ_BRACKET_MAX,
            eta: ISJ_ROOT_TOL,
            subset_sizes: info.subset_sizes.clone(),
            n_it: info.n_it,
        }
    }

    fn total(&self) -> usize {
        self.subset_sizes.iter().sum()
    }
}

pub fn complexity_kde(mu: u64, eta0: f64, eta: f64) -> Result<f64> {
    Ok(complexity_dct(mu)? + complexity_root(eta0, eta)?)
}

/// Operation count of `method` at the given parameters.
///
/// The SBSSE runs one KDE per subset on a grid of `mu / B` nodes (rounded
/// down to a power of two, at least 2) plus `4B` operations per sample and
/// iteration. LC-SB touches each sample once. The ECDF and the log-normal fit
/// make one pass over the training samples; OLLA-LPP has no fit.
pub fn complexity_totals(method: Method, p: &ComplexityParams) -> Result<f64> {
    let b = p.subset_sizes.len();
    match method {
        Method::MqKde => complexity_kde(p.mu, p.eta0, p.eta),
        Method::MqSbsse => {
            if b == 0 {
                return Err(Error::Domain("no subsets".into()));
            }
            let sub = (p.mu / b as u64).max(2);
            let sub = 1u64 << (63 - sub.leading_zeros());
            let kde = complexity_kde(sub, p.eta0, p.eta)?;
            Ok(b as f64 * kde + (p.n_it * 4 * b * p.total()) as f64)
        }
        Method::MqLcsb | Method::MqEcdf | Method::Lognormal => Ok(p.total() as f64),
        Method::OllaLpp => Ok(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_hand_values() {
        assert_eq!(complexity_dct(8).unwrap(), 40.0);
        assert!((complexity_dct(2).unwrap() - 2.0).abs() < 1e-12);
        assert!(complexity_dct(6).is_err());
        assert!(complexity_dct(1).is_err());
        for k in 1..12 {
            let mu = 1u64 << k;
            assert!(complexity_dct(2 * mu).unwrap() > 2.0 * complexity_dct(mu).unwrap());
        }
    }

    #[test]
    fn root_count() {
        assert_eq!(complexity_root(1024.0, 1.0).unwrap(), 20.0);
        assert!(complexity_root(1.0, 1.0).is_err());
    }

    #[test]
    fn method_totals() {
        let p = ComplexityParams { mu: 256, eta0: 1024.0, eta: 1.0, subset_sizes: vec![50, 50], n_it: 3 };
        assert_eq!(complexity_totals(Method::MqLcsb, &p).unwrap(), 100.0);
        let single = ComplexityParams { subset_sizes: vec![700], n_it: 1, ..p.clone() };
        let kde = complexity_totals(Method::MqKde, &single).unwrap();
        assert_eq!(complexity_totals(Method::MqSbsse, &single).unwrap(), kde + 4.0 * 700.0);
        assert!(complexity_totals(Method::MqLcsb, &p).unwrap() <= complexity_totals(Method::MqSbsse, &p).unwrap());
    }
}
