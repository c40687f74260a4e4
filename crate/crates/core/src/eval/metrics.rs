use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Blocklength in channel uses for the finite-blocklength rate.
pub const DEFAULT_BLOCKLENGTH: u64 = 128;

/// Fraction of TTIs `1..T` whose predicted outage IPV lies strictly below the
/// actual one. The first entry of each sequence is not scored.
pub fn reliability_theta(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::Domain(format!(
            "{} predictions for {} actual values",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.len() < 2 {
        return Err(Error::Domain("need at least two TTIs".into()));
    }
    let violations = predicted[1..].iter().zip(&actual[1..]).filter(|(p, a)| p < a).count();
    Ok(violations as f64 / (predicted.len() - 1) as f64)
}

/// Inverse Gaussian tail function `Q^-1(eps)`.
pub fn q_inv(epsilon: f64) -> f64 {
    let n = Normal::standard();
    -n.inverse_cdf(epsilon)
}

/// Channel dispersion `rho (2 + rho) / (1 + rho)^2`.
pub fn dispersion(sinr: f64) -> f64 {
    sinr * (2.0 + sinr) / (1.0 + sinr).powi(2)
}

/// Finite-blocklength penalty `sqrt(V / M) Q^-1(eps)`.
pub fn blocklength_penalty(sinr: f64, epsilon: f64, blocklength: u64) -> f64 {
    (dispersion(sinr) / blocklength as f64).sqrt() * q_inv(epsilon)
}

/// Normal-approximation rate in bit/s/Hz, zero after a violation and never
/// negative.
pub fn spectral_efficiency(pred_sinr: f64, violated: bool, epsilon: f64, blocklength: u64) -> f64 {
    if violated || !(pred_sinr > 0.0) {
        return 0.0;
    }
    ((1.0 + pred_sinr).log2() - blocklength_penalty(pred_sinr, epsilon, blocklength)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_edges() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(reliability_theta(&[9.0; 4], &a).unwrap(), 0.0);
        assert_eq!(reliability_theta(&[0.0; 4], &a).unwrap(), 1.0);
        assert_eq!(reliability_theta(&a, &a).unwrap(), 0.0);
        // first TTI is not scored
        assert_eq!(reliability_theta(&[0.0, 9.0, 9.0, 0.0], &a).unwrap(), 1.0 / 3.0);
        assert!(reliability_theta(&[1.0], &[1.0]).is_err());
        assert!(reliability_theta(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn se_edges() {
        assert_eq!(spectral_efficiency(10.0, true, 0.01, 128), 0.0);
        assert_eq!(spectral_efficiency(0.0, false, 0.01, 128), 0.0);
        // low SINR: the normal approximation would go negative
        assert_eq!(spectral_efficiency(0.01, false, 1e-5, 128), 0.0);
    }

    #[test]
    fn q_inverse_table() {
        // standard normal upper quantiles
        assert!((q_inv(1e-5) - 4.264_890_793_922_825).abs() < 1e-6);
        assert!((q_inv(1e-3) - 3.090_232_306_167_813_5).abs() < 1e-6);
        assert!((q_inv(0.1) - 1.281_551_565_544_600_4).abs() < 1e-6);
    }

    #[test]
    fn penalty_at_high_sinr() {
        let rho = 1e3;
        let v = dispersion(rho);
        let oracle = (v / 128.0).sqrt() * 4.264_890_793_922_825;
        assert!((blocklength_penalty(rho, 1e-5, 128) - oracle).abs() < 1e-3);
        assert!((oracle - 0.377).abs() < 1e-3);
        let shannon = 1001f64.log2();
        assert!((spectral_efficiency(rho, false, 1e-5, 100_000_000) - shannon).abs() < 1e-3);
    }

    #[test]
    fn se_below_shannon() {
        for k in 0..200 {
            let rho = 10f64.powf(k as f64 / 20.0 - 3.0);
            for eps in [0.4, 0.1, 1e-3, 1e-6] {
                assert!(spectral_efficiency(rho, false, eps, 128) <= (1.0 + rho).log2());
            }
        }
    }
}
