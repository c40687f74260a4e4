use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum ratio transmission precoder `h^H / ||h||`.
pub fn mrt_precoder(channel: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = channel.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::DegenerateChannel);
    }
    Ok(channel.iter().map(|c| c.conj() / norm).collect())
}

/// `h g`, the effective scalar channel of row vector `h` and column vector `g`.
pub fn effective_gain(h: &[Complex64], g: &[Complex64]) -> Complex64 {
    h.iter().zip(g).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_basis_vector() {
        let g = mrt_precoder(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(g, vec![c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn hand_computed_example() {
        let h = [c(0.0, 3.0), c(4.0, 0.0)];
        let g = mrt_precoder(&h).unwrap();
        let norm: f64 = g.iter().map(|v| v.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
        let hg = effective_gain(&h, &g);
        assert!((hg - c(5.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_channel_rejected() {
        assert!(matches!(mrt_precoder(&[c(0.0, 0.0); 3]), Err(Error::DegenerateChannel)));
    }

    #[test]
    fn mrt_beats_random_unit_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h: Vec<Complex64> = (0..8).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let best = effective_gain(&h, &mrt_precoder(&h).unwrap()).norm();
        for _ in 0..1000 {
            let v: Vec<Complex64> = (0..8).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let g: Vec<Complex64> = v.iter().map(|x| x / n).collect();
            assert!(effective_gain(&h, &g).norm() <= best + 1e-12);
        }
    }
}
