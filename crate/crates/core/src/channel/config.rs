use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multi-cell downlink scenario. Field names double as the JSON config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_cells: usize,
    pub antennas_per_gnb: usize,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub rice_k_db: f64,
    pub pathloss_exponent: f64,
    /// Per-antenna SNR of a UE at half the inter-site distance, without
    /// interference. Fixes the pathloss constant.
    pub cell_edge_snr_db: f64,
    pub inter_site_distance_m: f64,
    /// Inclusive range of UE counts in the interfering cells.
    pub ues_per_cell_range: [usize; 2],
    /// Per-TTI correlation coefficient of the scattered channel component.
    pub fading_correlation: f64,
    pub seed: u64,
    pub num_ttis: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            num_cells: 9,
            antennas_per_gnb: 16,
            tx_power_dbm: 46.0,
            noise_power_dbm: -101.0,
            rice_k_db: 10.0,
            pathloss_exponent: 3.5,
            cell_edge_snr_db: 20.0,
            inter_site_distance_m: 200.0,
            ues_per_cell_range: [2, 8],
            fading_correlation: 0.99,
            seed: 42,
            num_ttis: 10_000,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
        if self.num_cells == 0 {
            return bad("num_cells", "must be at least 1");
        }
        if self.antennas_per_gnb == 0 {
            return bad("antennas_per_gnb", "must be at least 1");
        }
        if self.num_ttis == 0 {
            return bad("num_ttis", "must be at least 1");
        }
        let [lo, hi] = self.ues_per_cell_range;
        if lo == 0 || lo > hi {
            return bad("ues_per_cell_range", "must be a non-empty range of positive counts");
        }
        if !(self.inter_site_distance_m > 0.0 && self.inter_site_distance_m.is_finite()) {
            return bad("inter_site_distance_m", "must be positive");
        }
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            return bad("pathloss_exponent", "must be positive");
        }
        if !(0.0..1.0).contains(&self.fading_correlation) {
            return bad("fading_correlation", "must lie in [0, 1)");
        }
        for (key, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_power_dbm", self.noise_power_dbm),
            ("rice_k_db", self.rice_k_db),
            ("cell_edge_snr_db", self.cell_edge_snr_db),
        ] {
            if !v.is_finite() {
                return bad(key, "must be finite");
            }
        }
        Ok(())
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    /// Rice factor `kappa` in linear scale.
    pub fn rice_k(&self) -> f64 {
        db_to_linear(self.rice_k_db)
    }

    /// Large-scale gain `G0 d^-nu`, with `G0` chosen so that
    /// `P G(ISD/2) / sigma^2` equals the cell-edge SNR.
    pub fn pathloss_gain(&self, distance_m: f64) -> f64 {
        let edge = 0.5 * self.inter_site_distance_m;
        let g_edge = db_to_linear(self.cell_edge_snr_db) * self.noise_power_w() / self.tx_power_w();
        g_edge * (distance_m / edge).powf(-self.pathloss_exponent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = NetworkConfig::default();
        c.validate().unwrap();
        assert!((c.noise_power_w() - 10f64.powf(-13.1)).abs() < 1e-25);
        let edge = c.pathloss_gain(100.0) * c.tx_power_w() / c.noise_power_w();
        assert!((linear_to_db(edge) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = serde_json::from_str::<NetworkConfig>(r#"{"num_cels": 3}"#).unwrap_err();
        assert!(err.to_string().contains("num_cels"));
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: NetworkConfig = serde_json::from_str(r#"{"num_cells": 1, "seed": 7}"#).unwrap();
        assert_eq!(c.num_cells, 1);
        assert_eq!(c.antennas_per_gnb, 16);
    }

    #[test]
    fn invalid_values_rejected() {
        let c = NetworkConfig { ues_per_cell_range: [5, 2], ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.contains("ues_per_cell_range")));
        let c = NetworkConfig { num_cells: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
