use std::io::Read;

use serde::Deserialize;

use crate::channel::db_to_linear;
use crate::error::{Error, Result};

/// Highest MCS whose minimum SINR is strictly below `predicted_sinr`.
/// `thresholds` holds `(mcs_index, min_sinr)` pairs in strictly ascending
/// order of `min_sinr`, in the same units as the prediction.
pub fn select_mcs(predicted_sinr: f64, thresholds: &[(usize, f64)]) -> Result<Option<usize>> {
    if thresholds.is_empty() {
        return Err(Error::Domain("empty MCS table".into()));
    }
    if thresholds.windows(2).any(|w| !(w[0].1 < w[1].1)) {
        return Err(Error::Domain("MCS thresholds must be strictly ascending".into()));
    }
    Ok(thresholds.iter().filter(|(_, min)| predicted_sinr > *min).map(|(i, _)| *i).max())
}

#[derive(Deserialize)]
struct McsRow {
    mcs_index: usize,
    min_sinr_db: f64,
}

/// Reads an `mcs_index,min_sinr_db` table, converting thresholds to linear SINR.
pub fn read_mcs_table<R: Read>(reader: R) -> Result<Vec<(usize, f64)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: McsRow = row?;
        out.push((row.mcs_index, db_to_linear(row.min_sinr_db)));
    }
    if out.is_empty() {
        return Err(Error::Domain("empty MCS table".into()));
    }
    Ok(out)
}
