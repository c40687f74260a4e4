//! Interference power series and the lagged sample matrices built from them.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to zero interference powers before moving to the log domain.
pub const IPV_FLOOR_W: f64 = 1e-20;

/// Maps a linear power to the log10 estimation domain, flooring zeros.
pub fn to_log_domain(watts: f64) -> f64 {
    watts.max(IPV_FLOOR_W).log10()
}

/// Inverse of [`to_log_domain`].
pub fn from_log_domain(log10_watts: f64) -> f64 {
    10f64.powf(log10_watts)
}

/// Time-ordered interference power values in linear watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpvSeries {
    values: Vec<f64>,
    tti_start: i64,
}

impl IpvSeries {
    pub fn new(values: Vec<f64>, tti_start: i64) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidPower { index, value });
        }
        Ok(Self { values, tti_start })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tti_start(&self) -> i64 {
        self.tti_start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sub-series `[start, end)` keeping TTI numbering.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.values.len() {
            return Err(Error::Domain(format!(
                "slice [{start}, {end}) out of range for series of length {}",
                self.values.len()
            )));
        }
        Ok(Self {
            values: self.values[start..end].to_vec(),
            tti_start: self.tti_start + start as i64,
        })
    }

    /// Values mapped to the log10 domain with the zero floor applied.
    pub fn log10_values(&self) -> Vec<f64> {
        self.values.iter().map(|&v| to_log_domain(v)).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["tti", "ipv_watts"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(self.tti_start + i as i64).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let tti_col = column(&headers, "tti")?;
        let ipv_col = column(&headers, "ipv_watts")?;
        let mut values = Vec::new();
        let mut tti_start = None;
        for (row, record) in r.records().enumerate() {
            let record = record?;
            let tti: i64 = parse_field(&record, tti_col, row)?;
            let expected = tti_start.get_or_insert(tti);
            if tti != *expected + row as i64 {
                return Err(Error::Domain(format!(
                    "non-consecutive tti {tti} at row {row}"
                )));
            }
            values.push(parse_field(&record, ipv_col, row)?);
        }
        Self::new(values, tti_start.unwrap_or(0))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

pub(crate) fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Domain(format!("missing csv column `{name}`")))
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    col: usize,
    row: usize,
) -> Result<T> {
    record
        .get(col)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Domain(format!("bad value in column {col} of row {row}")))
}

/// `N x D` matrix of lagged windows of an interference series, stored row-major.
///
/// Row `n` (0-based) is `[phi(L-3-n), phi(L-4-n), ..., phi(L-3-n-n_prev)]` for a
/// series of length `L`: the first element is the most recent value of the
/// window and the remaining `n_prev` entries are its predecessors. The two
/// newest samples of the series are not used. Rows run from most to least
/// recent.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    dim: usize,
    data: Vec<f64>,
    /// Index in the source series of each row's first element.
    origin: Vec<usize>,
}

impl SampleMatrix {
    /// Builds a matrix from explicit rows, all of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Domain("sample matrix needs non-empty rows".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Domain("rows of unequal length".into()));
        }
        Ok(Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
            origin: (0..rows.len()).collect(),
        })
    }

    /// One-dimensional matrix, one row per value.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("sample matrix needs at least one row".into()));
        }
        Ok(Self {
            dim: 1,
            data: values.to_vec(),
            origin: (0..values.len()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    /// Values of column `d`.
    pub fn column(&self, d: usize) -> Vec<f64> {
        self.rows().map(|r| r[d]).collect()
    }

    /// Per-dimension `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|d| {
                self.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[d]), hi.max(r[d]))
                })
            })
            .collect()
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &n in rows {
            data.extend_from_slice(self.row(n));
        }
        Self {
            dim: self.dim,
            data,
            origin: rows.iter().map(|&n| self.origin[n]).collect(),
        }
    }

    /// Same matrix with every entry mapped through [`to_log_domain`].
    pub fn to_log10(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| to_log_domain(v)).collect(),
            origin: self.origin.clone(),
        }
    }
}

/// Builds the lagged sample matrix for `n_prev` conditioning lags.
pub fn build_sample_matrix(series: &IpvSeries, n_prev: usize) -> Result<SampleMatrix> {
    let len = series.len();
    let needed = n_prev + 3;
    if len < needed {
        return Err(Error::SeriesTooShort { needed, got: len });
    }
    let dim = n_prev + 1;
    let rows = len - n_prev - 2;
    let v = series.values();
    let mut data = Vec::with_capacity(rows * dim);
    let mut origin = Vec::with_capacity(rows);
    for n in 0..rows {
        let first = len - 3 - n;
        origin.push(first);
        data.extend((0..dim).map(|j| v[first - j]));
    }
    Ok(SampleMatrix { dim, data, origin })
}
