use crate::error::{Error, Result};
use crate::series::SampleMatrix;

/// Empirical CDF of the first coordinate over the rows whose lag part matched
/// a conditioning vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    sorted: Vec<f64>,
}

impl StepCdf {
    fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyConditioning);
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    /// Number of rows that matched the condition.
    pub fn support(&self) -> usize {
        self.sorted.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of matched first elements strictly below `a`.
    pub fn cdf(&self, a: f64) -> f64 {
        self.sorted.partition_point(|&v| v < a) as f64 / self.sorted.len() as f64
    }

    /// Generalized inverse `inf { a : #(v <= a) / m >= p }`: the matched
    /// value of rank `ceil(p m)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} outside (0, 1)")));
        }
        let m = self.sorted.len();
        let rank = ((p * m as f64).ceil() as usize).clamp(1, m);
        Ok(self.sorted[rank - 1])
    }
}

/// Conditional ECDF of the first coordinate given that every lag coordinate
/// lies within `tol` of `condition` (`tol = inf` gives the unconditional ECDF).
pub fn ecdf_conditional(samples: &SampleMatrix, condition: &[f64], tol: f64) -> Result<StepCdf> {
    if condition.len() + 1 != samples.dim() {
        return Err(Error::Domain(format!(
            "condition of length {} for rows of dimension {}",
            condition.len(),
            samples.dim()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::Domain(format!("negative tolerance {tol}")));
    }
    let matched = samples
        .rows()
        .filter(|r| r[1..].iter().zip(condition).all(|(s, x)| (s - x).abs() <= tol))
        .map(|r| r[0])
        .collect();
    StepCdf::from_values(matched)
}

/// ECDF of the first coordinate over all rows.
pub fn ecdf_unconditional(samples: &SampleMatrix) -> Result<StepCdf> {
    StepCdf::from_values(samples.column(0))
}
