//! Kernel density estimation of interference power for outage-quantile
//! prediction and link adaptation.
//!
//! The crate covers the numerical core (grids, gridded densities), the
//! estimators (histogram, conditional ECDF, KDE with the ISJ bandwidth, the
//! subsets-based sample smoothing estimator and its covariance variant), a
//! multi-cell Rice-fading trace generator, the interference predictors, and
//! the reliability / spectral-efficiency evaluation.

pub mod error;
pub mod grid;
pub mod series;

pub mod channel;
pub mod density;
pub mod eval;
pub mod predict;

pub use error::{Error, Result};
pub use grid::{DensityEstimate, Grid, GridDomain};
pub use series::{build_sample_matrix, IpvSeries, SampleMatrix};
