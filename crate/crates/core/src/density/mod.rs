//! Density estimators, bandwidth selection and the AMISE analytics.

pub mod amise;
pub mod ecdf;
pub mod histogram;
pub mod isj;
pub mod kde;
pub mod kernel;
pub mod kl;
pub mod lcsb;
pub mod partition;
pub mod sbsse;

pub use amise::{
    amise_curves, amise_kde, amise_sbsse, amise_setup, optimal_bandwidth_kde, optimal_bandwidth_sbsse, upsilon,
    AmiseConfig, AmiseRow, AmiseSetup,
};
pub use ecdf::{ecdf_conditional, ecdf_unconditional, StepCdf};
pub use histogram::{histogram_pdf, histogram_pdf_on};
pub use isj::{gaussian_reference_bandwidth, isj_bandwidth, Bandwidth, BandwidthMethod};
pub use kde::{balloon_estimate, kde_at, kde_fit, kde_fit_on, kde_grid, BandwidthChoice, KdeFit};
pub use kernel::KernelSpec;
pub use kl::kl_divergence;
pub use lcsb::{lcsb_fit, lcsb_fit_on, LcsbModel};
pub use partition::{partition_samples, PartitionPolicy, Region, SubsetPartition};
pub use sbsse::{sbsse_at, sbsse_density, sbsse_fit, sbsse_fit_on, SbsseModel, DEFAULT_EPS_KL, DEFAULT_MAX_ITER};
