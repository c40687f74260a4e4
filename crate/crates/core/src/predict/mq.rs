//! Maximum-quantile prediction from a conditional density of the next IPV
//! given the most recent ones.

use crate::density::histogram::default_histogram_grid;
use crate::density::{kde_fit, lcsb_fit, partition_samples, sbsse_fit, BandwidthChoice, BandwidthMethod};
use crate::error::{Error, Result};
use crate::grid::{DensityEstimate, GridDomain};
use crate::predict::config::{Method, PredictorConfig};
use crate::series::{build_sample_matrix, from_log_domain, to_log_domain, IpvSeries, SampleMatrix};

/// Marginal densities below this count as no evidence for the condition.
pub const MIN_EVIDENCE: f64 = 1e-300;

/// Ratio of the joint slice at `condition` to the marginal there, renormalized
/// on the grid. The joint's first axis is the predicted coordinate.
pub fn conditional_density(
    joint: &DensityEstimate,
    marginal: &DensityEstimate,
    condition: &[f64],
) -> Result<DensityEstimate> {
    if marginal.dims() + 1 != joint.dims() || condition.len() != marginal.dims() {
        return Err(Error::GridMismatch(format!(
            "{}-D joint, {}-D marginal, condition of length {}",
            joint.dims(),
            marginal.dims(),
            condition.len()
        )));
    }
    if marginal.grid().bounds() != &joint.grid().bounds()[1..]
        || marginal.grid().points_per_dim() != joint.grid().points_per_dim()
    {
        return Err(Error::GridMismatch("marginal grid is not the joint's lag grid".into()));
    }
    let evidence = marginal.evaluate(condition);
    if !(evidence >= MIN_EVIDENCE) {
        return Err(Error::LowEvidence(evidence));
    }
    let slice = joint.slice_first(condition).ok_or(Error::LowEvidence(0.0))?;
    let scaled: Vec<f64> = slice.values().iter().map(|v| v / evidence).collect();
    DensityEstimate::new(slice.grid().clone(), scaled)?
        .normalized()
        .map_err(|_| Error::LowEvidence(evidence))
}

/// `(1 - epsilon)`-quantile of a 1-D density, mapped back to linear units
/// when the grid is in the log10 domain.
pub fn outage_quantile(conditional: &DensityEstimate, epsilon: f64) -> Result<f64> {
    let q = conditional.quantile(1.0 - epsilon)?;
    Ok(match conditional.grid().domain() {
        GridDomain::Linear => q,
        GridDomain::Log10 => from_log_domain(q),
    })
}

/// Fit summary needed for the complexity counters.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct FitInfo {
    /// Grid nodes per dimension.
    pub grid_points: usize,
    pub rows: usize,
    pub subset_sizes: Vec<usize>,
    pub bandwidths: Vec<f64>,
    pub n_it: usize,
    pub converged: bool,
    pub bandwidth_fallback: bool,
}

#[derive(Debug, Clone)]
enum Fitted {
    Ecdf {
        /// `(lag, next)` pairs in log10 units, sorted by lag.
        pairs: Vec<(f64, f64)>,
        unconditional: Vec<f64>,
        tol: f64,
    },
    Density {
        joint: DensityEstimate,
        marginal: DensityEstimate,
        first: DensityEstimate,
    },
}

/// Predicted outage IPV and whether the unconditional marginal was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MqPrediction {
    pub ipv: f64,
    pub fallback: bool,
}

/// A fitted maximum-quantile predictor. Estimation runs on log10 IPVs.
#[derive(Debug, Clone)]
pub struct MqPredictor {
    method: Method,
    n_prev: usize,
    fitted: Fitted,
    info: FitInfo,
}

impl MqPredictor {
    /// Fits the method's joint density of `[phi(t+1), phi(t), ..]` on a
    /// training series.
    pub fn fit(training: &IpvSeries, cfg: &PredictorConfig) -> Result<Self> {
        cfg.validate()?;
        let samples = build_sample_matrix(training, cfg.n_prev)?.to_log10();
        Self::fit_samples(&samples, cfg)
    }

    /// Fits on a log-domain sample matrix whose first column is the target.
    pub fn fit_samples(samples: &SampleMatrix, cfg: &PredictorConfig) -> Result<Self> {
        if !cfg.method.is_mq() {
            return Err(Error::Config(format!("{} is not a maximum-quantile method", cfg.method)));
        }
        let dim = samples.dim();
        let mut info = FitInfo { rows: samples.len(), subset_sizes: vec![samples.len()], ..Default::default() };
        let density = match cfg.method {
            Method::MqEcdf => {
                let grid = default_histogram_grid(samples)?;
                info.grid_points = grid.points_per_dim();
                let mut pairs: Vec<(f64, f64)> = samples.rows().map(|r| (r[1], r[0])).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut unconditional = samples.column(0);
                unconditional.sort_by(f64::total_cmp);
                let fitted = Fitted::Ecdf { pairs, unconditional, tol: grid.step(1) };
                return Ok(Self { method: cfg.method, n_prev: cfg.n_prev, fitted, info });
            }
            Method::MqKde => {
                let fit = kde_fit(samples, BandwidthChoice::Auto)?;
                info.bandwidths = vec![fit.bandwidth];
                info.bandwidth_fallback = fit.method == Some(BandwidthMethod::GaussianReference);
                info.converged = true;
                fit.density
            }
            Method::MqSbsse => {
                let partition = partition_samples(samples, cfg.subsets(), cfg.policy)?.with_min_size(dim + 1);
                let (model, density) = sbsse_fit(samples, &partition, cfg.eps_kl, cfg.max_iter)?;
                info.subset_sizes = model.subset_sizes.clone();
                info.bandwidths = model.bandwidths.clone();
                info.n_it = model.n_it;
                info.converged = model.converged;
                density
            }
            Method::MqLcsb => {
                let partition = partition_samples(samples, cfg.subsets(), cfg.policy)?.with_min_size(dim + 1);
                let (model, density) = lcsb_fit(samples, &partition)?;
                info.subset_sizes = model.partition.sizes();
                info.bandwidths = model.covariances.iter().map(|c| c.trace().sqrt()).collect();
                info.converged = true;
                density
            }
            _ => unreachable!(),
        };
        info.grid_points = density.grid().points_per_dim();
        let marginal = density.integrate_out_first()?;
        let first = density.marginal_first()?;
        Ok(Self {
            method: cfg.method,
            n_prev: cfg.n_prev,
            fitted: Fitted::Density { joint: density, marginal, first },
            info,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn n_prev(&self) -> usize {
        self.n_prev
    }

    pub fn info(&self) -> &FitInfo {
        &self.info
    }

    /// Joint density in the log10 domain (`None` for the ECDF).
    pub fn joint(&self) -> Option<&DensityEstimate> {
        match &self.fitted {
            Fitted::Density { joint, .. } => Some(joint),
            Fitted::Ecdf { .. } => None,
        }
    }

    fn condition(&self, recent: &[f64]) -> Result<Vec<f64>> {
        if recent.len() != self.n_prev {
            return Err(Error::Domain(format!("expected {} recent IPVs, got {}", self.n_prev, recent.len())));
        }
        Ok(recent.iter().map(|&v| to_log_domain(v)).collect())
    }

    /// Outage IPV in watts for the next TTI given the `n_prev` most recent
    /// IPVs, newest first. Fails with a low-evidence or empty-conditioning
    /// error when the condition falls outside the training data.
    pub fn predict(&self, recent: &[f64], epsilon: f64) -> Result<f64> {
        let condition = self.condition(recent)?;
        let p = 1.0 - epsilon;
        match &self.fitted {
            Fitted::Ecdf { pairs, tol, .. } => {
                let c = condition[0];
                let lo = pairs.partition_point(|(lag, _)| *lag < c - tol);
                let hi = pairs.partition_point(|(lag, _)| *lag <= c + tol);
                if lo >= hi {
                    return Err(Error::EmptyConditioning);
                }
                let mut matched: Vec<f64> = pairs[lo..hi].iter().map(|x| x.1).collect();
                matched.sort_by(f64::total_cmp);
                Ok(from_log_domain(rank_quantile(&matched, p)?))
            }
            Fitted::Density { joint, marginal, .. } => {
                let cond = conditional_density(joint, marginal, &condition)?;
                Ok(from_log_domain(cond.quantile(p)?))
            }
        }
    }

    /// Outage IPV of the unconditional marginal of the next IPV.
    pub fn predict_unconditional(&self, epsilon: f64) -> Result<f64> {
        let p = 1.0 - epsilon;
        let q = match &self.fitted {
            Fitted::Ecdf { unconditional, .. } => rank_quantile(unconditional, p)?,
            Fitted::Density { first, .. } => first.quantile(p)?,
        };
        Ok(from_log_domain(q))
    }

    /// [`predict`](Self::predict), falling back to the unconditional marginal
    /// when the condition carries no evidence.
    pub fn predict_or_marginal(&self, recent: &[f64], epsilon: f64) -> Result<MqPrediction> {
        match self.predict(recent, epsilon) {
            Ok(ipv) => Ok(MqPrediction { ipv, fallback: false }),
            Err(Error::LowEvidence(_) | Error::EmptyConditioning) => {
                Ok(MqPrediction { ipv: self.predict_unconditional(epsilon)?, fallback: true })
            }
            Err(e) => Err(e),
        }
    }
}

/// Value of rank `ceil(p m)` in an ascending slice.
fn rank_quantile(sorted: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level {p} outside (0, 1)")));
    }
    let m = sorted.len();
    let rank = ((p * m as f64).ceil() as usize).clamp(1, m);
    Ok(sorted[rank - 1])
}
