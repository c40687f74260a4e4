//! Splitting the sample set into disjoint subsets (value-based, count-based
//! or explicit labels) and merging subsets too small to fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SampleMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionPolicy {
    /// Equal-width bins on `[min, max]` per dimension.
    ValueBased,
    /// Equal-count bins per dimension.
    CountBased,
    /// Caller-provided labels; subsets have no geometric region.
    Explicit,
}

/// An axis-aligned box, one `(lo, hi)` interval per dimension. Outermost
/// intervals extend to infinity so the boxes tile the whole space.
pub type Region = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
struct Subset {
    rows: Vec<usize>,
    cells: Vec<Vec<usize>>,
    flat: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetPartition {
    policy: PartitionPolicy,
    bins_per_dim: usize,
    requested_bins: usize,
    edges: Option<Vec<Vec<f64>>>,
    subsets: Vec<Subset>,
    assignment: Vec<usize>,
    empty_dropped: usize,
    merged: usize,
}

impl SubsetPartition {
    pub fn policy(&self) -> PartitionPolicy {
        self.policy
    }

    /// Effective number of subsets `B`.
    pub fn num_subsets(&self) -> usize {
        self.subsets.len()
    }

    /// Bins per dimension after any reduction.
    pub fn bins_per_dim(&self) -> usize {
        self.bins_per_dim
    }

    /// True when the requested bin count exceeded the distinct values of some
    /// dimension and was lowered.
    pub fn bins_reduced(&self) -> bool {
        self.bins_per_dim < self.requested_bins
    }

    /// Cartesian cells that received no rows.
    pub fn empty_dropped(&self) -> usize {
        self.empty_dropped
    }

    /// Number of merges performed to remove deficient subsets.
    pub fn merged(&self) -> usize {
        self.merged
    }

    /// Row index to subset index.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn rows(&self, i: usize) -> &[usize] {
        &self.subsets[i].rows
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.subsets.iter().map(|s| s.rows.len()).collect()
    }

    /// Per-dimension bin edges (`bins + 1` values, finite outer edges at the
    /// data range). `None` for explicit partitions.
    pub fn edges(&self) -> Option<&[Vec<f64>]> {
        self.edges.as_deref()
    }

    /// Boxes whose union is subset `i`'s region, or `None` for explicit labels.
    pub fn regions(&self, i: usize) -> Option<Vec<Region>> {
        let edges = self.edges.as_ref()?;
        Some(
            self.subsets[i]
                .cells
                .iter()
                .map(|cell| {
                    cell.iter()
                        .enumerate()
                        .map(|(d, &b)| {
                            let e = &edges[d];
                            let lo = if b == 0 { f64::NEG_INFINITY } else { e[b] };
                            let hi = if b + 1 == e.len() - 1 { f64::INFINITY } else { e[b + 1] };
                            (lo, hi)
                        })
                        .collect()
                })
                .collect(),
        )
    }

    /// Partition from explicit labels; labels with no rows are dropped and
    /// subsets are ordered by label.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("cannot partition an empty sample set".into()));
        }
        let max = *labels.iter().max().unwrap();
        let mut by_label = vec![Vec::new(); max + 1];
        for (r, &l) in labels.iter().enumerate() {
            by_label[l].push(r);
        }
        let empty = by_label.iter().filter(|v| v.is_empty()).count();
        let subsets: Vec<Subset> = by_label
            .into_iter()
            .enumerate()
            .filter(|(_, rows)| !rows.is_empty())
            .map(|(l, rows)| Subset { rows, cells: vec![vec![l]], flat: vec![l] })
            .collect();
        Ok(Self::assemble(PartitionPolicy::Explicit, max + 1, max + 1, None, subsets, labels.len(), empty))
    }

    fn assemble(
        policy: PartitionPolicy,
        bins: usize,
        requested: usize,
        edges: Option<Vec<Vec<f64>>>,
        subsets: Vec<Subset>,
        n: usize,
        empty_dropped: usize,
    ) -> Self {
        let mut p = Self {
            policy,
            bins_per_dim: bins,
            requested_bins: requested,
            edges,
            subsets,
            assignment: vec![0; n],
            empty_dropped,
            merged: 0,
        };
        p.reassign();
        p
    }

    fn reassign(&mut self) {
        for (i, s) in self.subsets.iter().enumerate() {
            for &r in &s.rows {
                self.assignment[r] = i;
            }
        }
    }

    fn distance(&self, a: usize, b: usize) -> usize {
        let (sa, sb) = (&self.subsets[a], &self.subsets[b]);
        match self.policy {
            PartitionPolicy::ValueBased => sa
                .cells
                .iter()
                .flat_map(|x| {
                    sb.cells.iter().map(move |y| {
                        x.iter().zip(y).map(|(p, q)| p.abs_diff(*q)).sum::<usize>()
                    })
                })
                .min()
                .unwrap_or(usize::MAX),
            _ => sa
                .flat
                .iter()
                .flat_map(|x| sb.flat.iter().map(move |y| x.abs_diff(*y)))
                .min()
                .unwrap_or(usize::MAX),
        }
    }

    /// Merges every subset with fewer than `min_size` rows into its nearest
    /// non-deficient neighbour (cell adjacency for value-based partitions,
    /// index distance otherwise; ties go to the lower index).
    pub fn with_min_size(&self, min_size: usize) -> Self {
        let mut p = self.clone();
        while p.subsets.len() > 1 {
            let Some(small) = (0..p.subsets.len()).find(|&i| p.subsets[i].rows.len() < min_size) else {
                break;
            };
            let candidates: Vec<usize> = (0..p.subsets.len())
                .filter(|&j| j != small && p.subsets[j].rows.len() >= min_size)
                .collect();
            let pool = if candidates.is_empty() {
                (0..p.subsets.len()).filter(|&j| j != small).collect()
            } else {
                candidates
            };
            let target = *pool.iter().min_by_key(|&&j| (p.distance(small, j), j)).unwrap();
            let donor = p.subsets.remove(small);
            let target = if target > small { target - 1 } else { target };
            let t = &mut p.subsets[target];
            t.rows.extend(donor.rows);
            t.rows.sort_unstable();
            t.cells.extend(donor.cells);
            t.flat.extend(donor.flat);
            p.merged += 1;
        }
        p.reassign();
        p
    }
}

fn distinct_count(mut v: Vec<f64>) -> usize {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Splits rows into up to `bins^D` subsets, the cartesian product of `bins`
/// per-dimension intervals.
pub fn partition_samples(
    samples: &SampleMatrix,
    bins: usize,
    policy: PartitionPolicy,
) -> Result<SubsetPartition> {
    let n = samples.len();
    if bins == 0 {
        return Err(Error::Domain("number of subsets must be at least 1".into()));
    }
    if n < bins {
        return Err(Error::Domain(format!("{n} samples cannot fill {bins} subsets")));
    }
    let dim = samples.dim();
    let columns: Vec<Vec<f64>> = (0..dim).map(|d| samples.column(d)).collect();
    let distinct = columns.iter().map(|c| distinct_count(c.clone())).min().unwrap_or(1);
    let b = bins.min(distinct);
    if b < bins {
        log::warn!("reducing subsets per dimension from {bins} to {b} (too few distinct values)");
    }

    let mut edges = Vec::with_capacity(dim);
    let mut bin_of = vec![vec![0usize; n]; dim];
    for (d, col) in columns.iter().enumerate() {
        let (m, big_m) = samples.bounds()[d];
        match policy {
            PartitionPolicy::ValueBased => {
                let width = (big_m - m) / b as f64;
                let mut e: Vec<f64> = (0..b).map(|k| m + k as f64 * width).collect();
                e.push(big_m);
                for (r, &x) in col.iter().enumerate() {
                    let k = if width > 0.0 { ((x - m) / width).floor() as usize } else { 0 };
                    bin_of[d][r] = k.min(b - 1);
                }
                edges.push(e);
            }
            PartitionPolicy::CountBased => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| col[i].total_cmp(&col[j]).then(i.cmp(&j)));
                for (rank, &r) in order.iter().enumerate() {
                    bin_of[d][r] = rank * b / n;
                }
                let mut e = vec![m];
                for k in 1..b {
                    let first = (k * n).div_ceil(b);
                    e.push(0.5 * (col[order[first - 1]] + col[order[first]]));
                }
                e.push(big_m);
                edges.push(e);
            }
            PartitionPolicy::Explicit => {
                return Err(Error::Domain("explicit partitions are built from labels".into()));
            }
        }
    }

    let cells = b.pow(dim as u32);
    let mut rows_of = vec![Vec::new(); cells];
    for r in 0..n {
        let flat = (0..dim).fold(0, |acc, d| acc * b + bin_of[d][r]);
        rows_of[flat].push(r);
    }
    let empty = rows_of.iter().filter(|v| v.is_empty()).count();
    let subsets = rows_of
        .into_iter()
        .enumerate()
        .filter(|(_, rows)| !rows.is_empty())
        .map(|(flat, rows)| {
            let mut cell = vec![0; dim];
            let mut f = flat;
            for d in (0..dim).rev() {
                cell[d] = f % b;
                f /= b;
            }
            Subset { rows, cells: vec![cell], flat: vec![flat] }
        })
        .collect();
    Ok(SubsetPartition::assemble(policy, b, bins, Some(edges), subsets, n, empty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn value_based_equal_width() {
        let s = SampleMatrix::from_values(&[0.0, 3.0, 7.0, 10.0]).unwrap();
        let p = partition_samples(&s, 2, PartitionPolicy::ValueBased).unwrap();
        assert_eq!(p.edges().unwrap()[0], vec![0.0, 5.0, 10.0]);
        assert_eq!(p.assignment(), &[0, 0, 1, 1]);
        assert_eq!(p.regions(0).unwrap()[0], vec![(f64::NEG_INFINITY, 5.0)]);
    }

    #[test]
    fn count_based_equal_counts() {
        let v: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64).collect();
        let s = SampleMatrix::from_values(&v).unwrap();
        let p = partition_samples(&s, 2, PartitionPolicy::CountBased).unwrap();
        assert_eq!(p.sizes(), vec![50, 50]);
        assert_eq!(p.edges().unwrap()[0][1], 49.5);
    }

    #[test]
    fn count_based_ties_follow_sample_order() {
        let s = SampleMatrix::from_values(&[1.0; 4]).unwrap();
        // a single distinct value reduces B to one
        let p = partition_samples(&s, 2, PartitionPolicy::CountBased).unwrap();
        assert!(p.bins_reduced());
        assert_eq!(p.num_subsets(), 1);
    }

    #[test]
    fn one_bin_is_everything() {
        let s = SampleMatrix::from_values(&[2.0, 1.0, 5.0]).unwrap();
        let p = partition_samples(&s, 1, PartitionPolicy::ValueBased).unwrap();
        assert_eq!(p.num_subsets(), 1);
        assert_eq!(p.rows(0), &[0, 1, 2]);
    }

    #[test]
    fn two_dimensional_cells_drop_empties() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.1, 0.1], vec![0.9, 0.95]];
        let p = partition_samples(&SampleMatrix::from_rows(&rows).unwrap(), 2, PartitionPolicy::ValueBased)
            .unwrap();
        assert_eq!(p.num_subsets(), 2);
        assert_eq!(p.empty_dropped(), 2);
    }

    #[test]
    fn deficient_subset_merges_into_neighbour() {
        let s = SampleMatrix::from_values(&[0.0, 0.1, 0.2, 5.0, 9.8, 10.0]).unwrap();
        let p = partition_samples(&s, 3, PartitionPolicy::ValueBased).unwrap();
        assert_eq!(p.sizes(), vec![3, 1, 2]);
        let m = p.with_min_size(2);
        assert_eq!(m.sizes(), vec![4, 2]);
        assert_eq!(m.merged(), 1);
        assert_eq!(m.regions(0).unwrap().len(), 2);
    }

    #[test]
    fn labels_build_explicit_partition() {
        let p = SubsetPartition::from_labels(&[1, 0, 1, 3]).unwrap();
        assert_eq!(p.num_subsets(), 3);
        assert_eq!(p.empty_dropped(), 1);
        assert_eq!(p.assignment(), &[1, 0, 1, 2]);
        assert!(p.regions(0).is_none());
    }

    proptest! {
        #[test]
        fn every_row_assigned_once(
            data in prop::collection::vec((-50i32..50, -50i32..50), 8..120),
            bins in 1usize..5,
            count in any::<bool>(),
        ) {
            let rows: Vec<Vec<f64>> = data.iter().map(|&(a, b)| vec![a as f64, b as f64]).collect();
            let s = SampleMatrix::from_rows(&rows).unwrap();
            let policy = if count { PartitionPolicy::CountBased } else { PartitionPolicy::ValueBased };
            let p = partition_samples(&s, bins, policy).unwrap().with_min_size(3);
            let mut seen = vec![0; rows.len()];
            for i in 0..p.num_subsets() {
                prop_assert!(!p.rows(i).is_empty());
                for &r in p.rows(i) {
                    seen[r] += 1;
                    prop_assert_eq!(p.assignment()[r], i);
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
