//! Pooling-interval structure of a grid distribution relative to the prior.

use serde::{Deserialize, Serialize};

use super::{DiscreteExperiment, DiscreteInstance, SUPPORT_MASS};

/// A maximal run of grid points where the candidate's ICDF is strictly below the prior's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingInterval {
    pub lo: f64,
    pub hi: f64,
    /// Grid points with mass inside the run.
    pub support_points: usize,
    /// Fewest atoms consistent with the support points; a split atom counts once.
    pub clusters: usize,
    /// Mean location of each cluster.
    pub cluster_locations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub intervals: Vec<PoolingInterval>,
    pub slack_threshold: f64,
    pub total_support_points: usize,
    /// Support clusters strictly above `r0`, when `r0` was supplied.
    pub clusters_above_r0: Option<usize>,
    /// Any interval with more than two clusters.
    pub violates_bipooling: bool,
}

impl StructureReport {
    pub fn max_clusters_per_interval(&self) -> usize {
        self.intervals.iter().map(|i| i.clusters).max().unwrap_or(0)
    }

    /// At most two atoms per pooling interval and at most one above `r0`.
    pub fn ok(&self) -> bool {
        !self.violates_bipooling && self.clusters_above_r0.is_none_or(|c| c <= 1)
    }

    pub fn max_support_per_interval(&self) -> usize {
        self.intervals
            .iter()
            .map(|i| i.support_points)
            .max()
            .unwrap_or(0)
    }
}

fn grid_icdf(grid: &[f64], mass: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    let mut cdf = 0.0;
    for k in 1..grid.len() {
        cdf += mass[k - 1];
        out[k] = out[k - 1] + cdf * (grid[k] - grid[k - 1]);
    }
    out
}

/// Mean locations of the fewest atoms that explain the support `idx`: an
/// off-grid atom occupies two adjacent grid points, so a run of `L` adjacent
/// points is read as `ceil(L / 2)` atoms, paired from the left.
fn clusters(grid: &[f64], mass: &[f64], idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < idx.len() {
        let mut end = k;
        while end + 1 < idx.len() && idx[end + 1] == idx[end] + 1 {
            end += 1;
        }
        for pair in idx[k..=end].chunks(2) {
            let w: f64 = pair.iter().map(|&i| mass[i]).sum();
            let z: f64 = pair.iter().map(|&i| mass[i] * grid[i]).sum::<f64>() / w;
            out.push(z);
        }
        k = end + 1;
    }
    out
}

/// Finds maximal runs where `I_prior - I_candidate > 2 / n^2` and counts the
/// support of the candidate inside each run.
pub fn bipooling_structure(
    candidate: &DiscreteExperiment,
    instance: &DiscreteInstance,
    r0: Option<f64>,
) -> StructureReport {
    let n = instance.n();
    let grid = &instance.grid;
    let threshold = 2.0 / (n * n) as f64;
    let ip = grid_icdf(grid, &instance.prior_mass);
    let ic = grid_icdf(grid, &candidate.mass);
    let pooled: Vec<bool> = (0..n).map(|k| ip[k] - ic[k] > threshold).collect();

    let mut intervals = Vec::new();
    let mut k = 0;
    while k < n {
        if !pooled[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < n && pooled[k + 1] {
            k += 1;
        }
        let support: Vec<usize> = (start..=k)
            .filter(|&j| candidate.mass[j] > SUPPORT_MASS)
            .collect();
        let locations = clusters(grid, &candidate.mass, &support);
        intervals.push(PoolingInterval {
            lo: grid[start.saturating_sub(1)],
            hi: grid[(k + 1).min(n - 1)],
            support_points: support.len(),
            clusters: locations.len(),
            cluster_locations: locations,
        });
        k += 1;
    }
    let support = candidate.support();
    let clusters_above_r0 = r0.map(|r| {
        let above: Vec<usize> = support.iter().copied().filter(|&j| grid[j] > r).collect();
        clusters(grid, &candidate.mass, &above).len()
    });
    let violates_bipooling = intervals.iter().any(|i| i.clusters > 2);
    StructureReport {
        intervals,
        slack_threshold: threshold,
        total_support_points: support.len(),
        clusters_above_r0,
        violates_bipooling,
    }
}
