use rand::Rng;

use crate::error::{AsfError, Result};
use crate::model::{AngularGrid, Cluster, GroupSparseAsf};

/// Placement attempts before a configuration is declared over-packed.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Required gap between clusters, in grid cells. Two cells guarantee at
/// least one fully empty grid cell between any two supports.
pub const CLUSTER_GAP_CELLS: f64 = 2.0;

/// Draws `k` disjoint rectangular clusters with widths uniform on
/// `(0, width_bound]`, uniform centers and a random unit-sum mass split.
///
/// Supports stay clear of the wrapped cell at `xi = +-1` and of each other by
/// [`CLUSTER_GAP_CELLS`] cells, so each cluster maps to its own run of
/// grid cells.
pub fn random_asf<R: Rng + ?Sized>(
    k: usize,
    width_bound: f64,
    grid: &AngularGrid,
    rng: &mut R,
) -> Result<GroupSparseAsf> {
    if k == 0 {
        return Err(AsfError::Config("cluster count must be >= 1".into()));
    }
    if !(width_bound > 0.0 && width_bound < 2.0 / k as f64) {
        return Err(AsfError::Config(format!(
            "width bound {width_bound} outside (0, 2/K) for K = {k}"
        )));
    }
    let cell = grid.spacing();
    let lo = -1.0 + cell / 2.0;
    let hi = 1.0 - cell / 2.0;
    let gap = CLUSTER_GAP_CELLS * cell;
    if width_bound > hi - lo {
        return Err(AsfError::Config(format!("width bound {width_bound} exceeds the usable range")));
    }

    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let mut spans: Vec<(f64, f64)> = Vec::with_capacity(k);
        for _ in 0..k {
            // 1 - U[0,1) lies in (0, 1]
            let width = width_bound * (1.0 - rng.random::<f64>());
            let center = rng.random_range((lo + width / 2.0)..=(hi - width / 2.0));
            spans.push((center - width / 2.0, center + width / 2.0));
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        if spans.windows(2).any(|w| w[1].0 - w[0].1 < gap) {
            continue;
        }
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..=1.0)).collect();
        let total: f64 = weights.iter().sum();
        let clusters =
            spans.iter().zip(&weights).map(|(&(a, b), w)| Cluster::flat(a, b, w / total)).collect();
        return GroupSparseAsf::new(clusters);
    }
    Err(AsfError::PlacementFailed(MAX_PLACEMENT_ATTEMPTS))
}
