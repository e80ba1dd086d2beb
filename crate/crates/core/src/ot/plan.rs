use crate::error::{Error, Result};
use crate::scalar::{sq_dist, Scalar};

use super::ParticleCloud;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry<T> {
    pub source: usize,
    pub target: usize,
    pub mass: T,
}

/// Discrete Kantorovich coupling between two clouds, stored sparsely.
///
/// Entries are sorted by `(source, target)` and every mass is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    pub(crate) source_count: usize,
    pub(crate) target_count: usize,
    pub(crate) entries: Vec<PlanEntry<T>>,
    pub(crate) cost: T,
}

impl<T: Scalar> TransportPlan<T> {
    /// Assembles a plan from raw entries, dropping non-positive masses and
    /// computing the squared-distance cost against the two clouds.
    pub fn from_entries(mu: &ParticleCloud<T>, nu: &ParticleCloud<T>, mut entries: Vec<PlanEntry<T>>) -> Result<Self> {
        mu.check_same_dim(nu)?;
        entries.retain(|e| e.mass > T::zero());
        for e in &entries {
            if e.source >= mu.len() || e.target >= nu.len() {
                return Err(Error::IndexOutOfRange {
                    index: e.source.max(e.target),
                    last: mu.len().max(nu.len()) - 1,
                });
            }
        }
        entries.sort_by_key(|e| (e.source, e.target));
        let cost = entries.iter().fold(T::zero(), |acc, e| {
            acc + e.mass * sq_dist(mu.point(e.source), nu.point(e.target))
        });
        Ok(Self {
            source_count: mu.len(),
            target_count: nu.len(),
            entries,
            cost,
        })
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn target_count(&self) -> usize {
        self.target_count
    }

    pub fn entries(&self) -> &[PlanEntry<T>] {
        &self.entries
    }

    /// Transport cost Σ mass·‖x − y‖², i.e. W₂² when the plan is optimal.
    pub fn cost(&self) -> T {
        self.cost
    }

    pub fn row_sums(&self) -> Vec<T> {
        let mut rows = vec![T::zero(); self.source_count];
        for e in &self.entries {
            rows[e.source] = rows[e.source] + e.mass;
        }
        rows
    }

    pub fn column_sums(&self) -> Vec<T> {
        let mut cols = vec![T::zero(); self.target_count];
        for e in &self.entries {
            cols[e.target] = cols[e.target] + e.mass;
        }
        cols
    }

    /// Largest violation of the marginal constraints.
    pub fn marginal_error(&self, mu: &ParticleCloud<T>, nu: &ParticleCloud<T>) -> T {
        let rows = self.row_sums();
        let cols = self.column_sums();
        let r = rows.iter().zip(mu.weights()).map(|(&a, &b)| (a - b).abs());
        let c = cols.iter().zip(nu.weights()).map(|(&a, &b)| (a - b).abs());
        r.chain(c).fold(T::zero(), T::max)
    }

    /// Cost recomputed from the entries against the given clouds.
    pub fn recompute_cost(&self, mu: &ParticleCloud<T>, nu: &ParticleCloud<T>) -> T {
        self.entries.iter().fold(T::zero(), |acc, e| {
            acc + e.mass * sq_dist(mu.point(e.source), nu.point(e.target))
        })
    }

    /// Target index for each source if every source ships to exactly one target.
    pub fn single_valued_assignment(&self) -> Option<Vec<usize>> {
        let mut assignment = vec![usize::MAX; self.source_count];
        for e in &self.entries {
            if assignment[e.source] != usize::MAX {
                return None;
            }
            assignment[e.source] = e.target;
        }
        assignment.iter().all(|&t| t != usize::MAX).then_some(assignment)
    }
}
