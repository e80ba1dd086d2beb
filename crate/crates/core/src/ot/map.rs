use crate::error::{Error, Result};
use crate::scalar::{sq_dist, Scalar};

use super::{ParticleCloud, TransportPlan};

/// Sources whose mass the plan divides among several targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassSplitting {
    pub sources: Vec<usize>,
}

/// Per-source target positions: the discrete Monge map.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap<T> {
    dim: usize,
    targets: Vec<T>,
    is_permutation: bool,
    optimal: bool,
    assignment: Option<Vec<usize>>,
    splitting: Option<MassSplitting>,
}

impl<T: Scalar> TransportMap<T> {
    /// Arbitrary map given by flat target coordinates. Not flagged optimal.
    pub fn from_targets(dim: usize, targets: Vec<T>) -> Result<Self> {
        if dim == 0 || !targets.len().is_multiple_of(dim) {
            return Err(Error::InvalidCloud("target layout does not match dimension".into()));
        }
        Ok(Self {
            dim,
            targets,
            is_permutation: false,
            optimal: false,
            assignment: None,
            splitting: None,
        })
    }

    pub fn identity(cloud: &ParticleCloud<T>) -> Self {
        Self {
            dim: cloud.dim(),
            targets: cloud.points().to_vec(),
            is_permutation: true,
            optimal: true,
            assignment: Some((0..cloud.len()).collect()),
            splitting: None,
        }
    }

    pub(crate) fn matched(dim: usize, targets: Vec<T>, assignment: Vec<usize>, is_permutation: bool) -> Self {
        Self {
            dim,
            targets,
            is_permutation,
            optimal: true,
            assignment: Some(assignment),
            splitting: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn target(&self, i: usize) -> &[T] {
        &self.targets[i * self.dim..(i + 1) * self.dim]
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    /// True when the map comes from a one-to-one matching.
    pub fn is_permutation(&self) -> bool {
        self.is_permutation
    }

    /// True when the map was extracted from an optimal plan.
    pub fn is_optimal(&self) -> bool {
        self.optimal
    }

    /// Target index per source, when every source ships to a single target.
    pub fn assignment(&self) -> Option<&[usize]> {
        self.assignment.as_deref()
    }

    pub fn splitting(&self) -> Option<&MassSplitting> {
        self.splitting.as_ref()
    }

    /// Σᵢ wᵢ‖xᵢ − M(xᵢ)‖², the transport cost of the map.
    pub fn cost(&self, mu: &ParticleCloud<T>) -> T {
        mu.iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, (p, w))| acc + w * sq_dist(p, self.target(i)))
    }

    /// Σ‖x_{c_k} − M(x_{c_k})‖² − Σ‖x_{c_k} − M(x_{c_{k+1}})‖² over the cycle `c`.
    ///
    /// Non-positive for every cycle when the induced pairing is cyclically
    /// monotone.
    pub fn cyclic_monotonicity_defect(&self, mu: &ParticleCloud<T>, cycle: &[usize]) -> T {
        let k = cycle.len();
        (0..k).fold(T::zero(), |acc, s| {
            let i = cycle[s];
            let next = cycle[(s + 1) % k];
            acc + sq_dist(mu.point(i), self.target(i)) - sq_dist(mu.point(i), self.target(next))
        })
    }
}

/// Reads the Monge map off a plan.
///
/// Sources shipping their mass to a single target map there; otherwise each
/// source maps to the mass-weighted mean of its targets and the map carries a
/// [`MassSplitting`] diagnostic.
pub fn extract_monge_map<T: Scalar>(
    plan: &TransportPlan<T>,
    mu: &ParticleCloud<T>,
    nu: &ParticleCloud<T>,
) -> Result<TransportMap<T>> {
    mu.check_same_dim(nu)?;
    if plan.source_count() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            actual: plan.source_count(),
        });
    }
    if plan.target_count() != nu.len() {
        return Err(Error::LengthMismatch {
            expected: nu.len(),
            actual: plan.target_count(),
        });
    }
    let dim = mu.dim();
    if let Some(assignment) = plan.single_valued_assignment() {
        let mut targets = Vec::with_capacity(mu.len() * dim);
        for &j in &assignment {
            targets.extend_from_slice(nu.point(j));
        }
        let mut hit = vec![false; nu.len()];
        let injective = assignment.iter().all(|&j| !std::mem::replace(&mut hit[j], true));
        let is_permutation = injective && mu.len() == nu.len();
        return Ok(TransportMap::matched(dim, targets, assignment, is_permutation));
    }

    let mut targets = vec![T::zero(); mu.len() * dim];
    let mut shipped = vec![T::zero(); mu.len()];
    let mut fan_out = vec![0usize; mu.len()];
    for e in plan.entries() {
        let y = nu.point(e.target);
        for d in 0..dim {
            targets[e.source * dim + d] = targets[e.source * dim + d] + e.mass * y[d];
        }
        shipped[e.source] = shipped[e.source] + e.mass;
        fan_out[e.source] += 1;
    }
    for (i, &m) in shipped.iter().enumerate() {
        if m > T::zero() {
            for d in 0..dim {
                targets[i * dim + d] = targets[i * dim + d] / m;
            }
        } else {
            targets[i * dim..(i + 1) * dim].copy_from_slice(mu.point(i));
        }
    }
    let sources = fan_out
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 1)
        .map(|(i, _)| i)
        .collect();
    Ok(TransportMap {
        dim,
        targets,
        is_permutation: false,
        optimal: true,
        assignment: None,
        splitting: Some(MassSplitting { sources }),
    })
}

/// Pushes the cloud forward through the map: points move, weights stay.
pub fn pushforward<T: Scalar>(mu: &ParticleCloud<T>, map: &TransportMap<T>) -> Result<ParticleCloud<T>> {
    if map.dim() != mu.dim() {
        return Err(Error::DimensionMismatch {
            left: mu.dim(),
            right: map.dim(),
        });
    }
    if map.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            actual: map.len(),
        });
    }
    mu.with_points(map.targets().to_vec())
}
