//! Wasserstein geodesics between particle clouds (displacement interpolation).

use crate::error::{Error, Result};
use crate::ot::{extract_monge_map, pushforward, solve_kantorovich, w2_distance, ParticleCloud, TransportMap};
use crate::scalar::Scalar;
use crate::trajectory::TrajectoryRecord;

/// Constant-speed geodesic `t ↦ [(1−t)·id + t·M]_# μ`, stored as its base
/// cloud and optimal map and evaluated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath<T> {
    base: ParticleCloud<T>,
    map: TransportMap<T>,
    endpoint_distance: T,
    refined: bool,
}

impl<T: Scalar> GeodesicPath<T> {
    pub fn base(&self) -> &ParticleCloud<T> {
        &self.base
    }

    pub fn map(&self) -> &TransportMap<T> {
        &self.map
    }

    /// W₂ between the two ends.
    pub fn endpoint_distance(&self) -> T {
        self.endpoint_distance
    }

    /// True when source particles had to be split along the plan so that the
    /// map became single-valued. The base then differs from the input cloud
    /// as an indexed list but not as a measure.
    pub fn is_refined(&self) -> bool {
        self.refined
    }

    /// Index of the target particle each base particle travels to.
    pub fn assignment(&self) -> &[usize] {
        self.map.assignment().expect("geodesic maps are always single-valued")
    }

    pub fn eval(&self, t: T) -> Result<ParticleCloud<T>> {
        eval_geodesic(self, t)
    }

    /// Per-particle displacement M(xᵢ) − xᵢ, flat.
    pub fn displacements(&self) -> Vec<T> {
        self.map
            .targets()
            .iter()
            .zip(self.base.points())
            .map(|(&y, &x)| y - x)
            .collect()
    }
}

/// Geodesic from `mu` to `rho` through the optimal plan between them.
pub fn build_geodesic<T: Scalar>(mu: &ParticleCloud<T>, rho: &ParticleCloud<T>) -> Result<GeodesicPath<T>> {
    let plan = solve_kantorovich(mu, rho)?;
    let endpoint_distance = plan.cost().max(T::zero()).sqrt();
    let map = extract_monge_map(&plan, mu, rho)?;
    if map.assignment().is_some() {
        return Ok(GeodesicPath {
            base: mu.clone(),
            map,
            endpoint_distance,
            refined: false,
        });
    }

    // One base particle per plan entry; each then moves to a single target.
    let dim = mu.dim();
    let entries = plan.entries();
    let mut points = Vec::with_capacity(entries.len() * dim);
    let mut weights = Vec::with_capacity(entries.len());
    let mut targets = Vec::with_capacity(entries.len() * dim);
    let mut assignment = Vec::with_capacity(entries.len());
    for e in entries {
        points.extend_from_slice(mu.point(e.source));
        weights.push(e.mass);
        targets.extend_from_slice(rho.point(e.target));
        assignment.push(e.target);
    }
    let base = ParticleCloud::new(dim, points, weights)?;
    let mut hit = vec![false; rho.len()];
    let injective = assignment.iter().all(|&j| !std::mem::replace(&mut hit[j], true));
    let is_permutation = injective && assignment.len() == rho.len();
    let map = TransportMap::matched(dim, targets, assignment, is_permutation);
    if map.len() != base.len() {
        return Err(Error::MassSplitting {
            sources: (0..mu.len()).collect(),
        });
    }
    Ok(GeodesicPath {
        base,
        map,
        endpoint_distance,
        refined: true,
    })
}

/// Point on the geodesic at fraction `t ∈ [0, 1]`.
pub fn eval_geodesic<T: Scalar>(path: &GeodesicPath<T>, t: T) -> Result<ParticleCloud<T>> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t.to_f64_lossy(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    if t == T::zero() {
        return Ok(path.base.clone());
    }
    if t == T::one() {
        return pushforward(&path.base, &path.map);
    }
    let s = T::one() - t;
    let points = path
        .base
        .points()
        .iter()
        .zip(path.map.targets())
        .map(|(&x, &y)| s * x + t * y)
        .collect();
    path.base.with_points(points)
}

/// Metric speed |R'| of a recorded trajectory at grid index `k`, from W₂
/// between neighbouring snapshots: forward difference at the first index,
/// backward at the last, central elsewhere.
pub fn curve_speed<T: Scalar>(traj: &TrajectoryRecord<T>, k: usize) -> Result<T> {
    let last = traj.len() - 1;
    if k > last || last == 0 {
        return Err(Error::IndexOutOfRange { index: k, last });
    }
    let (a, b) = match k {
        0 => (0, 1),
        k if k == last => (last - 1, last),
        k => (k - 1, k + 1),
    };
    let clouds = traj.clouds();
    let times = traj.times();
    Ok(w2_distance(&clouds[a], &clouds[b])? / (times[b] - times[a]))
}
