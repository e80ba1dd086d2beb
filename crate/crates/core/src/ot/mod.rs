//! Exact discrete optimal transport with squared Euclidean cost.
//!
//! Equal-size, equal-weight clouds are solved as a min-cost perfect matching
//! (which always yields a permutation Monge map); everything else goes through
//! the transportation simplex.

mod cloud;
pub mod hungarian;
mod map;
mod one_d;
mod plan;
pub mod simplex;

pub use cloud::ParticleCloud;
pub use map::{extract_monge_map, pushforward, MassSplitting, TransportMap};
pub use one_d::w2_distance_1d;
pub use plan::{PlanEntry, TransportPlan};

use crate::error::Result;
use crate::scalar::{sq_dist, Scalar};

/// Which exact solver backs [`solve_kantorovich_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Matching when both clouds are equal-weight and equal-size, simplex otherwise.
    #[default]
    Auto,
    Matching,
    Simplex,
}

/// Row-major matrix of squared distances.
pub fn cost_matrix<T: Scalar>(mu: &ParticleCloud<T>, nu: &ParticleCloud<T>) -> Vec<T> {
    let mut c = Vec::with_capacity(mu.len() * nu.len());
    for (x, _) in mu.iter() {
        for (y, _) in nu.iter() {
            c.push(sq_dist(x, y));
        }
    }
    c
}

/// Optimal coupling between `mu` and `nu` for the squared Euclidean cost.
pub fn solve_kantorovich<T: Scalar>(mu: &ParticleCloud<T>, nu: &ParticleCloud<T>) -> Result<TransportPlan<T>> {
    solve_kantorovich_with(mu, nu, Solver::Auto)
}

pub fn solve_kantorovich_with<T: Scalar>(
    mu: &ParticleCloud<T>,
    nu: &ParticleCloud<T>,
    solver: Solver,
) -> Result<TransportPlan<T>> {
    mu.check_same_dim(nu)?;
    if mu == nu {
        let entries = (0..mu.len())
            .map(|i| PlanEntry {
                source: i,
                target: i,
                mass: mu.weights()[i],
            })
            .collect();
        return TransportPlan::from_entries(mu, nu, entries);
    }
    let matching_applies = mu.len() == nu.len() && mu.is_equal_weight() && nu.is_equal_weight();
    let use_matching = match solver {
        Solver::Auto => matching_applies,
        Solver::Matching => {
            assert!(matching_applies, "matching solver needs equal-size equal-weight clouds");
            true
        }
        Solver::Simplex => false,
    };
    let cost = cost_matrix(mu, nu);
    let entries = if use_matching {
        hungarian::min_cost_assignment(&cost, mu.len())
            .into_iter()
            .enumerate()
            .map(|(i, j)| PlanEntry {
                source: i,
                target: j,
                mass: mu.weights()[i],
            })
            .collect()
    } else {
        simplex::solve_transport(mu.weights(), nu.weights(), &cost)?
            .basis
            .into_iter()
            .map(|(i, j, mass)| PlanEntry {
                source: i,
                target: j,
                mass,
            })
            .collect()
    };
    TransportPlan::from_entries(mu, nu, entries)
}

/// W₂² between two clouds.
pub fn w2_squared<T: Scalar>(mu: &ParticleCloud<T>, nu: &ParticleCloud<T>) -> Result<T> {
    Ok(solve_kantorovich(mu, nu)?.cost().max(T::zero()))
}

/// 2-Wasserstein distance between two clouds.
pub fn w2_distance<T: Scalar>(mu: &ParticleCloud<T>, nu: &ParticleCloud<T>) -> Result<T> {
    Ok(w2_squared(mu, nu)?.sqrt())
}

/// Smallest cost increase obtainable by swapping the targets of two sources in
/// a one-to-one assignment. A value near zero flags a (near-)tied optimum.
pub fn swap_gap<T: Scalar>(mu: &ParticleCloud<T>, nu: &ParticleCloud<T>, assignment: &[usize]) -> T {
    let mut gap = T::infinity();
    for a in 0..assignment.len() {
        for b in a + 1..assignment.len() {
            let (ja, jb) = (assignment[a], assignment[b]);
            let current = sq_dist(mu.point(a), nu.point(ja)) + sq_dist(mu.point(b), nu.point(jb));
            let swapped = sq_dist(mu.point(a), nu.point(jb)) + sq_dist(mu.point(b), nu.point(ja));
            let w = mu.weights()[a].min(mu.weights()[b]);
            gap = gap.min(w * (swapped - current));
        }
    }
    gap
}
