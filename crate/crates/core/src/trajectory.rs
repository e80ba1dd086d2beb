use crate::error::{Error, Result};
use crate::ot::ParticleCloud;
use crate::scalar::{sq_dist, Scalar};

/// Assignment and motion cost rates at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageCost<T> {
    /// W₂²(R_t, D_t).
    pub assignment: T,
    /// α‖V_t‖² in L²(R_t).
    pub motion: T,
}

impl<T: Scalar> StageCost<T> {
    pub fn total(&self) -> T {
        self.assignment + self.motion
    }
}

/// Time-stamped swarm states with per-particle velocities and stage costs.
///
/// Particle count and weights are the same at every time; particle `i` is
/// the same agent throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    times: Vec<T>,
    clouds: Vec<ParticleCloud<T>>,
    velocities: Vec<Vec<T>>,
    stage_costs: Vec<StageCost<T>>,
    total_cost: T,
}

impl<T: Scalar> TrajectoryRecord<T> {
    pub fn new(
        times: Vec<T>,
        clouds: Vec<ParticleCloud<T>>,
        velocities: Vec<Vec<T>>,
        stage_costs: Vec<StageCost<T>>,
    ) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::EmptyCloud);
        }
        for len in [clouds.len(), velocities.len(), stage_costs.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSchedule(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        let first = &clouds[0];
        for (c, v) in clouds.iter().zip(&velocities) {
            first.check_same_dim(c)?;
            if c.weights() != first.weights() {
                return Err(Error::InvalidCloud(
                    "particle weights must be constant along a trajectory".into(),
                ));
            }
            if v.len() != c.points().len() {
                return Err(Error::LengthMismatch {
                    expected: c.points().len(),
                    actual: v.len(),
                });
            }
        }
        let totals: Vec<T> = stage_costs.iter().map(StageCost::total).collect();
        let total_cost = integrate(&times, &totals);
        Ok(Self {
            times,
            clouds,
            velocities,
            stage_costs,
            total_cost,
        })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn clouds(&self) -> &[ParticleCloud<T>] {
        &self.clouds
    }

    pub fn velocities(&self) -> &[Vec<T>] {
        &self.velocities
    }

    pub fn stage_costs(&self) -> &[StageCost<T>] {
        &self.stage_costs
    }

    /// Trapezoidal integral of the stage costs.
    pub fn total_cost(&self) -> T {
        self.total_cost
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn particle_count(&self) -> usize {
        self.clouds[0].len()
    }

    pub fn dim(&self) -> usize {
        self.clouds[0].dim()
    }

    pub fn initial(&self) -> &ParticleCloud<T> {
        &self.clouds[0]
    }

    pub fn last(&self) -> &ParticleCloud<T> {
        self.clouds.last().expect("trajectory is never empty")
    }

    /// Running trapezoidal integral of the stage costs, starting at 0.
    pub fn cumulative_costs(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = T::zero();
        out.push(acc);
        for k in 1..self.len() {
            let dt = self.times[k] - self.times[k - 1];
            acc = acc + dt * (self.stage_costs[k - 1].total() + self.stage_costs[k].total()) * T::lit(0.5);
            out.push(acc);
        }
        out
    }

    /// Largest per-particle Euclidean distance between the final clouds of two
    /// trajectories over the same particles.
    pub fn final_deviation(&self, other: &Self) -> Result<T> {
        max_particle_deviation(self.last(), other.last())
    }
}

/// Largest per-particle Euclidean distance between two index-aligned clouds.
pub fn max_particle_deviation<T: Scalar>(a: &ParticleCloud<T>, b: &ParticleCloud<T>) -> Result<T> {
    a.check_same_dim(b)?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok((0..a.len())
        .map(|i| sq_dist(a.point(i), b.point(i)).sqrt())
        .fold(T::zero(), T::max))
}

/// Trapezoidal rule on a possibly non-uniform grid.
pub(crate) fn integrate<T: Scalar>(times: &[T], values: &[T]) -> T {
    times.windows(2).zip(values.windows(2)).fold(T::zero(), |acc, (t, v)| {
        acc + (t[1] - t[0]) * (v[0] + v[1]) * T::lit(0.5)
    })
}

/// Mass-weighted squared norm Σᵢ wᵢ‖vᵢ‖² of a flat velocity list.
pub(crate) fn kinetic<T: Scalar>(cloud: &ParticleCloud<T>, velocities: &[T]) -> T {
    let dim = cloud.dim();
    cloud
        .weights()
        .iter()
        .zip(velocities.chunks_exact(dim))
        .fold(T::zero(), |acc, (&w, v)| {
            acc + w * v.iter().fold(T::zero(), |s, &x| s + x * x)
        })
}
