//! Receding-horizon tracking of a piecewise-constant demand.
//!
//! At every step the static feedback law is applied toward the demand of the
//! current segment, with the gain of a window of length `replan_horizon`
//! starting now. The window never advances, so the gain is constant.

use crate::controller::integrate_feedback;
use crate::error::{ensure_positive, Error, Result};
use crate::lq::{ControlSchedule, Integrator};
use crate::ot::ParticleCloud;
use crate::scalar::Scalar;
use crate::trajectory::TrajectoryRecord;

/// Demand that switches at the breakpoints and holds in between. Segment `i`
/// covers `[breakpoints[i], breakpoints[i+1])`; the last one runs to `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSchedule<T> {
    breakpoints: Vec<T>,
    clouds: Vec<ParticleCloud<T>>,
    end: T,
}

impl<T: Scalar> DemandSchedule<T> {
    pub fn new(breakpoints: Vec<T>, clouds: Vec<ParticleCloud<T>>, end: T) -> Result<Self> {
        if clouds.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if breakpoints.len() != clouds.len() {
            return Err(Error::LengthMismatch {
                expected: clouds.len(),
                actual: breakpoints.len(),
            });
        }
        if breakpoints[0] != T::zero() {
            return Err(Error::InvalidSchedule("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSchedule("breakpoints must be strictly increasing".into()));
        }
        let last = *breakpoints.last().expect("nonempty");
        if !(end > last) || !end.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "end {end} must be finite and after the last breakpoint {last}"
            )));
        }
        for c in &clouds[1..] {
            clouds[0].check_same_dim(c)?;
        }
        Ok(Self {
            breakpoints,
            clouds,
            end,
        })
    }

    /// A single demand held over `[0, end]`.
    pub fn constant(demand: ParticleCloud<T>, end: T) -> Result<Self> {
        Self::new(vec![T::zero()], vec![demand], end)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn clouds(&self) -> &[ParticleCloud<T>] {
        &self.clouds
    }

    pub fn end(&self) -> T {
        self.end
    }

    pub fn dim(&self) -> usize {
        self.clouds[0].dim()
    }

    pub fn segment_count(&self) -> usize {
        self.clouds.len()
    }

    /// Index of the segment in force at `t`.
    pub fn segment_index(&self, t: T) -> usize {
        self.breakpoints.partition_point(|&b| b <= t).saturating_sub(1)
    }

    pub fn demand_at(&self, t: T) -> &ParticleCloud<T> {
        &self.clouds[self.segment_index(t)]
    }

    fn segment_end(&self, i: usize) -> T {
        self.breakpoints.get(i + 1).copied().unwrap_or(self.end)
    }
}

/// Number of steps of size `dt` covering `len`, if `dt` divides it.
fn whole_steps<T: Scalar>(len: T, dt: T) -> Option<usize> {
    let ratio = len / dt;
    let n = ratio.round();
    let tol = T::lit(1e-9) * n.max(T::one());
    ((ratio - n).abs() <= tol && n >= T::one())
        .then(|| n.to_usize())
        .flatten()
}

/// Simulates receding-horizon control on a uniform grid of step `dt` over the
/// whole schedule. Stage costs are measured against the demand in force at
/// each grid time.
pub fn run_mpc<T: Scalar>(
    r0: &ParticleCloud<T>,
    schedule: &DemandSchedule<T>,
    alpha: T,
    replan_horizon: T,
    dt: T,
) -> Result<TrajectoryRecord<T>> {
    run_mpc_with(r0, schedule, alpha, replan_horizon, dt, Integrator::Rk4)
}

pub fn run_mpc_with<T: Scalar>(
    r0: &ParticleCloud<T>,
    schedule: &DemandSchedule<T>,
    alpha: T,
    replan_horizon: T,
    dt: T,
    integrator: Integrator,
) -> Result<TrajectoryRecord<T>> {
    if r0.dim() != schedule.dim() {
        return Err(Error::DimensionMismatch {
            left: r0.dim(),
            right: schedule.dim(),
        });
    }
    ensure_positive("dt", dt.to_f64_lossy())?;
    let control = ControlSchedule::receding(alpha, replan_horizon)?;

    // Grid nodes, with every breakpoint landing exactly on a node.
    let mut times = vec![T::zero()];
    let mut segment = vec![0];
    for i in 0..schedule.segment_count() {
        let start = schedule.breakpoints[i];
        let stop = schedule.segment_end(i);
        let n = whole_steps(stop - start, dt)
            .ok_or_else(|| Error::InvalidSchedule(format!("dt {dt} does not divide segment [{start}, {stop}]")))?;
        let h = (stop - start) / T::from_usize_lossy(n);
        for j in 1..=n {
            times.push(if j == n {
                stop
            } else {
                start + h * T::from_usize_lossy(j)
            });
            segment.push(if j == n { i + 1 } else { i });
        }
    }
    let last = segment.len() - 1;
    segment[last] = schedule.segment_count() - 1;
    integrate_feedback(r0, &times, &control, |k| &schedule.clouds[segment[k]], integrator)
}
