//! Optimal swarm tracking of a static demand.
//!
//! The optimal resource trajectory moves every particle along the straight
//! line to its optimal-transport target, covering the fraction `σ(t)` of the
//! way by time `t`. The same motion is generated causally by the feedback
//! `V_t = f(t)(M_t − id)/α`, with `M_t` the optimal map from the current
//! swarm to the demand.

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::build_geodesic;
use crate::lq::{analytic_cost_scalar, ControlSchedule, Integrator, ScalarCost};
use crate::ot::{extract_monge_map, solve_kantorovich, w2_distance, w2_squared, ParticleCloud};
use crate::scalar::Scalar;
use crate::trajectory::{integrate, kinetic, StageCost, TrajectoryRecord};

fn uniform_times<T: Scalar>(horizon: T, steps: usize) -> Vec<T> {
    let dt = horizon / T::from_usize_lossy(steps);
    (0..=steps)
        .map(|k| {
            if k == steps {
                horizon
            } else {
                dt * T::from_usize_lossy(k)
            }
        })
        .collect()
}

fn snapshot<T: Scalar>(r0: &ParticleCloud<T>, demand: &ParticleCloud<T>) -> Result<TrajectoryRecord<T>> {
    let assignment = w2_squared(r0, demand)?;
    TrajectoryRecord::new(
        vec![T::zero()],
        vec![r0.clone()],
        vec![vec![T::zero(); r0.points().len()]],
        vec![StageCost {
            assignment,
            motion: T::zero(),
        }],
    )
}

fn check_horizon<T: Scalar>(horizon: T) -> Result<()> {
    if horizon >= T::zero() && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            name: "horizon",
            value: horizon.to_f64_lossy(),
        })
    }
}

/// Open-loop optimal trajectory from `r0` to the static `demand`.
///
/// One transport solve at `t = 0`; the clouds are the geodesic evaluated at
/// `σ(t_k)` and the velocities are the analytic `σ'(t_k)(M(xᵢ) − xᵢ)`.
/// Stage costs are exact on the geodesic: `(1−σ)²W²` and `α σ'² W²`.
pub fn plan_optimal_trajectory<T: Scalar>(
    r0: &ParticleCloud<T>,
    demand: &ParticleCloud<T>,
    alpha: T,
    horizon: T,
    steps: usize,
) -> Result<TrajectoryRecord<T>> {
    r0.check_same_dim(demand)?;
    ensure_positive("alpha", alpha.to_f64_lossy())?;
    check_horizon(horizon)?;
    if horizon == T::zero() {
        return snapshot(r0, demand);
    }
    if steps == 0 {
        return Err(Error::NonPositive {
            name: "steps",
            value: 0.0,
        });
    }
    let path = build_geodesic(r0, demand)?;
    let schedule = ControlSchedule::finite_horizon(alpha, horizon)?;
    let w2sq = path.endpoint_distance() * path.endpoint_distance();
    let displacement = path.displacements();

    let times = uniform_times(horizon, steps);
    let mut clouds = Vec::with_capacity(times.len());
    let mut velocities = Vec::with_capacity(times.len());
    let mut stage_costs = Vec::with_capacity(times.len());
    for &t in &times {
        let sigma = schedule.fraction(t);
        let rate = schedule.fraction_rate(t);
        clouds.push(path.eval(sigma.max(T::zero()).min(T::one()))?);
        velocities.push(displacement.iter().map(|&d| rate * d).collect());
        let remaining = T::one() - sigma;
        stage_costs.push(StageCost {
            assignment: remaining * remaining * w2sq,
            motion: alpha * rate * rate * w2sq,
        });
    }
    TrajectoryRecord::new(times, clouds, velocities, stage_costs)
}

/// Velocities and transport cost produced by one feedback evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback<T> {
    /// Flat per-particle velocities.
    pub velocities: Vec<T>,
    /// W₂²(current, demand).
    pub w2_squared: T,
    /// Matched demand index per particle when the optimal map is single-valued.
    pub assignment: Option<Vec<usize>>,
}

fn feedback_with_gain<T: Scalar>(
    current: &ParticleCloud<T>,
    demand: &ParticleCloud<T>,
    gain: T,
) -> Result<Feedback<T>> {
    let plan = solve_kantorovich(current, demand)?;
    let map = extract_monge_map(&plan, current, demand)?;
    let velocities = map
        .targets()
        .iter()
        .zip(current.points())
        .map(|(&y, &x)| gain * (y - x))
        .collect();
    Ok(Feedback {
        velocities,
        w2_squared: plan.cost().max(T::zero()),
        assignment: map.assignment().map(<[usize]>::to_vec),
    })
}

/// Optimal feedback velocities `vᵢ = f(t)(M_t(xᵢ) − xᵢ)/α` from a fresh
/// transport solve between the current swarm and the demand.
pub fn feedback_velocity<T: Scalar>(
    current: &ParticleCloud<T>,
    demand: &ParticleCloud<T>,
    t: T,
    schedule: &ControlSchedule<T>,
) -> Result<Vec<T>> {
    Ok(feedback(current, demand, t, schedule)?.velocities)
}

/// [`feedback_velocity`] together with the transport cost and matching.
pub fn feedback<T: Scalar>(
    current: &ParticleCloud<T>,
    demand: &ParticleCloud<T>,
    t: T,
    schedule: &ControlSchedule<T>,
) -> Result<Feedback<T>> {
    current.check_same_dim(demand)?;
    schedule.check_time(t)?;
    feedback_with_gain(current, demand, schedule.gain(t) / schedule.alpha())
}

/// Integrates the feedback law on `times`, re-solving transport at every
/// evaluation. `demand_at(k)` is the demand in force on step `k` (and at node `k`).
pub(crate) fn integrate_feedback<'a, T, D>(
    r0: &ParticleCloud<T>,
    times: &[T],
    schedule: &ControlSchedule<T>,
    demand_at: D,
    integrator: Integrator,
) -> Result<TrajectoryRecord<T>>
where
    T: Scalar,
    D: Fn(usize) -> &'a ParticleCloud<T>,
{
    let alpha = schedule.alpha();
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    let gain = |t: T| schedule.gain(t) / alpha;
    let shifted = |cloud: &ParticleCloud<T>, v: &[T], h: T| {
        cloud.with_points(cloud.points().iter().zip(v).map(|(&x, &dx)| x + h * dx).collect())
    };

    let mut clouds = Vec::with_capacity(times.len());
    let mut velocities = Vec::with_capacity(times.len());
    let mut stage_costs = Vec::with_capacity(times.len());
    let mut current = r0.clone();
    for (k, &t) in times.iter().enumerate() {
        let demand = demand_at(k);
        let node = feedback_with_gain(&current, demand, gain(t))?;
        stage_costs.push(StageCost {
            assignment: node.w2_squared,
            motion: alpha * kinetic(&current, &node.velocities),
        });
        let next = if k + 1 < times.len() {
            let dt = times[k + 1] - t;
            let points: Vec<T> = match integrator {
                Integrator::Euler => current
                    .points()
                    .iter()
                    .zip(&node.velocities)
                    .map(|(&x, &v)| x + dt * v)
                    .collect(),
                Integrator::Rk4 => {
                    let k1 = &node.velocities;
                    let tm = t + half * dt;
                    let k2 = feedback_with_gain(&shifted(&current, k1, half * dt)?, demand, gain(tm))?.velocities;
                    let k3 = feedback_with_gain(&shifted(&current, &k2, half * dt)?, demand, gain(tm))?.velocities;
                    let k4 = feedback_with_gain(&shifted(&current, &k3, dt)?, demand, gain(t + dt))?.velocities;
                    (0..k1.len())
                        .map(|i| current.points()[i] + dt * sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]))
                        .collect()
                }
            };
            Some(current.with_points(points)?)
        } else {
            None
        };
        clouds.push(current.clone());
        velocities.push(node.velocities);
        if let Some(next) = next {
            current = next;
        }
    }
    TrajectoryRecord::new(times.to_vec(), clouds, velocities, stage_costs)
}

/// Closed-loop simulation over the schedule's horizon with RK4.
pub fn closed_loop_simulate<T: Scalar>(
    r0: &ParticleCloud<T>,
    demand: &ParticleCloud<T>,
    schedule: &ControlSchedule<T>,
    steps: usize,
) -> Result<TrajectoryRecord<T>> {
    closed_loop_simulate_with(r0, demand, schedule, schedule.horizon(), steps, Integrator::Rk4)
}

/// Closed-loop simulation over `[0, duration]`.
pub fn closed_loop_simulate_with<T: Scalar>(
    r0: &ParticleCloud<T>,
    demand: &ParticleCloud<T>,
    schedule: &ControlSchedule<T>,
    duration: T,
    steps: usize,
    integrator: Integrator,
) -> Result<TrajectoryRecord<T>> {
    r0.check_same_dim(demand)?;
    check_horizon(duration)?;
    if duration == T::zero() {
        return snapshot(r0, demand);
    }
    if steps == 0 {
        return Err(Error::NonPositive {
            name: "steps",
            value: 0.0,
        });
    }
    if !schedule.is_receding() && duration > schedule.horizon() {
        return Err(Error::OutOfRange {
            name: "duration",
            value: duration.to_f64_lossy(),
            lo: 0.0,
            hi: schedule.horizon().to_f64_lossy(),
        });
    }
    let times = uniform_times(duration, steps);
    integrate_feedback(r0, &times, schedule, |_| demand, integrator)
}

/// Recomputes the objective of a recorded trajectory from scratch: fresh
/// transport solves for the assignment term, mass-weighted velocity norms for
/// the motion term, trapezoid in time.
pub fn evaluate_cost<T: Scalar>(traj: &TrajectoryRecord<T>, demand: &ParticleCloud<T>, alpha: T) -> Result<T> {
    evaluate_cost_against(traj, |_| demand, alpha)
}

/// [`evaluate_cost`] against a demand that may change with the grid index.
pub fn evaluate_cost_against<'a, T, D>(traj: &TrajectoryRecord<T>, demand_at: D, alpha: T) -> Result<T>
where
    T: Scalar,
    D: Fn(usize) -> &'a ParticleCloud<T>,
{
    let mut stage = Vec::with_capacity(traj.len());
    for (k, (cloud, v)) in traj.clouds().iter().zip(traj.velocities()).enumerate() {
        let demand = demand_at(k);
        cloud.check_same_dim(demand)?;
        stage.push(w2_squared(cloud, demand)? + alpha * kinetic(cloud, v));
    }
    Ok(integrate(traj.times(), &stage))
}

/// Closed-form optimal cost for initial distance `w2`.
pub fn analytic_cost_swarm<T: Scalar>(w2: T, alpha: T, horizon: T) -> Result<ScalarCost<T>> {
    analytic_cost_scalar(T::zero(), w2, alpha, horizon)
}

/// Largest triangle-equality defect `W₂(R₀,R_t) + W₂(R_t,D) − W₂(R₀,D)`
/// along the trajectory; zero exactly when every snapshot lies on a
/// geodesic from the initial cloud to the demand.
pub fn geodesic_defect<T: Scalar>(traj: &TrajectoryRecord<T>, demand: &ParticleCloud<T>) -> Result<T> {
    let r0 = traj.initial();
    let total = w2_distance(r0, demand)?;
    let mut worst = T::zero();
    for cloud in traj.clouds() {
        let d = w2_distance(r0, cloud)? + w2_distance(cloud, demand)? - total;
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

/// Grid indices at which the optimal matching from the current swarm to the
/// demand differs from `initial` (particle identities are preserved by the
/// record, so agreement means the flow preserved the assignment).
pub fn assignment_drift<T: Scalar>(
    traj: &TrajectoryRecord<T>,
    demand: &ParticleCloud<T>,
    initial: &[usize],
) -> Result<Vec<usize>> {
    let mut drift = Vec::new();
    for (k, cloud) in traj.clouds().iter().enumerate() {
        let plan = solve_kantorovich(cloud, demand)?;
        if plan.single_valued_assignment().as_deref() != Some(initial) {
            drift.push(k);
        }
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(x: f64) -> ParticleCloud<f64> {
        ParticleCloud::dirac(vec![x]).unwrap()
    }

    #[test]
    fn plan_at_demand_is_stationary() {
        let c = ParticleCloud::uniform(2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let rec = plan_optimal_trajectory(&c, &c, 1.0, 1.0, 10).unwrap();
        assert_eq!(rec.total_cost(), 0.0);
        assert!(rec.velocities().iter().flatten().all(|&v| v == 0.0));
        assert!(rec.clouds().iter().all(|x| x == &c));
    }

    #[test]
    fn zero_horizon_is_a_single_snapshot() {
        let rec = plan_optimal_trajectory(&dirac(0.0), &dirac(1.0), 1.0, 0.0, 10).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.total_cost(), 0.0);
    }

    #[test]
    fn feedback_velocity_of_point_masses() {
        let s = ControlSchedule::finite_horizon(1.0, 1.0).unwrap();
        let v = feedback_velocity(&dirac(0.0), &dirac(1.0), 0.0, &s).unwrap();
        assert!((v[0] - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert_eq!(feedback_velocity(&dirac(0.0), &dirac(1.0), 1.0, &s).unwrap(), vec![0.0]);
        assert_eq!(feedback_velocity(&dirac(1.0), &dirac(1.0), 0.3, &s).unwrap(), vec![0.0]);
        assert!(feedback_velocity(&dirac(0.0), &dirac(1.0), 1.5, &s).is_err());
    }

    #[test]
    fn stationary_cost_is_distance_squared_times_horizon() {
        let r = ParticleCloud::uniform(1, vec![0.0f64, 1.0]).unwrap();
        let d = ParticleCloud::uniform(1, vec![2.0, 3.0]).unwrap();
        let times = vec![0.0, 0.5, 1.0, 1.5];
        let rec = TrajectoryRecord::new(
            times,
            vec![r.clone(); 4],
            vec![vec![0.0; 2]; 4],
            vec![StageCost::default(); 4],
        )
        .unwrap();
        let cost = evaluate_cost(&rec, &d, 3.0).unwrap();
        assert!((cost - 4.0 * 1.5).abs() < 1e-14);
    }

    #[test]
    fn analytic_swarm_cost_limits() {
        assert_eq!(analytic_cost_swarm(0.0, 1.0, 1.0).unwrap().adopted, 0.0);
        let c = analytic_cost_swarm(1.0f64, 1.0, 1.0).unwrap();
        assert!((c.halved - 0.380_797_077_977_882_4).abs() < 1e-12);
        assert!(analytic_cost_swarm(1.0, 1e-12, 1.0).unwrap().adopted < 1e-5);
    }
}
