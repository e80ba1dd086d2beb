use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::csv::{emit_trajectory, fmt, summary_path};
use super::schema::{Demand, Mode, Scenario};
use super::ScenarioError;
use crate::controller::{
    analytic_cost_swarm, closed_loop_simulate, closed_loop_simulate_with, evaluate_cost_against, geodesic_defect,
    plan_optimal_trajectory,
};
use crate::lq::{riccati_gain, ControlSchedule, Integrator, COST_CONSTANT, HALVED_COST_CONSTANT};
use crate::mpc::{run_mpc, DemandSchedule};
use crate::ot::w2_distance;
use crate::trajectory::{max_particle_deviation, TrajectoryRecord};
use crate::transcription::{solve_direct, TranscriptionProblem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    pub cost_constant: f64,
    pub halved_cost_constant: f64,
    /// `cosh(T/√α)`, the divisor that normalizes the state transition.
    pub normalization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSummary {
    /// Trapezoid integral of the recorded stage costs.
    pub numeric: f64,
    /// The same integral with fresh transport solves on the recorded clouds.
    pub recomputed: f64,
    /// Closed-form optimum with the adopted constant, when one exists.
    pub analytic: Option<f64>,
    /// Closed-form optimum with the halved constant.
    pub halved_analytic: Option<f64>,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub cold_start_objective: Option<f64>,
    /// Cost of the closed-form plan on the same grid.
    pub plan_cost: f64,
    /// `objective / plan_cost`.
    pub cost_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpcSummary {
    pub replan_horizon: f64,
    pub segments: usize,
    /// The constant gain `f(0)` of the receding window.
    pub receding_gain: f64,
    /// For a single segment: whether the run coincides with the static
    /// closed-loop simulation under the same receding gain.
    pub closed_loop_equivalent: Option<bool>,
    pub closed_loop_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRow {
    pub t: f64,
    pub assignment_cost: f64,
    pub motion_cost: f64,
    pub cumulative_cost: f64,
}

/// Wall-clock measurements, kept out of the deterministic report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub run_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub mode: Mode,
    pub dim: usize,
    pub particles: usize,
    pub alpha: f64,
    pub horizon: f64,
    pub steps: usize,
    pub seed: u64,
    pub constants: Constants,
    /// W₂ between the initial resource and the demand in force at t = 0.
    pub initial_distance: f64,
    pub cost: CostSummary,
    /// Largest triangle-equality defect against the static demand.
    pub geodesic_defect_max: Option<f64>,
    pub oracle: Option<OracleSummary>,
    pub mpc: Option<MpcSummary>,
    pub stages: Vec<StageRow>,
    #[serde(skip)]
    pub timings: Timings,
}

impl RunReport {
    /// Deterministic JSON: identical scenarios give identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Cost of the receding-horizon feedback toward a static demand at initial
/// distance `w2` over `[0, duration]`: the swarm approaches the demand
/// exponentially at rate `k = f(0)/α`.
pub fn receding_cost(w2: f64, alpha: f64, window: f64, duration: f64) -> Result<f64, ScenarioError> {
    let k = riccati_gain(alpha, window, 0.0)? / alpha;
    Ok(w2 * w2 * (1.0 + alpha * k * k) * (-(-2.0 * k * duration).exp_m1()) / (2.0 * k))
}

fn analytic(w2: f64, alpha: f64, horizon: f64) -> Result<(f64, Option<f64>), ScenarioError> {
    if horizon == 0.0 {
        return Ok((0.0, Some(0.0)));
    }
    let c = analytic_cost_swarm(w2, alpha, horizon)?;
    Ok((c.adopted, Some(c.halved)))
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Runs the scenario in its mode and reports on the result.
pub fn run_scenario(scenario: &Scenario) -> Result<(TrajectoryRecord<f64>, RunReport), ScenarioError> {
    scenario.validate()?;
    let start = Instant::now();
    let m = scenario.materialize()?;
    let (r0, alpha, horizon, steps) = (&m.resource, scenario.alpha, scenario.horizon, scenario.steps);
    let static_demand = m.demand.as_static().cloned();
    let initial_distance = w2_distance(r0, m.demand.at(0.0))?;

    let mut oracle = None;
    let mut mpc = None;
    let mut analytic_cost = None;
    let record = match scenario.mode {
        Mode::Plan | Mode::ClosedLoop | Mode::Oracle => {
            let demand = static_demand.as_ref().expect("validated static demand");
            analytic_cost = Some(analytic(initial_distance, alpha, horizon)?);
            match scenario.mode {
                Mode::Plan => plan_optimal_trajectory(r0, demand, alpha, horizon, steps)?,
                Mode::ClosedLoop => {
                    let schedule = ControlSchedule::finite_horizon(alpha, horizon)?;
                    closed_loop_simulate(r0, demand, &schedule, steps)?
                }
                _ => {
                    let problem = TranscriptionProblem::new(r0.clone(), demand.clone(), alpha, horizon, steps)?;
                    let sol = solve_direct(&problem)?;
                    let plan_cost = plan_optimal_trajectory(r0, demand, alpha, horizon, steps)?.total_cost();
                    oracle = Some(OracleSummary {
                        objective: sol.objective,
                        iterations: sol.iterations,
                        converged: sol.converged,
                        gradient_norm: sol.gradient_norm,
                        cold_start_objective: sol.cold_start_objective,
                        plan_cost,
                        cost_ratio: relative_ratio(sol.objective, plan_cost),
                    });
                    sol.record
                }
            }
        }
        Mode::Mpc => {
            let schedule = match &m.demand {
                Demand::Static(d) => DemandSchedule::constant(d.clone(), horizon)?,
                Demand::Schedule(s) => s.clone(),
            };
            let window = scenario.replan_horizon();
            let dt = horizon / steps as f64;
            let record = run_mpc(r0, &schedule, alpha, window, dt)?;
            let (equivalent, deviation) = match &static_demand {
                Some(d) => {
                    let control = ControlSchedule::receding(alpha, window)?;
                    let reference = closed_loop_simulate_with(r0, d, &control, horizon, steps, Integrator::Rk4)?;
                    let dev = max_particle_deviation(record.last(), reference.last())?;
                    let c = receding_cost(initial_distance, alpha, window, horizon)?;
                    analytic_cost = Some((c, None));
                    (Some(dev <= 1e-9), Some(dev))
                }
                None => (None, None),
            };
            mpc = Some(MpcSummary {
                replan_horizon: window,
                segments: schedule.segment_count(),
                receding_gain: riccati_gain(alpha, window, 0.0)?,
                closed_loop_equivalent: equivalent,
                closed_loop_deviation: deviation,
            });
            record
        }
    };

    let recomputed = evaluate_cost_against(&record, |k| m.demand.at(record.times()[k]), alpha)?;
    let numeric = record.total_cost();
    let geodesic_defect_max = match (&static_demand, scenario.mode) {
        (Some(d), Mode::Plan | Mode::ClosedLoop | Mode::Oracle) => Some(geodesic_defect(&record, d)?),
        _ => None,
    };
    let stages = record
        .times()
        .iter()
        .zip(record.stage_costs())
        .zip(record.cumulative_costs())
        .map(|((&t, s), c)| StageRow {
            t,
            assignment_cost: s.assignment,
            motion_cost: s.motion,
            cumulative_cost: c,
        })
        .collect();
    let report = RunReport {
        scenario: scenario.name.clone(),
        mode: scenario.mode,
        dim: scenario.dim,
        particles: r0.len(),
        alpha,
        horizon,
        steps,
        seed: scenario.seed,
        constants: Constants {
            cost_constant: COST_CONSTANT,
            halved_cost_constant: HALVED_COST_CONSTANT,
            normalization: (horizon / alpha.sqrt()).cosh(),
        },
        initial_distance,
        cost: CostSummary {
            numeric,
            recomputed,
            analytic: analytic_cost.map(|c| c.0),
            halved_analytic: analytic_cost.and_then(|c| c.1),
            relative_error: analytic_cost.map(|c| relative(oracle.as_ref().map_or(numeric, |o| o.objective), c.0)),
        },
        geodesic_defect_max,
        oracle,
        mpc,
        stages,
        timings: Timings {
            run_seconds: start.elapsed().as_secs_f64(),
        },
    };
    Ok((record, report))
}

fn relative_ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 && a == 0.0 {
        1.0
    } else {
        a / b
    }
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub trajectory: PathBuf,
    pub summary: PathBuf,
    pub report: PathBuf,
    pub timings: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Writes the trajectory, summary, report and timings into `dir`, plus the
/// cost and distance series when `plot_data` is set.
pub fn write_outputs(
    dir: &Path,
    record: &TrajectoryRecord<f64>,
    report: &RunReport,
    plot_data: bool,
) -> Result<OutputFiles, ScenarioError> {
    fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    let write = |name: &str, text: String| -> Result<PathBuf, ScenarioError> {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| ScenarioError::io(&path, e))?;
        Ok(path)
    };
    let trajectory = dir.join("trajectory.csv");
    emit_trajectory(record, &trajectory)?;
    let report_path = write("report.json", report.to_json() + "\n")?;
    let timings = write(
        "timings.json",
        serde_json::to_string_pretty(&report.timings).expect("timings serialize") + "\n",
    )?;
    let mut plots = Vec::new();
    if plot_data {
        let mut cost = String::from("t,stage_cost,cumulative_cost\n");
        let mut w2 = String::from("t,w2\n");
        for row in &report.stages {
            writeln!(
                cost,
                "{},{},{}",
                fmt(row.t),
                fmt(row.assignment_cost + row.motion_cost),
                fmt(row.cumulative_cost)
            )
            .unwrap();
            writeln!(w2, "{},{}", fmt(row.t), fmt(row.assignment_cost.max(0.0).sqrt())).unwrap();
        }
        plots.push(write("cost_vs_time.csv", cost)?);
        plots.push(write("w2_vs_time.csv", w2)?);
    }
    Ok(OutputFiles {
        summary: summary_path(&trajectory),
        trajectory,
        report: report_path,
        timings,
        plots,
    })
}
