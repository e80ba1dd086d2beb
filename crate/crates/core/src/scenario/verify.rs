//! The invariant suite run by `verify`. Checks are independent and run on
//! separate threads.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::run::receding_cost;
use super::schema::{Demand, Scenario};
use super::ScenarioError;
use crate::controller::{
    analytic_cost_swarm, assignment_drift, closed_loop_simulate, geodesic_defect, plan_optimal_trajectory,
};
use crate::error::Error;
use crate::geometry::build_geodesic;
use crate::lq::{riccati_gain, ControlSchedule};
use crate::mpc::{run_mpc, DemandSchedule};
use crate::ot::{w2_distance, w2_distance_1d, ParticleCloud};
use crate::trajectory::max_particle_deviation;
use crate::transcription::{gradient_check, solve_direct, TranscriptionProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckOutcome {
    fn judge(name: &'static str, passed: bool, detail: String) -> Self {
        let status = if passed { CheckStatus::Pass } else { CheckStatus::Fail };
        Self { name, status, detail }
    }

    fn skip(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: CheckStatus::Skip,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

type Check<'a> = Box<dyn FnOnce() -> Result<CheckOutcome, Error> + Send + 'a>;

/// Grid fine enough for the dense checks: step at most 1e-3.
fn fine_steps(horizon: f64, steps: usize) -> usize {
    steps.max((horizon / 1e-3).ceil() as usize)
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

fn static_checks<'a>(scenario: &'a Scenario, r0: &'a ParticleCloud<f64>, d: &'a ParticleCloud<f64>) -> Vec<Check<'a>> {
    let (alpha, horizon, steps) = (scenario.alpha, scenario.horizon, scenario.steps);
    let mut checks: Vec<Check<'a>> = vec![
        Box::new(move || {
            let self_r = w2_distance(r0, r0)?;
            let self_d = w2_distance(d, d)?;
            let asym = (w2_distance(r0, d)? - w2_distance(d, r0)?).abs();
            Ok(CheckOutcome::judge(
                "metric_axioms",
                self_r == 0.0 && self_d == 0.0 && asym <= 1e-9,
                format!("W(a,a) = {self_r:e}, {self_d:e}; asymmetry {asym:e}"),
            ))
        }),
        Box::new(move || {
            if r0.dim() != 1 {
                return Ok(CheckOutcome::skip("one_dimensional_crosscheck", "dimension is not 1"));
            }
            let gap = (w2_distance_1d(r0, d)? - w2_distance(r0, d)?).abs();
            Ok(CheckOutcome::judge(
                "one_dimensional_crosscheck",
                gap <= 1e-9,
                format!("quantile vs linear program: {gap:e}"),
            ))
        }),
        Box::new(move || {
            let path = build_geodesic(r0, d)?;
            let w = path.endpoint_distance();
            let ts = [0.0, 0.2, 0.5, 0.7, 1.0];
            let mut worst = 0.0f64;
            for &a in &ts {
                for &b in &ts {
                    let dist = w2_distance(&path.eval(a)?, &path.eval(b)?)?;
                    worst = worst.max((dist - (a - b).abs() * w).abs());
                }
            }
            Ok(CheckOutcome::judge(
                "geodesic_constant_speed",
                worst <= 1e-8,
                format!("max defect {worst:e}"),
            ))
        }),
    ];
    if horizon == 0.0 {
        return checks;
    }
    checks.push(Box::new(move || {
        let fine = fine_steps(horizon, steps);
        let plan = plan_optimal_trajectory(r0, d, alpha, horizon, fine)?;
        let exact = analytic_cost_swarm(w2_distance(r0, d)?, alpha, horizon)?.adopted;
        let err = relative(plan.total_cost(), exact);
        Ok(CheckOutcome::judge(
            "plan_cost_closed_form",
            err <= 1e-4,
            format!(
                "plan {} vs closed form {exact} ({fine} steps), relative {err:e}",
                plan.total_cost()
            ),
        ))
    }));
    checks.push(Box::new(move || {
        let fine = fine_steps(horizon, steps);
        let plan = plan_optimal_trajectory(r0, d, alpha, horizon, fine)?;
        let schedule = ControlSchedule::finite_horizon(alpha, horizon)?;
        let closed = closed_loop_simulate(r0, d, &schedule, fine)?;
        let dev = max_particle_deviation(plan.last(), closed.last())?;
        Ok(CheckOutcome::judge(
            "feedback_open_loop_equivalence",
            dev <= 1e-3,
            format!("final positions differ by at most {dev:e}"),
        ))
    }));
    checks.push(Box::new(move || {
        let path = build_geodesic(r0, d)?;
        if path.is_refined() || !path.map().is_permutation() {
            return Ok(CheckOutcome::skip(
                "assignment_preservation",
                "optimal plan is not a one-to-one matching",
            ));
        }
        let plan = plan_optimal_trajectory(r0, d, alpha, horizon, steps)?;
        let drift = assignment_drift(&plan, d, path.assignment())?;
        Ok(CheckOutcome::judge(
            "assignment_preservation",
            drift.is_empty(),
            format!("{} of {} grid times changed matching", drift.len(), plan.len()),
        ))
    }));
    checks.push(Box::new(move || {
        let n = steps.min(10);
        let problem = TranscriptionProblem::new(r0.clone(), d.clone(), alpha, horizon, n)?;
        let base = problem.straight_line_guess()?;
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        for _ in 0..5 {
            let x: Vec<f64> = base.iter().map(|&v| v + rng.random_range(-0.05..0.05)).collect();
            match gradient_check(&problem, &x, 1e-6) {
                Ok(err) => {
                    return Ok(CheckOutcome::judge(
                        "oracle_gradient",
                        err < 1e-5,
                        format!("relative error vs central differences {err:e}"),
                    ))
                }
                Err(Error::DegenerateMatching { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(CheckOutcome::skip(
            "oracle_gradient",
            "every sampled configuration was degenerate",
        ))
    }));
    checks.push(Box::new(move || {
        let n = steps.min(200);
        let problem = TranscriptionProblem::new(r0.clone(), d.clone(), alpha, horizon, n)?;
        let sol = solve_direct(&problem)?;
        let exact = analytic_cost_swarm(w2_distance(r0, d)?, alpha, horizon)?.adopted;
        let err = relative(sol.objective, exact);
        let defect = geodesic_defect(&sol.record, d)?;
        Ok(CheckOutcome::judge(
            "oracle_agreement",
            err <= 5e-3 && defect < 1e-3,
            format!(
                "transcribed optimum {} vs closed form {exact}: relative {err:e}, geodesic defect {defect:e}, converged {}",
                sol.objective, sol.converged
            ),
        ))
    }));
    checks
}

fn schedule_checks<'a>(scenario: &'a Scenario, r0: &'a ParticleCloud<f64>, s: DemandSchedule<f64>) -> Vec<Check<'a>> {
    let (alpha, horizon, steps) = (scenario.alpha, scenario.horizon, scenario.steps);
    let window = scenario.replan_horizon();
    vec![
        Box::new(move || {
            let schedule = ControlSchedule::receding(alpha, window)?;
            let f0 = alpha.sqrt() * (window / alpha.sqrt()).tanh();
            let worst = (0..=steps)
                .map(|k| (schedule.gain(horizon * k as f64 / steps as f64) - f0).abs())
                .fold(0.0, f64::max);
            Ok(CheckOutcome::judge(
                "receding_gain_constant",
                worst <= 1e-12 && (riccati_gain(alpha, window, 0.0)? - f0).abs() <= 1e-12,
                format!("max gain deviation {worst:e}"),
            ))
        }),
        Box::new(move || {
            let rec = run_mpc(r0, &s, alpha, window, horizon / steps as f64)?;
            let mut worst = 0.0f64;
            for k in 1..rec.len() {
                let (a, b) = (rec.times()[k - 1], rec.times()[k]);
                if s.segment_index(a) == s.segment_index(b) {
                    let demand = s.demand_at(a);
                    let rise = w2_distance(&rec.clouds()[k], demand)? - w2_distance(&rec.clouds()[k - 1], demand)?;
                    worst = worst.max(rise);
                }
            }
            let mut outcome = CheckOutcome::judge(
                "segment_contraction",
                worst <= 1e-12,
                format!("largest in-segment increase of W₂ {worst:e}"),
            );
            if s.segment_count() == 1 {
                let expected = receding_cost(w2_distance(r0, &s.clouds()[0])?, alpha, window, horizon)
                    .expect("validated parameters");
                let err = relative(rec.total_cost(), expected);
                outcome.detail += &format!(
                    "; cost {} vs exponential approach {expected} ({err:e})",
                    rec.total_cost()
                );
                if err > 1e-3 {
                    outcome.status = CheckStatus::Fail;
                }
            }
            Ok(outcome)
        }),
    ]
}

/// Runs the invariant suite for a scenario. A static demand gets the full
/// transport, geometry, controller and oracle checks; a demand schedule gets
/// the receding-horizon checks.
pub fn verify_scenario(scenario: &Scenario) -> Result<Vec<CheckOutcome>, ScenarioError> {
    scenario.validate()?;
    let m = scenario.materialize()?;
    let r0 = &m.resource;
    let checks = match &m.demand {
        Demand::Static(d) => static_checks(scenario, r0, d),
        Demand::Schedule(s) => schedule_checks(scenario, r0, s.clone()),
    };
    let results: Vec<Result<CheckOutcome, Error>> = thread::scope(|scope| {
        let handles: Vec<_> = checks.into_iter().map(|c| scope.spawn(c)).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("check thread panicked"))
            .collect()
    });
    results.into_iter().map(|r| r.map_err(ScenarioError::from)).collect()
}
