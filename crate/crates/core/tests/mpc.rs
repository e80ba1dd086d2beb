mod common;

use common::{rel, rng, uniform_cloud};
use w2swarm::controller::{closed_loop_simulate, closed_loop_simulate_with, plan_optimal_trajectory};
use w2swarm::lq::{riccati_gain, solve_static_lq, ControlSchedule, Integrator};
use w2swarm::mpc::{run_mpc, DemandSchedule};
use w2swarm::ot::{w2_distance, ParticleCloud};
use w2swarm::trajectory::max_particle_deviation;

fn dirac(x: f64) -> ParticleCloud<f64> {
    ParticleCloud::dirac(vec![x]).unwrap()
}

/// Point-mass receding-horizon simulation built from the scalar LQ solver:
/// each step reads the gain off the initial control of a fresh static solve
/// over the window and advances the error exactly.
fn scalar_receding_cost(eta0: f64, schedule: &[(f64, f64)], end: f64, alpha: f64, window: f64, dt: f64) -> f64 {
    let n = (end / dt).round() as usize;
    let demand = |t: f64| schedule.iter().rev().find(|(s, _)| *s <= t + 1e-12).unwrap().1;
    let mut eta = eta0;
    let mut stage = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        let zeta = demand(t);
        let lq = solve_static_lq(eta, zeta, alpha, window, 2000).unwrap();
        let rate = if eta == zeta { 0.0 } else { lq.control[0] / (zeta - eta) };
        let u = rate * (zeta - eta);
        stage.push((zeta - eta).powi(2) + alpha * u * u);
        eta = zeta + (eta - zeta) * (-rate * dt).exp();
    }
    let inner: f64 = stage[1..n].iter().sum();
    dt * (inner + 0.5 * (stage[0] + stage[n]))
}

#[test]
fn two_segment_point_mass_matches_scalar_oracle() {
    let s = DemandSchedule::new(vec![0.0, 0.5], vec![dirac(0.0), dirac(1.0)], 1.0).unwrap();
    let rec = run_mpc(&dirac(0.0), &s, 1.0, 1.0, 1e-3).unwrap();
    let oracle = scalar_receding_cost(0.0, &[(0.0, 0.0), (0.5, 1.0)], 1.0, 1.0, 1.0, 1e-3);
    assert!(rel(rec.total_cost(), oracle) < 1e-4, "{} vs {oracle}", rec.total_cost());
}

#[test]
fn single_segment_equals_receding_closed_loop() {
    let mut r = rng(40);
    let a = uniform_cloud(&mut r, 2, 8, -1.0, 1.0);
    let d = uniform_cloud(&mut r, 2, 8, 0.0, 2.0);
    let s = DemandSchedule::constant(d.clone(), 2.0).unwrap();
    let rec = run_mpc(&a, &s, 0.5, 1.0, 0.01).unwrap();
    let control = ControlSchedule::receding(0.5, 1.0).unwrap();
    let reference = closed_loop_simulate_with(&a, &d, &control, 2.0, 200, Integrator::Rk4).unwrap();
    for (x, y) in rec.clouds().iter().zip(reference.clouds()) {
        assert!(max_particle_deviation(x, y).unwrap() <= 1e-12);
    }
    assert!(rel(rec.total_cost(), reference.total_cost()) < 1e-12);
}

#[test]
fn receding_error_decays_exponentially() {
    let (alpha, window, horizon) = (1.0, 1.0, 1.0);
    let s = DemandSchedule::constant(dirac(1.0), horizon).unwrap();
    let rec = run_mpc(&dirac(0.0), &s, alpha, window, 1e-3).unwrap();
    let k = riccati_gain(alpha, window, 0.0).unwrap() / alpha;
    for (&t, c) in rec.times().iter().zip(rec.clouds()) {
        assert!(((1.0 - c.point(0)[0]) - (-k * t).exp()).abs() < 1e-9);
    }
    // The finite-horizon plan ends closer to the demand under the
    // time-varying gain than the constant receding gain does.
    let plan = plan_optimal_trajectory(&dirac(0.0), &dirac(1.0), alpha, horizon, 1000).unwrap();
    assert!(plan.last().point(0)[0] != rec.last().point(0)[0]);
    let static_run = closed_loop_simulate(
        &dirac(0.0),
        &dirac(1.0),
        &ControlSchedule::receding(alpha, window).unwrap(),
        1000,
    )
    .unwrap();
    assert!(max_particle_deviation(static_run.last(), rec.last()).unwrap() < 1e-12);
}

#[test]
fn distance_to_segment_demand_never_increases() {
    let mut r = rng(41);
    let a = uniform_cloud(&mut r, 2, 10, -1.0, 1.0);
    let segments: Vec<_> = (0..3).map(|_| uniform_cloud(&mut r, 2, 10, -2.0, 2.0)).collect();
    let s = DemandSchedule::new(vec![0.0, 0.4, 0.7], segments, 1.2).unwrap();
    let rec = run_mpc(&a, &s, 0.7, 0.5, 0.01).unwrap();
    for k in 1..rec.len() {
        let (t0, t1) = (rec.times()[k - 1], rec.times()[k]);
        if s.segment_index(t0) == s.segment_index(t1) {
            let d = s.demand_at(t0);
            assert!(w2_distance(&rec.clouds()[k], d).unwrap() <= w2_distance(&rec.clouds()[k - 1], d).unwrap() + 1e-12);
        }
    }
}

#[test]
fn demand_equal_to_start_is_stationary() {
    let mut r = rng(42);
    let a = uniform_cloud(&mut r, 2, 6, -1.0, 1.0);
    let s = DemandSchedule::new(vec![0.0, 0.5], vec![a.clone(), a.clone()], 1.0).unwrap();
    let rec = run_mpc(&a, &s, 1.0, 1.0, 0.05).unwrap();
    assert_eq!(rec.total_cost(), 0.0);
    assert!(rec.clouds().iter().all(|c| c == &a));
}

#[test]
fn receding_gain_is_constant() {
    let s = ControlSchedule::receding(0.3f64, 0.8).unwrap();
    let f0 = 0.3f64.sqrt() * (0.8 / 0.3f64.sqrt()).tanh();
    for k in 0..50 {
        assert!((s.gain(0.1 * k as f64) - f0).abs() < 1e-15);
    }
}

#[test]
fn schedule_dimension_must_match_resource() {
    let s = DemandSchedule::constant(ParticleCloud::dirac(vec![0.0f64, 0.0]).unwrap(), 1.0).unwrap();
    assert!(run_mpc(&dirac(0.0), &s, 1.0, 1.0, 0.1).is_err());
}
