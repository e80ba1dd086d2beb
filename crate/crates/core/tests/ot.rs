mod common;

use common::{rng, uniform_cloud, weighted_cloud};
use proptest::prelude::*;
use rand::Rng;
use w2swarm::ot::hungarian::min_cost_assignment;
use w2swarm::ot::{
    cost_matrix, extract_monge_map, pushforward, solve_kantorovich, solve_kantorovich_with, w2_distance,
    w2_distance_1d, w2_squared, ParticleCloud, Solver, TransportMap,
};

fn cloud_1d(points: &[f64], weights: &[f64]) -> ParticleCloud<f64> {
    ParticleCloud::new(1, points.to_vec(), weights.to_vec()).unwrap()
}

#[test]
fn swapped_pair_is_matched_monotonically() {
    let mu = ParticleCloud::uniform(1, vec![0.0f64, 1.0]).unwrap();
    let nu = ParticleCloud::uniform(1, vec![0.9, 0.1]).unwrap();
    let plan = solve_kantorovich(&mu, &nu).unwrap();
    assert_eq!(plan.single_valued_assignment(), Some(vec![1, 0]));
    assert!((plan.cost() - 0.01).abs() < 1e-15);
}

#[test]
fn ten_point_clouds_match_hungarian_oracle() {
    let mut r = rng(11);
    for _ in 0..20 {
        let a = uniform_cloud(&mut r, 2, 10, -1.0, 1.0);
        let b = uniform_cloud(&mut r, 2, 10, -1.0, 1.0);
        let c = cost_matrix(&a, &b);
        let perm = min_cost_assignment(&c, 10);
        let oracle: f64 = perm.iter().enumerate().map(|(i, &j)| c[i * 10 + j]).sum::<f64>() / 10.0;
        assert!((w2_distance(&a, &b).unwrap() - oracle.sqrt()).abs() < 1e-12);
        // The simplex path must agree with the matching path.
        let simplex = solve_kantorovich_with(&a, &b, Solver::Simplex).unwrap().cost();
        assert!((simplex - oracle).abs() < 1e-12);
    }
}

#[test]
fn fifty_particle_unequal_weights_agree_with_quantile_solver() {
    let mut r = rng(3);
    for _ in 0..20 {
        let a = weighted_cloud(&mut r, 1, 50);
        let b = weighted_cloud(&mut r, 1, 37);
        let lp = w2_distance(&a, &b).unwrap();
        assert!((lp - w2_distance_1d(&a, &b).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn quantile_solver_rejects_higher_dimensions() {
    let a = ParticleCloud::dirac(vec![0.0f64, 0.0]).unwrap();
    assert!(w2_distance_1d(&a, &a).is_err());
}

#[test]
fn plans_satisfy_marginals_and_cost() {
    let mut r = rng(5);
    for _ in 0..30 {
        let n = r.random_range(1..12);
        let m = r.random_range(1..12);
        let a = weighted_cloud(&mut r, 2, n);
        let b = weighted_cloud(&mut r, 2, m);
        let plan = solve_kantorovich(&a, &b).unwrap();
        assert!(plan.marginal_error(&a, &b) <= 1e-10);
        let recomputed = plan.recompute_cost(&a, &b);
        assert!((plan.cost() - recomputed).abs() <= 1e-10 * recomputed.max(1.0));
        assert!(plan.entries().iter().all(|e| e.mass > 0.0));
    }
}

#[test]
fn permutation_maps_are_cyclically_monotone() {
    let mut r = rng(9);
    for _ in 0..20 {
        let a = uniform_cloud(&mut r, 2, 12, -1.0, 1.0);
        let b = uniform_cloud(&mut r, 2, 12, 0.0, 2.0);
        let map = extract_monge_map(&solve_kantorovich(&a, &b).unwrap(), &a, &b).unwrap();
        assert!(map.is_permutation());
        for _ in 0..50 {
            let cycle: Vec<usize> = (0..3).map(|_| r.random_range(0..12)).collect();
            assert!(map.cyclic_monotonicity_defect(&a, &cycle) <= 1e-12);
        }
    }
}

#[test]
fn pushforward_conserves_mass_bit_for_bit() {
    let mut r = rng(21);
    let a = weighted_cloud(&mut r, 3, 17);
    let targets: Vec<f64> = a.points().iter().map(|x| 2.0 * x + 1.0).collect();
    let out = pushforward(&a, &TransportMap::from_targets(3, targets).unwrap()).unwrap();
    assert_eq!(out.weights(), a.weights());
    assert_eq!(out.total_mass(), a.total_mass());
    let psi = |x: &[f64]| x.iter().map(|c| c.sin()).sum::<f64>();
    let direct: f64 = a
        .iter()
        .map(|(x, w)| w * psi(&x.iter().map(|c| 2.0 * c + 1.0).collect::<Vec<_>>()))
        .sum();
    assert!((out.integrate(psi) - direct).abs() < 1e-15);
}

#[test]
fn translation_shifts_cost_by_squared_offset() {
    let mut r = rng(2);
    let a = uniform_cloud(&mut r, 2, 8, -1.0, 1.0);
    let shifted = a.map_points(|x| vec![x[0] + 3.0, x[1] - 4.0]).unwrap();
    assert!((w2_squared(&a, &shifted).unwrap() - 25.0).abs() < 1e-12);
}

#[test]
fn single_precision_agrees_with_double() {
    let mut r = rng(4);
    let a = uniform_cloud(&mut r, 2, 10, -1.0, 1.0);
    let b = uniform_cloud(&mut r, 2, 10, -1.0, 1.0);
    let to32 = |c: &ParticleCloud<f64>| {
        ParticleCloud::<f32>::uniform(2, c.points().iter().map(|&x| x as f32).collect()).unwrap()
    };
    let d64 = w2_distance(&a, &b).unwrap();
    let d32 = w2_distance(&to32(&a), &to32(&b)).unwrap();
    assert!((d32 as f64 - d64).abs() < 1e-5);
}

#[test]
fn mixed_weight_example_by_hand() {
    // Mass ½ at 0 and ½ at 1 against ¼ at 0, ¾ at 2: ¼ stays, ¼ moves 0→2, ½ moves 1→2.
    let a = cloud_1d(&[0.0, 1.0], &[0.5, 0.5]);
    let b = cloud_1d(&[0.0, 2.0], &[0.25, 0.75]);
    assert!((w2_squared(&a, &b).unwrap() - 1.5).abs() < 1e-14);
}

fn arb_cloud(dim: usize, max: usize) -> impl Strategy<Value = ParticleCloud<f64>> {
    (1..=max).prop_flat_map(move |n| {
        (
            prop::collection::vec(-5.0f64..5.0, n * dim),
            prop::collection::vec(0.05f64..1.0, n),
        )
            .prop_map(move |(points, raw)| {
                let total: f64 = raw.iter().sum();
                let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
                let head: f64 = weights[..weights.len() - 1].iter().sum();
                *weights.last_mut().unwrap() = 1.0 - head;
                ParticleCloud::new(dim, points, weights).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_symmetric_and_zero_on_diagonal(a in arb_cloud(2, 8), b in arb_cloud(2, 8)) {
        prop_assert_eq!(w2_distance(&a, &a).unwrap(), 0.0);
        let ab = w2_distance(&a, &b).unwrap();
        let ba = w2_distance(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-10);
    }

    #[test]
    fn triangle_inequality(a in arb_cloud(2, 7), b in arb_cloud(2, 7), c in arb_cloud(2, 7)) {
        let ac = w2_distance(&a, &c).unwrap();
        let via = w2_distance(&a, &b).unwrap() + w2_distance(&b, &c).unwrap();
        prop_assert!(ac <= via + 1e-9);
    }

    #[test]
    fn one_dimensional_solvers_agree(a in arb_cloud(1, 20), b in arb_cloud(1, 20)) {
        let lp = w2_distance(&a, &b).unwrap();
        prop_assert!((lp - w2_distance_1d(&a, &b).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn marginals_hold(a in arb_cloud(3, 9), b in arb_cloud(3, 9)) {
        let plan = solve_kantorovich(&a, &b).unwrap();
        prop_assert!(plan.marginal_error(&a, &b) <= 1e-10);
    }

    #[test]
    fn scaling_scales_cost_quadratically(a in arb_cloud(2, 6), b in arb_cloud(2, 6), s in 0.1f64..4.0) {
        let sa = a.map_points(|x| x.iter().map(|c| s * c).collect()).unwrap();
        let sb = b.map_points(|x| x.iter().map(|c| s * c).collect()).unwrap();
        let base = w2_squared(&a, &b).unwrap();
        prop_assert!((w2_squared(&sa, &sb).unwrap() - s * s * base).abs() <= 1e-9 * (1.0 + s * s * base));
    }
}
