use std::collections::BTreeMap;

use minmax_core::harness::{run, RunConfig};
use minmax_core::protocol::{init_agent, LambdaInit, StepSchedule};
use minmax_core::{reference, testkit, Graph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn edge_increments_are_antisymmetric(seed in any::<u64>(), n in 2usize..=5, s in 1usize..=3, gamma in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = testkit::random_affine_problem(&mut rng, n, s);
        let g = Graph::erdos_renyi(n, 0.6, seed, 1000).unwrap();
        let init = LambdaInit::SeededRandom { seed, scale: 1.0 };
        let mut agents: Vec<_> = (0..n).map(|i| init_agent(i, &g, &problem.agents[i], &init).unwrap()).collect();
        for a in agents.iter_mut() {
            a.mu = (0..s).map(|_| rng.gen_range(0.0..1.0)).collect();
        }
        let before: Vec<_> = agents.iter().map(|a| a.lambda_out.clone()).collect();
        let mus: Vec<_> = agents.iter().map(|a| a.mu.clone()).collect();
        for (i, a) in agents.iter_mut().enumerate() {
            let inc: BTreeMap<usize, Vec<f64>> = g.neighbors(i).unwrap().iter().map(|&j| (j, mus[j].clone())).collect();
            a.round_phase2(&inc, gamma).unwrap();
        }
        for (i, j) in g.edges() {
            for k in 0..s {
                let dij = agents[i].lambda_out[&j][k] - before[i][&j][k];
                let dji = agents[j].lambda_out[&i][k] - before[j][&i][k];
                prop_assert!((dij + dji).abs() <= 1e-14, "{} vs {}", dij, dji);
            }
        }
    }

    #[test]
    fn invariants_hold_on_random_networks(seed in any::<u64>(), n in 1usize..=4, s in 1usize..=3, random_init in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = testkit::random_affine_problem(&mut rng, n, s);
        let g = Graph::erdos_renyi(n, 0.5, seed, 1000).unwrap();
        let p_star = reference::solve_centralized(&problem, TOL).unwrap().p_star;
        let lambda_init = if random_init { LambdaInit::SeededRandom { seed, scale: 0.5 } } else { LambdaInit::Zero };
        let cfg = RunConfig { iterations: 150, lambda_init, ..RunConfig::default() };
        let (trace, report) = run(&problem, &g, &cfg, Some(p_star)).unwrap();
        let m = report.monitor;
        prop_assert!(m.max_violation <= 1e-8);
        prop_assert!(m.max_simplex_error <= 1e-7 && m.min_mu >= -1e-9);
        prop_assert!(m.max_lambda_imbalance <= 1e-9);
        prop_assert!(m.min_peak_over_p_star.unwrap() >= -1e-7);
        prop_assert!(m.max_peak_over_sum_rho <= 1e-8);
        for row in &trace.rows {
            prop_assert!(row.sum_rho >= p_star - 1e-7);
        }
    }
}

#[test]
fn traces_are_bit_identical_across_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let problem = testkit::random_affine_problem(&mut rng, 4, 3);
    let g = Graph::cycle(4).unwrap();
    let cfg = RunConfig {
        iterations: 300,
        lambda_init: LambdaInit::SeededRandom { seed: 1, scale: 0.3 },
        record_rho: true,
        ..RunConfig::default()
    };
    let a = run(&problem, &g, &cfg, None).unwrap();
    let b = run(&problem, &g, &cfg, None).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1.x, b.1.x);
}

#[test]
fn random_networks_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..6 {
        let n = rng.gen_range(2..=5);
        let problem = testkit::random_affine_problem(&mut rng, n, 3);
        let g = Graph::path(n).unwrap();
        let p_star = reference::solve_centralized(&problem, TOL).unwrap().p_star;
        let cfg = RunConfig {
            iterations: 20_000,
            schedule: StepSchedule::PowerLaw { exponent: 0.8, scale: 1.0 },
            record_every: 10,
            ..RunConfig::default()
        };
        let (_, report) = run(&problem, &g, &cfg, Some(p_star)).unwrap();
        assert_eq!(report.converged, Some(true), "instance {k}: {} vs {p_star}", report.sum_rho);
        assert!(report.final_excess_over_p_star.unwrap() <= 1e-2 * p_star.abs().max(1.0));
    }
}

#[test]
fn weak_duality_for_random_simplex_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let s = rng.gen_range(1..=3);
        let problem = testkit::random_affine_problem(&mut rng, n, s);
        let r = reference::solve_centralized(&problem, TOL).unwrap();
        for _ in 0..10 {
            let raw: Vec<f64> = (0..s).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mu: Vec<f64> = raw.iter().map(|v| v / total).collect();
            assert!(reference::dual_value(&problem, &mu, TOL).unwrap() <= r.p_star + 1e-7);
        }
    }
}

#[test]
fn oracle_matches_brute_force_on_tiny_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..40 {
        // at most 4 decision variables in total
        let (n, s) = [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (4, 1), (1, 4)][rng.gen_range(0..7)];
        let problem = testkit::random_affine_problem(&mut rng, n, s);
        let r = reference::solve_centralized(&problem, TOL).unwrap();
        assert!((r.p_star - testkit::brute_force_p_star(&problem)).abs() <= 1e-8);
        assert!((r.mu_star.iter().sum::<f64>() - 1.0).abs() <= 1e-7);
        let (peak, _) = problem.peak(&r.x_star);
        assert!(peak <= r.p_star + 1e-8);
        for (spec, x) in problem.agents.iter().zip(&r.x_star) {
            assert!(spec.contains(x, 1e-8));
        }
    }
}
