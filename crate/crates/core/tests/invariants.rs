use proptest::prelude::*;

use sepsaddle::analysis::{check_contraction, ridge_exact_solution, ridge_residual, PotentialWeights};
use sepsaddle::blockmat::BlockMatrix;
use sepsaddle::data::generate_synthetic;
use sepsaddle::{LossKind, SaddleProblem, Solver, SolverConfig, SolverState, Variant};

fn block_matrix(d: usize, widths: &[usize], vals: &[f64]) -> BlockMatrix {
    let cols: usize = widths.iter().sum();
    BlockMatrix::from_dense(d, &vals[..d * cols], widths).unwrap()
}

prop_compose! {
    fn ridge_instance()(d in 1usize..6, widths in prop::collection::vec(1usize..3, 2..7), lambda_exp in -3.0..0.0f64)
        (vals in prop::collection::vec(-2.0..2.0f64, d * widths.iter().sum::<usize>()),
         labels in prop::collection::vec(-3.0..3.0f64, widths.iter().sum::<usize>()),
         d in Just(d), widths in Just(widths), lambda in Just(10f64.powf(lambda_exp)))
        -> (BlockMatrix, SaddleProblem)
    {
        let a = block_matrix(d, &widths, &vals);
        (a, SaddleProblem::new(LossKind::Quadratic, labels, lambda).unwrap())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_sampling_potential_contracts((a, p) in ridge_instance()) {
        prop_assume!(a.spectral_norms().iter().all(|r| *r > 1e-3));
        let rep = check_contraction(&p, &a, 60, false).unwrap();
        prop_assert_eq!(rep.violation_count(), 0, "max excess {}", rep.max_excess);
    }

    #[test]
    fn step_invariants_hold_every_iteration((a, p) in ridge_instance(), m_frac in 0.0..1.0f64, seed in 0u64..1000, spdc in any::<bool>()) {
        let n = a.num_blocks();
        let active = a.spectral_norms().iter().filter(|r| **r > 0.0).count();
        prop_assume!(active > 0);
        let m = 1 + ((active - 1) as f64 * m_frac) as usize;
        let variant = if spdc { Variant::Spdc } else { Variant::AdaSpdc };
        let cfg = SolverConfig { variant, m, seed, ..Default::default() };
        let mut solver = Solver::new(&p, &a, cfg).unwrap();
        let mut state = SolverState::zeros(&a);
        let norms = a.spectral_norms();
        let global = norms.iter().copied().fold(0.0, f64::max);
        for t in 1..=40u64 {
            let before = state.y.clone();
            let s = solver.step(&mut state).unwrap();
            prop_assert_eq!(s.sampled.len(), m);
            let mut sorted = s.sampled.clone();
            sorted.sort();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), m);
            prop_assert!(s.tau > 0.0 && s.theta > 0.0 && s.theta < 1.0);
            for (k, &i) in s.sampled.iter().enumerate() {
                let r_i = if spdc { global } else { norms[i] };
                let expect = 1.0 / (4.0 * r_i * s.r_max);
                prop_assert!((s.sigma[k] * s.tau - expect).abs() <= 1e-12 * expect);
                prop_assert!(s.sigma[k] > 0.0);
            }
            if !spdc {
                let r_max = s.sampled.iter().map(|&i| norms[i]).fold(0.0, f64::max);
                prop_assert_eq!(s.r_max, r_max);
            }
            for i in (0..n).filter(|i| !s.sampled.contains(i)) {
                for c in a.block_range(i) {
                    prop_assert_eq!(state.y[c].to_bits(), before[c].to_bits());
                }
            }
            prop_assert_eq!(state.block_updates, t * m as u64);
        }
        let exact = state.exact_r(&a);
        let norm = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
        let drift = state.recompute_r(&a);
        prop_assert!(drift <= 1e-8 * (1.0 + norm));
    }

    #[test]
    fn adaptive_theta_never_exceeds_uniform((a, p) in ridge_instance(), seed in 0u64..1000) {
        prop_assume!(a.spectral_norms().iter().all(|r| *r > 0.0));
        let n = a.num_blocks();
        let m = 1 + (seed as usize % n);
        let mut ada = Solver::new(&p, &a, SolverConfig { m, seed, ..Default::default() }).unwrap();
        let mut uni = Solver::new(&p, &a, SolverConfig { variant: Variant::Spdc, m, seed, ..Default::default() }).unwrap();
        let (mut sa, mut su) = (SolverState::zeros(&a), SolverState::zeros(&a));
        for _ in 0..10 {
            let x = ada.step(&mut sa).unwrap();
            let y = uni.step(&mut su).unwrap();
            prop_assert!(x.theta <= y.theta);
            prop_assert!(x.tau >= y.tau);
        }
    }

    #[test]
    fn ridge_solution_residual_is_small((a, p) in ridge_instance()) {
        let s = ridge_exact_solution(&a, &p.labels, p.lambda).unwrap();
        let ab = a.matvec(&p.labels).unwrap();
        let scale = ab.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        prop_assert!(ridge_residual(&a, &p.labels, p.lambda, &s.x).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn potential_weights_are_ordered(sigmas in prop::collection::vec(1e-4..1e4f64, 1..10), gamma in 0.1..10.0f64, extra in 0usize..20) {
        let n = sigmas.len() + extra;
        for m in [1, n.min(3), n] {
            let w = PotentialWeights::new(&sigmas, gamma, m, n).unwrap();
            for i in 0..sigmas.len() {
                prop_assert!(w.nu[i] > 0.0 && w.mu[i] > 0.0);
                prop_assert!(w.nu[i] < w.nu_prime[i]);
                prop_assert!(w.mu[i] < w.mu_prime[i]);
            }
        }
    }
}

#[test]
fn geometric_rate_over_windows() {
    let ds = generate_synthetic(12, 6, 3).unwrap();
    let lambda = 0.5;
    let p = SaddleProblem::new(LossKind::Quadratic, ds.labels.clone(), lambda).unwrap();
    let s = ridge_exact_solution(&ds.matrix, &ds.labels, lambda).unwrap();
    for (m, seed) in [12, 6, 3].into_iter().flat_map(|m| (0..5).map(move |s| (m, s))) {
        let mut solver = Solver::new(&p, &ds.matrix, SolverConfig { m, seed, ..Default::default() }).unwrap();
        let mut state = SolverState::zeros(&ds.matrix);
        let mut logs = vec![(p.primal_objective(&ds.matrix, &state.x).unwrap() - s.objective).ln()];
        let mut thetas = Vec::new();
        loop {
            let step = solver.step(&mut state).unwrap();
            thetas.push(step.theta);
            let sub = p.primal_objective(&ds.matrix, &state.x).unwrap() - s.objective;
            if sub < 1e-9 * s.objective.abs().max(1.0) || thetas.len() >= 5000 {
                break;
            }
            logs.push(sub.ln());
        }
        let windows = logs.len().saturating_sub(50);
        assert!(windows > 0, "m={m}: converged before one window");
        for start in 0..windows {
            let theta_bar = thetas[start..start + 50].iter().sum::<f64>() / 50.0;
            let drop = logs[start] - logs[start + 50];
            let expected = 50.0 * (1.0 / theta_bar).ln();
            assert!(drop >= expected / 2.0, "m={m} window {start}: drop {drop} < {}/2", expected);
        }
    }
}
