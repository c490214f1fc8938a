use proptest::prelude::*;

use bmt::engine::{
    compute_fdp_tpp, run_trial, EnvKind, Environment, Hypotheses, MtConfig, Noise, StoppingRule, TrialSpec,
};
use bmt::evidence::{Boundary, EProcess, EvidenceSpec, LambdaStrategy, PProcess};
use bmt::exploration::PolicySpec;
use bmt::mt::{
    bh, bh_log, brute_force_constrained, brute_force_largest_self_consistent, ebh, ebh_log, is_self_consistent,
    largest_constrained_self_consistent, Adaptivity, DagConstraint, Dependence, DependenceSetting, Mode,
    OutputKind,
};

fn pvals(max_k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![0.0f64..1.0, (0.0f64..1.0).prop_map(|u| u.powi(4)), Just(0.05)], 1..=max_k)
}

fn dag(k: usize) -> impl Strategy<Value = DagConstraint> {
    prop::collection::vec(any::<bool>(), k * k).prop_map(move |bits| {
        let edges = (0..k)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .filter(|&(i, j)| bits[i * k + j])
            .collect();
        DagConstraint::new(k, edges).expect("forward edges are acyclic")
    })
}

fn policies() -> impl Strategy<Value = PolicySpec> {
    prop_oneof![
        Just(PolicySpec::Uniform),
        Just(PolicySpec::Ucb { boundary: Boundary::PhiJj }),
        Just(PolicySpec::BestEvidence),
        Just(PolicySpec::BaiReduction { epsilon: 0.1 }),
    ]
}

fn evidence_specs() -> impl Strategy<Value = EvidenceSpec> {
    prop_oneof![
        Just(EvidenceSpec::DiscreteMixture),
        Just(EvidenceSpec::Pmh { lambda: LambdaStrategy::DefaultWsr { alpha: 0.05 } }),
        Just(EvidenceSpec::Pmh { lambda: LambdaStrategy::BettingHalfMean }),
        Just(EvidenceSpec::PBoundary { boundary: Boundary::PhiIs }),
        Just(EvidenceSpec::InversePmh { lambda: LambdaStrategy::BettingHalfMean }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bh_is_largest_self_consistent(p in pvals(10), alpha in 0.01f64..0.5) {
        let fast = bh(&p, alpha).unwrap();
        let brute = brute_force_largest_self_consistent(&p, alpha, Mode::P).unwrap();
        prop_assert_eq!(&fast.ids, &brute.ids);
        prop_assert!(is_self_consistent(&p, &fast.ids, alpha, Mode::P));
    }

    #[test]
    fn ebh_matches_bh_on_reciprocals(p in pvals(40), alpha in 0.01f64..0.5) {
        let e: Vec<f64> = p.iter().map(|&v| 1.0 / v).collect();
        let clamped: Vec<f64> = e.iter().map(|&v| (1.0 / v).min(1.0)).collect();
        prop_assert_eq!(ebh(&e, alpha).unwrap().ids, bh(&clamped, alpha).unwrap().ids);
    }

    #[test]
    fn log_variants_agree(p in pvals(30), alpha in 0.01f64..0.5) {
        let lp: Vec<f64> = p.iter().map(|v| v.ln()).collect();
        prop_assert_eq!(bh_log(&lp, alpha).ids, bh(&p, alpha).unwrap().ids);
        let le: Vec<f64> = lp.iter().map(|v| -v).collect();
        let e: Vec<f64> = p.iter().map(|v| 1.0 / v).collect();
        prop_assert_eq!(ebh_log(&le, alpha).ids, ebh(&e, alpha).unwrap().ids);
    }

    #[test]
    fn bh_monotone_in_alpha_and_values(p in pvals(20), a in 0.01f64..0.3, b in 0.0f64..0.3, shrink in 0.0f64..1.0) {
        let small = bh(&p, a).unwrap();
        let large = bh(&p, (a + b).min(0.99)).unwrap();
        prop_assert!(small.is_subset_of(&large));
        // shrinking every p-value can only grow the set
        let q: Vec<f64> = p.iter().map(|v| v * shrink).collect();
        prop_assert!(small.is_subset_of(&bh(&q, a).unwrap()));
    }

    #[test]
    fn bh_permutation_invariant(p in pvals(20), alpha in 0.01f64..0.5, seed in any::<u64>()) {
        let k = p.len();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut s = seed;
        for i in (1..k).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        let mut mapped: Vec<usize> = bh(&permuted, alpha).unwrap().ids.iter().map(|&j| perm[j]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, bh(&p, alpha).unwrap().ids);
    }

    #[test]
    fn dag_matches_brute_force((p, d) in (1usize..=12).prop_flat_map(|k| (prop::collection::vec(0.0f64..1.0, k).prop_map(|v| v.iter().map(|u| u.powi(3)).collect::<Vec<f64>>()), dag(k))), alpha in 0.01f64..0.5) {
        let fast = largest_constrained_self_consistent(&p, alpha, Mode::P, &d).unwrap();
        let brute = brute_force_constrained(&p, alpha, Mode::P, &d).unwrap();
        prop_assert_eq!(&fast.ids, &brute.ids);
        let mut member = vec![false; p.len()];
        fast.ids.iter().for_each(|&i| member[i] = true);
        prop_assert!(d.is_feasible(&member));
        prop_assert!(fast.is_subset_of(&bh(&p, alpha).unwrap()));
    }

    #[test]
    fn boundaries_positive_and_monotone(t in 2u64..100_000, d1 in 0.001f64..0.1, d2 in 0.001f64..0.1) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        for b in [Boundary::Phi0, Boundary::PhiJj, Boundary::PhiIs] {
            let v = b.eval(t, lo).unwrap();
            prop_assert!(v > 0.0);
            prop_assert!(b.eval(t, hi).unwrap() <= v);
            prop_assert!(b.eval(t + 1, lo).unwrap() <= v);
        }
    }

    #[test]
    fn p_process_range_and_running_inf(xs in prop::collection::vec(-3.0f64..3.0, 1..200), mu0 in -1.0f64..1.0) {
        for b in [Boundary::Phi0, Boundary::PhiJj, Boundary::PhiIs] {
            let mut p = PProcess::boundary(b, mu0);
            let mut prev_inf = 1.0;
            for &x in &xs {
                p.update(x);
                prop_assert!(p.p() > 0.0 && p.p() <= 1.0);
                prop_assert!(p.running_inf() <= prev_inf);
                prop_assert!(p.running_inf() <= p.p());
                prev_inf = p.running_inf();
            }
        }
    }

    #[test]
    fn p_process_inverts_its_boundary(xs in prop::collection::vec(-1.0f64..3.0, 2..100)) {
        // P_t <= rho  iff  |mean - mu0| > phi(T, rho), up to the bisection tolerance
        for b in [Boundary::PhiJj, Boundary::PhiIs, Boundary::Phi0] {
            let mut p = PProcess::boundary(b, 0.0);
            xs.iter().for_each(|&x| p.update(x));
            let t = xs.len() as u64;
            let dev = p.mean().abs();
            let pv = p.p();
            for rho in [0.001, 0.01, 0.05, 0.09] {
                if pv < rho * 0.999 {
                    prop_assert!(dev > b.eval(t, rho).unwrap() - 1e-9);
                }
                if pv > rho * 1.001 {
                    prop_assert!(dev <= b.eval(t, rho).unwrap() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn lambda_is_predictable(xs in prop::collection::vec(-3.0f64..3.0, 1..60), extra in -10.0f64..10.0) {
        for s in [LambdaStrategy::DefaultWsr { alpha: 0.05 }, LambdaStrategy::BettingHalfMean] {
            let mut a = EProcess::pmh(s, 0.0);
            let mut b = EProcess::pmh(s, 0.0);
            for &x in &xs {
                a.update(x);
                b.update(x);
            }
            let before = a.next_lambda();
            b.update(extra);
            prop_assert_eq!(before, a.next_lambda());
            prop_assert!(a.value() >= 0.0);
        }
    }

    #[test]
    fn fdp_tpp_in_unit_interval(labels in prop::collection::vec(any::<bool>(), 1..30), picks in prop::collection::vec(any::<bool>(), 30)) {
        let rej: Vec<usize> = (0..labels.len()).filter(|&i| picks[i]).collect();
        let (fdp, tpp) = compute_fdp_tpp(&rej, &labels);
        prop_assert!((0.0..=1.0).contains(&fdp) && (0.0..=1.0).contains(&tpp));
        let h1: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
        let (f, t) = compute_fdp_tpp(&h1, &labels);
        prop_assert_eq!(f, 0.0);
        prop_assert_eq!(t, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trials_are_deterministic_and_monotone(
        policy in policies(),
        evidence in evidence_specs(),
        seed in any::<u64>(),
        shared in any::<bool>(),
        n_nonnull in 0usize..4,
    ) {
        let k = 8;
        let means: Vec<f64> = (0..k).map(|i| if i < n_nonnull { 0.8 } else { 0.0 }).collect();
        let noise = if shared { Noise::SharedNoise } else { Noise::Independent };
        let env = Environment::new(EnvKind::CliqueGraph { cliques: 4 }, means.clone(), noise).unwrap();
        let setting = DependenceSetting::new(Adaptivity::Adaptive, Dependence::Arbitrary, OutputKind::StepUp);
        let mut spec = TrialSpec::new(
            env,
            Hypotheses::per_arm(&means, 0.0),
            policy,
            evidence,
            MtConfig::new(0.05, setting),
            StoppingRule::FixedHorizon { rounds: 400 },
        );
        spec.stride = 1;
        spec.record_samples = true;
        let a = run_trial(&spec, seed).unwrap();
        let b = run_trial(&spec, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for w in a.path.windows(2) {
            prop_assert!(w[0].ids.iter().all(|h| w[1].ids.contains(h)));
            prop_assert!(w[0].round < w[1].round);
        }
        // rejected hypotheses never change again
        for w in a.snapshots.windows(2) {
            for &h in &w[0].rejected {
                prop_assert_eq!(w[0].log_stats[h], w[1].log_stats[h]);
            }
        }
        // UCB never queries a superarm whose arms are all rejected
        if let (PolicySpec::Ucb { .. }, Some(log)) = (policy, &a.samples) {
            for (t, &s) in log.selections.iter().enumerate() {
                let before = a.path.iter().rev().find(|e| e.round <= t as u64).map_or(&[][..], |e| &e.ids[..]);
                let arms = spec.env.superarms().get(s);
                prop_assert!(arms.iter().any(|a| !before.contains(a)));
            }
        }
    }
}
