use ovo_svm::combiners::{
    all_pairs, pair_count, vcf, we, CombinerKind, CombinerParams, DecisionCache, EnsemblePlan, OrderPolicy,
    OutcomeTable, PairDecider, Verdict,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ELIMINATING: [CombinerKind; 5] = [
    CombinerKind::Ddag,
    CombinerKind::Adag,
    CombinerKind::Radag,
    CombinerKind::Se,
    CombinerKind::We,
];

fn plan_and_table(n: usize, seed: u64, coarse: bool) -> (EnsemblePlan, OutcomeTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors = (0..pair_count(n))
        .map(|_| {
            // coarse errors force many ties in the sorted order and the matching
            let e: f64 = rand::Rng::random(&mut rng);
            if coarse {
                (e * 4.0).floor() / 4.0
            } else {
                e
            }
        })
        .collect();
    let plan = EnsemblePlan::new(n, errors).unwrap();
    (plan, OutcomeTable::random(n, &mut rng))
}

fn run(plan: &EnsemblePlan, t: &OutcomeTable, kind: CombinerKind, seed: u64) -> Verdict {
    plan.combine(t, kind, &CombinerParams::for_example(seed, 0, 10.0))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn evaluation_counts_follow_structure(n in 2usize..=12, seed in any::<u64>(), coarse in any::<bool>()) {
        let (plan, t) = plan_and_table(n, seed, coarse);
        for kind in CombinerKind::ALL {
            let v = run(&plan, &t, kind, seed);
            match kind {
                CombinerKind::MaxWins | CombinerKind::Vcf => prop_assert_eq!(v.evaluations, pair_count(n)),
                CombinerKind::We => prop_assert!((n - 1..=pair_count(n)).contains(&v.evaluations)),
                _ => prop_assert_eq!(v.evaluations, n - 1, "{}", kind),
            }
            prop_assert!(v.predicted < n);
        }
    }

    #[test]
    fn traces_agree_with_the_decider(n in 2usize..=9, seed in any::<u64>()) {
        let (plan, t) = plan_and_table(n, seed, false);
        for kind in CombinerKind::ALL {
            let v = run(&plan, &t, kind, seed);
            for step in &v.trace {
                prop_assert!(step.pair.0 < step.pair.1);
                prop_assert_eq!(step.winner, t.winner(step.pair.0, step.pair.1));
            }
        }
    }

    #[test]
    fn verdicts_are_deterministic(n in 2usize..=10, seed in any::<u64>()) {
        let (plan, t) = plan_and_table(n, seed, true);
        for kind in CombinerKind::ALL {
            prop_assert_eq!(run(&plan, &t, kind, seed), run(&plan, &t, kind, seed));
        }
    }

    #[test]
    fn eliminating_combiners_respect_the_trace(n in 2usize..=9, seed in any::<u64>()) {
        let (plan, t) = plan_and_table(n, seed, true);
        for kind in ELIMINATING {
            let v = run(&plan, &t, kind, seed);
            for c in 0..n {
                let lost = v.trace.iter().any(|s| s.loser() == c);
                // a class that never loses in the trace is the answer, and any loss rules it out
                prop_assert_eq!(!lost, v.predicted == c, "{} class {}", kind, c);
            }
        }
    }

    #[test]
    fn vcf_resolves_like_restricted_we(n in 3usize..=10, seed in any::<u64>(), threshold in 0.0f64..=100.0) {
        let (plan, t) = plan_and_table(n, seed, true);
        let v = vcf(&plan, &t, threshold, seed).unwrap();
        prop_assert!(!v.fallback);
        let votes = v.votes.clone().unwrap();
        let top = *votes.iter().max().unwrap();
        let candidates: Vec<usize> =
            (0..n).filter(|&c| f64::from(top - votes[c]) * 100.0 / f64::from(top) <= threshold).collect();
        prop_assert!(candidates.contains(&v.predicted));
        if candidates.len() > 1 {
            let mut cache = DecisionCache::new(&t);
            for (a, b) in all_pairs(n) {
                cache.decide(a, b);
            }
            let w = we(&plan, &mut cache, Some(&candidates));
            prop_assert_eq!(w.predicted, v.predicted);
            prop_assert_eq!(cache.evaluations(), pair_count(n));
        }
    }

    #[test]
    fn vcf_at_zero_threshold_is_max_wins_when_unique(n in 2usize..=12, seed in any::<u64>()) {
        let (plan, t) = plan_and_table(n, seed, false);
        let mw = run(&plan, &t, CombinerKind::MaxWins, seed);
        let votes = mw.votes.clone().unwrap();
        let top = *votes.iter().max().unwrap();
        prop_assume!(votes.iter().filter(|&&s| s == top).count() == 1);
        prop_assert_eq!(vcf(&plan, &t, 0.0, seed).unwrap().predicted, mw.predicted);
    }

    #[test]
    fn dags_accept_any_explicit_order(n in 2usize..=9, seed in any::<u64>()) {
        let (plan, t) = plan_and_table(n, seed, false);
        let order = OrderPolicy::SeededRandom(seed).resolve(n).unwrap();
        let params = CombinerParams { order: OrderPolicy::Explicit(order), ..CombinerParams::default() };
        for kind in [CombinerKind::Ddag, CombinerKind::Adag] {
            let v = plan.combine(&t, kind, &params).unwrap();
            prop_assert_eq!(v.trace.len(), n - 1);
        }
    }
}

#[test]
fn undefeated_class_always_wins() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=6 {
        let plan = EnsemblePlan::uniform(n);
        for target in 0..n {
            for _ in 0..20 {
                let t = OutcomeTable::undefeated(n, target, &mut rng);
                for kind in CombinerKind::ALL {
                    assert_eq!(run(&plan, &t, kind, 1).predicted, target, "{kind} n={n}");
                }
            }
        }
    }
}

#[test]
fn single_class_is_trivial() {
    let plan = EnsemblePlan::uniform(1);
    let t = OutcomeTable::new(1, vec![]).unwrap();
    for kind in CombinerKind::ALL {
        let v = run(&plan, &t, kind, 0);
        assert_eq!((v.predicted, v.evaluations), (0, 0));
        assert!(v.trace.is_empty());
    }
}

#[test]
fn vcf_threshold_outside_range_is_rejected() {
    let plan = EnsemblePlan::uniform(3);
    let t = OutcomeTable::from_fn(3, |a, _| a).unwrap();
    assert!(vcf(&plan, &t, -1.0, 0).is_err());
    assert!(vcf(&plan, &t, 100.5, 0).is_err());
}
