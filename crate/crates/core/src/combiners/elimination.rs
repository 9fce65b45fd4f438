use super::{DecisionCache, EnsemblePlan, PairDecider, Verdict};

/// Strong elimination: walk the classifiers from lowest to highest
/// generalization error, skipping any that involves an already discarded
/// class, and discard each loser until one class is left.
pub fn se<D: PairDecider>(plan: &EnsemblePlan, decider: D) -> Verdict {
    let n = plan.n_classes();
    if n < 2 {
        return Verdict::trivial();
    }
    let mut cache = DecisionCache::new(decider);
    let mut alive = vec![true; n];
    let mut left = n;
    for &(a, b) in plan.sorted_pairs() {
        if left == 1 {
            break;
        }
        if !(alive[a] && alive[b]) {
            continue;
        }
        let w = cache.decide(a, b);
        alive[if w == a { b } else { a }] = false;
        left -= 1;
    }
    let predicted = alive.iter().position(|&x| x).expect("one class survives");
    cache.verdict(predicted, None, false)
}

/// Weak elimination: like [`se`] but a classifier is skipped only when
/// both of its classes are discarded. A loser that is already discarded
/// removes nothing, though the evaluation still counts.
///
/// `candidates` restricts the starting set (every other class counts as
/// discarded). If the classifiers run out with more than one candidate
/// left, the smallest remaining class is returned and the verdict is
/// flagged as a fallback; this cannot happen when all classes start alive.
pub fn we<D: PairDecider>(plan: &EnsemblePlan, cache: &mut DecisionCache<D>, candidates: Option<&[usize]>) -> Verdict {
    let n = plan.n_classes();
    if n < 2 {
        return Verdict::trivial();
    }
    let all: Vec<usize>;
    let candidates = match candidates {
        Some(c) => c,
        None => {
            all = (0..n).collect();
            &all
        }
    };
    match weak_eliminate(plan, cache, candidates) {
        Ok(c) => cache.verdict(c, None, false),
        Err(remaining) => cache.verdict(remaining[0], None, true),
    }
}

/// Runs weak elimination; `Err` carries the survivors if more than one is
/// left once the classifiers are exhausted.
pub(crate) fn weak_eliminate<D: PairDecider>(
    plan: &EnsemblePlan,
    cache: &mut DecisionCache<D>,
    candidates: &[usize],
) -> Result<usize, Vec<usize>> {
    let n = plan.n_classes();
    let mut alive = vec![false; n];
    for &c in candidates {
        alive[c] = true;
    }
    let mut left = alive.iter().filter(|&&x| x).count();
    for &(a, b) in plan.sorted_pairs() {
        if left <= 1 {
            break;
        }
        if !alive[a] && !alive[b] {
            continue;
        }
        let w = cache.decide(a, b);
        let loser = if w == a { b } else { a };
        if alive[loser] {
            alive[loser] = false;
            left -= 1;
        }
    }
    let remaining: Vec<usize> = (0..n).filter(|&c| alive[c]).collect();
    if remaining.len() == 1 {
        Ok(remaining[0])
    } else {
        Err(remaining)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiners::{pair_count, OutcomeTable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn se_walkthrough_three_classes() {
        let plan = EnsemblePlan::new(3, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(plan.sorted_pairs(), &[(0, 1), (0, 2), (1, 2)]);
        let t = OutcomeTable::from_fn(3, |a, _| a).unwrap();
        let v = se(&plan, &t);
        let pairs: Vec<_> = v.trace.iter().map(|s| s.pair).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
        assert_eq!((v.predicted, v.evaluations), (0, 2));
    }

    #[test]
    fn we_removes_candidate_beaten_by_discarded_class() {
        // classes i=0, j=1, k=2 with j already out; (i,j) ranks before (i,k)
        let plan = EnsemblePlan::new(3, vec![0.1, 0.2, 0.3]).unwrap();
        let t = OutcomeTable::from_fn(3, |a, b| if (a, b) == (0, 1) { 1 } else { b }).unwrap();
        let mut cache = DecisionCache::new(&t);
        let v = we(&plan, &mut cache, Some(&[0, 2]));
        assert_eq!(v.predicted, 2);
        let pairs: Vec<_> = v.trace.iter().map(|s| s.pair).collect();
        assert_eq!(pairs, vec![(0, 1)]);
    }

    #[test]
    fn two_classes_we_equals_se() {
        let plan = EnsemblePlan::uniform(2);
        for bits in 0..2 {
            let t = OutcomeTable::from_bits(2, bits);
            assert_eq!(se(&plan, &t), we(&plan, &mut DecisionCache::new(&t), None));
        }
    }

    #[test]
    fn we_can_use_every_classifier() {
        // sorted order (0,1),(0,2),(1,2),(0,3),(1,3),(2,3); the larger class
        // always wins, so three applications hit an already discarded loser
        let plan = EnsemblePlan::new(4, vec![0.0, 0.1, 0.3, 0.2, 0.4, 0.5]).unwrap();
        let t = OutcomeTable::from_fn(4, |a, b| b.max(a)).unwrap();
        let v = we(&plan, &mut DecisionCache::new(&t), None);
        assert_eq!(v.predicted, 3);
        assert_eq!(v.evaluations, pair_count(4));
        let s = se(&plan, &t);
        assert_eq!(s.evaluations, 3);
    }

    #[test]
    fn elimination_counts_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=12 {
            for _ in 0..40 {
                let errs = (0..pair_count(n)).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
                let plan = EnsemblePlan::new(n, errs).unwrap();
                let t = OutcomeTable::random(n, &mut rng);
                let s = se(&plan, &t);
                assert_eq!(s.evaluations, n - 1);
                let w = we(&plan, &mut DecisionCache::new(&t), None);
                assert!(w.evaluations >= n - 1 && w.evaluations <= pair_count(n));
                assert!(!w.fallback);
                for step in &s.trace {
                    assert_ne!(step.loser(), s.predicted);
                }
            }
        }
    }

    #[test]
    fn restricted_we_never_needs_fallback() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 3..9 {
            let plan = EnsemblePlan::uniform(n);
            for _ in 0..40 {
                let t = OutcomeTable::random(n, &mut rng);
                let cands: Vec<usize> = (0..n).filter(|c| c % 2 == 0).collect();
                let v = we(&plan, &mut DecisionCache::new(&t), Some(&cands));
                assert!(!v.fallback);
            }
        }
    }
}
