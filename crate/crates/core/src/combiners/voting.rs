use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::elimination::weak_eliminate;
use super::{all_pairs, DecisionCache, EnsemblePlan, PairDecider, Verdict};
use crate::error::{Error, Result};

/// Default VCF filter threshold, in percent of the top score.
pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// Relative vote deficit `(s_top − s)·100 / s_top`.
pub fn dp_percent(s_top: u32, s: u32) -> f64 {
    if s_top == 0 {
        return 0.0;
    }
    f64::from(s_top - s.min(s_top)) * 100.0 / f64::from(s_top)
}

fn full_vote<D: PairDecider>(cache: &mut DecisionCache<D>) -> Vec<u32> {
    let n = cache.n_classes();
    let mut votes = vec![0u32; n];
    for (a, b) in all_pairs(n) {
        votes[cache.decide(a, b)] += 1;
    }
    votes
}

/// Every classifier votes; the class with most votes wins. Ties are broken
/// by a uniform draw under `seed`.
pub fn max_wins<D: PairDecider>(plan: &EnsemblePlan, decider: D, seed: u64) -> Verdict {
    if plan.n_classes() < 2 {
        return Verdict::trivial();
    }
    let mut cache = DecisionCache::new(decider);
    let votes = full_vote(&mut cache);
    let top = *votes.iter().max().expect("at least two classes");
    let tied: Vec<usize> = (0..votes.len()).filter(|&c| votes[c] == top).collect();
    let predicted = if tied.len() == 1 {
        tied[0]
    } else {
        tied[ChaCha8Rng::seed_from_u64(seed).random_range(0..tied.len())]
    };
    cache.verdict(predicted, Some(votes), false)
}

/// Voting-based candidate filtering.
///
/// After a full vote, classes whose deficit [`dp_percent`] is within
/// `threshold` form the candidate set. A single candidate is the answer;
/// otherwise weak elimination restricted to the candidates decides, reusing
/// the cached votes so no classifier runs twice.
pub fn vcf<D: PairDecider>(plan: &EnsemblePlan, decider: D, threshold: f64, seed: u64) -> Result<Verdict> {
    if !(0.0..=100.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "VCF threshold must lie in [0, 100], got {threshold}"
        )));
    }
    if plan.n_classes() < 2 {
        return Ok(Verdict::trivial());
    }
    let mut cache = DecisionCache::new(decider);
    let votes = full_vote(&mut cache);
    let top = *votes.iter().max().expect("at least two classes");
    let candidates: Vec<usize> = (0..votes.len())
        .filter(|&c| dp_percent(top, votes[c]) <= threshold)
        .collect();
    if candidates.len() == 1 {
        return Ok(cache.verdict(candidates[0], Some(votes), false));
    }
    match weak_eliminate(plan, &mut cache, &candidates) {
        Ok(predicted) => Ok(cache.verdict(predicted, Some(votes), false)),
        Err(remaining) => {
            let best = remaining.iter().map(|&c| votes[c]).max().expect("non-empty");
            let tied: Vec<usize> = remaining.into_iter().filter(|&c| votes[c] == best).collect();
            let pick = tied[ChaCha8Rng::seed_from_u64(seed).random_range(0..tied.len())];
            Ok(cache.verdict(pick, Some(votes), true))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiners::{pair_count, OutcomeTable};
    use rand::SeedableRng;

    #[test]
    fn dp_arithmetic() {
        assert!((dp_percent(24, 23) - 4.1667).abs() < 1e-3);
        assert_eq!(format!("{:.2}", dp_percent(24, 23)), "4.17");
        assert_eq!(dp_percent(24, 24), 0.0);
        assert_eq!(dp_percent(25, 0), 100.0);
    }

    #[test]
    fn vote_counts_from_figure_example() {
        // class 0 beats everyone, class 3 beats 1 and 2, class 2 beats 1
        let t = OutcomeTable::from_fn(4, |a, b| match (a, b) {
            (0, _) => 0,
            (1, 2) => 2,
            (_, 3) => 3,
            _ => unreachable!(),
        })
        .unwrap();
        let v = max_wins(&EnsemblePlan::uniform(4), &t, 1);
        assert_eq!(v.votes, Some(vec![3, 0, 1, 2]));
        assert_eq!(v.predicted, 0);
        assert_eq!(v.evaluations, 6);
    }

    #[test]
    fn two_classes_single_evaluation() {
        let t = OutcomeTable::from_fn(2, |_, b| b).unwrap();
        let v = max_wins(&EnsemblePlan::uniform(2), &t, 9);
        assert_eq!((v.predicted, v.evaluations), (1, 1));
    }

    #[test]
    fn ties_are_seeded_and_stay_among_leaders() {
        // cyclic 3-class table: every class has one vote
        let t = OutcomeTable::from_fn(3, |a, b| if (a, b) == (0, 2) { 2 } else { a }).unwrap();
        let plan = EnsemblePlan::uniform(3);
        let mut seen = [false; 3];
        for seed in 0..64 {
            let v = max_wins(&plan, &t, seed);
            assert_eq!(v, max_wins(&plan, &t, seed));
            seen[v.predicted] = true;
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn vcf_zero_threshold_unique_max_matches_max_wins() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 2..9 {
            let plan = EnsemblePlan::uniform(n);
            for _ in 0..100 {
                let t = OutcomeTable::random(n, &mut rng);
                let mw = max_wins(&plan, &t, 0);
                let votes = mw.votes.clone().unwrap();
                let top = *votes.iter().max().unwrap();
                if votes.iter().filter(|&&s| s == top).count() == 1 {
                    assert_eq!(vcf(&plan, &t, 0.0, 0).unwrap().predicted, mw.predicted);
                }
            }
        }
    }

    #[test]
    fn vcf_never_evaluates_beyond_the_vote() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for n in 2..10 {
            let plan = EnsemblePlan::new(n, (0..pair_count(n)).map(|i| (i * 7 % 5) as f64).collect()).unwrap();
            for _ in 0..50 {
                let t = OutcomeTable::random(n, &mut rng);
                let v = vcf(&plan, &t, 30.0, 1).unwrap();
                assert_eq!(v.evaluations, pair_count(n));
                assert!(!v.fallback);
            }
        }
    }

    #[test]
    fn vcf_threshold_validated() {
        let t = OutcomeTable::from_fn(2, |a, _| a).unwrap();
        assert!(vcf(&EnsemblePlan::uniform(2), &t, -1.0, 0).is_err());
        assert!(vcf(&EnsemblePlan::uniform(2), &t, 100.5, 0).is_err());
    }
}
