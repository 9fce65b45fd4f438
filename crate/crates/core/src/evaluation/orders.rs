use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combiners::{adag, ddag, CombinerKind, EnsemblePlan, PairDecider};
use crate::error::{Error, Result};

/// Largest class count for which every order is enumerated.
pub const EXHAUSTIVE_ORDER_LIMIT: usize = 8;

/// Default number of sampled orders above [`EXHAUSTIVE_ORDER_LIMIT`].
pub const DEFAULT_ORDER_SAMPLE: usize = 50_000;

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// One representative class sequence per distinct first-round bracket:
/// pairs listed by their smaller member, the unpaired class (if any) last.
pub fn canonical_pairings(n: usize) -> Vec<Vec<usize>> {
    fn pair_up(rest: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, bye: Option<usize>) {
        if rest.is_empty() {
            let mut seq = cur.clone();
            seq.extend(bye);
            out.push(seq);
            return;
        }
        let first = rest[0];
        for k in 1..rest.len() {
            let partner = rest[k];
            let remaining: Vec<usize> = rest[1..].iter().copied().filter(|&c| c != partner).collect();
            cur.push(first);
            cur.push(partner);
            pair_up(&remaining, cur, out, bye);
            cur.truncate(cur.len() - 2);
        }
    }
    let mut out = Vec::new();
    let classes: Vec<usize> = (0..n).collect();
    if n.is_multiple_of(2) {
        pair_up(&classes, &mut Vec::new(), &mut out, None);
    } else {
        for bye in 0..n {
            let rest: Vec<usize> = classes.iter().copied().filter(|&c| c != bye).collect();
            pair_up(&rest, &mut Vec::new(), &mut out, Some(bye));
        }
    }
    out
}

/// `N! / (2^⌊N/2⌋ · ⌊N/2⌋!)`, the number of distinct first-round brackets.
pub fn pairing_count(n: usize) -> u128 {
    let h = n / 2;
    let fact = |m: usize| (1..=m as u128).product::<u128>();
    fact(n) / (2u128.pow(h as u32) * fact(h))
}

/// The orders averaged over for an order-sensitive combiner: exhaustive
/// up to [`EXHAUSTIVE_ORDER_LIMIT`] classes, otherwise `sample` seeded
/// random permutations.
///
/// Exhaustive DDAG orders are the `N!/2` permutations whose first class is
/// smaller than their last; ADAG orders are the [`canonical_pairings`].
pub fn evaluation_orders(method: CombinerKind, n: usize, sample: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n <= EXHAUSTIVE_ORDER_LIMIT {
        return match method {
            // reversing an order mirrors the whole DAG, so keep one of each pair
            CombinerKind::Ddag => Ok(all_permutations(n)
                .into_iter()
                .filter(|o| n < 2 || o[0] < o[n - 1])
                .collect()),
            CombinerKind::Adag => Ok(canonical_pairings(n)),
            other => Err(Error::InvalidConfig(format!("{other} does not depend on class order"))),
        };
    }
    if !method.is_order_sensitive() {
        return Err(Error::InvalidConfig(format!("{method} does not depend on class order")));
    }
    if sample == 0 {
        return Err(Error::InvalidConfig("order sample size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..sample)
        .map(|_| {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect())
}

/// Accuracy of an order-sensitive combiner averaged over orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderAverage {
    pub mean_accuracy: f64,
    pub orders: usize,
}

/// Mean accuracy of DDAG or ADAG on `examples` (decider, true class) over
/// every order from [`evaluation_orders`].
pub fn order_average<D: PairDecider>(
    plan: &EnsemblePlan,
    examples: &[(D, usize)],
    method: CombinerKind,
    sample: usize,
    seed: u64,
) -> Result<OrderAverage> {
    let orders = evaluation_orders(method, plan.n_classes(), sample, seed)?;
    if examples.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut correct = 0u64;
    for order in &orders {
        for (decider, truth) in examples {
            let v = match method {
                CombinerKind::Ddag => ddag(plan, decider, order)?,
                _ => adag(plan, decider, order)?,
            };
            correct += u64::from(v.predicted == *truth);
        }
    }
    Ok(OrderAverage {
        mean_accuracy: correct as f64 / (orders.len() * examples.len()) as f64,
        orders: orders.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiners::OutcomeTable;

    #[test]
    fn permutation_counts() {
        assert_eq!(all_permutations(1), vec![vec![0]]);
        assert_eq!(all_permutations(3).len(), 6);
        assert_eq!(all_permutations(5).len(), 120);
        assert_eq!(all_permutations(3)[1], vec![0, 2, 1]);
    }

    #[test]
    fn pairing_counts_match_formula() {
        for n in 2..=8 {
            let p = canonical_pairings(n);
            assert_eq!(p.len() as u128, pairing_count(n), "n={n}");
            let mut sorted = p.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), p.len());
        }
        assert_eq!(pairing_count(4), 3);
        assert_eq!(pairing_count(8), 105);
        assert_eq!(pairing_count(5), 15);
    }

    #[test]
    fn reversed_ddag_orders_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let plan = EnsemblePlan::uniform(5);
        for _ in 0..20 {
            let t = OutcomeTable::random(5, &mut rng);
            for o in all_permutations(5) {
                let r: Vec<usize> = o.iter().rev().copied().collect();
                assert_eq!(
                    ddag(&plan, &t, &o).unwrap().predicted,
                    ddag(&plan, &t, &r).unwrap().predicted
                );
            }
        }
        assert_eq!(evaluation_orders(CombinerKind::Ddag, 5, 1, 0).unwrap().len(), 60);
    }

    #[test]
    fn two_classes_single_order() {
        let plan = EnsemblePlan::uniform(2);
        let t = OutcomeTable::from_fn(2, |a, _| a).unwrap();
        let ex = [(&t, 0), (&t, 1)];
        for m in [CombinerKind::Ddag, CombinerKind::Adag] {
            let r = order_average(&plan, &ex, m, 10, 0).unwrap();
            assert_eq!(r.orders, 1);
            assert_eq!(r.mean_accuracy, 0.5);
        }
    }

    #[test]
    fn undefeated_class_is_always_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let plan = EnsemblePlan::uniform(6);
        let ex: Vec<_> = (0..6).map(|t| (OutcomeTable::undefeated(6, t, &mut rng), t)).collect();
        for m in [CombinerKind::Ddag, CombinerKind::Adag] {
            assert_eq!(order_average(&plan, &ex, m, 10, 0).unwrap().mean_accuracy, 1.0);
        }
    }

    #[test]
    fn sampling_above_the_limit() {
        let o = evaluation_orders(CombinerKind::Ddag, 10, 25, 3).unwrap();
        assert_eq!(o.len(), 25);
        assert_eq!(o, evaluation_orders(CombinerKind::Ddag, 10, 25, 3).unwrap());
        assert!(evaluation_orders(CombinerKind::Se, 10, 25, 3).is_err());
        assert!(evaluation_orders(CombinerKind::Se, 4, 25, 3).is_err());
        assert!(evaluation_orders(CombinerKind::Adag, 12, 0, 3).is_err());
    }
}
