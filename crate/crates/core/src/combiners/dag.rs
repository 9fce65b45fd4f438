use std::collections::VecDeque;

use super::{validate_order, DecisionCache, EnsemblePlan, PairDecider, Verdict};
use crate::error::Result;

/// Decision DAG: test the first candidate of `order` against the last and
/// drop the loser, until one class is left.
pub fn ddag<D: PairDecider>(plan: &EnsemblePlan, decider: D, order: &[usize]) -> Result<Verdict> {
    let n = plan.n_classes();
    validate_order(order, n)?;
    if n < 2 {
        return Ok(Verdict::trivial());
    }
    let mut cache = DecisionCache::new(decider);
    let mut list: VecDeque<usize> = order.iter().copied().collect();
    while list.len() > 1 {
        let (first, last) = (list[0], list[list.len() - 1]);
        if cache.decide(first, last) == first {
            list.pop_back();
        } else {
            list.pop_front();
        }
    }
    Ok(cache.verdict(list[0], None, false))
}

/// Adaptive DAG: a knockout bracket over `order`. Adjacent classes meet,
/// winners advance in order, and an odd class out moves up unplayed.
pub fn adag<D: PairDecider>(plan: &EnsemblePlan, decider: D, order: &[usize]) -> Result<Verdict> {
    let n = plan.n_classes();
    validate_order(order, n)?;
    if n < 2 {
        return Ok(Verdict::trivial());
    }
    let mut cache = DecisionCache::new(decider);
    let mut round = order.to_vec();
    while round.len() > 1 {
        round = round
            .chunks(2)
            .map(|c| if c.len() == 2 { cache.decide(c[0], c[1]) } else { c[0] })
            .collect();
    }
    Ok(cache.verdict(round[0], None, false))
}

/// Knockout bracket whose every round pairs the surviving classes by a
/// minimum-total-error perfect matching. The first round's pairing comes
/// from the plan, so it is computed once per ensemble.
pub fn radag<D: PairDecider>(plan: &EnsemblePlan, decider: D) -> Result<Verdict> {
    radag_counting(plan, decider).map(|(v, _)| v)
}

/// RADAG plus the number of matchings solved for this example.
pub(crate) fn radag_counting<D: PairDecider>(plan: &EnsemblePlan, decider: D) -> Result<(Verdict, usize)> {
    let n = plan.n_classes();
    if n < 2 {
        return Ok((Verdict::trivial(), 0));
    }
    let mut cache = DecisionCache::new(decider);
    let mut matching = plan.top_matching().expect("plan with two or more classes").clone();
    let mut solved = 0;
    loop {
        let mut next: Vec<usize> = matching.pairs.iter().map(|&(a, b)| cache.decide(a, b)).collect();
        next.extend(matching.bye);
        if next.len() == 1 {
            return Ok((cache.verdict(next[0], None, false), solved));
        }
        next.sort_unstable();
        matching = plan.matching_over(&next)?;
        solved += 1;
    }
}
