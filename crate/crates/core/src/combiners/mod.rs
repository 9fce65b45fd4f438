//! Multiclass combiners over a one-vs-one ensemble.
//!
//! Every combiner works against a [`PairDecider`], which answers "who wins
//! between classes `a` and `b`" for one test example. A trained
//! [`PairwiseEnsemble`] provides one per input vector; tests and simulations
//! use an [`OutcomeTable`] instead. Decisions go through a [`DecisionCache`]
//! so each pair is evaluated at most once per example.

mod dag;
mod elimination;
mod ensemble;
mod voting;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{min_weight_perfect_matching, Matching, MatchingProblem};

pub use dag::{adag, ddag, radag};
pub use elimination::{se, we};
pub use ensemble::{EnsembleInput, EstimatorConfig, PairwiseEnsemble, Prediction};
pub use voting::{dp_percent, max_wins, vcf, DEFAULT_THRESHOLD};

/// Number of unordered pairs over `n` classes.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of the unordered pair `{a, b}` in [`all_pairs`] order.
pub fn pair_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = (a.min(b), a.max(b));
    debug_assert!(a < b && b < n);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// All unordered pairs `(a, b)` with `a < b`, lexicographically.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// The per-example binary decision oracle combiners consult.
pub trait PairDecider {
    fn n_classes(&self) -> usize;

    /// Winner of the pair, which is always `a` or `b`.
    fn winner(&self, a: usize, b: usize) -> usize;
}

/// Explicit winners for every pair; the test and simulation oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTable {
    n: usize,
    winners: Vec<usize>,
}

impl OutcomeTable {
    /// `winners[pair_index(n, a, b)]` is the winner of `{a, b}`.
    pub fn new(n: usize, winners: Vec<usize>) -> Result<Self> {
        if winners.len() != pair_count(n) {
            return Err(Error::LengthMismatch(winners.len(), pair_count(n)));
        }
        for ((a, b), &w) in all_pairs(n).into_iter().zip(&winners) {
            if w != a && w != b {
                return Err(Error::InvalidPair(a, b));
            }
        }
        Ok(OutcomeTable { n, winners })
    }

    /// Table from a winner function.
    pub fn from_fn<F: FnMut(usize, usize) -> usize>(n: usize, mut f: F) -> Result<Self> {
        Self::new(n, all_pairs(n).into_iter().map(|(a, b)| f(a, b)).collect())
    }

    /// Table number `bits` of the `2^(pairs)` possible tables: bit `i` set
    /// means the larger class of pair `i` wins.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        let winners = all_pairs(n)
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| if bits >> i & 1 == 1 { b } else { a })
            .collect();
        OutcomeTable { n, winners }
    }

    /// Uniformly random table.
    pub fn random<R: rand::Rng>(n: usize, rng: &mut R) -> Self {
        let winners = all_pairs(n)
            .into_iter()
            .map(|(a, b)| if rng.random::<bool>() { a } else { b })
            .collect();
        OutcomeTable { n, winners }
    }

    /// Every pair involving `target` is won by `target`; others are random.
    pub fn undefeated<R: rand::Rng>(n: usize, target: usize, rng: &mut R) -> Self {
        let mut t = Self::random(n, rng);
        for other in (0..n).filter(|&c| c != target) {
            t.set(target, other, target);
        }
        t
    }

    pub fn set(&mut self, a: usize, b: usize, winner: usize) {
        assert!(winner == a || winner == b);
        self.winners[pair_index(self.n, a, b)] = winner;
    }
}

impl PairDecider for OutcomeTable {
    fn n_classes(&self) -> usize {
        self.n
    }

    fn winner(&self, a: usize, b: usize) -> usize {
        self.winners[pair_index(self.n, a, b)]
    }
}

impl<D: PairDecider + ?Sized> PairDecider for &D {
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn winner(&self, a: usize, b: usize) -> usize {
        (**self).winner(a, b)
    }
}

/// One binary decision applied by a combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Unordered pair, smaller class first.
    pub pair: (usize, usize),
    pub winner: usize,
}

impl TraceStep {
    pub fn loser(&self) -> usize {
        if self.winner == self.pair.0 {
            self.pair.1
        } else {
            self.pair.0
        }
    }
}

/// Per-example memo of pairwise winners.
///
/// `evaluations` counts distinct pairs actually computed; `trace` records
/// every application in order, cache hits included.
pub struct DecisionCache<D> {
    decider: D,
    n: usize,
    memo: Vec<Option<usize>>,
    evaluations: usize,
    trace: Vec<TraceStep>,
}

impl<D: PairDecider> DecisionCache<D> {
    pub fn new(decider: D) -> Self {
        let n = decider.n_classes();
        DecisionCache {
            decider,
            n,
            memo: vec![None; pair_count(n)],
            evaluations: 0,
            trace: Vec::new(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    /// Applies the classifier for `{a, b}` and records it in the trace.
    pub fn decide(&mut self, a: usize, b: usize) -> usize {
        let w = self.peek(a, b);
        self.trace.push(TraceStep {
            pair: (a.min(b), a.max(b)),
            winner: w,
        });
        w
    }

    /// Winner of `{a, b}` without adding a trace entry.
    fn peek(&mut self, a: usize, b: usize) -> usize {
        let i = pair_index(self.n, a, b);
        match self.memo[i] {
            Some(w) => w,
            None => {
                let w = self.decider.winner(a.min(b), a.max(b));
                debug_assert!(w == a || w == b);
                self.memo[i] = Some(w);
                self.evaluations += 1;
                w
            }
        }
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    fn verdict(&self, predicted: usize, votes: Option<Vec<u32>>, fallback: bool) -> Verdict {
        Verdict {
            predicted,
            evaluations: self.evaluations,
            trace: self.trace.clone(),
            votes,
            fallback,
        }
    }
}

/// A combiner's decision for one example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub predicted: usize,
    /// Distinct binary decisions computed.
    pub evaluations: usize,
    pub trace: Vec<TraceStep>,
    /// Per-class vote counts (voting combiners only).
    pub votes: Option<Vec<u32>>,
    /// Set when a restricted weak elimination ran out of classifiers and fell
    /// back to the vote tie-break.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

impl Verdict {
    fn trivial() -> Self {
        Verdict {
            predicted: 0,
            evaluations: 0,
            trace: Vec::new(),
            votes: None,
            fallback: false,
        }
    }
}

/// Writes one JSON object per verdict, one per line.
pub fn write_trace_jsonl<'v, W, I>(mut out: W, verdicts: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'v Verdict>,
{
    for v in verdicts {
        serde_json::to_writer(&mut out, v)?;
        out.write_all(b"\n").map_err(|e| Error::Io {
            path: "<trace>".into(),
            source: e,
        })?;
    }
    Ok(())
}

/// How DDAG and ADAG order the initial class list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    /// A uniformly random permutation drawn from the seed.
    SeededRandom(u64),
    /// A fixed permutation of `0..N`.
    Explicit(Vec<usize>),
}

impl OrderPolicy {
    pub fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            OrderPolicy::SeededRandom(seed) => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                Ok(order)
            }
            OrderPolicy::Explicit(order) => {
                validate_order(order, n)?;
                Ok(order.clone())
            }
        }
    }
}

pub(crate) fn validate_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidOrder(format!(
            "expected {n} classes, got {}",
            order.len()
        )));
    }
    for &c in order {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(Error::InvalidOrder(format!("{order:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// Mixes an experiment seed with an example index (splitmix64 finalizer).
pub fn example_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The seven combination strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinerKind {
    MaxWins,
    Ddag,
    Adag,
    Radag,
    Se,
    We,
    Vcf,
}

impl CombinerKind {
    pub const ALL: [CombinerKind; 7] = [
        CombinerKind::MaxWins,
        CombinerKind::Ddag,
        CombinerKind::Adag,
        CombinerKind::Radag,
        CombinerKind::Se,
        CombinerKind::We,
        CombinerKind::Vcf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CombinerKind::MaxWins => "maxwins",
            CombinerKind::Ddag => "ddag",
            CombinerKind::Adag => "adag",
            CombinerKind::Radag => "radag",
            CombinerKind::Se => "se",
            CombinerKind::We => "we",
            CombinerKind::Vcf => "vcf",
        }
    }

    /// Human label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            CombinerKind::MaxWins => "Max Wins",
            CombinerKind::Ddag => "DDAG",
            CombinerKind::Adag => "ADAG",
            CombinerKind::Radag => "RADAG",
            CombinerKind::Se => "SE",
            CombinerKind::We => "WE",
            CombinerKind::Vcf => "VCF",
        }
    }

    /// DDAG and ADAG depend on the initial class order.
    pub fn is_order_sensitive(self) -> bool {
        matches!(self, CombinerKind::Ddag | CombinerKind::Adag)
    }
}

impl fmt::Display for CombinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        CombinerKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Per-call combiner parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerParams {
    /// Seed for Max Wins / VCF vote tie-breaks.
    pub seed: u64,
    /// Initial order for DDAG and ADAG.
    pub order: OrderPolicy,
    /// VCF filter threshold in percent.
    pub threshold: f64,
}

impl Default for CombinerParams {
    fn default() -> Self {
        CombinerParams {
            seed: 0,
            order: OrderPolicy::SeededRandom(0),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl CombinerParams {
    /// Parameters for example `index` of an experiment seeded with `seed`.
    pub fn for_example(seed: u64, index: u64, threshold: f64) -> Self {
        let s = example_seed(seed, index);
        CombinerParams {
            seed: s,
            order: OrderPolicy::SeededRandom(s),
            threshold,
        }
    }
}

/// Everything a combiner needs besides the per-example decider: the class
/// count, per-pair generalization errors, the classifiers sorted by error,
/// and the top-level minimum-error pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePlan {
    n: usize,
    gen_errors: Vec<f64>,
    sorted_pairs: Vec<(usize, usize)>,
    top_matching: Option<Matching>,
}

impl EnsemblePlan {
    /// `gen_errors` is indexed like [`all_pairs`].
    pub fn new(n: usize, gen_errors: Vec<f64>) -> Result<Self> {
        if gen_errors.len() != pair_count(n) {
            return Err(Error::LengthMismatch(gen_errors.len(), pair_count(n)));
        }
        if let Some(bad) = gen_errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "generalization error {bad} is not a non-negative real"
            )));
        }
        let mut sorted_pairs = all_pairs(n);
        // stable sort keeps lexicographic order among equal errors
        sorted_pairs
            .sort_by(|p, q| gen_errors[pair_index(n, p.0, p.1)].total_cmp(&gen_errors[pair_index(n, q.0, q.1)]));
        let mut plan = EnsemblePlan {
            n,
            gen_errors,
            sorted_pairs,
            top_matching: None,
        };
        if n >= 2 {
            plan.top_matching = Some(plan.matching_over(&(0..n).collect::<Vec<_>>())?);
        }
        Ok(plan)
    }

    /// A plan whose errors are all equal: sorted order is lexicographic.
    pub fn uniform(n: usize) -> Self {
        Self::new(n, vec![0.0; pair_count(n)]).expect("valid uniform plan")
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn gen_error(&self, a: usize, b: usize) -> f64 {
        self.gen_errors[pair_index(self.n, a, b)]
    }

    pub fn gen_errors(&self) -> &[f64] {
        &self.gen_errors
    }

    pub fn sorted_pairs(&self) -> &[(usize, usize)] {
        &self.sorted_pairs
    }

    pub fn top_matching(&self) -> Option<&Matching> {
        self.top_matching.as_ref()
    }

    /// Minimum-error pairing of `candidates`.
    pub fn matching_over(&self, candidates: &[usize]) -> Result<Matching> {
        let p = MatchingProblem::new(candidates.to_vec(), |a, b| self.gen_error(a, b))?;
        min_weight_perfect_matching(&p)
    }

    /// Runs one combiner against `decider`.
    pub fn combine<D: PairDecider>(&self, decider: D, kind: CombinerKind, params: &CombinerParams) -> Result<Verdict> {
        if decider.n_classes() != self.n {
            return Err(Error::LengthMismatch(decider.n_classes(), self.n));
        }
        match kind {
            CombinerKind::MaxWins => Ok(max_wins(self, decider, params.seed)),
            CombinerKind::Ddag => ddag(self, decider, &params.order.resolve(self.n)?),
            CombinerKind::Adag => adag(self, decider, &params.order.resolve(self.n)?),
            CombinerKind::Radag => radag(self, decider),
            CombinerKind::Se => Ok(se(self, decider)),
            CombinerKind::We => Ok(we(self, &mut DecisionCache::new(decider), None)),
            CombinerKind::Vcf => vcf(self, decider, params.threshold, params.seed),
        }
    }
}
