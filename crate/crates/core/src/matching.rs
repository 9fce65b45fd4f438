//! Minimum-weight perfect matching on complete graphs of classes.
//!
//! The solver is Edmonds' primal-dual blossom method (the O(n³) variant after
//! Galil's survey and van Rantwijk's reference implementation), run on
//! `max_w − w` with maximum cardinality so that maximizing the transformed
//! weight over perfect matchings minimizes the original weight.
//!
//! Equal-weight optima are resolved towards the lexicographically smallest
//! pair list: pairs sorted, each pair sorted, compared element by element.
//! The solver reaches that matching by fixing partners greedily, smallest
//! node first, and re-solving the remainder to confirm the prefix still
//! extends to an optimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node id of the padding node added by [`pad_odd`]. Sorts after every class.
pub const DUMMY: usize = usize::MAX;

/// Two totals within this (relative to `max(1, |optimum|)`) count as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Largest problem the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// A complete graph on `nodes` with symmetric non-negative edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingProblem {
    nodes: Vec<usize>,
    weights: Vec<f64>,
    has_dummy: bool,
}

impl MatchingProblem {
    /// Builds a problem from a weight function over node ids.
    pub fn new<F>(nodes: Vec<usize>, mut weight: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let n = nodes.len();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let w = weight(nodes[i], nodes[j]);
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        Self::from_matrix(nodes, weights)
    }

    /// Builds a problem from a dense row-major `n×n` matrix indexed by
    /// position in `nodes`. The diagonal is ignored.
    pub fn from_matrix(nodes: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if weights.len() != n * n {
            return Err(Error::InvalidMatching(format!(
                "weight matrix has {} entries, expected {}",
                weights.len(),
                n * n
            )));
        }
        let mut seen = nodes.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMatching("duplicate node ids".into()));
        }
        if nodes.contains(&DUMMY) {
            return Err(Error::InvalidMatching("node id reserved for padding".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (weights[i * n + j], weights[j * n + i]);
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::InvalidMatching(format!(
                        "weight of ({}, {}) must be a non-negative real, got {a}",
                        nodes[i], nodes[j]
                    )));
                }
                if a != b {
                    return Err(Error::InvalidMatching(format!(
                        "asymmetric weight for ({}, {}): {a} vs {b}",
                        nodes[i], nodes[j]
                    )));
                }
            }
        }
        Ok(MatchingProblem {
            nodes,
            weights,
            has_dummy: false,
        })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn has_dummy(&self) -> bool {
        self.has_dummy
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weight between positions `i` and `j`.
    fn w(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }

    /// Weight between two node ids, if both are present.
    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        let i = self.nodes.iter().position(|&n| n == a)?;
        let j = self.nodes.iter().position(|&n| n == b)?;
        (i != j).then(|| self.w(i, j))
    }

    /// Positions sorted by node id.
    fn sorted_positions(&self) -> Vec<usize> {
        let mut pos: Vec<usize> = (0..self.nodes.len()).collect();
        pos.sort_by_key(|&p| self.nodes[p]);
        pos
    }

    fn to_matching(&self, pos_pairs: &[(usize, usize)]) -> Matching {
        let mut pairs = Vec::new();
        let mut bye = None;
        let mut total = 0.0;
        for &(i, j) in pos_pairs {
            let (a, b) = (self.nodes[i], self.nodes[j]);
            let (a, b) = (a.min(b), a.max(b));
            if b == DUMMY {
                bye = Some(a);
            } else {
                pairs.push((a, b));
                total += self.w(i, j);
            }
        }
        pairs.sort_unstable();
        Matching {
            pairs,
            bye,
            total_weight: total,
        }
    }
}

/// Disjoint pairs covering every node, plus at most one unpaired node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub bye: Option<usize>,
    pub total_weight: f64,
}

/// Adds a zero-weight padding node so an odd problem becomes even.
pub fn pad_odd(p: &MatchingProblem) -> Result<MatchingProblem> {
    let n = p.nodes.len();
    if n.is_multiple_of(2) {
        return Err(Error::InvalidMatching(format!("pad_odd called with {n} nodes")));
    }
    let m = n + 1;
    let mut weights = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            weights[i * m + j] = p.w(i, j);
        }
    }
    let mut nodes = p.nodes.clone();
    nodes.push(DUMMY);
    Ok(MatchingProblem {
        nodes,
        weights,
        has_dummy: true,
    })
}

fn padded(p: &MatchingProblem) -> Result<std::borrow::Cow<'_, MatchingProblem>> {
    if p.nodes.len() % 2 == 1 {
        Ok(std::borrow::Cow::Owned(pad_odd(p)?))
    } else {
        Ok(std::borrow::Cow::Borrowed(p))
    }
}

fn tolerance(optimum: f64) -> f64 {
    TIE_TOLERANCE * optimum.abs().max(1.0)
}

/// Exact minimum-weight perfect matching with lexicographic tie-breaking.
///
/// Odd inputs are padded with [`pad_odd`]; the padding partner becomes the bye.
pub fn min_weight_perfect_matching(p: &MatchingProblem) -> Result<Matching> {
    if p.nodes.len() < 2 {
        return Err(Error::InvalidMatching(format!(
            "need at least 2 nodes, got {}",
            p.nodes.len()
        )));
    }
    let q = padded(p)?;
    let order = q.sorted_positions();
    let (mut current, opt) = solve_subset(&q, &order);
    let tol = tolerance(opt);

    let mut remaining = order;
    let mut prefix = 0.0;
    let mut fixed = Vec::with_capacity(remaining.len() / 2);
    while !remaining.is_empty() {
        let u = remaining[0];
        let partner_in_current = current
            .iter()
            .find_map(|&(a, b)| {
                if a == u {
                    Some(b)
                } else if b == u {
                    Some(a)
                } else {
                    None
                }
            })
            .expect("perfect matching covers every node");
        let mut choice = None;
        // Partners ordered before the known-optimal one may also reach the optimum.
        for &v in remaining[1..]
            .iter()
            .take_while(|&&v| q.nodes[v] < q.nodes[partner_in_current])
        {
            let rest: Vec<usize> = remaining.iter().copied().filter(|&t| t != u && t != v).collect();
            let (sub, sub_total) = solve_subset(&q, &rest);
            if prefix + q.w(u, v) + sub_total <= opt + tol {
                choice = Some((v, sub));
                break;
            }
        }
        let (v, sub) = match choice {
            Some(c) => c,
            None => {
                let v = partner_in_current;
                let sub = current.iter().copied().filter(|&(a, b)| a != u && b != u).collect();
                (v, sub)
            }
        };
        prefix += q.w(u, v);
        fixed.push((u, v));
        remaining.retain(|&t| t != u && t != v);
        current = sub;
    }
    Ok(q.to_matching(&fixed))
}

/// Exhaustive oracle with the same tie rule, for at most 12 nodes.
pub fn brute_force_matching(p: &MatchingProblem) -> Result<Matching> {
    let n = p.nodes.len();
    if n < 2 {
        return Err(Error::InvalidMatching(format!("need at least 2 nodes, got {n}")));
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::InvalidMatching(format!(
            "brute force limited to {BRUTE_FORCE_LIMIT} nodes, got {n}"
        )));
    }
    let q = padded(p)?;
    let order = q.sorted_positions();

    type Visitor<'a> = dyn FnMut(&[(usize, usize)], f64) + 'a;

    // Enumeration pairs the smallest free node with each partner in
    // ascending order, which visits matchings in lexicographic order.
    fn enumerate(
        q: &MatchingProblem,
        free: &mut Vec<usize>,
        stack: &mut Vec<(usize, usize)>,
        visit: &mut Visitor<'_>,
    ) {
        if free.is_empty() {
            let total = stack.iter().map(|&(a, b)| q.w(a, b)).sum();
            visit(stack, total);
            return;
        }
        let u = free.remove(0);
        for k in 0..free.len() {
            let v = free.remove(k);
            stack.push((u, v));
            enumerate(q, free, stack, visit);
            stack.pop();
            free.insert(k, v);
        }
        free.insert(0, u);
    }

    let mut best = f64::INFINITY;
    enumerate(&q, &mut order.clone(), &mut Vec::new(), &mut |_, t| best = best.min(t));
    let tol = tolerance(best);
    let mut chosen: Option<Vec<(usize, usize)>> = None;
    enumerate(&q, &mut order.clone(), &mut Vec::new(), &mut |m, t| {
        if chosen.is_none() && t <= best + tol {
            chosen = Some(m.to_vec());
        }
    });
    Ok(q.to_matching(&chosen.expect("at least one perfect matching")))
}

/// Optimal perfect matching over the given (even-sized) set of positions,
/// returned as position pairs along with its total weight.
fn solve_subset(q: &MatchingProblem, positions: &[usize]) -> (Vec<(usize, usize)>, f64) {
    let n = positions.len();
    debug_assert!(n.is_multiple_of(2));
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    if n == 2 {
        let (a, b) = (positions[0], positions[1]);
        return (vec![(a, b)], q.w(a, b));
    }
    let mut max_w = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            max_w = max_w.max(q.w(positions[i], positions[j]));
        }
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, max_w - q.w(positions[i], positions[j]) + 1.0));
        }
    }
    let mate = Blossom::new(n, &edges).max_weight_matching();
    let mut pairs = Vec::with_capacity(n / 2);
    let mut total = 0.0;
    for (i, &j) in mate.iter().enumerate() {
        assert!(
            j != NONE,
            "maximum-cardinality matching on a complete even graph is perfect"
        );
        if i < j {
            pairs.push((positions[i], positions[j]));
            total += q.w(positions[i], positions[j]);
        }
    }
    (pairs, total)
}

const NONE: usize = usize::MAX;

/// Primal-dual maximum-weight, maximum-cardinality matching.
///
/// Vertices are `0..n`; non-trivial blossoms are numbered `n..2n`. Edge `k`
/// has endpoints `2k` and `2k + 1`, so `p ^ 1` is the other end of endpoint
/// `p`. Labels: 0 free, 1 S (outer), 2 T (inner); bit 4 marks vertices on
/// the path during [`Blossom::scan_blossom`].
struct Blossom<'e> {
    n: usize,
    edges: &'e [(usize, usize, f64)],
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<f64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

impl<'e> Blossom<'e> {
    fn new(n: usize, edges: &'e [(usize, usize, f64)]) -> Self {
        let maxweight = edges.iter().map(|e| e.2).fold(0.0f64, f64::max);
        let mut neighbend = vec![Vec::new(); n];
        let mut endpoint = Vec::with_capacity(2 * edges.len());
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut blossombase: Vec<usize> = (0..n).collect();
        blossombase.extend(std::iter::repeat_n(NONE, n));
        let mut dualvar = vec![maxweight; n];
        dualvar.extend(std::iter::repeat_n(0.0, n));
        Blossom {
            n,
            edges,
            endpoint,
            neighbend,
            mate: vec![NONE; n],
            label: vec![0; 2 * n],
            labelend: vec![NONE; 2 * n],
            inblossom: (0..n).collect(),
            blossomparent: vec![NONE; 2 * n],
            blossomchilds: vec![Vec::new(); 2 * n],
            blossombase,
            blossomendps: vec![Vec::new(); 2 * n],
            bestedge: vec![NONE; 2 * n],
            blossombestedges: vec![None; 2 * n],
            unusedblossoms: (n..2 * n).collect(),
            dualvar,
            allowedge: vec![false; edges.len()],
            queue: Vec::new(),
        }
    }

    fn slack(&self, k: usize) -> f64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2.0 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.n {
                out.push(t);
            } else {
                stack.extend(self.blossomchilds[t].iter().rev());
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let leaves = self.leaves(b);
            self.queue.extend(leaves);
        } else if t == 2 {
            let base = self.blossombase[b];
            let mb = self.mate[base];
            debug_assert!(mb != NONE);
            self.assign_label(self.endpoint[mb], 1, mb ^ 1);
        }
    }

    /// Traces back from `v` and `w` to find a new blossom base, or `NONE`
    /// when the two trees are distinct (an augmenting path exists).
    fn scan_blossom(&mut self, mut v: usize, mut w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            debug_assert_eq!(self.label[b], 1);
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                debug_assert_eq!(self.label[b], 2);
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("blossom slot available");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            path.push(bv);
            endps.push(self.labelend[bv]);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            path.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        debug_assert_eq!(self.label[bb], 1);
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0.0;
        self.blossomchilds[b] = path.clone();
        self.blossomendps[b] = endps;
        for leaf in self.leaves(b) {
            if self.label[self.inblossom[leaf]] == 2 {
                self.queue.push(leaf);
            }
            self.inblossom[leaf] = b;
        }

        let mut bestedgeto = vec![NONE; 2 * self.n];
        for &sub in &path {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[sub].take() {
                Some(list) => vec![list],
                None => self
                    .leaves(sub)
                    .into_iter()
                    .map(|leaf| self.neighbend[leaf].iter().map(|p| p / 2).collect())
                    .collect(),
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.bestedge[sub] = NONE;
        }
        let list: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        let mut best = NONE;
        for &k in &list {
            if best == NONE || self.slack(k) < self.slack(best) {
                best = k;
            }
        }
        self.blossombestedges[b] = Some(list);
        self.bestedge[b] = best;
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = NONE;
            if s < self.n {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0.0 {
                self.expand_blossom(s, endstage);
            } else {
                for leaf in self.leaves(s) {
                    self.inblossom[leaf] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            // Relabel sub-blossoms from the entry child around to the base.
            let endps = self.blossomendps[b].clone();
            let len = childs.len() as isize;
            let at = |v: &[usize], j: isize| v[j.rem_euclid(len) as usize];
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = childs.iter().position(|&c| c == entrychild).expect("entry child") as isize;
            let (jstep, trick): (isize, usize) = if j & 1 == 1 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            while j != 0 {
                let e = self.endpoint[p ^ 1];
                self.label[e] = 0;
                let q = at(&endps, j - trick as isize) ^ trick ^ 1;
                self.label[self.endpoint[q]] = 0;
                self.assign_label(e, 2, p);
                self.allowedge[at(&endps, j - trick as isize) / 2] = true;
                j += jstep;
                p = at(&endps, j - trick as isize) ^ trick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = at(&childs, j);
            let e = self.endpoint[p ^ 1];
            self.label[e] = 2;
            self.label[bv] = 2;
            self.labelend[e] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while at(&childs, j) != entrychild {
                let bv = at(&childs, j);
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                if let Some(v) = self.leaves(bv).into_iter().find(|&v| self.label[v] != 0) {
                    debug_assert_eq!(self.label[v], 2);
                    self.label[v] = 0;
                    let mb = self.mate[self.blossombase[bv]];
                    self.label[self.endpoint[mb]] = 0;
                    self.assign_label(v, 2, self.labelend[v]);
                }
                j += jstep;
            }
        }
        self.label[b] = 0;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    /// Swaps matched and unmatched edges along the even path from `v` to the
    /// base of blossom `b`, then rotates `b` so `v` becomes its base.
    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.n {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len() as isize;
        let i = self.blossomchilds[b].iter().position(|&c| c == t).expect("child") as isize;
        let mut j = i;
        let (jstep, trick): (isize, usize) = if i & 1 == 1 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][j.rem_euclid(len) as usize];
            let p = self.blossomendps[b][(j - trick as isize).rem_euclid(len) as usize] ^ trick;
            if t >= self.n {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.blossomchilds[b][j.rem_euclid(len) as usize];
            if t >= self.n {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        let i = i as usize;
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], 1);
                if bs >= self.n {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], 2);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                if bt >= self.n {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    /// Returns `mate[v]`, the vertex matched to `v` (or `NONE`).
    fn max_weight_matching(mut self) -> Vec<usize> {
        let n = self.n;
        if self.edges.is_empty() {
            return vec![NONE; n];
        }
        for _stage in 0..n {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|e| *e = NONE);
            for b in n..2 * n {
                self.blossombestedges[b] = None;
            }
            self.allowedge.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..n {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }

            let mut augmented = false;
            loop {
                while let Some(v) = self.queue.pop() {
                    debug_assert_eq!(self.label[self.inblossom[v]], 1);
                    for idx in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0.0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0.0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                    if augmented {
                        break;
                    }
                }
                if augmented {
                    break;
                }

                // No augmenting path with the current duals: pick the
                // largest dual step that keeps every slack non-negative.
                let mut deltatype = 0u8;
                let mut delta = 0.0;
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                for v in 0..n {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * n {
                    if self.blossomparent[b] == NONE && self.label[b] == 1 && self.bestedge[b] != NONE {
                        let d = self.slack(self.bestedge[b]) / 2.0;
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && (deltatype == 0 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == 0 {
                    // No further improvement possible; the matching is
                    // maximum-cardinality. Final dual step for optimality.
                    deltatype = 1;
                    delta = self.dualvar[..n].iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
                }

                for v in 0..n {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }

                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        debug_assert_eq!(self.label[self.inblossom[i]], 1);
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        debug_assert_eq!(self.label[self.inblossom[i]], 1);
                        self.queue.push(i);
                    }
                    _ => self.expand_blossom(deltablossom, false),
                }
            }

            if !augmented {
                break;
            }
            for b in n..2 * n {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == 1
                    && self.dualvar[b] == 0.0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
        if log::log_enabled!(log::Level::Trace) {
            let blossoms: Vec<(usize, f64)> = (n..2 * n)
                .filter(|&b| self.blossombase[b] != NONE)
                .map(|b| (self.blossombase[b], self.dualvar[b]))
                .collect();
            log::trace!(
                "vertex duals {:?}; blossoms (base, dual) {:?}",
                &self.dualvar[..n],
                blossoms
            );
        }
        (0..n)
            .map(|v| {
                if self.mate[v] == NONE {
                    NONE
                } else {
                    self.endpoint[self.mate[v]]
                }
            })
            .collect()
    }
}
