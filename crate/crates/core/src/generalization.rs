//! Generalization-error estimates for the binary learners.
//!
//! Three estimators are provided:
//!
//! * [`cv_generalization_error`]: k-fold cross-validation misclassification rate.
//! * [`sv_bound`]: support-vector count over training-set size.
//! * [`margin_bound`]: inverse margin, min-max normalized across an ensemble.
//!
//! [`pearson_r`] measures how well an estimator tracks held-out risk.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{pair_subset_rows, stratified_kfold_labels, Dataset, TwoClassView};
use crate::error::{Error, Result};
use crate::kernel_svm::{BinaryClassifier, BinaryLearner, BinaryModel, SvmLearner};

/// Fallback estimate when cross-validation is undefined.
pub const UNINFORMATIVE_ESTIMATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Cv,
    SvBound,
    MarginBound,
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateKind::Cv => "cv",
            EstimateKind::SvBound => "sv_bound",
            EstimateKind::MarginBound => "margin_bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenErrorEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    /// Unordered class pair, smaller index first.
    pub pair: (usize, usize),
    /// Folds actually used (CV only; may be below the requested k).
    pub folds: Option<usize>,
    /// Set when the value is the pessimistic fallback rather than a measurement.
    pub uninformative: bool,
}

fn unordered(p: (usize, usize)) -> (usize, usize) {
    (p.0.min(p.1), p.0.max(p.1))
}

/// Sum of per-fold misclassification counts over the number of examples.
pub fn cv_error_from_counts(misclassified_per_fold: &[usize], total: usize) -> f64 {
    misclassified_per_fold.iter().sum::<usize>() as f64 / total as f64
}

/// k-fold cross-validation estimate of a learner's error on one class pair.
///
/// Folds are stratified under `seed`. When a class has fewer than `k`
/// examples, `k` drops to the smaller class size (never below 2). A class
/// with fewer than two examples yields the uninformative estimate 0.5.
pub fn cv_generalization_error<L: BinaryLearner>(
    learner: &L,
    view: &TwoClassView<'_>,
    k: usize,
    seed: u64,
) -> Result<GenErrorEstimate> {
    let pair = unordered(view.classes());
    let (pos, neg) = view.class_sizes();
    let smallest = pos.min(neg);
    if smallest < 2 {
        log::debug!("pair {pair:?}: class of size {smallest}, CV estimate undefined");
        return Ok(GenErrorEstimate {
            value: UNINFORMATIVE_ESTIMATE,
            kind: EstimateKind::Cv,
            pair,
            folds: None,
            uninformative: true,
        });
    }
    if k < 2 {
        return Err(Error::InvalidFoldCount { k, n: view.len() });
    }
    let k = k.min(smallest);
    let binary: Vec<usize> = view.targets().iter().map(|&t| usize::from(t < 0.0)).collect();
    let plan = stratified_kfold_labels(&binary, 2, k, seed)?;
    let mut errors = Vec::with_capacity(k);
    for fold in 0..k {
        let train = view.select(&plan.train_rows(fold));
        let model = learner.fit(&train)?;
        let wrong = plan
            .test_rows(fold)
            .into_iter()
            .filter(|&i| {
                let dv = model.decision_value(view.x(i));
                (dv >= 0.0) != (view.targets()[i] > 0.0)
            })
            .count();
        errors.push(wrong);
    }
    Ok(GenErrorEstimate {
        value: cv_error_from_counts(&errors, view.len()),
        kind: EstimateKind::Cv,
        pair,
        folds: Some(k),
        uninformative: false,
    })
}

/// Support-vector ratio `sv_count / train_count`.
pub fn sv_bound(model: &BinaryModel) -> GenErrorEstimate {
    GenErrorEstimate {
        value: model.sv_count as f64 / model.train_count as f64,
        kind: EstimateKind::SvBound,
        pair: unordered(model.classes),
        folds: None,
        uninformative: false,
    }
}

/// Min-max normalized inverse margins; all zeros when every margin is equal.
pub fn margin_bound(models: &[BinaryModel]) -> Result<Vec<GenErrorEstimate>> {
    let margins: Vec<f64> = models.iter().map(|m| m.margin).collect();
    let values = normalized_inverse_margins(&margins)?;
    Ok(models
        .iter()
        .zip(values)
        .map(|(m, value)| GenErrorEstimate {
            value,
            kind: EstimateKind::MarginBound,
            pair: unordered(m.classes),
            folds: None,
            uninformative: false,
        })
        .collect())
}

/// The normalization behind [`margin_bound`], on raw margins.
pub fn normalized_inverse_margins(margins: &[f64]) -> Result<Vec<f64>> {
    if margins.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            found: margins.len(),
        });
    }
    if let Some(&bad) = margins.iter().find(|&&d| d.is_nan() || d <= 0.0) {
        return Err(Error::NonPositiveMargin(bad));
    }
    let inv: Vec<f64> = margins.iter().map(|d| 1.0 / d).collect();
    let lo = inv.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(vec![0.0; inv.len()]);
    }
    Ok(inv.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

/// Pearson product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::TooFewValues {
            needed: 3,
            found: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks (1-based, ties share the mean rank).
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    pearson_r(&average_ranks(x), &average_ranks(y))
}

/// Writes `pair_a,pair_b,kind,value` rows.
pub fn write_estimates_csv<W: Write>(out: W, estimates: &[GenErrorEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair_a", "pair_b", "kind", "value"])?;
    for e in estimates {
        w.write_record([
            e.pair.0.to_string(),
            e.pair.1.to_string(),
            e.kind.to_string(),
            e.value.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

/// One binary problem's three estimates next to its measured held-out error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRow {
    pub label: String,
    pub pair: (usize, usize),
    pub cv: f64,
    pub sv_bound: f64,
    /// Raw margin of the model trained on all training rows.
    pub margin: f64,
    /// Filled in by [`EstimatorComparison::from_rows`].
    pub margin_bound: f64,
    pub held_out: f64,
}

/// Trains on `train`, measures error on `test`, and computes all estimates.
pub fn estimate_pair(
    learner: &SvmLearner,
    train: &TwoClassView<'_>,
    test: &TwoClassView<'_>,
    inner_k: usize,
    seed: u64,
    label: String,
) -> Result<EstimatorRow> {
    if test.is_empty() {
        return Err(Error::EmptySubset);
    }
    let model = learner.fit(train)?;
    let wrong = (0..test.len())
        .filter(|&i| (model.decision_value(test.x(i)) >= 0.0) != (test.targets()[i] > 0.0))
        .count();
    let cv = cv_generalization_error(learner, train, inner_k, seed)?;
    Ok(EstimatorRow {
        label,
        pair: unordered(train.classes()),
        cv: cv.value,
        sv_bound: sv_bound(&model).value,
        margin: model.margin,
        margin_bound: f64::NAN,
        held_out: wrong as f64 / test.len() as f64,
    })
}

/// Estimator rows for every class pair of `data`, training on `train_rows`
/// and measuring on `test_rows`.
pub fn compare_on_split(
    data: &Dataset,
    train_rows: &[usize],
    test_rows: &[usize],
    learner: &SvmLearner,
    inner_k: usize,
    seed: u64,
) -> Result<Vec<EstimatorRow>> {
    let n = data.n_classes();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    pairs
        .into_par_iter()
        .map(|(a, b)| {
            let train = pair_subset_rows(data, a, b, train_rows.iter().copied())?;
            let test = pair_subset_rows(data, a, b, test_rows.iter().copied())?;
            let label = format!("{}-{}", data.class_names()[a], data.class_names()[b]);
            estimate_pair(learner, &train, &test, inner_k, seed, label).map_err(|e| e.in_pair(a, b))
        })
        .collect()
}

/// How well each estimator tracks held-out error across many problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorComparison {
    pub rows: Vec<EstimatorRow>,
    pub r_cv: f64,
    pub r_sv_bound: f64,
    pub r_margin_bound: f64,
}

impl EstimatorComparison {
    /// Normalizes the margins across `rows` and correlates every estimator
    /// with the held-out error. Needs at least two rows.
    pub fn from_rows(mut rows: Vec<EstimatorRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewValues {
                needed: 2,
                found: rows.len(),
            });
        }
        let margins: Vec<f64> = rows.iter().map(|r| r.margin).collect();
        for (r, v) in rows.iter_mut().zip(normalized_inverse_margins(&margins)?) {
            r.margin_bound = v;
        }
        let col = |f: fn(&EstimatorRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        let held = col(|r| r.held_out);
        // a constant column carries no ranking information
        let r = |x: Vec<f64>| match pearson_r(&x, &held) {
            Err(Error::ZeroVariance) => Ok(0.0),
            other => other,
        };
        Ok(EstimatorComparison {
            r_cv: r(col(|r| r.cv))?,
            r_sv_bound: r(col(|r| r.sv_bound))?,
            r_margin_bound: r(col(|r| r.margin_bound))?,
            rows,
        })
    }

    /// Cross-validation correlates more strongly than both bounds.
    pub fn cv_leads(&self) -> bool {
        self.r_cv > self.r_sv_bound && self.r_cv > self.r_margin_bound
    }

    /// `label,pair_a,pair_b,cv,sv_bound,margin_bound,held_out` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "label",
            "pair_a",
            "pair_b",
            "cv",
            "sv_bound",
            "margin_bound",
            "held_out",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.pair.0.to_string(),
                r.pair.1.to_string(),
                format!("{:.6}", r.cv),
                format!("{:.6}", r.sv_bound),
                format!("{:.6}", r.margin_bound),
                format!("{:.6}", r.held_out),
            ])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })?;
        Ok(())
    }
}
