//! Outer cross-validation harness and its reports.
//!
//! [`run_experiment`] splits a dataset into stratified outer folds and, for
//! every kernel and fold, fits scaling and the pairwise ensemble on the
//! training rows only, then classifies the held-out rows with every
//! requested combiner. Order-sensitive combiners (DDAG, ADAG) are scored by
//! their accuracy averaged over class orders.

mod orders;
mod report;
mod risk;
mod stats;

use std::collections::BTreeSet;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combiners::{
    all_pairs, CombinerKind, CombinerParams, EstimatorConfig, OutcomeTable, PairDecider, PairwiseEnsemble,
};
use crate::dataset::{fit_scaling, stratified_kfold, Dataset, TwoClassView};
use crate::error::{Error, Result};
use crate::kernel_svm::{BinaryClassifier, BinaryLearner, KernelSpec, SvmLearner, TrainConfig};

pub use orders::{
    all_permutations, canonical_pairings, evaluation_orders, order_average, pairing_count, OrderAverage,
    DEFAULT_ORDER_SAMPLE, EXHAUSTIVE_ORDER_LIMIT,
};
pub use report::{
    comparisons, count_report, write_accuracy_csv, write_accuracy_text, write_timing_csv, write_ttest_csv, Comparison,
    CountGroup, CountReport, CountRow,
};
pub use risk::{competition_rank, risk_analysis, RiskReport, VoteRecord, DP_BUCKETS};
pub use stats::{paired_t_test, t_critical, TTestReport, CONFIDENCE_LEVELS};

/// What to run: kernels, combiners, folds, and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kernels: Vec<KernelSpec>,
    pub methods: Vec<CombinerKind>,
    pub outer_k: usize,
    /// Seed of the outer fold assignment.
    pub fold_seed: u64,
    /// Seed for combiner tie-breaks and class orders.
    pub seed: u64,
    pub estimator: EstimatorConfig,
    pub train: TrainConfig,
    pub order_sample_size: usize,
    pub threshold: f64,
}

impl ExperimentSpec {
    pub fn new(kernels: Vec<KernelSpec>, methods: Vec<CombinerKind>) -> Self {
        ExperimentSpec {
            kernels,
            methods,
            outer_k: 5,
            fold_seed: 0,
            seed: 0,
            estimator: EstimatorConfig::default(),
            train: TrainConfig::default(),
            order_sample_size: DEFAULT_ORDER_SAMPLE,
            threshold: crate::combiners::DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(Error::InvalidConfig("no kernels given".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods given".into()));
        }
        if self.outer_k < 2 {
            return Err(Error::InvalidConfig(format!(
                "outer_k must be at least 2, got {}",
                self.outer_k
            )));
        }
        if self.order_sample_size == 0 {
            return Err(Error::InvalidConfig("order_sample_size must be positive".into()));
        }
        if !(0.0..=100.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, 100], got {}",
                self.threshold
            )));
        }
        for k in &self.kernels {
            k.validate()?;
        }
        self.train.validate()
    }
}

/// One combiner's results on one kernel (or a kernel family average).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: CombinerKind,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Distinct binary decisions per classified example.
    pub mean_evaluations: f64,
    /// Wall time per predict call, nanoseconds. Not reproducible.
    pub mean_time_ns: f64,
    pub sd_time_ns: f64,
    /// Orders averaged over per example (order-sensitive combiners).
    pub orders: Option<usize>,
}

/// Results for one kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub kernel: KernelSpec,
    pub methods: Vec<MethodResult>,
    /// Full-vote tallies of every validation example, in fold order.
    pub votes: Vec<VoteRecord>,
    /// Pairwise models that hit the solver's iteration budget.
    pub unconverged: usize,
}

/// Rows touched while preparing one outer fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub kernel: KernelSpec,
    pub fold: usize,
    pub scaling_rows: Vec<usize>,
    /// Every row seen by any fit, inner cross-validation included.
    pub fitted_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
}

impl FoldAudit {
    /// No validation row was used for scaling or fitting.
    pub fn is_clean(&self) -> bool {
        let val: BTreeSet<usize> = self.validation_rows.iter().copied().collect();
        !self
            .scaling_rows
            .iter()
            .chain(&self.fitted_rows)
            .any(|r| val.contains(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub n_classes: usize,
    pub n_examples: usize,
    pub outer_k: usize,
    pub methods: Vec<CombinerKind>,
    pub cells: Vec<CellResult>,
    pub audit: Vec<FoldAudit>,
}

impl ExperimentResult {
    pub fn cell(&self, kernel: &KernelSpec) -> Option<&CellResult> {
        self.cells.iter().find(|c| &c.kernel == kernel)
    }

    pub fn result(&self, kernel: &KernelSpec, method: CombinerKind) -> Option<&MethodResult> {
        self.cell(kernel)?.methods.iter().find(|m| m.method == method)
    }

    /// Kernel families present, in first-appearance order.
    pub fn families(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.kernel.family()) {
                out.push(c.kernel.family());
            }
        }
        out
    }

    /// Per-fold accuracy averaged over every kernel of `family`; other
    /// fields are averaged likewise.
    pub fn family_summary(&self, family: &str) -> Vec<MethodResult> {
        let cells: Vec<&CellResult> = self.cells.iter().filter(|c| c.kernel.family() == family).collect();
        if cells.is_empty() {
            return Vec::new();
        }
        let m = cells.len() as f64;
        self.methods
            .iter()
            .enumerate()
            .map(|(i, &method)| {
                let rs: Vec<&MethodResult> = cells.iter().map(|c| &c.methods[i]).collect();
                let fold_accuracy: Vec<f64> = (0..self.outer_k)
                    .map(|f| rs.iter().map(|r| r.fold_accuracy[f]).sum::<f64>() / m)
                    .collect();
                let avg = |g: fn(&MethodResult) -> f64| rs.iter().map(|r| g(r)).sum::<f64>() / m;
                MethodResult {
                    method,
                    mean_accuracy: mean(&fold_accuracy),
                    fold_accuracy,
                    mean_evaluations: avg(|r| r.mean_evaluations),
                    mean_time_ns: avg(|r| r.mean_time_ns),
                    sd_time_ns: avg(|r| r.sd_time_ns),
                    orders: rs[0].orders,
                }
            })
            .collect()
    }

    /// All audits clean.
    pub fn leakage_free(&self) -> bool {
        self.audit.iter().all(FoldAudit::is_clean)
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Wraps a learner and records every training row it is shown.
struct Recording<'l, L> {
    inner: &'l L,
    seen: Mutex<BTreeSet<usize>>,
}

impl<L: BinaryLearner> BinaryLearner for Recording<'_, L> {
    type Model = L::Model;

    fn fit(&self, view: &TwoClassView<'_>) -> Result<Self::Model> {
        self.seen
            .lock()
            .expect("audit lock")
            .extend(view.rows().iter().copied());
        self.inner.fit(view)
    }
}

/// Runs the experiment with the built-in SVM learner.
pub fn run_experiment(data: &Dataset, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let train = spec.train.clone();
    run_experiment_with(data, spec, move |k| SvmLearner::new(*k, train.clone()))
}

/// Runs the experiment with learners from `make_learner`.
pub fn run_experiment_with<L, F>(data: &Dataset, spec: &ExperimentSpec, make_learner: F) -> Result<ExperimentResult>
where
    L: BinaryLearner,
    F: Fn(&KernelSpec) -> L + Sync,
{
    spec.validate()?;
    let plan = stratified_kfold(data, spec.outer_k, spec.fold_seed)?;
    let k = spec.outer_k;
    let units: Vec<(usize, usize)> = (0..spec.kernels.len())
        .flat_map(|c| (0..k).map(move |f| (c, f)))
        .collect();
    let outcomes: Vec<FoldOutcome> = units
        .into_par_iter()
        .map(|(c, fold)| {
            let kernel = &spec.kernels[c];
            let learner = make_learner(kernel);
            run_fold(
                data,
                spec,
                kernel,
                &learner,
                plan.train_rows(fold),
                plan.test_rows(fold),
                fold,
            )
            .map_err(|e| e.in_fold(fold))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut audit = Vec::new();
    for (c, chunk) in outcomes.chunks(k).enumerate() {
        let mut methods = Vec::new();
        for (i, &method) in spec.methods.iter().enumerate() {
            let fold_accuracy: Vec<f64> = chunk.iter().map(|o| o.methods[i].accuracy).collect();
            let examples: usize = chunk.iter().map(|o| o.examples).sum();
            let evaluations: usize = chunk.iter().map(|o| o.methods[i].evaluations).sum();
            let times: Vec<f64> = chunk
                .iter()
                .flat_map(|o| o.methods[i].times_ns.iter().copied())
                .collect();
            let mt = mean(&times);
            let sd = if times.len() > 1 {
                (times.iter().map(|t| (t - mt).powi(2)).sum::<f64>() / (times.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            methods.push(MethodResult {
                method,
                mean_accuracy: mean(&fold_accuracy),
                fold_accuracy,
                mean_evaluations: evaluations as f64 / examples as f64,
                mean_time_ns: mt,
                sd_time_ns: sd,
                orders: chunk[0].methods[i].orders,
            });
        }
        let mut votes = Vec::new();
        let mut unconverged = 0;
        for o in chunk {
            votes.extend(o.votes.iter().cloned());
            unconverged += o.unconverged;
            audit.push(o.audit.clone());
        }
        cells.push(CellResult {
            kernel: spec.kernels[c],
            methods,
            votes,
            unconverged,
        });
    }
    Ok(ExperimentResult {
        n_classes: data.n_classes(),
        n_examples: data.len(),
        outer_k: k,
        methods: spec.methods.clone(),
        cells,
        audit,
    })
}

struct MethodFold {
    accuracy: f64,
    evaluations: usize,
    times_ns: Vec<f64>,
    orders: Option<usize>,
}

struct FoldOutcome {
    methods: Vec<MethodFold>,
    examples: usize,
    votes: Vec<VoteRecord>,
    unconverged: usize,
    audit: FoldAudit,
}

fn run_fold<L: BinaryLearner>(
    data: &Dataset,
    spec: &ExperimentSpec,
    kernel: &KernelSpec,
    learner: &L,
    train_rows: Vec<usize>,
    test_rows: Vec<usize>,
    fold: usize,
) -> Result<FoldOutcome> {
    let scaling = fit_scaling(data, &train_rows)?;
    let scaled = scaling.apply(data);
    let recorder = Recording {
        inner: learner,
        seen: Mutex::new(BTreeSet::new()),
    };
    let ensemble = PairwiseEnsemble::train(&scaled, &train_rows, &recorder, &spec.estimator)?;
    let n = ensemble.n_classes();
    let unconverged = ensemble.models().iter().filter(|m| !m.converged()).count();

    // every pairwise decision of every validation example, computed once
    let tables: Vec<(OutcomeTable, usize)> = test_rows
        .iter()
        .map(|&r| {
            let input = ensemble.input(scaled.row(r))?;
            let t = OutcomeTable::from_fn(n, |a, b| input.winner(a, b))?;
            Ok((t, scaled.label(r)))
        })
        .collect::<Result<_>>()?;
    let votes = tables
        .iter()
        .map(|(t, truth)| {
            let mut v = vec![0u32; n];
            for (a, b) in all_pairs(n) {
                v[t.winner(a, b)] += 1;
            }
            VoteRecord {
                votes: v,
                truth: *truth,
            }
        })
        .collect();

    let mut methods = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let mut correct = 0usize;
        let mut evaluations = 0usize;
        let mut times_ns = Vec::with_capacity(test_rows.len());
        for &r in &test_rows {
            let params = CombinerParams::for_example(spec.seed, r as u64, spec.threshold);
            let p = ensemble.predict(scaled.row(r), method, &params)?;
            correct += usize::from(p.verdict.predicted == scaled.label(r));
            evaluations += p.verdict.evaluations;
            times_ns.push(p.elapsed.as_nanos() as f64);
        }
        let (accuracy, orders) = if method.is_order_sensitive() {
            let avg = order_average(ensemble.plan(), &tables, method, spec.order_sample_size, spec.seed)?;
            (avg.mean_accuracy, Some(avg.orders))
        } else {
            (correct as f64 / test_rows.len() as f64, None)
        };
        methods.push(MethodFold {
            accuracy,
            evaluations,
            times_ns,
            orders,
        });
    }

    let fitted_rows = recorder.seen.into_inner().expect("audit lock").into_iter().collect();
    Ok(FoldOutcome {
        methods,
        examples: test_rows.len(),
        votes,
        unconverged,
        audit: FoldAudit {
            kernel: *kernel,
            fold,
            scaling_rows: train_rows,
            fitted_rows,
            validation_rows: test_rows,
        },
    })
}
