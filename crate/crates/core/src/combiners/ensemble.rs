use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    all_pairs, example_seed, pair_count, pair_index, CombinerKind, CombinerParams, EnsemblePlan, PairDecider, Verdict,
};
use crate::dataset::{pair_subset_rows, Dataset};
use crate::error::{Error, Result};
use crate::generalization::{cv_generalization_error, margin_bound, sv_bound, EstimateKind, GenErrorEstimate};
use crate::kernel_svm::{BinaryClassifier, BinaryLearner, BinaryModel, SvmLearner};

/// How pairwise generalization errors are estimated during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimateKind,
    /// Inner cross-validation folds (CV only).
    pub inner_k: usize,
    /// Seed for the inner folds, independent of any outer split.
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: EstimateKind::Cv,
            inner_k: 5,
            seed: 0x5eed,
        }
    }
}

/// One binary model per unordered class pair plus the combiner plan built
/// from their generalization errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseEnsemble<M> {
    plan: EnsemblePlan,
    models: Vec<M>,
    estimates: Vec<GenErrorEstimate>,
    n_features: usize,
}

/// A combiner verdict together with the wall time of the call.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub verdict: Verdict,
    pub elapsed: Duration,
}

/// The ensemble's decisions on one input vector.
pub struct EnsembleInput<'a, M> {
    ensemble: &'a PairwiseEnsemble<M>,
    x: &'a [f64],
}

impl<M: BinaryClassifier> PairDecider for EnsembleInput<'_, M> {
    fn n_classes(&self) -> usize {
        self.ensemble.n_classes()
    }

    fn winner(&self, a: usize, b: usize) -> usize {
        self.ensemble.models[pair_index(self.ensemble.n_classes(), a, b)].winner(self.x)
    }
}

impl<M: BinaryClassifier> PairwiseEnsemble<M> {
    /// Assembles an ensemble; `models` and `estimates` follow [`all_pairs`] order.
    pub fn from_parts(n: usize, n_features: usize, models: Vec<M>, estimates: Vec<GenErrorEstimate>) -> Result<Self> {
        if models.len() != pair_count(n) {
            return Err(Error::LengthMismatch(models.len(), pair_count(n)));
        }
        if estimates.len() != models.len() {
            return Err(Error::LengthMismatch(estimates.len(), models.len()));
        }
        for (((a, b), m), e) in all_pairs(n).into_iter().zip(&models).zip(&estimates) {
            let (p, q) = m.classes();
            if (p.min(q), p.max(q)) != (a, b) || e.pair != (a, b) {
                return Err(Error::InvalidPair(p, q));
            }
        }
        let plan = EnsemblePlan::new(n, estimates.iter().map(|e| e.value).collect())?;
        Ok(PairwiseEnsemble {
            plan,
            models,
            estimates,
            n_features,
        })
    }

    /// Trains every pairwise model on `rows` of `data`, in parallel, and
    /// estimates each one's error by inner cross-validation on the same rows.
    pub fn train<L>(data: &Dataset, rows: &[usize], learner: &L, est: &EstimatorConfig) -> Result<Self>
    where
        L: BinaryLearner<Model = M>,
    {
        if est.kind != EstimateKind::Cv {
            return Err(Error::InvalidConfig(format!(
                "{} estimates need SVM models; use PairwiseEnsemble::train_svm",
                est.kind
            )));
        }
        let n = data.n_classes();
        let fitted: Vec<(M, GenErrorEstimate)> = all_pairs(n)
            .into_par_iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let fit = || -> Result<_> {
                    let view = pair_subset_rows(data, a, b, rows.iter().copied())?;
                    let model = learner.fit(&view)?;
                    let cv = cv_generalization_error(learner, &view, est.inner_k, example_seed(est.seed, i as u64))?;
                    Ok((model, cv))
                };
                fit().map_err(|e| e.in_pair(a, b))
            })
            .collect::<Result<_>>()?;
        let (models, estimates) = fitted.into_iter().unzip();
        Self::from_parts(n, data.n_features(), models, estimates)
    }

    pub fn plan(&self) -> &EnsemblePlan {
        &self.plan
    }

    pub fn n_classes(&self) -> usize {
        self.plan.n_classes()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn models(&self) -> &[M] {
        &self.models
    }

    pub fn model(&self, a: usize, b: usize) -> &M {
        &self.models[pair_index(self.n_classes(), a, b)]
    }

    pub fn estimates(&self) -> &[GenErrorEstimate] {
        &self.estimates
    }

    /// The decider for input `x`.
    pub fn input<'a>(&'a self, x: &'a [f64]) -> Result<EnsembleInput<'a, M>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(EnsembleInput { ensemble: self, x })
    }

    /// Classifies `x` with one combiner, timing the call.
    pub fn predict(&self, x: &[f64], kind: CombinerKind, params: &CombinerParams) -> Result<Prediction> {
        let input = self.input(x)?;
        let start = Instant::now();
        let verdict = self.plan.combine(input, kind, params)?;
        Ok(Prediction {
            verdict,
            elapsed: start.elapsed(),
        })
    }

    /// Replaces the estimates (and so the sorted order and matchings).
    pub fn with_estimates(self, estimates: Vec<GenErrorEstimate>) -> Result<Self> {
        Self::from_parts(self.n_classes(), self.n_features, self.models, estimates)
    }
}

impl PairwiseEnsemble<BinaryModel> {
    /// Like [`PairwiseEnsemble::train`], with any estimator kind.
    pub fn train_svm(data: &Dataset, rows: &[usize], learner: &SvmLearner, est: &EstimatorConfig) -> Result<Self> {
        if est.kind == EstimateKind::Cv {
            return Self::train(data, rows, learner, est);
        }
        let n = data.n_classes();
        let models: Vec<BinaryModel> = all_pairs(n)
            .into_par_iter()
            .map(|(a, b)| {
                pair_subset_rows(data, a, b, rows.iter().copied())
                    .and_then(|view| learner.fit(&view))
                    .map_err(|e| e.in_pair(a, b))
            })
            .collect::<Result<_>>()?;
        let estimates = bound_estimates(&models, est.kind)?;
        Self::from_parts(n, data.n_features(), models, estimates)
    }

    /// Recomputes the estimates with a bound estimator.
    pub fn reestimate(self, kind: EstimateKind) -> Result<Self> {
        let estimates = bound_estimates(&self.models, kind)?;
        self.with_estimates(estimates)
    }

    /// Models that hit the iteration budget.
    pub fn unconverged(&self) -> Vec<(usize, usize)> {
        self.models.iter().filter(|m| !m.converged).map(|m| m.classes).collect()
    }
}

fn bound_estimates(models: &[BinaryModel], kind: EstimateKind) -> Result<Vec<GenErrorEstimate>> {
    match kind {
        EstimateKind::SvBound => Ok(models.iter().map(sv_bound).collect()),
        EstimateKind::MarginBound => margin_bound(models),
        EstimateKind::Cv => Err(Error::InvalidConfig("cross-validation is not a bound estimator".into())),
    }
}
