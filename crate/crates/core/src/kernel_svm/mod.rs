//! Binary soft-margin kernel SVM, the base learner of the pairwise ensemble.
//!
//! Anything implementing [`BinaryLearner`] can replace the SMO trainer; the
//! combiners only need [`BinaryClassifier::decision_value`].

mod cache;
mod kernel;
mod smo;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use cache::FULL_GRAM_LIMIT;
pub use kernel::{kernel_eval, KernelSpec};

use crate::dataset::TwoClassView;
use crate::error::{Error, Result};

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Box constraint `C`.
    pub c: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub kkt_tolerance: f64,
    /// Budget of SMO sweeps; one sweep is `M` working-pair updates.
    /// `None` means `10·M` sweeps.
    pub max_passes: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            kkt_tolerance: 1e-3,
            max_passes: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !(self.kkt_tolerance > 0.0 && self.kkt_tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kkt_tolerance must be positive, got {}",
                self.kkt_tolerance
            )));
        }
        if self.max_passes == Some(0) {
            return Err(Error::InvalidConfig("max_passes must be positive".into()));
        }
        Ok(())
    }

    fn iteration_budget(&self, m: usize) -> usize {
        let passes = self.max_passes.unwrap_or(10 * m);
        passes.saturating_mul(m).max(1)
    }
}

/// A trained two-class kernel machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    /// (positive class, negative class)
    pub classes: (usize, usize),
    pub kernel: KernelSpec,
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficient times the ±1 target, one per support vector.
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Geometric margin `1/‖w‖` in feature space. Infinite when `‖w‖² ≤ 0`,
    /// which an odd-degree polynomial kernel can produce; stored as `null`.
    #[serde(with = "infinite_as_null")]
    pub margin: f64,
    pub sv_count: usize,
    pub train_count: usize,
    pub converged: bool,
    pub iterations: usize,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// A two-class decision function over class indices.
pub trait BinaryClassifier: Send + Sync {
    /// (positive class, negative class)
    fn classes(&self) -> (usize, usize);

    /// Signed decision value; non-negative favours the positive class.
    fn decision_value(&self, x: &[f64]) -> f64;

    /// False when training stopped before meeting its tolerance.
    fn converged(&self) -> bool {
        true
    }

    fn winner(&self, x: &[f64]) -> usize {
        let (pos, neg) = self.classes();
        if self.decision_value(x) >= 0.0 {
            pos
        } else {
            neg
        }
    }
}

/// Trains a [`BinaryClassifier`] on a two-class view.
pub trait BinaryLearner: Send + Sync {
    type Model: BinaryClassifier;

    fn fit(&self, view: &TwoClassView<'_>) -> Result<Self::Model>;
}

/// The SMO-backed SVM learner.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmLearner {
    pub kernel: KernelSpec,
    pub config: TrainConfig,
}

impl SvmLearner {
    pub fn new(kernel: KernelSpec, config: TrainConfig) -> Self {
        SvmLearner { kernel, config }
    }
}

impl BinaryLearner for SvmLearner {
    type Model = BinaryModel;

    fn fit(&self, view: &TwoClassView<'_>) -> Result<BinaryModel> {
        train(view, &self.kernel, &self.config)
    }
}

/// Trains a soft-margin SVM on `view` (targets +1 for the first class).
///
/// Hitting the iteration budget is not an error: the returned model has
/// `converged == false` and a warning is logged.
pub fn train(view: &TwoClassView<'_>, kernel: &KernelSpec, cfg: &TrainConfig) -> Result<BinaryModel> {
    kernel.validate()?;
    cfg.validate()?;
    let (pos, neg) = view.class_sizes();
    if pos == 0 {
        return Err(Error::EmptyClass(view.classes().0));
    }
    if neg == 0 {
        return Err(Error::EmptyClass(view.classes().1));
    }
    let m = view.len();
    let out = smo::solve(view, *kernel, cfg.c, cfg.kkt_tolerance, cfg.iteration_budget(m));
    if !out.converged {
        log::warn!(
            "SMO for pair {:?} stopped after {} iterations with KKT gap {:.3e}",
            view.classes(),
            out.iterations,
            out.gap
        );
    }
    let y = view.targets();
    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for (i, &a) in out.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(view.x(i).to_vec());
            alphas.push(a * y[i]);
        }
    }
    let margin = if out.w_norm_sq > 0.0 {
        1.0 / out.w_norm_sq.sqrt()
    } else {
        f64::INFINITY
    };
    Ok(BinaryModel {
        classes: view.classes(),
        kernel: *kernel,
        sv_count: support_vectors.len(),
        support_vectors,
        alphas,
        bias: -out.rho,
        margin,
        train_count: m,
        converged: out.converged,
        iterations: out.iterations,
    })
}

impl BinaryModel {
    pub fn dimension(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    /// `Σ alpha_i K(sv_i, x) + b`, checking the input dimension.
    pub fn decide(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dimension() {
            if d != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                });
            }
        }
        Ok(self.decision_value(x))
    }

    pub fn to_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }
}

impl BinaryClassifier for BinaryModel {
    fn classes(&self) -> (usize, usize) {
        self.classes
    }

    fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * self.kernel.compute(sv, x))
            .sum::<f64>()
            + self.bias
    }

    fn converged(&self) -> bool {
        self.converged
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{pair_subset, Dataset};

    fn two_point() -> Dataset {
        Dataset::new(
            vec![vec![1.0], vec![-1.0]],
            vec![0, 1],
            vec!["pos".into(), "neg".into()],
        )
        .unwrap()
    }

    #[test]
    fn symmetric_pair_is_separated_at_zero() {
        let d = two_point();
        let v = pair_subset(&d, 0, 1).unwrap();
        let cfg = TrainConfig {
            c: 100.0,
            ..TrainConfig::default()
        };
        let m = train(&v, &KernelSpec::Polynomial { degree: 1 }, &cfg).unwrap();
        assert!(m.decide(&[1.0]).unwrap() > 0.0);
        assert!(m.decide(&[-1.0]).unwrap() < 0.0);
        assert!(m.decide(&[0.0]).unwrap().abs() < cfg.kkt_tolerance);
        assert_eq!(m.winner(&[0.5]), 0);
        assert_eq!(m.sv_count, 2);
        // hard margin: w = 0.5 in feature coordinates, margin 1/(‖w‖·√2·...) via the dual
        assert!(m.margin > 0.0);
    }

    #[test]
    fn tie_goes_to_first_class() {
        let m = BinaryModel {
            classes: (3, 1),
            kernel: KernelSpec::Polynomial { degree: 1 },
            support_vectors: vec![],
            alphas: vec![],
            bias: 0.0,
            margin: 1.0,
            sv_count: 0,
            train_count: 0,
            converged: true,
            iterations: 0,
        };
        assert_eq!(m.winner(&[0.0]), 3);
    }

    #[test]
    fn empty_class_errors() {
        let d = Dataset::new(
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let v = pair_subset(&d, 0, 1).unwrap().select(&[0, 1]);
        assert!(matches!(
            train(&v, &KernelSpec::Rbf { gamma: 1.0 }, &TrainConfig::default()),
            Err(Error::EmptyClass(1))
        ));
    }

    #[test]
    fn dimension_checked_in_decide() {
        let d = two_point();
        let v = pair_subset(&d, 0, 1).unwrap();
        let m = train(&v, &KernelSpec::Rbf { gamma: 1.0 }, &TrainConfig::default()).unwrap();
        assert!(matches!(m.decide(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bad_config_rejected() {
        let d = two_point();
        let v = pair_subset(&d, 0, 1).unwrap();
        let cfg = TrainConfig {
            c: -1.0,
            ..TrainConfig::default()
        };
        assert!(train(&v, &KernelSpec::Rbf { gamma: 1.0 }, &cfg).is_err());
    }

    #[test]
    fn tiny_budget_flags_non_convergence() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let labels = (0..40).map(|i| (i * 7 % 5 > 1) as usize).collect();
        let d = Dataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap();
        let v = pair_subset(&d, 0, 1).unwrap();
        let cfg = TrainConfig {
            max_passes: Some(1),
            kkt_tolerance: 1e-12,
            ..TrainConfig::default()
        };
        let m = train(&v, &KernelSpec::Rbf { gamma: 5.0 }, &cfg).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 40);
    }
}
