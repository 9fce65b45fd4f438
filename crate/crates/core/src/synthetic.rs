//! Seeded synthetic datasets: Gaussian blobs and the estimator benchmark.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{fit_scaling, pair_subset, Dataset};
use crate::error::{Error, Result};
use crate::generalization::{estimate_pair, EstimatorComparison};
use crate::kernel_svm::SvmLearner;

/// Isotropic Gaussian clusters, `per_class` points around each center.
/// Rows are grouped by class in center order; class names are `c0, c1, …`.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_class: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if centers.len() < 2 || per_class == 0 {
        return Err(Error::InvalidDataset(
            "need two or more centers and a positive class size".into(),
        ));
    }
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return Err(Error::InvalidDataset("centers must share a positive dimension".into()));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidDataset(format!("spread must be positive, got {spread}")));
    }
    let noise = Normal::new(0.0, spread).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(centers.len() * per_class);
    let mut labels = Vec::with_capacity(rows.capacity());
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            rows.push(center.iter().map(|&m| m + noise.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    let names = (0..centers.len()).map(|c| format!("c{c}")).collect();
    Dataset::new(rows, labels, names)
}

/// Three well separated 2-D clusters of `per_class` points each.
pub fn three_blobs(per_class: usize, seed: u64) -> Dataset {
    let centers = [vec![0.0, 0.0], vec![6.0, 0.0], vec![3.0, 5.0]];
    gaussian_blobs(&centers, per_class, 0.5, seed).expect("valid blob parameters")
}

/// One two-class problem of the estimator benchmark.
#[derive(Debug, Clone)]
pub struct BinaryProblem {
    pub name: String,
    pub train: Dataset,
    pub test: Dataset,
}

/// Shape of the estimator benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub problems: usize,
    /// Probability that a label is flipped, in train and test alike.
    pub label_noise: f64,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            problems: 24,
            label_noise: 0.1,
            test_size: 2000,
            seed: 20_240_601,
        }
    }
}

const DIMS: [usize; 3] = [2, 5, 10];
const TRAIN_SIZES: [usize; 4] = [30, 60, 120, 240];

fn noisy_pair(dim: usize, per_class: usize, separation: f64, noise: f64, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    a[0] = -separation / 2.0;
    b[0] = separation / 2.0;
    let clean = gaussian_blobs(&[a, b], per_class, 1.0, rng.random())?;
    let labels: Vec<usize> = clean
        .labels()
        .iter()
        .map(|&l| if rng.random_bool(noise) { 1 - l } else { l })
        .collect();
    let rows = clean.rows().map(<[f64]>::to_vec).collect();
    Dataset::new(rows, labels, clean.class_names().to_vec())
}

/// Two-class Gaussian problems with varied dimension, training size and
/// class separation, every label flipped with probability `label_noise`.
pub fn estimator_benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BinaryProblem>> {
    if !(0.0..0.5).contains(&cfg.label_noise) {
        return Err(Error::InvalidConfig(format!(
            "label noise must lie in [0, 0.5), got {}",
            cfg.label_noise
        )));
    }
    if cfg.problems < 3 || cfg.test_size < 2 {
        return Err(Error::InvalidConfig(
            "benchmark needs at least 3 problems and 2 test points".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.problems)
        .map(|i| {
            let dim = DIMS[i % DIMS.len()];
            let per_class = TRAIN_SIZES[(i / DIMS.len()) % TRAIN_SIZES.len()] / 2;
            let separation = 0.25 + 3.5 * i as f64 / (cfg.problems - 1) as f64;
            let train = noisy_pair(dim, per_class, separation, cfg.label_noise, &mut rng)?;
            let test = noisy_pair(dim, cfg.test_size / 2, separation, cfg.label_noise, &mut rng)?;
            Ok(BinaryProblem {
                name: format!("d{dim}-m{}-s{separation:.2}", 2 * per_class),
                train,
                test,
            })
        })
        .collect()
}

/// Scores every benchmark problem with the three estimators, after scaling
/// both splits with parameters fit on the training split.
pub fn run_estimator_benchmark(
    problems: &[BinaryProblem],
    learner: &SvmLearner,
    inner_k: usize,
    seed: u64,
) -> Result<EstimatorComparison> {
    let rows = problems
        .par_iter()
        .map(|p| {
            let all: Vec<usize> = (0..p.train.len()).collect();
            let scaling = fit_scaling(&p.train, &all)?;
            let (train, test) = (scaling.apply(&p.train), scaling.apply(&p.test));
            let train = pair_subset(&train, 0, 1)?;
            let test = pair_subset(&test, 0, 1)?;
            estimate_pair(learner, &train, &test, inner_k, seed, p.name.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    EstimatorComparison::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_shape_and_determinism() {
        let d = three_blobs(50, 1);
        assert_eq!(d.len(), 150);
        assert_eq!(d.n_classes(), 3);
        assert_eq!(d.class_counts(), vec![50, 50, 50]);
        assert_eq!(d, three_blobs(50, 1));
        assert_ne!(d, three_blobs(50, 2));
    }

    #[test]
    fn blob_arguments_checked() {
        assert!(gaussian_blobs(&[vec![0.0]], 5, 1.0, 0).is_err());
        assert!(gaussian_blobs(&[vec![0.0], vec![1.0, 2.0]], 5, 1.0, 0).is_err());
        assert!(gaussian_blobs(&[vec![0.0], vec![1.0]], 5, -1.0, 0).is_err());
    }

    #[test]
    fn benchmark_varies_its_problems() {
        let cfg = BenchmarkConfig {
            test_size: 100,
            ..BenchmarkConfig::default()
        };
        let ps = estimator_benchmark(&cfg).unwrap();
        assert_eq!(ps.len(), 24);
        let dims: std::collections::BTreeSet<usize> = ps.iter().map(|p| p.train.n_features()).collect();
        let sizes: std::collections::BTreeSet<usize> = ps.iter().map(|p| p.train.len()).collect();
        assert_eq!(dims.len(), 3);
        assert_eq!(sizes.len(), 4);
        assert!(ps.iter().all(|p| p.train.n_classes() == 2 && p.test.len() == 100));
        let again = estimator_benchmark(&cfg).unwrap();
        assert_eq!(ps[7].train, again[7].train);
        assert!(estimator_benchmark(&BenchmarkConfig {
            label_noise: 0.6,
            ..cfg
        })
        .is_err());
    }
}
