use ovo_svm::combiners::{adag, ddag, pair_count, CombinerKind, CombinerParams, EnsemblePlan, OutcomeTable};
use ovo_svm::dataset::TwoClassView;
use ovo_svm::evaluation::{
    all_permutations, count_report, order_average, run_experiment_with, write_accuracy_csv, ExperimentSpec,
};
use ovo_svm::kernel_svm::{BinaryClassifier, BinaryLearner, KernelSpec};
use ovo_svm::synthetic::{gaussian_blobs, three_blobs};
use ovo_svm::Result;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Nearest class mean, enough to exercise the harness without an SVM.
struct Centroids;

struct CentroidModel {
    classes: (usize, usize),
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl BinaryClassifier for CentroidModel {
    fn classes(&self) -> (usize, usize) {
        self.classes
    }

    fn decision_value(&self, x: &[f64]) -> f64 {
        let d = |c: &[f64]| c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        d(&self.neg) - d(&self.pos)
    }
}

impl BinaryLearner for Centroids {
    type Model = CentroidModel;

    fn fit(&self, view: &TwoClassView<'_>) -> Result<CentroidModel> {
        let dim = view.data().n_features();
        let (mut pos, mut neg) = (vec![0.0; dim], vec![0.0; dim]);
        let (np, nn) = view.class_sizes();
        for i in 0..view.len() {
            let (acc, n) = if view.targets()[i] > 0.0 {
                (&mut pos, np)
            } else {
                (&mut neg, nn)
            };
            for (a, v) in acc.iter_mut().zip(view.x(i)) {
                *a += v / n as f64;
            }
        }
        Ok(CentroidModel {
            classes: view.classes(),
            pos,
            neg,
        })
    }
}

fn spec() -> ExperimentSpec {
    let mut s = ExperimentSpec::new(vec![KernelSpec::Polynomial { degree: 1 }], CombinerKind::ALL.to_vec());
    s.fold_seed = 11;
    s.seed = 5;
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_average_matches_full_enumeration(n in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = EnsemblePlan::uniform(n);
        let examples: Vec<(OutcomeTable, usize)> =
            (0..6).map(|i| (OutcomeTable::random(n, &mut rng), i % n)).collect();
        let perms = all_permutations(n);
        for method in [CombinerKind::Ddag, CombinerKind::Adag] {
            let mut correct = 0usize;
            for o in &perms {
                for (t, truth) in &examples {
                    let v = if method == CombinerKind::Ddag { ddag(&plan, t, o) } else { adag(&plan, t, o) };
                    correct += usize::from(v.unwrap().predicted == *truth);
                }
            }
            let exact = correct as f64 / (perms.len() * examples.len()) as f64;
            let avg = order_average(&plan, &examples, method, 1000, seed).unwrap();
            prop_assert!((avg.mean_accuracy - exact).abs() < 1e-12, "{} n={}", method, n);
        }
    }
}

#[test]
fn zero_error_pairs_give_perfect_accuracy() {
    // every classifier touching the true class is right; all others range over every outcome
    for n in 2..=6 {
        let plan = EnsemblePlan::new(n, (0..pair_count(n)).map(|i| (i % 5) as f64 / 10.0).collect()).unwrap();
        let others = pair_count(n - 1);
        for target in 0..n {
            for bits in 0..1u64 << others {
                let mut k = 0;
                let t = OutcomeTable::from_fn(n, |a, b| {
                    if a == target || b == target {
                        return target;
                    }
                    let w = if bits >> k & 1 == 1 { a } else { b };
                    k += 1;
                    w
                })
                .unwrap();
                for kind in CombinerKind::ALL {
                    let v = plan
                        .combine(&t, kind, &CombinerParams::for_example(bits, target as u64, 10.0))
                        .unwrap();
                    assert_eq!(v.predicted, target, "{kind} n={n} bits={bits:b}");
                }
            }
        }
    }
}

#[test]
fn weak_elimination_sits_between_the_extremes_on_noisy_oracles() {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let errors = (0..pair_count(n)).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
    let plan = EnsemblePlan::new(n, errors).unwrap();
    let trials = 500;
    let mut total = 0usize;
    for i in 0..trials {
        let t = OutcomeTable::random(n, &mut rng);
        total += plan
            .combine(&t, CombinerKind::We, &CombinerParams::for_example(1, i, 10.0))
            .unwrap()
            .evaluations;
    }
    let mean = total as f64 / trials as f64;
    assert!(mean > 9.0 && mean < 45.0, "mean WE evaluations {mean}");
}

#[test]
fn harness_accepts_any_base_learner() {
    let data = three_blobs(30, 2);
    let r = run_experiment_with(&data, &spec(), |_| Centroids).unwrap();
    assert!(r.leakage_free());
    assert_eq!(r.audit.len(), 5);
    for m in &r.cells[0].methods {
        assert_eq!(m.fold_accuracy, vec![1.0; 5], "{}", m.method);
    }
    let counts = count_report(&r);
    assert!(counts.all_consistent());
    assert_eq!(r.cells[0].votes.len(), data.len());
}

#[test]
fn experiments_are_reproducible() {
    let data = gaussian_blobs(
        &[vec![0.0, 0.0], vec![1.0, 0.5], vec![0.5, 1.0], vec![1.2, 1.2]],
        20,
        0.6,
        4,
    )
    .unwrap();
    let csv = |seed: u64| {
        let mut s = spec();
        s.seed = seed;
        let r = run_experiment_with(&data, &s, |_| Centroids).unwrap();
        let mut buf = Vec::new();
        write_accuracy_csv(&mut buf, &r).unwrap();
        buf
    };
    let first = csv(5);
    assert_eq!(first, csv(5));
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("row,method,fold_1,fold_2,fold_3,fold_4,fold_5,mean\n"));
    assert!(text.contains("polynomial-mean,vcf,"));
}

#[test]
fn invalid_specs_are_rejected() {
    let data = three_blobs(10, 0);
    let mut s = spec();
    s.methods.clear();
    assert!(run_experiment_with(&data, &s, |_| Centroids).is_err());
    let mut s = spec();
    s.outer_k = 1;
    assert!(run_experiment_with(&data, &s, |_| Centroids).is_err());
    let mut s = spec();
    s.threshold = 120.0;
    assert!(run_experiment_with(&data, &s, |_| Centroids).is_err());
}
