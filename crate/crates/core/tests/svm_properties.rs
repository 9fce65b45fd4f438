use approx::assert_abs_diff_eq;
use ovo_svm::dataset::{fit_scaling, pair_subset, Dataset};
use ovo_svm::generalization::margin_bound;
use ovo_svm::kernel_svm::{train, BinaryClassifier, BinaryModel, KernelSpec, TrainConfig};
use ovo_svm::synthetic::gaussian_blobs;
use proptest::prelude::*;

/// Two overlapping clusters scaled into [-1, 1], as the ensemble sees them.
fn blobs(per_class: usize, gap: f64, seed: u64) -> Dataset {
    let d = gaussian_blobs(&[vec![-gap, 0.0], vec![gap, 0.0]], per_class, 1.0, seed).unwrap();
    let all: Vec<usize> = (0..d.len()).collect();
    fit_scaling(&d, &all).unwrap().apply(&d)
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (1u32..=4).prop_map(|degree| KernelSpec::Polynomial { degree }),
        (0.1f64..2.0).prop_map(|gamma| KernelSpec::Rbf { gamma }),
    ]
}

fn fit(data: &Dataset, k: KernelSpec, c: f64) -> BinaryModel {
    let view = pair_subset(data, 0, 1).unwrap();
    let cfg = TrainConfig {
        c,
        ..TrainConfig::default()
    };
    train(&view, &k, &cfg).unwrap()
}

/// Independent check of the KKT conditions at tolerance `tol`, recomputing
/// the decision value of every training point from the stored expansion.
fn kkt_violation(data: &Dataset, m: &BinaryModel, c: f64) -> f64 {
    let view = pair_subset(data, 0, 1).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..view.len() {
        let x = view.x(i);
        let y = view.targets()[i];
        let yf = y * m.decision_value(x);
        let alpha = m
            .support_vectors
            .iter()
            .position(|sv| sv.as_slice() == x)
            .map_or(0.0, |j| m.alphas[j] * y);
        let v = if alpha <= 1e-12 {
            (1.0 - yf).max(0.0)
        } else if alpha >= c - 1e-9 {
            (yf - 1.0).max(0.0)
        } else {
            (yf - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dual_is_feasible(seed in any::<u64>(), k in kernel(), c in 0.1f64..10.0) {
        let d = blobs(15, 1.0, seed);
        let m = fit(&d, k, c);
        prop_assert!(m.converged);
        prop_assert!(m.alphas.iter().sum::<f64>().abs() < 1e-6);
        let view = pair_subset(&d, 0, 1).unwrap();
        for (sv, a) in m.support_vectors.iter().zip(&m.alphas) {
            let i = (0..view.len()).find(|&i| view.x(i) == sv.as_slice()).unwrap();
            let ya = view.targets()[i] * a;
            prop_assert!(ya > 0.0 && ya <= c + 1e-9, "y*alpha = {}", ya);
        }
        prop_assert_eq!(m.sv_count, m.support_vectors.len());
        // the solver stops at kkt_tolerance on the gradient; allow slack for the bias estimate
        prop_assert!(kkt_violation(&d, &m, c) < 0.05);
    }

    #[test]
    fn swapping_classes_negates_decisions(seed in any::<u64>(), k in kernel()) {
        let d = blobs(12, 0.8, seed);
        let view = pair_subset(&d, 0, 1).unwrap();
        let cfg = TrainConfig::default();
        let m = train(&view, &k, &cfg).unwrap();
        let s = train(&view.swapped(), &k, &cfg).unwrap();
        prop_assert_eq!(s.classes, (1, 0));
        for x in d.rows() {
            let (a, b) = (m.decision_value(x), s.decision_value(x));
            prop_assert!((a + b).abs() < 1e-9, "{} vs {}", a, b);
            if a.abs() > 1e-9 {
                // the sign flips with the labels, so the same class wins
                prop_assert_eq!(m.winner(x), s.winner(x));
            }
        }
    }

    #[test]
    fn support_vector_order_is_irrelevant(seed in any::<u64>(), k in kernel(), rot in 1usize..10) {
        let d = blobs(10, 0.5, seed);
        let m = fit(&d, k, 1.0);
        let mut p = m.clone();
        let r = rot % p.support_vectors.len().max(1);
        p.support_vectors.rotate_left(r);
        p.alphas.rotate_left(r);
        for x in d.rows() {
            prop_assert!((m.decision_value(x) - p.decision_value(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_sets_are_fit_exactly(seed in any::<u64>()) {
        let d = gaussian_blobs(&[vec![-3.0, 1.0], vec![3.0, -1.0]], 20, 0.5, seed).unwrap();
        prop_assume!(d.rows().zip(d.labels()).all(|(x, &l)| (x[0] < 0.0) == (l == 0)));
        for k in [KernelSpec::Polynomial { degree: 1 }, KernelSpec::Polynomial { degree: 3 }, KernelSpec::Rbf { gamma: 0.5 }] {
            let m = fit(&d, k, 100.0);
            for (x, &l) in d.rows().zip(d.labels()) {
                prop_assert_eq!(m.winner(x), l, "{}", k);
            }
        }
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), k in kernel()) {
        let d = blobs(10, 0.7, seed);
        let m = fit(&d, k, 1.0);
        let mut buf = Vec::new();
        m.to_json(&mut buf).unwrap();
        let back = BinaryModel::from_json(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert!(back.margin > 0.0);
        for x in d.rows() {
            prop_assert!((back.decision_value(x) - m.decision_value(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn margin_bound_follows_model_order(seed in any::<u64>()) {
        let models: Vec<BinaryModel> =
            (0..4).map(|i| fit(&blobs(8, 0.3 + i as f64, seed ^ i), KernelSpec::Polynomial { degree: 2 }, 1.0)).collect();
        let fwd = margin_bound(&models).unwrap();
        let rev: Vec<BinaryModel> = models.iter().rev().cloned().collect();
        let bwd = margin_bound(&rev).unwrap();
        for (a, b) in fwd.iter().zip(bwd.iter().rev()) {
            prop_assert_eq!(a.value, b.value);
        }
    }
}

#[test]
fn xor_has_the_symmetric_dual_solution() {
    // K = (x.y + 1)^2 on the XOR corners: 9 on the diagonal, 1 elsewhere.
    // By symmetry every alpha is equal; y_i f(x_i) = 1 gives alpha = 1/8,
    // so ||w||^2 = 4 * (1/8)^2 * 8 = 1/2 and the margin is sqrt(2).
    let d = Dataset::new(
        vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
        vec![0, 0, 1, 1],
        vec!["same".into(), "diff".into()],
    )
    .unwrap();
    let m = fit(&d, KernelSpec::Polynomial { degree: 2 }, 1.0);
    assert_eq!(m.sv_count, 4);
    for (sv, a) in m.support_vectors.iter().zip(&m.alphas) {
        let y = if sv[0] == sv[1] { 1.0 } else { -1.0 };
        assert_abs_diff_eq!(a * y, 0.125, epsilon = 1e-3);
    }
    assert_abs_diff_eq!(m.bias, 0.0, epsilon = 1e-3);
    assert_abs_diff_eq!(m.margin, 2f64.sqrt(), epsilon = 1e-2);
}
