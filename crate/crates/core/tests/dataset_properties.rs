use ovo_svm::dataset::{fit_scaling, read_csv, stratified_kfold, Dataset, LabelColumn};
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = Dataset> {
    (2usize..=5, 1usize..=4, 10usize..=60).prop_flat_map(|(classes, dim, n)| {
        (
            prop::collection::vec(prop::collection::vec(-1e6f64..1e6, dim), n),
            prop::collection::vec(0..classes, n),
        )
            .prop_filter_map("every class present", move |(rows, mut labels)| {
                // make sure each class shows up at least once
                for (c, l) in labels.iter_mut().take(classes).enumerate() {
                    *l = c;
                }
                let names = (0..classes).map(|c| format!("class-{c}")).collect();
                Dataset::new(rows, labels, names).ok()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn csv_round_trip_is_exact(d in dataset()) {
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &LabelColumn::Last).unwrap();
        prop_assert_eq!(back.labels(), d.labels());
        prop_assert_eq!(back.class_names(), d.class_names());
        for (a, b) in back.rows().zip(d.rows()) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn folds_are_stratified(d in dataset(), k in 2usize..=5, seed in any::<u64>()) {
        prop_assume!(k <= d.len());
        let plan = stratified_kfold(&d, k, seed).unwrap();
        let sizes = plan.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for c in 0..d.n_classes() {
            let per_fold: Vec<usize> = (0..k)
                .map(|f| plan.test_rows(f).into_iter().filter(|&i| d.label(i) == c).count())
                .collect();
            prop_assert!(per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap() <= 1);
        }
        let mut all: Vec<usize> = (0..k).flat_map(|f| plan.test_rows(f)).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..d.len()).collect::<Vec<_>>());
        prop_assert_eq!(plan, stratified_kfold(&d, k, seed).unwrap());
    }

    #[test]
    fn scaling_maps_fitting_rows_into_unit_box(d in dataset(), seed in any::<u64>()) {
        let plan = stratified_kfold(&d, 2, seed).unwrap();
        let rows = plan.train_rows(0);
        let s = fit_scaling(&d, &rows).unwrap();
        prop_assert!(s.min.iter().zip(&s.max).all(|(lo, hi)| lo <= hi));
        let scaled = s.apply(&d);
        for &r in &rows {
            prop_assert!(scaled.row(r).iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn validation_rows_may_leave_the_box() {
    let d = Dataset::new(
        vec![vec![0.0], vec![1.0], vec![3.0]],
        vec![0, 1, 1],
        vec!["a".into(), "b".into()],
    )
    .unwrap();
    let s = fit_scaling(&d, &[0, 1]).unwrap();
    assert_eq!(s.apply_row(&[3.0]), vec![5.0]);
}
