use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ovo_svm::combiners::{all_pairs, PairwiseEnsemble};
use ovo_svm::dataset::{fit_scaling, load_csv, stratified_kfold, Dataset};
use ovo_svm::evaluation::{
    count_report, risk_analysis, run_experiment, write_accuracy_csv, write_accuracy_text, write_timing_csv,
    write_ttest_csv, ExperimentResult, RiskReport,
};
use ovo_svm::generalization::{compare_on_split, write_estimates_csv, EstimatorComparison};
use ovo_svm::kernel_svm::SvmLearner;
use ovo_svm::synthetic::{estimator_benchmark, run_estimator_benchmark};
use serde::Serialize;

use crate::config::RunConfig;
use crate::NonConvergence;

/// Writes `path` with the provenance header lines, then the body.
fn write_report<F>(path: &Path, cfg: &RunConfig, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> ovo_svm::Result<()>,
{
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "# config_hash: {}", cfg.hash())?;
    writeln!(w, "# seed: {}", cfg.seed)?;
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_path();
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg.dataset_path()?;
    Ok(load_csv(&path, &cfg.label_column)?)
}

#[derive(Serialize)]
struct Stamped<'a, T> {
    config_hash: String,
    seed: u64,
    #[serde(flatten)]
    body: &'a T,
}

fn stamped<'a, T>(cfg: &RunConfig, body: &'a T) -> Stamped<'a, T> {
    Stamped {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        body,
    }
}

#[derive(Serialize)]
struct KernelBundle {
    kernel: ovo_svm::kernel_svm::KernelSpec,
    models: Vec<String>,
    gen_errors: String,
    unconverged: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    n_classes: usize,
    n_features: usize,
    class_names: &'a [String],
    scaling: ovo_svm::dataset::ScalingParams,
    kernels: Vec<KernelBundle>,
}

/// Trains one ensemble per kernel on the whole dataset and writes a bundle:
/// `models/<kernel>/<a>_<b>.json`, `<kernel>_gen_errors.csv` and
/// `manifest.json`. Returns the manifest path.
pub fn cmd_train(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    let dir = output_dir(cfg)?;
    let rows: Vec<usize> = (0..data.len()).collect();
    let scaling = fit_scaling(&data, &rows)?;
    let scaled = scaling.apply(&data);
    let mut kernels = Vec::new();
    for kernel in &cfg.kernels {
        let learner = SvmLearner::new(*kernel, cfg.train.clone());
        let ensemble = PairwiseEnsemble::train_svm(&scaled, &rows, &learner, &cfg.estimator)
            .with_context(|| format!("training {kernel}"))?;
        let tag = kernel.tag();
        let model_dir = dir.join("models").join(&tag);
        fs::create_dir_all(&model_dir)?;
        let mut files = Vec::new();
        for ((a, b), model) in all_pairs(ensemble.n_classes()).into_iter().zip(ensemble.models()) {
            let name = format!("models/{tag}/{a}_{b}.json");
            write_json(&dir.join(&name), &stamped(cfg, model))?;
            files.push(name);
        }
        let gen_errors = format!("{tag}_gen_errors.csv");
        write_report(&dir.join(&gen_errors), cfg, |w| {
            write_estimates_csv(w, ensemble.estimates())
        })?;
        kernels.push(KernelBundle {
            kernel: *kernel,
            models: files,
            gen_errors,
            unconverged: ensemble.unconverged(),
        });
    }
    let manifest = Manifest {
        config: cfg,
        n_classes: data.n_classes(),
        n_features: data.n_features(),
        class_names: data.class_names(),
        scaling,
        kernels,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &stamped(cfg, &manifest))?;
    Ok(path)
}

/// Files written by [`cmd_evaluate`].
#[derive(Debug, Clone)]
pub struct EvaluateOutput {
    pub accuracy_csv: PathBuf,
    pub accuracy_txt: PathBuf,
    pub ttest_csv: PathBuf,
    pub counts_csv: PathBuf,
    /// Wall-clock timings; the only output that differs between runs.
    pub timing_csv: PathBuf,
    pub result: ExperimentResult,
}

/// Runs the outer cross-validation and writes accuracy, t-test, count and
/// timing reports. With `strict`, unconverged models fail the run after the
/// reports are written.
pub fn cmd_evaluate(cfg: &RunConfig, strict: bool) -> Result<EvaluateOutput> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    let result = run_experiment(&data, &cfg.experiment_spec())?;
    let dir = output_dir(cfg)?;
    let out = EvaluateOutput {
        accuracy_csv: dir.join("accuracy.csv"),
        accuracy_txt: dir.join("accuracy.txt"),
        ttest_csv: dir.join("ttest.csv"),
        counts_csv: dir.join("counts.csv"),
        timing_csv: dir.join("timing.csv"),
        result,
    };
    let r = &out.result;
    write_report(&out.accuracy_csv, cfg, |w| write_accuracy_csv(w, r))?;
    write_report(&out.accuracy_txt, cfg, |w| write_accuracy_text(w, r))?;
    write_report(&out.ttest_csv, cfg, |w| write_ttest_csv(w, r))?;
    let counts = count_report(r);
    write_report(&out.counts_csv, cfg, |w| counts.write_csv(w))?;
    write_report(&out.timing_csv, cfg, |w| write_timing_csv(w, r))?;
    if !counts.all_consistent() {
        log::warn!("evaluation counts fall outside their structural groups");
    }
    if !r.leakage_free() {
        bail!("a validation row reached training or scaling");
    }
    let unconverged: usize = r.cells.iter().map(|c| c.unconverged).sum();
    if unconverged > 0 {
        log::warn!("{unconverged} pairwise models stopped at the iteration budget");
        if strict {
            return Err(NonConvergence(unconverged).into());
        }
    }
    Ok(out)
}

/// Compares the three error estimators against held-out error, either on
/// every class pair of the dataset (first outer fold held out) or, with
/// `synthetic`, on the generated benchmark. Uses the first kernel.
pub fn cmd_estimators(cfg: &RunConfig, synthetic: bool) -> Result<EstimatorComparison> {
    cfg.validate()?;
    let learner = SvmLearner::new(cfg.kernels[0], cfg.train.clone());
    let (k, seed) = (cfg.estimator.inner_k, cfg.estimator.seed);
    let comparison = if synthetic {
        let problems = estimator_benchmark(&cfg.benchmark)?;
        run_estimator_benchmark(&problems, &learner, k, seed)?
    } else {
        let data = load_dataset(cfg)?;
        let plan = stratified_kfold(&data, cfg.outer_k, cfg.fold_seed())?;
        let (train, test) = (plan.train_rows(0), plan.test_rows(0));
        let scaled = fit_scaling(&data, &train)?.apply(&data);
        let rows = compare_on_split(&scaled, &train, &test, &learner, k, seed)?;
        EstimatorComparison::from_rows(rows).context("the estimator comparison needs at least two class pairs")?
    };
    let dir = output_dir(cfg)?;
    write_report(&dir.join("estimators.csv"), cfg, |w| comparison.write_csv(w))?;
    write_report(&dir.join("estimator_correlations.csv"), cfg, |w| {
        let mut csv = String::from("estimator,pearson_r\n");
        for (name, r) in [
            ("cv", comparison.r_cv),
            ("sv_bound", comparison.r_sv_bound),
            ("margin_bound", comparison.r_margin_bound),
        ] {
            csv.push_str(&format!("{name},{r:.6}\n"));
        }
        csv.push_str(&format!("# cv_leads: {}\n", comparison.cv_leads()));
        w.write_all(csv.as_bytes()).map_err(|e| ovo_svm::Error::Io {
            path: "estimator_correlations.csv".into(),
            source: e,
        })
    })?;
    Ok(comparison)
}

/// Vote-deficit analysis of the examples Max Wins could get wrong, from the
/// outer cross-validation with the first kernel.
pub fn cmd_risk(cfg: &RunConfig) -> Result<RiskReport> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    let mut spec = cfg.experiment_spec();
    spec.kernels.truncate(1);
    spec.methods = vec![ovo_svm::combiners::CombinerKind::MaxWins];
    let result = run_experiment(&data, &spec)?;
    let report = risk_analysis(&result.cells[0].votes)?;
    let dir = output_dir(cfg)?;
    write_report(&dir.join("risk.csv"), cfg, |w| report.write_csv(w))?;
    Ok(report)
}
