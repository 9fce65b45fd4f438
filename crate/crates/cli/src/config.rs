//! The TOML run configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ovo_svm::combiners::{CombinerKind, EstimatorConfig, DEFAULT_THRESHOLD};
use ovo_svm::dataset::LabelColumn;
use ovo_svm::evaluation::{ExperimentSpec, DEFAULT_ORDER_SAMPLE};
use ovo_svm::kernel_svm::{KernelSpec, TrainConfig};
use ovo_svm::synthetic::BenchmarkConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration problem: bad syntax, unknown key, or invalid value.
/// Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn default_outer_k() -> usize {
    5
}

fn default_kernels() -> Vec<KernelSpec> {
    (2..=5).map(|degree| KernelSpec::Polynomial { degree }).collect()
}

fn default_methods() -> Vec<CombinerKind> {
    CombinerKind::ALL.to_vec()
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_order_sample() -> usize {
    DEFAULT_ORDER_SAMPLE
}

/// Everything one run needs. Relative paths resolve against the directory
/// holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// CSV file; optional only for `estimators --synthetic`.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub label_column: LabelColumn,
    pub output_dir: PathBuf,
    /// Combiner tie-breaks and class orders.
    #[serde(default)]
    pub seed: u64,
    /// Outer fold assignment; defaults to `seed`.
    #[serde(default)]
    pub fold_seed: Option<u64>,
    #[serde(default = "default_outer_k")]
    pub outer_k: usize,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<KernelSpec>,
    #[serde(default = "default_methods")]
    pub methods: Vec<CombinerKind>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_order_sample")]
    pub order_sample_size: usize,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub benchmark: BenchmarkConfig,
    /// Directory relative paths resolve against; not part of the hash.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        cfg.base_dir = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Ok(cfg)
    }

    pub fn fold_seed(&self) -> u64 {
        self.fold_seed.unwrap_or(self.seed)
    }

    pub fn dataset_path(&self) -> Result<PathBuf> {
        match &self.dataset {
            Some(d) => Ok(self.base_dir.join(d)),
            None => Err(ConfigError("`dataset` is required for this command".into()).into()),
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    pub fn experiment_spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            kernels: self.kernels.clone(),
            methods: self.methods.clone(),
            outer_k: self.outer_k,
            fold_seed: self.fold_seed(),
            seed: self.seed,
            estimator: self.estimator.clone(),
            train: self.train.clone(),
            order_sample_size: self.order_sample_size,
            threshold: self.threshold,
        }
    }

    /// Checks every value before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.experiment_spec()
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.estimator.inner_k < 2 {
            return Err(ConfigError(format!(
                "estimator.inner_k must be at least 2, got {}",
                self.estimator.inner_k
            ))
            .into());
        }
        Ok(())
    }

    /// SHA-256 of the configuration as canonical JSON (sorted keys), with
    /// paths as written.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let digest = Sha256::digest(value.to_string().as_bytes());
        hex::encode(digest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "output_dir = \"out\"\n";

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.outer_k, 5);
        assert_eq!(c.kernels.len(), 4);
        assert_eq!(c.methods.len(), 7);
        assert_eq!(c.threshold, 10.0);
        assert_eq!(c.fold_seed(), 0);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let e = RunConfig::parse("output_dir = \"o\"\nthreshhold = 5\n").unwrap_err();
        assert!(e.to_string().contains("threshhold"), "{e}");
        let e = RunConfig::parse("output_dir = \"o\"\n[train]\ncee = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("cee"), "{e}");
        assert!(
            RunConfig::parse("output_dir = \"o\"\nkernels = [{ kind = \"rbf\", gamma = 1.0, degree = 2 }]\n").is_err()
        );
    }

    #[test]
    fn full_document() {
        let c = RunConfig::parse(
            r#"
            dataset = "glass.csv"
            label_column = "Type"
            output_dir = "runs/glass"
            seed = 7
            methods = ["maxwins", "we", "vcf"]
            kernels = [{ kind = "polynomial", degree = 3 }, { kind = "rbf", gamma = 0.5 }]
            [estimator]
            inner_k = 4
            [train]
            c = 10.0
            "#,
        )
        .unwrap();
        assert_eq!(c.label_column, LabelColumn::Name("Type".into()));
        assert_eq!(c.kernels[1], KernelSpec::Rbf { gamma: 0.5 });
        assert_eq!(c.estimator.inner_k, 4);
        assert_eq!(c.estimator.seed, EstimatorConfig::default().seed);
        assert_eq!(c.train.c, 10.0);
        assert_eq!(
            c.methods,
            vec![CombinerKind::MaxWins, CombinerKind::We, CombinerKind::Vcf]
        );
    }

    #[test]
    fn invalid_values_fail_validation() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.outer_k = 1;
        assert!(c.validate().is_err());
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.estimator.inner_k = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_content_only() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let b = RunConfig::parse("# comment\noutput_dir   =   \"out\"\nseed = 0\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.seed = 1;
        assert_ne!(a.hash(), c.hash());
    }
}
