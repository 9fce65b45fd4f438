use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use ovo_svm::combiners::CombinerKind;
use ovo_svm_cli::{cmd_estimators, cmd_evaluate, cmd_risk, cmd_train, exit_code, ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "ovo-svm", version, about = "One-vs-one SVM ensembles and their combiners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one ensemble per kernel on the full dataset and save a bundle.
    Train(Common),
    /// Cross-validate every combiner and write accuracy, t-test, count and timing reports.
    Evaluate(Common),
    /// Correlate the CV, SV-ratio and margin estimators with held-out error.
    Estimators {
        #[command(flatten)]
        common: Common,
        /// Use the generated benchmark instead of the dataset.
        #[arg(long)]
        synthetic: bool,
    },
    /// Rank and vote-deficit histogram of the examples at risk under Max Wins.
    Risk(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated combiners, e.g. `maxwins,we,vcf`.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// VCF threshold in percent.
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Fail with exit code 4 when any model misses its tolerance.
    #[arg(long)]
    strict: bool,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(list) = &self.methods {
            cfg.methods = list
                .iter()
                .map(|m| m.parse::<CombinerKind>().map_err(|e| ConfigError(e.to_string())))
                .collect::<Result<_, _>>()?;
        }
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if let Some(j) = self.jobs {
            if j == 0 {
                return Err(ConfigError("--jobs must be positive".into()).into());
            }
            rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let path = cmd_train(&c.config()?)?;
            println!("wrote {}", path.display());
        }
        Command::Evaluate(c) => {
            let out = cmd_evaluate(&c.config()?, c.strict)?;
            print!("{}", std::fs::read_to_string(&out.accuracy_txt)?);
            println!(
                "reports in {}",
                out.accuracy_csv.parent().unwrap_or(&out.accuracy_csv).display()
            );
        }
        Command::Estimators { common, synthetic } => {
            let r = cmd_estimators(&common.config()?, synthetic)?;
            println!("pairs        {}", r.rows.len());
            println!("r(cv)        {:.3}", r.r_cv);
            println!("r(sv bound)  {:.3}", r.r_sv_bound);
            println!("r(margin)    {:.3}", r.r_margin_bound);
            println!("cv leads     {}", r.cv_leads());
        }
        Command::Risk(c) => {
            let r = cmd_risk(&c.config()?)?;
            println!(
                "examples {}, high risk {}, tied for top {}",
                r.examples, r.high_risk, r.tied_top
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
