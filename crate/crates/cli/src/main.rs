//! Command-line front end: run scheme comparisons, summarize bundles,
//! certify the stepsize identities and solve reference equilibria.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dasa::certify::run_checks;
use dasa::experiment::{fmt6, reference_solutions, run_experiment, summarize, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dasa", version, about = "Distributed adaptive stochastic approximation experiments")]
struct Cli {
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (setting, scheme) pair of a config and write a result bundle.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        out: OutDir,
        /// Overrides the config's base seed.
        #[arg(long, value_name = "S")]
        seed: Option<u64>,
    },
    /// Print the CI table, per-setting winners and robustness scores of a bundle.
    Summarize {
        #[command(flatten)]
        out: OutDir,
    },
    /// Check the stepsize and error-bound identities numerically.
    Verify {
        #[arg(long, value_name = "S", default_value_t = 1)]
        seed: u64,
    },
    /// Solve and print the reference solution of every instance in a config.
    Reference {
        #[command(flatten)]
        source: ConfigSource,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Use the shipped 12-setting, 4-scheme protocol.
    #[arg(long)]
    paper_protocol: bool,
}

impl ConfigSource {
    fn load(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(path) => ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display())),
            None => Ok(ExperimentConfig::paper_protocol()),
        }
    }
}

#[derive(Args)]
struct OutDir {
    /// Bundle directory. Falls back to the config's `output_dir`, then `results`.
    #[arg(long, value_name = "DIR", env = "DASA_OUT_DIR")]
    out: Option<PathBuf>,
}

impl OutDir {
    fn resolve(&self, cfg: Option<&ExperimentConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("results"))
    }
}

fn run(source: &ConfigSource, out: &OutDir, seed: Option<u64>) -> Result<()> {
    let mut cfg = source.load()?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    let dir = out.resolve(Some(&cfg));
    let manifest = run_experiment(&cfg, &dir).with_context(|| format!("writing bundle to {}", dir.display()))?;
    for case in &manifest.cases {
        for w in &case.warnings {
            log::warn!("setting {}: {w}", case.setting_id);
        }
    }
    if !manifest.complete {
        bail!("some runs failed; partial results and failure markers are in {}", dir.display());
    }
    println!("{}", summarize(&dir)?);
    println!("bundle written to {}", dir.display());
    Ok(())
}

fn reference(source: &ConfigSource) -> Result<()> {
    let cfg = source.load()?;
    for r in reference_solutions(&cfg)? {
        let x: Vec<String> = r.solution.iter().map(|v| fmt6(*v)).collect();
        println!(
            "setting {:>2}  residual {}  solver gap {}\n  x* = [{}]",
            r.setting_id,
            fmt6(r.residual),
            fmt6(r.cross_check),
            x.join(", ")
        );
    }
    Ok(())
}

fn verify(seed: u64) -> Result<bool> {
    let checks = run_checks(seed)?;
    for c in &checks {
        println!(
            "{}  {:<52} worst {}  limit {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt6(c.worst),
            fmt6(c.limit)
        );
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Run { source, out, seed } => run(source, out, *seed),
        Command::Summarize { out } => summarize(&out.resolve(None))
            .map(|t| println!("{t}"))
            .with_context(|| format!("summarizing {}", out.resolve(None).display())),
        Command::Verify { seed } => match verify(*seed) {
            Ok(true) => Ok(()),
            Ok(false) => Err(anyhow::anyhow!("some checks failed")),
            Err(e) => Err(e),
        },
        Command::Reference { source } => reference(source),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

