use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hmdp_bench::{
    load_suite, run_experiment, run_suite, summarize, BenchError, ExperimentConfig, ExperimentResult, Result,
};
use homomorphic_mdp::environments::EnvSpec;
use homomorphic_mdp::homomorphism::{span_condition_holds, transition_basis, EncodingMatrix, DEFAULT_RANK_TOL};
use homomorphic_mdp::GroundMdp;

#[derive(Parser)]
#[command(name = "hmdp-bench", version, about = "Homomorphic MDP experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model from an environment spec and write it as MDP JSON.
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Replace the generator seed of randomized families.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether an encoding's row space contains every transition row.
    Certify {
        /// MDP JSON file.
        #[arg(long)]
        mdp: PathBuf,
        /// Encoding JSON file `{n_abstract, n_states, rows}`.
        #[arg(long)]
        encoding: PathBuf,
        /// Residual tolerance; defaults to the rank tolerance of the transition basis.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a list of experiment configs.
    Suite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge every summary table in a directory.
    Summarize {
        dir: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen { config, seed, out } => {
            let spec: EnvSpec = serde_json::from_str(&read(&config)?)
                .map_err(|e| BenchError::Config(format!("{}: {e}", config.display())))?;
            let spec = seed.map_or(spec.clone(), |s| spec.with_seed(s));
            let mdp = spec.build().map_err(|e| BenchError::Config(e.to_string()))?;
            emit(out.as_deref(), &mdp.to_json()?)
        }
        Command::Certify { mdp, encoding, tol, out } => {
            let model = GroundMdp::from_json(&read(&mdp)?)
                .map_err(|e| BenchError::Config(format!("{}: {e}", mdp.display())))?;
            let enc = EncodingMatrix::from_json(&read(&encoding)?)
                .map_err(|e| BenchError::Config(format!("{}: {e}", encoding.display())))?;
            if enc.n_states() != model.n_states() {
                return Err(BenchError::Config(format!(
                    "encoding covers {} states, model has {}",
                    enc.n_states(),
                    model.n_states()
                )));
            }
            let basis = transition_basis(&model, DEFAULT_RANK_TOL)?;
            let report = span_condition_holds(&enc, &basis, tol.unwrap_or(basis.tolerance))?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&report).expect("report serializes"))
        }
        Command::Solve { config, seed, out } => {
            let config = adjust(ExperimentConfig::load(&config)?, seed, out.as_deref());
            report(&run_experiment(&config)?);
            Ok(())
        }
        Command::Suite { config, workers, seed, out } => {
            let configs: Vec<ExperimentConfig> =
                load_suite(&config)?.into_iter().map(|c| adjust(c, seed, out.as_deref())).collect();
            for result in run_suite(&configs, workers)? {
                report(&result);
            }
            Ok(())
        }
        Command::Summarize { dir, out } => {
            let table = summarize(&dir, out.as_deref())?;
            match out {
                Some(path) => table.write(&path),
                None => {
                    println!("{}", table.to_json());
                    Ok(())
                }
            }
        }
    }
}

fn adjust(config: ExperimentConfig, seed: Option<u64>, out: Option<&Path>) -> ExperimentConfig {
    let mut config = seed.map_or(config.clone(), |s| config.with_seed(s));
    if let Some(dir) = out {
        config.output_dir = dir.to_path_buf();
    }
    config
}

fn report(result: &ExperimentResult) {
    for r in &result.repeats {
        let s = &r.summary;
        let j = s.final_j_s.map_or("-".to_string(), |j| format!("{j:.6}"));
        println!(
            "{} {} f={} seed={} |U|={} J_S={} iters={} {}",
            s.task, s.algorithm, s.fraction, s.seed, s.n_abstract, j, s.iters, s.status
        );
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| BenchError::io(path, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
