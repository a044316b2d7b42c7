use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use hpca::output::{fmt_float, write_run};
use hpca::{run_experiment, Error, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "hpca", about = "Heteroskedastic PCA experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write CSV output.
    Run {
        /// Flat `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        reps: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        /// Comma-separated sweep values.
        #[arg(long)]
        grid: Option<String>,
        /// Comma-separated subset of heteropca, svd, dd.
        #[arg(long)]
        methods: Option<String>,
        /// Trials CSV path; defaults to `<experiment>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        workers: Option<String>,
        /// Also write an SVG plot.
        #[arg(long)]
        plot: bool,
    },
    /// Check the deterministic perturbation lemmas on random instances.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, experiment, reps, seed, grid, methods, out, workers, plot } => {
            let mut pairs = match &config {
                Some(path) => ExperimentConfig::load(path)?,
                None => Vec::new(),
            };
            let overrides = [
                ("experiment", experiment),
                ("reps", reps),
                ("seed", seed),
                ("grid", grid),
                ("methods", methods),
                ("workers", workers),
                ("out", out.map(|p| p.display().to_string())),
            ];
            pairs.extend(overrides.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
            if plot {
                pairs.push(("plot".into(), "true".into()));
            }
            let cfg = ExperimentConfig::from_pairs(&pairs)?;
            let path = cfg
                .out_path
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment)));

            let output = run_experiment(&cfg)?;
            let written = write_run(&output, &path, cfg.plot)?;

            println!("{:<12} {:<10} {:>6} {:>24} {:>24}", cfg.sweep_param, "method", "n", "mean sinΘ", "sd");
            for a in &output.aggregates {
                println!(
                    "{:<12} {:<10} {:>6} {:>24} {:>24}",
                    fmt_float(a.sweep_value),
                    a.method,
                    a.n_reps,
                    fmt_float(a.sin_theta_u.mean),
                    fmt_float(a.sin_theta_u.sd)
                );
            }
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Verify { trials, seed } => {
            if trials == 0 {
                return Err(Error::Config("trials must be positive".into()));
            }
            let reports = hpca_core::verify::default_suite(trials, seed)?;
            for r in &reports {
                println!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                return Err(Error::Verification(format!("{failed} of {} checks failed", reports.len())));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(hpca::version_string().into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
