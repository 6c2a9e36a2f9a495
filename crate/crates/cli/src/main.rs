use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpaudit_cli::config::RunConfig;
use dpaudit_cli::coverage::{coverage_report, write_coverage_csv, DEFAULT_N, DEFAULT_P1};
use dpaudit_cli::grid::{run_grid, write_report};
use dpaudit_cli::inspect;

#[derive(Parser)]
#[command(name = "dpaudit", version, about = "Empirical privacy auditing of DP learners")]
struct Cli {
    /// Master seed; overrides the config's audit.master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides the config's out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the audit grid described by a config file.
    Audit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Coverage of the Katz and Clopper-Pearson ratio intervals.
    Coverage {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_delimiter = ',')]
        p1: Option<Vec<f64>>,
        #[arg(long = "n", value_delimiter = ',')]
        samples_n: Option<Vec<u64>>,
    },
    /// Print the neighbor pair witness of one attack.
    Inspect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        attack: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
    },
}

enum Failure {
    Config(anyhow::Error),
    Audit(anyhow::Error),
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(path).map_err(Failure::Config)?;
    if let Some(s) = seed {
        cfg.audit.master_seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure::Config(e.into()))?;
    }
    match cli.command {
        Command::Audit { config } => {
            let mut cfg = load(&config, cli.seed)?;
            if let Some(out) = cli.out {
                cfg.out_dir = out;
            }
            cfg.clone().resolved().validate().map_err(Failure::Config)?;
            let report = run_grid(&cfg).map_err(Failure::Config)?;
            let paths = write_report(&report, &cfg.out_dir).map_err(Failure::Audit)?;
            eprintln!(
                "{} audits, {} failed; wrote {}, {} and {}",
                report.rows.len(),
                report.failed(),
                paths.report.display(),
                paths.summary.display(),
                paths.timings.display()
            );
            for row in report.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "  {} eps={} rep={}: {}",
                    row.attack,
                    row.eps_th,
                    row.replicate,
                    row.error.as_deref().unwrap_or_default()
                );
            }
            if report.failed() > 0 {
                return Err(Failure::Audit(anyhow::anyhow!("{} audits failed", report.failed())));
            }
        }
        Command::Coverage {
            trials,
            alpha,
            p1,
            samples_n,
        } => {
            let p1 = p1.unwrap_or_else(|| DEFAULT_P1.to_vec());
            let ns = samples_n.unwrap_or_else(|| DEFAULT_N.to_vec());
            let rows = coverage_report(&p1, &ns, alpha, trials, cli.seed.unwrap_or(0)).map_err(Failure::Config)?;
            let out = cli.out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&out).map_err(|e| Failure::Audit(e.into()))?;
            let path = out.join("coverage.csv");
            write_coverage_csv(&rows, &path).map_err(Failure::Audit)?;
            for r in &rows {
                println!("{:?}\tN={}\tp1={}\tcoverage={:.4}", r.method, r.samples_n, r.p1, r.coverage);
            }
            eprintln!("wrote {}", path.display());
        }
        Command::Inspect { config, attack, eps } => {
            let cfg = load(&config, cli.seed)?;
            let seed = cfg.audit.master_seed;
            let ins = inspect(&cfg, attack, eps, seed).map_err(Failure::Config)?;
            let text = serde_json::to_string_pretty(&ins).map_err(|e| Failure::Audit(e.into()))?;
            println!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Audit(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
    }
}
