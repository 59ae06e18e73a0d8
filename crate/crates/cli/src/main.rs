use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpp_cli::config::ensure_dir;
use fpp_cli::{ensemble, init_threads, mart, report, verify, CliError, CliResult, ConfigArgs, Outcome, Suite};

/// First-passage percolation experiments and exact verifiers.
#[derive(Parser, Debug)]
#[command(name = "fpp", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FPP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo ensemble: writes ensemble.csv, summary.json and plot.gp.
    Run(ConfigArgs),
    /// Runs an exact verifier over sampled configurations.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Martingale difference traces at the first n: writes martingale.json.
    Martingale(ConfigArgs),
    /// Consolidates the summaries in a directory into report.md.
    Report { dir: PathBuf },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve(cli.threads)?;
            init_threads(cfg.threads)?;
            let (ens, summary) = ensemble::run(&cfg)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            ensemble::write(&cfg.out, &ens, &summary)?;
            for e in &summary.entries {
                println!("{} n={} N={} mean={} var={}", e.quantity, e.n, e.replicas, e.mean, e.var);
            }
            println!("wrote {}", cfg.out.display());
            Ok(())
        }
        Command::Verify { suite, config } => {
            let explicit_out = config.out.is_some();
            let cfg = config.resolve(cli.threads)?;
            init_threads(cfg.threads)?;
            let summary = verify(suite, &cfg)?;
            for r in &summary.reports {
                println!("{}", r.summary_line());
                for f in &r.failures {
                    println!("  fail replica {} seed {}: {}", f.replica, f.seed, f.message);
                }
                if r.outcome() == Outcome::AllSkip {
                    println!("  all checks skipped: preconditions never held");
                    if let Some(s) = r.skips.first() {
                        println!("  e.g. {}", s.message);
                    }
                }
            }
            if explicit_out {
                ensure_dir(&cfg.out)?;
                let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
                std::fs::write(cfg.out.join(format!("verify_{suite}.json")), json + "\n")?;
            }
            let failed: usize = summary.reports.iter().map(|r| r.fail).sum();
            if failed > 0 {
                return Err(CliError::Verification(format!("{suite}: {failed} checks failed")));
            }
            Ok(())
        }
        Command::Martingale(args) => {
            let cfg = args.resolve(cli.threads)?;
            init_threads(cfg.threads)?;
            let s = mart::run(&cfg)?;
            for k in &s.skipped {
                eprintln!("warning: skipped base {} (seed {}): {}", k.replica, k.seed, k.reason);
            }
            mart::write(&cfg.out, &s)?;
            println!(
                "n={} bases={} max|diff|={} C={} zero after hit: {} telescoping residual: {}",
                s.n,
                s.traces.len(),
                s.max_abs_difference,
                s.difference_constant,
                s.zero_after_hit,
                s.max_telescoping_residual
            );
            for l in &s.levels {
                println!("  k={} bases={} mean={} stderr={}", l.k, l.bases, l.mean, l.stderr);
            }
            println!("wrote {}", cfg.out.join("martingale.json").display());
            Ok(())
        }
        Command::Report { dir } => {
            let (path, _) = report::report(&dir)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
