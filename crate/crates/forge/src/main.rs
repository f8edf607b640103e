use std::path::PathBuf;
use std::process::ExitCode;

use carleman_forge::{exit, run, Campaign, ForgeError, RayonExecutor, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carleman-forge", version, about = "Weight/phase verification campaigns and resolvent sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaigns of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's campaign.
        #[arg(long, value_enum)]
        campaign: Option<Campaign>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dump_weights: bool,
        #[arg(long)]
        dump_margins: bool,
        #[arg(long)]
        dump_modes: bool,
        /// Worker threads (default: available parallelism).
        #[arg(long, env = "CARLEMAN_FORGE_JOBS")]
        jobs: Option<usize>,
    },
    /// Print the full default config.
    Defaults,
}

fn main() -> ExitCode {
    // clap's own usage-error code (2) would collide with "verification failed".
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Defaults => {
            println!(
                "{}",
                serde_json::to_string_pretty(&RunConfig::default()).expect("default config serialises")
            );
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            campaign,
            out,
            dump_weights,
            dump_margins,
            dump_modes,
            jobs,
        } => {
            let code = match run_cli(config, campaign, out, dump_weights, dump_margins, dump_modes, jobs) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            };
            ExitCode::from(code as u8)
        }
    }
}

fn run_cli(
    config: PathBuf,
    campaign: Option<Campaign>,
    out: Option<PathBuf>,
    dump_weights: bool,
    dump_margins: bool,
    dump_modes: bool,
    jobs: Option<usize>,
) -> Result<i32, ForgeError> {
    let mut cfg = RunConfig::load(&config)?;
    if let Some(c) = campaign {
        cfg.campaign = c;
    }
    if let Some(o) = out {
        cfg.output.directory = o;
    }
    cfg.output.dump_weights |= dump_weights;
    cfg.output.dump_margins |= dump_margins;
    cfg.output.dump_modes |= dump_modes;
    if jobs == Some(0) {
        return Err(ForgeError::Config("--jobs must be >= 1".into()));
    }
    let exec = RayonExecutor::new(jobs.or(cfg.jobs))
        .map_err(|e| ForgeError::Config(format!("thread pool: {e}")))?;
    let report = run(&cfg, &exec)?;
    for c in &report.campaigns {
        println!(
            "{:<18} {}{}",
            c.campaign.name(),
            if c.passed { "PASS" } else { "FAIL" },
            c.failures.first().map(|f| format!("  ({f})")).unwrap_or_default()
        );
    }
    println!(
        "reports in {} (exit {})",
        cfg.output.directory.display(),
        report.exit_code
    );
    debug_assert!([exit::PASS, exit::VERIFICATION_FAILED, exit::CONFIG, exit::NUMERIC].contains(&report.exit_code));
    Ok(report.exit_code)
}
