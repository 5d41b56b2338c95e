use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use see_sim::config::{load_config, SystemConfig};
use see_sim::experiments::{emit_results, run_sweep, SweepSpec, TrialStatus};
use see_sim::Scheme;

/// Secrecy-energy-efficiency Monte-Carlo studies for a RIS-assisted
/// rate-splitting downlink with untrusted energy harvesters.
#[derive(Debug, Parser)]
#[command(name = "see-sim", version, about)]
struct Cli {
    /// TOML configuration file; desk-scale defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-separated schemes to run: rsma, sdma, noma, or "all".
    #[arg(long, default_value = "rsma")]
    scheme: String,

    /// Sweep axis of the form field=v1,v2,... (repeat for a second axis).
    #[arg(long)]
    sweep: Vec<String>,

    /// Channel realizations per sweep point and scheme.
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed; overrides the configured one.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for results.csv and summary.json.
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Directory for per-trial convergence traces (JSON lines).
    #[arg(long)]
    trace_dir: Option<PathBuf>,

    /// Paper-scale study: 100 trials per point instead of 20.
    #[arg(long)]
    full_scale: bool,
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>, String> {
    if text.trim() == "all" {
        return Ok(vec![Scheme::Rsma, Scheme::Sdma, Scheme::Noma]);
    }
    text.split(',')
        .map(|s| match s.trim() {
            "rsma" => Ok(Scheme::Rsma),
            "sdma" => Ok(Scheme::Sdma),
            "noma" => Ok(Scheme::Noma),
            other => Err(format!("unknown scheme '{other}'")),
        })
        .collect()
}

fn run(cli: Cli) -> Result<usize, String> {
    let cfg: SystemConfig = match &cli.config {
        Some(path) => load_config(path).map_err(|e| e.to_string())?,
        None => SystemConfig::desk_scale(),
    };
    let schemes = parse_schemes(&cli.scheme)?;
    let spec = SweepSpec {
        fields: cli
            .sweep
            .iter()
            .map(|axis| SweepSpec::parse_axis(axis))
            .collect::<Result<_, _>>()?,
    };
    let trials = cli.trials.unwrap_or(if cli.full_scale { 100 } else { 20 });
    let master_seed = cli.seed.unwrap_or(cfg.master_seed);

    let reports = run_sweep(
        &cfg,
        &spec,
        &schemes,
        trials,
        master_seed,
        cli.trace_dir.as_deref(),
    )?;
    let (csv_path, json_path) = emit_results(&reports, &cli.out)?;

    let failed = reports.iter().filter(|r| r.status == TrialStatus::Failed).count();
    eprintln!(
        "{} trials ({} failed) -> {} / {}",
        reports.len(),
        failed,
        csv_path.display(),
        json_path.display()
    );
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
