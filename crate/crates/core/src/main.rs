use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lpcontrol::harness::{run_experiment, ExperimentConfig, Mode, RunStatus};

/// Regularized approximate-control experiments for the non-autonomous
/// diffusion system.
#[derive(Debug, Parser)]
#[command(name = "lpcontrol", version)]
struct Cli {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides `mode` from the configuration.
    #[arg(long, value_enum)]
    mode: Option<Mode>,

    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for randomized probes; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated decreasing λ values; overrides `diffusion.lambda_list`.
    #[arg(long, value_delimiter = ',')]
    lambda_list: Option<Vec<f64>>,
}

const USAGE: u8 = 1;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(USAGE);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(list) = cli.lambda_list {
        cfg.diffusion.lambda_list = list;
    }

    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e @ (lpcontrol::Error::Config { .. } | lpcontrol::Error::InvalidParameter { .. })) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };

    let report = &outcome.report;
    if let Some(p) = &report.positivity {
        println!(
            "gramian: min eigenvalue {:.6e}, max {:.6e}, positive: {}",
            p.min_eigenvalue,
            p.max_eigenvalue,
            p.is_positive()
        );
    }
    if let Some(sweep) = &report.sweep {
        for r in &sweep.records {
            match &r.failure {
                None => println!(
                    "lambda {:.3e}: terminal error {:.6e}, energy {:.6e}",
                    r.lambda, r.terminal_error, r.control_energy
                ),
                Some(code) => println!("lambda {:.3e}: failed ({code})", r.lambda),
            }
        }
    }
    for c in report.verification.iter().filter(|c| !c.passed) {
        let tag = if c.gating { "FAIL" } else { "advisory" };
        println!("{tag}: {}/{} = {:.3e} (threshold {:.3e})", c.suite, c.name, c.value, c.threshold);
    }
    match report.status {
        RunStatus::Ok => println!("status: ok"),
        RunStatus::NotControllable => println!("status: not controllable (Gramian is not positive); sweep skipped"),
        s => println!("status: {s:?} ({})", report.reason.as_deref().unwrap_or("")),
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    ExitCode::from(report.status.exit_code() as u8)
}
