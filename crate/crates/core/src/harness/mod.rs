//! Configuration-driven experiment runner.
//!
//! A run builds the diffusion problem, its evolution operator and Gramian,
//! certifies the Gramian, then either sweeps `λ` (linear or semilinear) or
//! runs the invariant suites. Outputs are a CSV per sweep, a JSON report
//! and a separate JSON file of stage timings; the first two depend only on
//! the configuration and seed.

pub mod config;
pub mod suites;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::control::{assemble_gramian, positivity_certificate, Positivity};
use crate::diffusion::{build_problem, holder_diagnostic, CoefficientKind, HolderDiagnostic};
use crate::error::{Error, Result};
use crate::evolution::build_evolution;
use crate::function_space::lp_norm;
use crate::linear::{lambda_sweep_with, target_defect, SweepRecord, SweepReport};
use crate::semilinear::semilinear_lambda_sweep;

pub use config::{ExperimentConfig, Format, Mode};
pub use suites::{run_suites, CheckResult, SuiteContext};

pub const CSV_HEADER: &str = "lambda,terminal_error,control_energy,resolvent_iters,fixedpoint_iters,identity_defect";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    VerificationFailed,
    NumericalFailure,
    NotControllable,
}

impl RunStatus {
    /// Process exit code: 0 success, 2 verification failure, 3 numerical
    /// failure in a gating stage. Usage errors (1) never reach a report.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::VerificationFailed => 2,
            RunStatus::NumericalFailure | RunStatus::NotControllable => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub status: RunStatus,
    /// Reason code of the failure that decided the status.
    pub reason: Option<String>,
    pub gramian_hash: Option<String>,
    pub positivity: Option<Positivity>,
    pub target_defect_norm: Option<f64>,
    pub holder: Option<HolderDiagnostic>,
    pub sweep: Option<SweepReport>,
    pub verification: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub timings: Vec<StageTiming>,
    pub files: Vec<PathBuf>,
}

struct Stopwatch {
    timings: Vec<StageTiming>,
    last: Instant,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            timings: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

/// Runs the whole pipeline and writes the configured outputs.
///
/// Configuration and I/O problems are returned as errors; numerical
/// outcomes, including failures, are recorded in the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let (report, timings) = execute(cfg)?;
    let files = write_outputs(&report, &timings, &cfg.output.dir, &cfg.output.formats)?;
    Ok(RunOutcome { report, timings, files })
}

/// Runs the pipeline without writing anything.
pub fn execute(cfg: &ExperimentConfig) -> Result<(RunReport, Vec<StageTiming>)> {
    let mut clock = Stopwatch::new();
    let mut report = RunReport {
        config: cfg.clone(),
        status: RunStatus::Ok,
        reason: None,
        gramian_hash: None,
        positivity: None,
        target_defect_norm: None,
        holder: None,
        sweep: None,
        verification: Vec::new(),
    };
    let fail = |mut report: RunReport, status: RunStatus, code: &str, clock: Stopwatch| {
        report.status = status;
        report.reason = Some(code.to_string());
        Ok((report, clock.timings))
    };

    let dc = cfg.diffusion_config();
    if !matches!(dc.a_kind, CoefficientKind::Constant(_)) {
        report.holder = Some(holder_diagnostic(&dc, 64));
    }
    let problem = match build_problem(&dc) {
        Ok(p) => p,
        Err(e @ (Error::CoefficientBelowBound { .. } | Error::InvalidParameter { .. })) => {
            return Err(Error::Config {
                path: "diffusion".into(),
                reason: e.to_string(),
            })
        }
        Err(e) => return fail(report, RunStatus::NumericalFailure, e.code(), clock),
    };
    clock.lap("build");

    let u_op = match build_evolution(&problem.linear.gen, &problem.linear.tg) {
        Ok(u) => u,
        Err(e) => return fail(report, RunStatus::NumericalFailure, e.code(), clock),
    };
    clock.lap("evolution");

    let gram = match assemble_gramian(&u_op, &problem.linear.b) {
        Ok(g) => g,
        Err(e) => return fail(report, RunStatus::NumericalFailure, e.code(), clock),
    };
    report.gramian_hash = Some(gram.build_hash().to_string());
    clock.lap("gramian");

    let positivity = match positivity_certificate(&gram) {
        Ok(p) => p,
        Err(e) => return fail(report, RunStatus::NumericalFailure, e.code(), clock),
    };
    report.positivity = Some(positivity);
    clock.lap("certificate");

    let defect = target_defect(&problem.linear, &u_op)?;
    let defect_norm = lp_norm(&defect, problem.linear.cfg);
    report.target_defect_norm = Some(defect_norm);

    let template = cfg.resolvent_template();
    let fp = cfg.fixed_point();
    match cfg.mode {
        Mode::Verify => {
            let ctx = SuiteContext {
                problem: &problem,
                u_op: &u_op,
                gram: &gram,
                resolvent: template,
                fixed_point: fp,
                seed: cfg.seed,
            };
            report.verification = run_suites(&ctx);
            clock.lap("verification");
        }
        Mode::Linear | Mode::Semilinear => {
            if !positivity.is_positive() {
                return fail(report, RunStatus::NotControllable, "gramian_not_positive", clock);
            }
            let lambdas = &cfg.diffusion.lambda_list;
            let sweep = if cfg.mode == Mode::Linear {
                lambda_sweep_with(&problem.linear, &u_op, &gram, lambdas, &template)?
            } else {
                semilinear_lambda_sweep(&problem, &u_op, &gram, lambdas, &template, &fp)?
            };
            clock.lap("sweep");
            report.verification = sweep_checks(&sweep, defect_norm, problem.linear.cfg.is_hilbert(), cfg.mode);
            report.sweep = Some(sweep);
            clock.lap("verification");
        }
    }
    if report.verification.iter().any(CheckResult::fails_gate) {
        let code = report
            .verification
            .iter()
            .find(|c| c.fails_gate())
            .and_then(|c| c.reason.clone())
            .unwrap_or_else(|| "verification_failed".into());
        report.status = RunStatus::VerificationFailed;
        report.reason = Some(code);
    }
    Ok((report, clock.timings))
}

/// Checks on a finished sweep: the terminal identity at every successful
/// `λ` and, for the linear sweep, a non-increasing terminal error.
fn sweep_checks(sweep: &SweepReport, defect_norm: f64, hilbert: bool, mode: Mode) -> Vec<CheckResult> {
    let suite = match mode {
        Mode::Linear => "linear_sweep",
        _ => "semilinear_sweep",
    };
    let ok: Vec<&SweepRecord> = sweep.records.iter().filter(|r| r.succeeded()).collect();
    let rel = |v: f64| if defect_norm > 0.0 { v / defect_norm } else { v };
    let identity = ok.iter().map(|r| rel(r.identity_defect)).fold(0.0, f64::max);
    let tol = if mode == Mode::Linear && hilbert { 1e-6 } else { 1e-5 };
    let mut out = vec![CheckResult::at_most(suite, "identity_defect", identity, tol)];
    let increase = ok
        .windows(2)
        .map(|w| w[1].terminal_error - w[0].terminal_error)
        .fold(0.0, f64::max);
    let mono = CheckResult::at_most(suite, "terminal_error_increase", increase, 1e-9);
    out.push(if mode == Mode::Linear { mono } else { mono.advisory() });
    let failures = sweep.records.len() - ok.len();
    out.push(CheckResult::at_most(suite, "failed_points", failures as f64, 0.0).advisory());
    out
}

/// `{:.16e}` keeps 17 significant digits, enough to round-trip any `f64`.
fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn csv_string(report: &SweepReport) -> String {
    let mut s = String::with_capacity(64 * (report.records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in &report.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_float(r.lambda),
            fmt_float(r.terminal_error),
            fmt_float(r.control_energy),
            r.resolvent_iters,
            r.fixedpoint_iters,
            fmt_float(r.identity_defect)
        );
    }
    s
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

pub fn emit_csv(report: &SweepReport, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(report)).map_err(|e| io_error(path, e))
}

/// Parses a file written by [`emit_csv`]; failure codes are not stored in
/// the CSV and come back as `None`.
pub fn parse_csv(text: &str) -> Result<SweepReport> {
    let bad = |line: usize, reason: &str| Error::Config {
        path: format!("csv line {line}"),
        reason: reason.into(),
    };
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(k + 2, "expected 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(k + 2, "bad float"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(k + 2, "bad integer"));
        records.push(SweepRecord {
            lambda: num(f[0])?,
            terminal_error: num(f[1])?,
            control_energy: num(f[2])?,
            resolvent_iters: int(f[3])?,
            fixedpoint_iters: int(f[4])?,
            identity_defect: num(f[5])?,
            failure: None,
        });
    }
    Ok(SweepReport { records })
}

pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn write_outputs(report: &RunReport, timings: &[StageTiming], dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut files = Vec::new();
    if formats.contains(&Format::Csv) {
        if let Some(sweep) = &report.sweep {
            let name = match report.config.mode {
                Mode::Semilinear => "semilinear_sweep.csv",
                _ => "linear_sweep.csv",
            };
            let path = dir.join(name);
            emit_csv(sweep, &path)?;
            files.push(path);
        }
    }
    if formats.contains(&Format::Json) {
        let path = dir.join("report.json");
        std::fs::write(&path, report_json(report)).map_err(|e| io_error(&path, e))?;
        files.push(path);
        let path = dir.join("timings.json");
        let text = serde_json::to_string_pretty(timings).expect("timings serialize");
        std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        files.push(path);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(lambda: f64) -> SweepRecord {
        SweepRecord {
            lambda,
            terminal_error: 0.1 * lambda + 1e-300,
            control_energy: std::f64::consts::PI / lambda,
            resolvent_iters: 3,
            fixedpoint_iters: 7,
            identity_defect: 1.0 / 3.0,
            failure: None,
        }
    }

    #[test]
    fn csv_shapes() {
        let empty = csv_string(&SweepReport::default());
        assert_eq!(empty, format!("{CSV_HEADER}\n"));
        let one = csv_string(&SweepReport { records: vec![record(0.1)] });
        assert_eq!(one.lines().count(), 2);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rep = SweepReport {
            records: vec![record(1.0), record(0.1), record(1e-4)],
        };
        assert_eq!(parse_csv(&csv_string(&rep)).unwrap(), rep);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunStatus::Ok.exit_code(), 0);
        assert_eq!(RunStatus::VerificationFailed.exit_code(), 2);
        assert_eq!(RunStatus::NotControllable.exit_code(), 3);
    }

    #[test]
    fn unwritable_path_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.csv");
        match emit_csv(&SweepReport::default(), &path) {
            Err(Error::Io { path: p, .. }) => assert!(p.ends_with("x.csv")),
            other => panic!("{other:?}"),
        }
    }
}
