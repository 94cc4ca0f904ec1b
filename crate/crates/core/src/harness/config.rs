use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diffusion::{CoefficientKind, DiffusionConfig, InputChoice, Profile, TargetKind};
use crate::error::{Error, Result};
use crate::linear::{default_lambda_list, validate_lambda_list};
use crate::resolvent::ResolventConfig;
use crate::semilinear::FixedPointConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Linear,
    Semilinear,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientFamily {
    /// `a = c0`
    Constant,
    /// `a = c0 + c1 sin t`
    TimeSine,
    /// `a = c0 + c1 sin t cos ξ`
    SpaceTime,
    /// `a = c0 + c1 √t`
    SqrtTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientSection {
    pub kind: CoefficientFamily,
    pub c0: f64,
    pub c1: f64,
}

impl Default for CoefficientSection {
    fn default() -> Self {
        Self {
            kind: CoefficientFamily::Constant,
            c0: 1.0,
            c1: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    /// `Σ amplitudes[k] sin(modes[k] ξ)`
    SineSeries,
    /// `amplitude · 4ξ(π − ξ)/π²`
    Parabola,
    Zero,
    /// Target only: uncontrolled terminal state plus `amplitude · sin 2ξ`.
    FreeFlow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub kind: ProfileFamily,
    pub modes: Vec<u32>,
    pub amplitudes: Vec<f64>,
    pub amplitude: f64,
}

impl ProfileSection {
    fn sine(mode: u32, amplitude: f64) -> Self {
        Self {
            kind: ProfileFamily::SineSeries,
            modes: vec![mode],
            amplitudes: vec![amplitude],
            amplitude: 1.0,
        }
    }
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self::sine(1, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSection {
    Gain,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearitySection {
    Sine,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionSection {
    pub n_space: usize,
    pub n_time: usize,
    pub horizon: f64,
    pub p: f64,
    pub input: InputSection,
    pub eta: f64,
    pub delta: f64,
    pub holder_exponent: f64,
    pub nonlinearity: NonlinearitySection,
    pub lambda_list: Vec<f64>,
    pub coefficient: CoefficientSection,
    pub initial: ProfileSection,
    pub target: ProfileSection,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self {
            n_space: 101,
            n_time: 200,
            horizon: 1.0,
            p: 2.0,
            input: InputSection::Gain,
            eta: 1.0,
            delta: 1.0,
            holder_exponent: 1.0,
            nonlinearity: NonlinearitySection::Sine,
            lambda_list: default_lambda_list(),
            coefficient: CoefficientSection::default(),
            initial: ProfileSection::sine(1, 1.0),
            target: ProfileSection::sine(2, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_iter: usize,
    /// Absolute residual tolerance; omitted means `1e−10 (1 + ‖h‖_p)`.
    pub tol: Option<f64>,
    pub damping: f64,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub relaxation: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let fp = FixedPointConfig::default();
        Self {
            max_iter: 200,
            tol: None,
            damping: 0.5,
            fixed_point_tol: fp.tol,
            fixed_point_max_iter: fp.max_iter,
            relaxation: fp.relaxation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub diffusion: DiffusionSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Verify,
            seed: 0,
            diffusion: DiffusionSection::default(),
            solver: SolverSection::default(),
            output: OutputSection::default(),
        }
    }
}

fn config_error(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| {
                    let line = text[..s.start.min(text.len())].lines().count().max(1);
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<config>".into());
            config_error(path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.diffusion;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(format!("diffusion.{name}"), format!("must be positive, got {v}")))
            }
        };
        positive("horizon", d.horizon)?;
        positive("delta", d.delta)?;
        if d.input == InputSection::Gain {
            positive("eta", d.eta)?;
        }
        if d.n_space < 3 {
            return Err(config_error("diffusion.n_space", "need at least 3 interior nodes"));
        }
        if d.n_time == 0 {
            return Err(config_error("diffusion.n_time", "need at least one step"));
        }
        if !(d.p >= 2.0 && d.p.is_finite()) {
            return Err(config_error("diffusion.p", format!("must be ≥ 2, got {}", d.p)));
        }
        if !(d.holder_exponent > 0.0 && d.holder_exponent <= 1.0) {
            return Err(config_error("diffusion.holder_exponent", "must lie in (0, 1]"));
        }
        validate_lambda_list(&d.lambda_list).map_err(|e| config_error("diffusion.lambda_list", reason_of(&e)))?;
        check_profile("diffusion.initial", &d.initial, false)?;
        check_profile("diffusion.target", &d.target, true)?;
        self.resolvent_template()
            .validate()
            .map_err(|e| config_error("solver", reason_of(&e)))?;
        self.fixed_point()
            .validate()
            .map_err(|e| config_error("solver", reason_of(&e)))?;
        if self.output.formats.is_empty() {
            return Err(config_error("output.formats", "need at least one format"));
        }
        Ok(())
    }

    pub fn resolvent_template(&self) -> ResolventConfig {
        ResolventConfig {
            lambda: 1.0,
            max_iter: self.solver.max_iter,
            tol: self.solver.tol,
            damping: self.solver.damping,
        }
    }

    pub fn fixed_point(&self) -> FixedPointConfig {
        FixedPointConfig {
            tol: self.solver.fixed_point_tol,
            max_iter: self.solver.fixed_point_max_iter,
            relaxation: self.solver.relaxation,
        }
    }

    pub fn diffusion_config(&self) -> DiffusionConfig {
        let d = &self.diffusion;
        let (c0, c1) = (d.coefficient.c0, d.coefficient.c1);
        let a_kind = match d.coefficient.kind {
            CoefficientFamily::Constant => CoefficientKind::Constant(c0),
            CoefficientFamily::TimeSine => CoefficientKind::TimeOnly(Arc::new(move |t: f64| c0 + c1 * t.sin())),
            CoefficientFamily::SpaceTime => {
                CoefficientKind::SpaceTime(Arc::new(move |t: f64, x: f64| c0 + c1 * t.sin() * x.cos()))
            }
            CoefficientFamily::SqrtTime => CoefficientKind::TimeOnly(Arc::new(move |t: f64| c0 + c1 * t.sqrt())),
        };
        let target = match d.target.kind {
            ProfileFamily::FreeFlow => TargetKind::FreeFlowPerturbation(d.target.amplitude),
            _ => TargetKind::Profile(profile(&d.target)),
        };
        DiffusionConfig {
            a_kind,
            delta: d.delta,
            holder_exponent: d.holder_exponent,
            input: match d.input {
                InputSection::Gain => InputChoice::Gain(d.eta),
                InputSection::Zero => InputChoice::Zero,
            },
            initial: profile(&d.initial),
            target,
            sine_nonlinearity: d.nonlinearity == NonlinearitySection::Sine,
            n_space: d.n_space,
            n_time: d.n_time,
            horizon: d.horizon,
            p: d.p,
            lambda_list: d.lambda_list.clone(),
        }
    }
}

fn reason_of(e: &Error) -> String {
    match e {
        Error::InvalidParameter { name, reason } => format!("{name}: {reason}"),
        other => other.to_string(),
    }
}

fn check_profile(path: &str, p: &ProfileSection, target: bool) -> Result<()> {
    match p.kind {
        ProfileFamily::SineSeries => {
            if p.modes.len() != p.amplitudes.len() {
                return Err(config_error(
                    format!("{path}.amplitudes"),
                    format!("{} amplitudes for {} modes", p.amplitudes.len(), p.modes.len()),
                ));
            }
            if p.modes.contains(&0) {
                return Err(config_error(format!("{path}.modes"), "modes start at 1"));
            }
            if p.amplitudes.iter().any(|a| !a.is_finite()) {
                return Err(config_error(format!("{path}.amplitudes"), "must be finite"));
            }
        }
        ProfileFamily::FreeFlow if !target => {
            return Err(config_error(format!("{path}.kind"), "free_flow is only valid for the target"));
        }
        _ => {
            if !p.amplitude.is_finite() {
                return Err(config_error(format!("{path}.amplitude"), "must be finite"));
            }
        }
    }
    Ok(())
}

fn profile(p: &ProfileSection) -> Profile {
    match p.kind {
        ProfileFamily::SineSeries => {
            let terms: Vec<(f64, f64)> = p.modes.iter().map(|&m| m as f64).zip(p.amplitudes.iter().copied()).collect();
            Arc::new(move |x: f64| terms.iter().map(|(m, a)| a * (m * x).sin()).sum())
        }
        ProfileFamily::Parabola => {
            let a = p.amplitude;
            let pi = std::f64::consts::PI;
            Arc::new(move |x: f64| a * 4.0 * x * (pi - x) / (pi * pi))
        }
        ProfileFamily::Zero | ProfileFamily::FreeFlow => Arc::new(|_| 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.mode = Mode::Semilinear;
        cfg.diffusion.coefficient.kind = CoefficientFamily::SpaceTime;
        cfg.diffusion.coefficient.c0 = 2.0;
        cfg.diffusion.coefficient.c1 = 1.0;
        cfg.solver.tol = Some(1e-11);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_carry_field_paths() {
        let e = ExperimentConfig::from_toml_str("[diffusion]\neta = -1.0\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "diffusion.eta"), "{e:?}");
        let e = ExperimentConfig::from_toml_str("[diffusion]\nlambda_list = [0.1, 1.0]\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "diffusion.lambda_list"));
        let e = ExperimentConfig::from_toml_str("[diffusion.initial]\nkind = \"free_flow\"\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "diffusion.initial.kind"));
        let e = ExperimentConfig::from_toml_str("mode = \"fast\"\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "line 1"));
        assert!(ExperimentConfig::from_toml_str("[diffusion]\nbogus = 1\n").is_err());
    }

    #[test]
    fn profiles_evaluate() {
        let p = ProfileSection {
            kind: ProfileFamily::SineSeries,
            modes: vec![1, 3],
            amplitudes: vec![1.0, 0.5],
            amplitude: 0.0,
        };
        let f = profile(&p);
        let x: f64 = 0.7;
        assert!((f(x) - (x.sin() + 0.5 * (3.0 * x).sin())).abs() < 1e-15);
        let par = profile(&ProfileSection {
            kind: ProfileFamily::Parabola,
            amplitude: 2.0,
            ..Default::default()
        });
        assert!((par(std::f64::consts::FRAC_PI_2) - 2.0).abs() < 1e-15);
    }
}
