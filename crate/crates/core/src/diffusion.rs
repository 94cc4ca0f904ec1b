//! Non-autonomous diffusion control system
//!
//! `∂y/∂t = a(t,ξ) ∂²y/∂ξ² + sin(y) + η z(t,ξ)` on `(0,π)`,
//! `y(t,0) = y(t,π) = 0`, `y(0,ξ) = φ(ξ)`.

use std::fmt;
use std::sync::Arc;

use crate::control::InputOperator;
use crate::error::{Error, Result};
use crate::evolution::{build_evolution_with, Coefficient, EvolutionOptions, GeneratorSpec, TimeGrid};
use crate::function_space::{LpConfig, SpatialGrid, StateVector};
use crate::linear::{default_lambda_list, validate_lambda_list, LinearProblem};
use crate::semilinear::{free_semilinear_flow, NonlinearitySpec, SemilinearProblem};

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum CoefficientKind {
    Constant(f64),
    TimeOnly(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    SpaceTime(Coefficient),
}

impl CoefficientKind {
    fn handle(&self) -> Coefficient {
        match self {
            CoefficientKind::Constant(c) => {
                let c = *c;
                Arc::new(move |_, _| c)
            }
            CoefficientKind::TimeOnly(g) => {
                let g = g.clone();
                Arc::new(move |t, _| g(t))
            }
            CoefficientKind::SpaceTime(a) => a.clone(),
        }
    }
}

impl fmt::Debug for CoefficientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientKind::Constant(c) => write!(f, "Constant({c})"),
            CoefficientKind::TimeOnly(_) => f.write_str("TimeOnly(..)"),
            CoefficientKind::SpaceTime(_) => f.write_str("SpaceTime(..)"),
        }
    }
}

#[derive(Clone)]
pub enum TargetKind {
    Profile(Profile),
    /// Uncontrolled terminal state plus `amplitude · sin(2ξ)`.
    FreeFlowPerturbation(f64),
}

impl fmt::Debug for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::Profile(_) => f.write_str("Profile(..)"),
            TargetKind::FreeFlowPerturbation(a) => write!(f, "FreeFlowPerturbation({a})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputChoice {
    /// `B u = η u`, requires `η > 0`.
    Gain(f64),
    /// `B = 0`; a degenerate system kept for diagnostics.
    Zero,
}

#[derive(Clone)]
pub struct DiffusionConfig {
    pub a_kind: CoefficientKind,
    pub delta: f64,
    pub holder_exponent: f64,
    pub input: InputChoice,
    pub initial: Profile,
    pub target: TargetKind,
    pub sine_nonlinearity: bool,
    pub n_space: usize,
    pub n_time: usize,
    pub horizon: f64,
    pub p: f64,
    pub lambda_list: Vec<f64>,
}

impl fmt::Debug for DiffusionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionConfig")
            .field("a_kind", &self.a_kind)
            .field("delta", &self.delta)
            .field("input", &self.input)
            .field("target", &self.target)
            .field("sine_nonlinearity", &self.sine_nonlinearity)
            .field("n_space", &self.n_space)
            .field("n_time", &self.n_time)
            .field("horizon", &self.horizon)
            .field("p", &self.p)
            .field("lambda_list", &self.lambda_list)
            .finish_non_exhaustive()
    }
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            a_kind: CoefficientKind::Constant(1.0),
            delta: 1.0,
            holder_exponent: 1.0,
            input: InputChoice::Gain(1.0),
            initial: Arc::new(f64::sin),
            target: TargetKind::Profile(Arc::new(|x| 0.5 * (2.0 * x).sin())),
            sine_nonlinearity: true,
            n_space: 101,
            n_time: 200,
            horizon: 1.0,
            p: 2.0,
            lambda_list: default_lambda_list(),
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        if let InputChoice::Gain(eta) = self.input {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::invalid("eta", format!("must be positive, got {eta}")));
            }
        }
        if self.n_space < 3 {
            return Err(Error::invalid("n_space", "need at least 3 interior nodes"));
        }
        if self.n_time == 0 {
            return Err(Error::invalid("n_time", "need at least one step"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive"));
        }
        validate_lambda_list(&self.lambda_list)
    }
}

/// Assembles the semilinear problem; the linear one is `problem.linear`.
pub fn build_problem(dc: &DiffusionConfig) -> Result<SemilinearProblem> {
    dc.validate()?;
    let cfg = LpConfig::new(dc.p)?;
    let grid = SpatialGrid::uniform(dc.n_space)?;
    let tg = TimeGrid::uniform(dc.horizon, dc.n_time)?;
    let gen = GeneratorSpec::new(grid.clone(), dc.a_kind.handle(), dc.delta, dc.holder_exponent)?;
    let nodes = tg.nodes();
    for j in 0..nodes.len() {
        gen.check_lower_bound_at(nodes[j])?;
        if j + 1 < nodes.len() {
            gen.check_lower_bound_at(0.5 * (nodes[j] + nodes[j + 1]))?;
        }
    }
    let b = match dc.input {
        InputChoice::Gain(eta) => InputOperator::scaled_identity(grid.clone(), eta, cfg)?,
        InputChoice::Zero => InputOperator::zero(grid.clone()),
    };
    let initial = dc.initial.clone();
    let x0 = StateVector::from_fn(grid.clone(), |x| initial(x))?;
    let nl = if dc.sine_nonlinearity {
        NonlinearitySpec::sine(&grid, cfg)
    } else {
        NonlinearitySpec::zero()
    };
    let placeholder = StateVector::zeros(grid.clone());
    let lp = LinearProblem::new(gen, b, x0, placeholder, tg.clone(), cfg)?;
    let mut sp = SemilinearProblem::new(lp, nl);
    sp.linear.xt = match &dc.target {
        TargetKind::Profile(f) => StateVector::from_fn(grid.clone(), |x| f(x))?,
        TargetKind::FreeFlowPerturbation(amplitude) => {
            let u_op = build_evolution_with(&sp.linear.gen, &tg, EvolutionOptions { cache_terminal: false })?;
            let flow = free_semilinear_flow(&sp, &u_op)?;
            let bump = StateVector::from_fn(grid.clone(), |x| amplitude * (2.0 * x).sin())?;
            flow.terminal().add(&bump)?
        }
    };
    Ok(sp)
}

/// Empirical `sup ‖a(t,·) − a(s,·)‖_∞ / |t − s|^μ` over all pairs of
/// `sample_count` equispaced times in `[0, T]`, with `ξ` on the config grid.
pub fn holder_estimate(dc: &DiffusionConfig, sample_count: usize) -> f64 {
    if let CoefficientKind::Constant(_) = dc.a_kind {
        return 0.0;
    }
    let a = dc.a_kind.handle();
    let s = sample_count.max(2);
    let h = std::f64::consts::PI / (dc.n_space as f64 + 1.0);
    let xis: Vec<f64> = (1..=dc.n_space).map(|i| i as f64 * h).collect();
    let times: Vec<f64> = (0..s).map(|i| dc.horizon * i as f64 / (s - 1) as f64).collect();
    let rows: Vec<Vec<f64>> = times.iter().map(|&t| xis.iter().map(|&x| a(t, x)).collect()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..s {
        for j in i + 1..s {
            let diff = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            worst = worst.max(diff / (times[j] - times[i]).powf(dc.holder_exponent));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HolderDiagnostic {
    pub estimate: f64,
    pub refined_estimate: f64,
    /// The estimate kept growing under sample refinement, so the declared
    /// exponent looks too large for this coefficient.
    pub advisory: bool,
}

pub fn holder_diagnostic(dc: &DiffusionConfig, sample_count: usize) -> HolderDiagnostic {
    let estimate = holder_estimate(dc, sample_count);
    let refined_estimate = holder_estimate(dc, 2 * sample_count);
    HolderDiagnostic {
        estimate,
        refined_estimate,
        advisory: refined_estimate > 1.1 * estimate + 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::lp_norm;

    #[test]
    fn default_builds() {
        let sp = build_problem(&DiffusionConfig::default()).unwrap();
        assert_eq!(sp.linear.x0.len(), 101);
        assert_eq!(sp.linear.tg.n_steps(), 200);
        let ones = StateVector::from_fn(sp.linear.x0.grid().clone(), |_| 1.0).unwrap();
        assert_eq!(sp.nl.bound(), lp_norm(&ones, sp.linear.cfg));
    }

    #[test]
    fn space_time_coefficient_at_bound_is_accepted() {
        let dc = DiffusionConfig {
            a_kind: CoefficientKind::SpaceTime(Arc::new(|t: f64, x: f64| 2.0 + t.sin() * x.cos())),
            delta: 1.0,
            n_space: 21,
            n_time: 20,
            ..Default::default()
        };
        assert!(build_problem(&dc).is_ok());
    }

    #[test]
    fn coefficient_below_bound_is_rejected_at_first_node() {
        let dc = DiffusionConfig {
            a_kind: CoefficientKind::TimeOnly(Arc::new(|t| t - 1.0)),
            delta: 0.1,
            horizon: 2.0,
            n_space: 11,
            n_time: 20,
            ..Default::default()
        };
        match build_problem(&dc) {
            Err(Error::CoefficientBelowBound { t, .. }) => assert_eq!(t, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_positive_gain_rejected() {
        let dc = DiffusionConfig {
            input: InputChoice::Gain(0.0),
            ..Default::default()
        };
        assert!(build_problem(&dc).is_err());
    }

    #[test]
    fn holder_estimates() {
        let mut dc = DiffusionConfig {
            n_space: 11,
            ..Default::default()
        };
        assert_eq!(holder_estimate(&dc, 32), 0.0);
        dc.a_kind = CoefficientKind::TimeOnly(Arc::new(|t: f64| 2.0 + t.sin()));
        let lip = holder_estimate(&dc, 64);
        assert!(lip <= 1.0 + 1e-12 && lip > 0.9);
        assert!(!holder_diagnostic(&dc, 64).advisory);
        dc.a_kind = CoefficientKind::TimeOnly(Arc::new(|t: f64| 2.0 + t.sqrt()));
        let d = holder_diagnostic(&dc, 64);
        assert!(d.estimate > 7.0);
        assert!(d.advisory);
    }

    #[test]
    fn free_flow_target_is_reachable_without_control() {
        let dc = DiffusionConfig {
            target: TargetKind::FreeFlowPerturbation(0.0),
            n_space: 15,
            n_time: 20,
            ..Default::default()
        };
        let sp = build_problem(&dc).unwrap();
        assert!(lp_norm(&sp.linear.xt, sp.linear.cfg) > 0.1);
    }
}
