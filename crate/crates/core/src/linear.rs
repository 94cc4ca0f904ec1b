//! Regularized feedback synthesis for the linear system `x' = A(t)x + Bu`.
//!
//! Given the defect `p = x_T − U(T,0)x₀`, the control
//! `u(t) = B* U(T,t)* J[R(λ,Λ_T) p]` with `R(λ,Λ_T)p = z_λ(p)/λ` drives the
//! state to `x(T) = x_T − z_λ(p)`.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{controllability_map, controllability_map_adjoint, ControlSignal, GramianOperator, InputOperator};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionOperator, GeneratorSpec, TimeGrid};
use crate::function_space::{duality_map, lp_norm, pairing, same_grid, LpConfig, StateVector};
use crate::resolvent::{solve_resolvent, ResolventConfig, ResolventSolution};

#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub gen: GeneratorSpec,
    pub b: InputOperator,
    pub x0: StateVector,
    pub xt: StateVector,
    pub tg: Arc<TimeGrid>,
    pub cfg: LpConfig,
}

impl LinearProblem {
    pub fn new(
        gen: GeneratorSpec,
        b: InputOperator,
        x0: StateVector,
        xt: StateVector,
        tg: Arc<TimeGrid>,
        cfg: LpConfig,
    ) -> Result<Self> {
        same_grid(gen.grid(), x0.grid())?;
        same_grid(gen.grid(), xt.grid())?;
        same_grid(gen.grid(), b.state_grid())?;
        Ok(Self {
            gen,
            b,
            x0,
            xt,
            tg,
            cfg,
        })
    }

    fn check_operator(&self, u_op: &EvolutionOperator) -> Result<()> {
        same_grid(self.gen.grid(), u_op.grid())?;
        if u_op.time_grid() != &self.tg {
            return Err(Error::GridMismatch("problem and evolution use different time grids".into()));
        }
        Ok(())
    }
}

/// States at every time node.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    time_grid: Arc<TimeGrid>,
    states: Vec<StateVector>,
}

impl StateTrajectory {
    pub fn new(time_grid: Arc<TimeGrid>, states: Vec<StateVector>) -> Result<Self> {
        if states.len() != time_grid.len() {
            return Err(Error::DimensionMismatch {
                what: "trajectory states",
                expected: time_grid.len(),
                got: states.len(),
            });
        }
        for s in &states[1..] {
            same_grid(states[0].grid(), s.grid())?;
        }
        Ok(Self { time_grid, states })
    }

    pub(crate) fn from_raw(time_grid: Arc<TimeGrid>, grid: &Arc<crate::function_space::SpatialGrid>, raw: Vec<DVector<f64>>) -> Self {
        let states = raw.into_iter().map(|v| StateVector::from_raw(grid.clone(), v)).collect();
        Self { time_grid, states }
    }

    pub fn time_grid(&self) -> &Arc<TimeGrid> {
        &self.time_grid
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &StateVector {
        &self.states[k]
    }

    pub fn terminal(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least two nodes")
    }

    /// `sup_k ‖x(t_k) − y(t_k)‖_p`.
    pub fn sup_distance(&self, other: &StateTrajectory, cfg: LpConfig) -> Result<f64> {
        if self.time_grid != other.time_grid {
            return Err(Error::GridMismatch("trajectories use different time grids".into()));
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.states.iter().zip(&other.states) {
            worst = worst.max(lp_norm(&a.sub(b)?, cfg));
        }
        Ok(worst)
    }

    /// `sup_k ‖x(t_k)‖_p`.
    pub fn sup_norm(&self, cfg: LpConfig) -> f64 {
        self.states.iter().map(|s| lp_norm(s, cfg)).fold(0.0, f64::max)
    }
}

/// Feedback control together with the resolvent solve that produced it.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub defect: StateVector,
    pub resolvent: ResolventSolution,
    pub control: ControlSignal,
}

/// `x_T − U(T,0)x₀`.
pub fn target_defect(lp: &LinearProblem, u_op: &EvolutionOperator) -> Result<StateVector> {
    lp.check_operator(u_op)?;
    let free = u_op.apply(u_op.n_steps(), 0, &lp.x0)?;
    lp.xt.sub(&free)
}

/// Control `B* U(T,t_j)* J[z/λ]` for a resolvent solution `z`.
pub(crate) fn control_from_resolvent(
    u_op: &EvolutionOperator,
    b: &InputOperator,
    cfg: LpConfig,
    lambda: f64,
    z: &StateVector,
) -> Result<ControlSignal> {
    let density = duality_map(z, cfg).scaled(1.0 / lambda);
    controllability_map_adjoint(u_op, b, &density)
}

/// Solves the resolvent equation for the defect and samples the feedback.
pub fn synthesize(
    lp: &LinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    rc: &ResolventConfig,
) -> Result<Synthesis> {
    let defect = target_defect(lp, u_op)?;
    let resolvent = solve_resolvent(gram, lp.cfg, rc, &defect)?;
    let control = control_from_resolvent(u_op, &lp.b, lp.cfg, rc.lambda, &resolvent.z)?;
    Ok(Synthesis {
        defect,
        resolvent,
        control,
    })
}

/// `u(t_j) = B* U(T,t_j)* J[R(λ,Λ_T) p]`.
pub fn feedback_control(
    lp: &LinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    lambda: f64,
) -> Result<ControlSignal> {
    Ok(synthesize(lp, u_op, gram, &ResolventConfig::new(lambda)?)?.control)
}

/// Mild solution under the control `u`.
pub fn simulate_closed_loop(lp: &LinearProblem, u_op: &EvolutionOperator, u: &ControlSignal) -> Result<StateTrajectory> {
    lp.check_operator(u_op)?;
    if u.time_grid() != &lp.tg {
        return Err(Error::GridMismatch("control uses a different time grid".into()));
    }
    let forcing: Vec<DVector<f64>> = u
        .samples()
        .iter()
        .map(|s| {
            same_grid(lp.b.control_grid(), s.grid())?;
            Ok(lp.b.apply_raw(s.values()))
        })
        .collect::<Result<_>>()?;
    let raw = u_op.mild_trajectory_raw(lp.x0.values(), &forcing);
    Ok(StateTrajectory::from_raw(lp.tg.clone(), u_op.grid(), raw))
}

/// `‖x_λ(T) − x_T + z_λ(p)‖_p` under the feedback control.
pub fn terminal_identity_defect(
    lp: &LinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    lambda: f64,
) -> Result<f64> {
    let syn = synthesize(lp, u_op, gram, &ResolventConfig::new(lambda)?)?;
    let x = simulate_closed_loop(lp, u_op, &syn.control)?;
    identity_defect(x.terminal(), &lp.xt, &syn.resolvent.z, lp.cfg)
}

pub(crate) fn identity_defect(xt_reached: &StateVector, xt: &StateVector, z: &StateVector, cfg: LpConfig) -> Result<f64> {
    Ok(lp_norm(&xt_reached.sub(xt)?.add(z)?, cfg))
}

/// `‖x(T) − x_T‖²_p + λ ∫₀ᵀ ‖u‖²_H dt`.
pub fn cost_value(x: &StateTrajectory, u: &ControlSignal, xt: &StateVector, lambda: f64, cfg: LpConfig) -> Result<f64> {
    let miss = lp_norm(&x.terminal().sub(xt)?, cfg);
    Ok(miss * miss + lambda * u.energy())
}

/// Directional derivative of the cost at `(x, u)` along `w`:
/// `2⟨∫₀ᵀ U(T,t)Bw dt, J[x(T) − x_T]⟩ + 2λ ∫₀ᵀ (u, w)_H dt`.
pub fn first_variation(
    lp: &LinearProblem,
    u_op: &EvolutionOperator,
    x: &StateTrajectory,
    u: &ControlSignal,
    w: &ControlSignal,
    lambda: f64,
) -> Result<f64> {
    lp.check_operator(u_op)?;
    let miss = x.terminal().sub(&lp.xt)?;
    let reach = controllability_map(u_op, &lp.b, w)?;
    let terminal_part = pairing(&reach, &duality_map(&miss, lp.cfg))?;
    Ok(2.0 * terminal_part + 2.0 * lambda * u.inner(w)?)
}

/// One row of a λ sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub terminal_error: f64,
    pub control_energy: f64,
    pub resolvent_iters: usize,
    pub fixedpoint_iters: usize,
    pub identity_defect: f64,
    /// Reason code if the synthesis at this λ failed.
    pub failure: Option<String>,
}

impl SweepRecord {
    pub(crate) fn failed(lambda: f64, err: &Error) -> Self {
        Self {
            lambda,
            terminal_error: f64::NAN,
            control_energy: f64::NAN,
            resolvent_iters: 0,
            fixedpoint_iters: 0,
            identity_defect: f64::NAN,
            failure: Some(err.code().to_string()),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
}

impl SweepReport {
    pub fn all_succeeded(&self) -> bool {
        self.records.iter().all(SweepRecord::succeeded)
    }
}

/// Nine geometric points from `1` to `1e−4`.
pub fn default_lambda_list() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect()
}

pub fn validate_lambda_list(list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(Error::invalid("lambda_list", "must not be empty"));
    }
    for (k, &l) in list.iter().enumerate() {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid("lambda_list", format!("entry {k} = {l} is not positive")));
        }
        if k > 0 && l >= list[k - 1] {
            return Err(Error::invalid("lambda_list", "entries must be strictly decreasing"));
        }
    }
    Ok(())
}

/// Synthesis at every `λ` of a decreasing list with default resolvent
/// settings.
pub fn lambda_sweep(
    lp: &LinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    lambdas: &[f64],
) -> Result<SweepReport> {
    lambda_sweep_with(lp, u_op, gram, lambdas, &ResolventConfig::new(1.0)?)
}

/// As [`lambda_sweep`], taking iteration limits, tolerance and damping from
/// `template` (its `lambda` is ignored).
pub fn lambda_sweep_with(
    lp: &LinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    lambdas: &[f64],
    template: &ResolventConfig,
) -> Result<SweepReport> {
    validate_lambda_list(lambdas)?;
    lp.check_operator(u_op)?;
    let records = lambdas
        .par_iter()
        .map(|&lambda| {
            let rc = ResolventConfig { lambda, ..*template };
            match sweep_point(lp, u_op, gram, &rc) {
                Ok(r) => r,
                Err(e) => SweepRecord::failed(lambda, &e),
            }
        })
        .collect();
    Ok(SweepReport { records })
}

fn sweep_point(lp: &LinearProblem, u_op: &EvolutionOperator, gram: &GramianOperator, rc: &ResolventConfig) -> Result<SweepRecord> {
    let syn = synthesize(lp, u_op, gram, rc)?;
    let x = simulate_closed_loop(lp, u_op, &syn.control)?;
    Ok(SweepRecord {
        lambda: rc.lambda,
        terminal_error: lp_norm(&x.terminal().sub(&lp.xt)?, lp.cfg),
        control_energy: syn.control.energy(),
        resolvent_iters: syn.resolvent.iterations,
        fixedpoint_iters: 0,
        identity_defect: identity_defect(x.terminal(), &lp.xt, &syn.resolvent.z, lp.cfg)?,
        failure: None,
    })
}
