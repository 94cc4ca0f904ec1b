//! Semilinear synthesis: fixed points of the solution operator
//!
//! `(Ψx)(t) = U(t,0)x₀ + ∫₀ᵗ U(t,s)[f(s,x(s)) + Bu(s)] ds`,
//! `u(t) = B* U(T,t)* J[R(λ,Λ_T) p(x)]`,
//! `p(x) = x_T − U(T,0)x₀ − ∫₀ᵀ U(T,s) f(s,x(s)) ds`,
//!
//! found by relaxed Picard iteration.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{ControlSignal, GramianOperator};
use crate::error::{Error, Result};
use crate::evolution::EvolutionOperator;
use crate::function_space::{check_finite, lp_norm, LpConfig, SpatialGrid, StateVector};
use crate::linear::{
    control_from_resolvent, identity_defect, validate_lambda_list, LinearProblem, StateTrajectory, SweepRecord,
    SweepReport,
};
use crate::resolvent::{solve_resolvent, ResolventConfig, ResolventSolution};

pub type NonlinearFn = Arc<dyn Fn(f64, &StateVector) -> StateVector + Send + Sync>;

/// Nonlinearity `f(t, x)` with its declared uniform bound `K`.
#[derive(Clone)]
pub struct NonlinearitySpec {
    f: Option<NonlinearFn>,
    bound: f64,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("zero", &self.f.is_none())
            .field("bound", &self.bound)
            .finish()
    }
}

impl NonlinearitySpec {
    pub fn new(f: NonlinearFn, bound: f64) -> Result<Self> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::invalid("K", format!("bound must be finite and nonnegative, got {bound}")));
        }
        Ok(Self { f: Some(f), bound })
    }

    /// `f ≡ 0`.
    pub fn zero() -> Self {
        Self { f: None, bound: 0.0 }
    }

    /// Pointwise `sin(x)` with `K = ‖1‖_p`.
    pub fn sine(grid: &Arc<SpatialGrid>, cfg: LpConfig) -> Self {
        let ones = StateVector::from_fn(grid.clone(), |_| 1.0).expect("finite");
        let f: NonlinearFn = Arc::new(|_t, x: &StateVector| {
            StateVector::from_dvector(x.grid().clone(), x.values().map(f64::sin)).expect("sin is finite")
        });
        Self {
            f: Some(f),
            bound: lp_norm(&ones, cfg),
        }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_none()
    }

    /// `f(t, x)` with the finiteness and bound checks.
    pub fn evaluate(&self, t: f64, x: &StateVector, cfg: LpConfig) -> Result<StateVector> {
        let Some(f) = &self.f else {
            return Ok(StateVector::zeros(x.grid().clone()));
        };
        let y = f(t, x);
        if y.len() != x.len() || check_finite("nonlinearity", y.as_slice()).is_err() {
            return Err(Error::NonlinearityNotFinite { t });
        }
        let norm = lp_norm(&y, cfg);
        if norm > self.bound * (1.0 + 1e-12) {
            return Err(Error::NonlinearityBound {
                t,
                norm,
                bound: self.bound,
            });
        }
        Ok(y)
    }
}

#[derive(Debug, Clone)]
pub struct SemilinearProblem {
    pub linear: LinearProblem,
    pub nl: NonlinearitySpec,
}

impl SemilinearProblem {
    pub fn new(linear: LinearProblem, nl: NonlinearitySpec) -> Self {
        Self { linear, nl }
    }

    pub fn cfg(&self) -> LpConfig {
        self.linear.cfg
    }
}

/// `f(t_j, x(t_j))` at every node; `None` for `f ≡ 0`.
fn nonlinear_samples(sp: &SemilinearProblem, x: &StateTrajectory) -> Result<Option<Vec<DVector<f64>>>> {
    if sp.nl.is_zero() {
        return Ok(None);
    }
    let nodes = x.time_grid().nodes();
    x.states()
        .iter()
        .zip(nodes)
        .map(|(s, &t)| Ok(sp.nl.evaluate(t, s, sp.cfg())?.into_values()))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn check_trajectory(sp: &SemilinearProblem, u_op: &EvolutionOperator, x: &StateTrajectory) -> Result<()> {
    if x.time_grid() != &sp.linear.tg || u_op.time_grid() != &sp.linear.tg {
        return Err(Error::GridMismatch("trajectory, problem and evolution must share the time grid".into()));
    }
    crate::function_space::same_grid(x.state(0).grid(), u_op.grid())
}

/// `x_T − U(T,0)x₀ − Σ_j τ_j U(T,t_j) f(t_j, x(t_j))`.
pub fn nonlinear_defect(sp: &SemilinearProblem, u_op: &EvolutionOperator, x: &StateTrajectory) -> Result<StateVector> {
    check_trajectory(sp, u_op, x)?;
    let lp = &sp.linear;
    let fs = nonlinear_samples(sp, x)?;
    let reached = match fs {
        None => u_op.apply_raw(u_op.n_steps(), 0, lp.x0.values()),
        Some(fs) => u_op.mild_terminal_raw(lp.x0.values(), &fs),
    };
    Ok(StateVector::from_raw(u_op.grid().clone(), lp.xt.values() - reached))
}

/// Image of a trajectory under `Ψ`.
#[derive(Debug, Clone)]
pub struct PsiImage {
    pub trajectory: StateTrajectory,
    pub control: ControlSignal,
    pub defect: StateVector,
    pub resolvent: ResolventSolution,
}

/// Evaluates `Ψx` together with the control it uses.
pub fn apply_solution_operator(
    sp: &SemilinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    rc: &ResolventConfig,
    x: &StateTrajectory,
) -> Result<PsiImage> {
    check_trajectory(sp, u_op, x)?;
    let lp = &sp.linear;
    let fs = nonlinear_samples(sp, x)?;
    let reached = match &fs {
        None => u_op.apply_raw(u_op.n_steps(), 0, lp.x0.values()),
        Some(fs) => u_op.mild_terminal_raw(lp.x0.values(), fs),
    };
    let defect = StateVector::from_raw(u_op.grid().clone(), lp.xt.values() - reached);
    let resolvent = solve_resolvent(gram, lp.cfg, rc, &defect)?;
    let control = control_from_resolvent(u_op, &lp.b, lp.cfg, rc.lambda, &resolvent.z)?;
    let forcing: Vec<DVector<f64>> = match fs {
        None => control.samples().iter().map(|s| lp.b.apply_raw(s.values())).collect(),
        Some(fs) => fs
            .into_iter()
            .zip(control.samples())
            .map(|(f, s)| f + lp.b.apply_raw(s.values()))
            .collect(),
    };
    let raw = u_op.mild_trajectory_raw(lp.x0.values(), &forcing);
    Ok(PsiImage {
        trajectory: StateTrajectory::from_raw(lp.tg.clone(), u_op.grid(), raw),
        control,
        defect,
        resolvent,
    })
}

/// Uncontrolled semilinear trajectory of the same trapezoid scheme, each
/// implicit step resolved by Picard iteration.
pub fn free_semilinear_flow(sp: &SemilinearProblem, u_op: &EvolutionOperator) -> Result<StateTrajectory> {
    let lp = &sp.linear;
    let tg = &lp.tg;
    if u_op.time_grid() != tg {
        return Err(Error::GridMismatch("problem and evolution use different time grids".into()));
    }
    let grid = u_op.grid().clone();
    let cfg = lp.cfg;
    let half = 0.5 * tg.dt();
    let nodes = tg.nodes();
    let mut out = Vec::with_capacity(tg.len());
    let mut x = lp.x0.values().clone();
    out.push(x.clone());
    let eval = |t: f64, v: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(sp.nl.evaluate(t, &StateVector::from_raw(grid.clone(), v.clone()), cfg)?.into_values())
    };
    let mut fx = eval(nodes[0], &x)?;
    for k in 0..tg.n_steps() {
        let mut base = x.clone();
        base.axpy(half, &fx, 1.0);
        u_op.step_raw(k, &mut base);
        let mut y = base.clone();
        let mut fy = eval(nodes[k + 1], &y)?;
        for _ in 0..100 {
            let next = &base + &fy * half;
            let change = (&next - &y).amax();
            y = next;
            fy = eval(nodes[k + 1], &y)?;
            if change <= 1e-15 * (1.0 + y.amax()) {
                break;
            }
        }
        x = y;
        fx = fy;
        out.push(x.clone());
    }
    Ok(StateTrajectory::from_raw(tg.clone(), &grid, out))
}

/// The ceiling `C‖x₀‖ + CKT + C²N²C̃T/λ`, `C̃ = ‖x_T‖ + C‖x₀‖ + CKT`, on
/// `sup_t ‖(Ψx)(t)‖_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallConstants {
    pub c: f64,
    pub k: f64,
    pub n: f64,
    pub c_tilde: f64,
    pub horizon: f64,
    pub lambda: f64,
    pub radius: f64,
}

pub fn a_priori_ball(sp: &SemilinearProblem, u_op: &EvolutionOperator, lambda: f64) -> BallConstants {
    let cfg = sp.cfg();
    let c = u_op.growth_bound(cfg).max(1.0);
    let k = sp.nl.bound();
    let n = sp.linear.b.norm_bound();
    let t = sp.linear.tg.horizon();
    let x0 = lp_norm(&sp.linear.x0, cfg);
    let xt = lp_norm(&sp.linear.xt, cfg);
    let c_tilde = xt + c * x0 + c * k * t;
    let radius = c * x0 + c * k * t + c * c * n * n * c_tilde * t / lambda;
    BallConstants {
        c,
        k,
        n,
        c_tilde,
        horizon: t,
        lambda,
        radius,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial relaxation `ρ ∈ [0, 1]`.
    pub relaxation: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            relaxation: 1.0,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("fixed_point.tol", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.relaxation) {
            return Err(Error::invalid("fixed_point.relaxation", "must lie in [0, 1]"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("fixed_point.max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

const MIN_RELAXATION: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub iterations: usize,
    /// `sup_t ‖x^{k+1}(t) − x^k(t)‖_p` of the last update.
    pub final_update_norm: f64,
    /// `sup_t ‖Ψ(x)(t) − x(t)‖_p` of the returned iterate.
    pub self_residual: f64,
    pub converged: bool,
    /// Relaxation in use when the iteration stopped.
    pub relaxation: f64,
    /// Largest `‖f(t, x^k(t))‖_p` seen.
    pub max_nonlinearity_norm: f64,
    pub ball: BallConstants,
}

#[derive(Debug, Clone)]
pub struct FixedPointOutcome {
    /// `Ψ(x)` for the final iterate `x`.
    pub trajectory: StateTrajectory,
    pub control: ControlSignal,
    pub resolvent: ResolventSolution,
    pub report: FixedPointReport,
}

fn max_f_norm(sp: &SemilinearProblem, x: &StateTrajectory) -> Result<f64> {
    let Some(fs) = nonlinear_samples(sp, x)? else {
        return Ok(0.0);
    };
    let cfg = sp.cfg();
    let grid = x.state(0).grid();
    Ok(fs
        .into_iter()
        .map(|v| lp_norm(&StateVector::from_raw(grid.clone(), v), cfg))
        .fold(0.0, f64::max))
}

fn check_ball(x: &StateTrajectory, ball: &BallConstants, cfg: LpConfig) -> Result<()> {
    let norm = x.sup_norm(cfg);
    if norm > ball.radius * (1.0 + 1e-12) {
        return Err(Error::BallEscape {
            norm,
            radius: ball.radius,
        });
    }
    Ok(())
}

fn relax(a: &StateTrajectory, b: &StateTrajectory, rho: f64) -> StateTrajectory {
    let grid = a.state(0).grid();
    let raw = a
        .states()
        .iter()
        .zip(b.states())
        .map(|(x, y)| x.values() * (1.0 - rho) + y.values() * rho)
        .collect();
    StateTrajectory::from_raw(a.time_grid().clone(), grid, raw)
}

/// Relaxed Picard iteration `x^{k+1} = (1−ρ)x^k + ρΨ(x^k)` from the free
/// linear evolution. The relaxation is halved (down to 1/16) when the
/// update norm grows three times in a row.
///
/// Stops once the update norm is at most `tol` and the self-residual of
/// the iterate at most `10·tol`. Non-convergence is reported in the
/// outcome, which then carries the best iterate seen.
pub fn fixed_point_solve(
    sp: &SemilinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    rc: &ResolventConfig,
    fp: &FixedPointConfig,
) -> Result<FixedPointOutcome> {
    fp.validate()?;
    rc.validate()?;
    let cfg = sp.cfg();
    let lp = &sp.linear;
    let ball = a_priori_ball(sp, u_op, rc.lambda);
    let free = u_op.mild_trajectory_raw(lp.x0.values(), &vec![DVector::zeros(lp.x0.len()); lp.tg.len()]);
    let mut x = StateTrajectory::from_raw(lp.tg.clone(), u_op.grid(), free);

    let mut rho = fp.relaxation;
    let mut prev_update = f64::INFINITY;
    let mut growth_streak = 0;
    let mut max_f: f64 = 0.0;
    let mut best: Option<(f64, PsiImage)> = None;
    let mut last_update = f64::INFINITY;

    for k in 0..fp.max_iter {
        max_f = max_f.max(max_f_norm(sp, &x)?);
        let image = apply_solution_operator(sp, u_op, gram, rc, &x)?;
        check_ball(&image.trajectory, &ball, cfg)?;
        let residual = image.trajectory.sup_distance(&x, cfg)?;
        let update = rho * residual;
        if update <= fp.tol && residual <= 10.0 * fp.tol {
            return Ok(FixedPointOutcome {
                trajectory: image.trajectory,
                control: image.control,
                resolvent: image.resolvent,
                report: FixedPointReport {
                    iterations: k,
                    final_update_norm: update,
                    self_residual: residual,
                    converged: true,
                    relaxation: rho,
                    max_nonlinearity_norm: max_f,
                    ball,
                },
            });
        }
        let next = relax(&x, &image.trajectory, rho);
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, image));
        }
        last_update = update;
        if update > prev_update {
            growth_streak += 1;
            if growth_streak >= 3 && rho / 2.0 >= MIN_RELAXATION {
                rho /= 2.0;
                growth_streak = 0;
            }
        } else {
            growth_streak = 0;
        }
        prev_update = update;
        x = next;
    }
    let (residual, image) = best.expect("at least one iteration");
    Ok(FixedPointOutcome {
        trajectory: image.trajectory,
        control: image.control,
        resolvent: image.resolvent,
        report: FixedPointReport {
            iterations: fp.max_iter,
            final_update_norm: last_update,
            self_residual: residual,
            converged: false,
            relaxation: rho,
            max_nonlinearity_norm: max_f,
            ball,
        },
    })
}

/// `‖x(T) − x_T + z_λ(p(x))‖_p` for a trajectory `x` reached under its own
/// feedback, with `p(x)` and `z_λ` recomputed from `x`.
pub fn semilinear_identity_defect(
    sp: &SemilinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    rc: &ResolventConfig,
    x: &StateTrajectory,
) -> Result<f64> {
    let defect = nonlinear_defect(sp, u_op, x)?;
    let z = solve_resolvent(gram, sp.cfg(), rc, &defect)?.z;
    identity_defect(x.terminal(), &sp.linear.xt, &z, sp.cfg())
}

/// Fixed-point synthesis at every `λ` of a decreasing list.
pub fn semilinear_lambda_sweep(
    sp: &SemilinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    lambdas: &[f64],
    template: &ResolventConfig,
    fp: &FixedPointConfig,
) -> Result<SweepReport> {
    validate_lambda_list(lambdas)?;
    fp.validate()?;
    let records = lambdas
        .par_iter()
        .map(|&lambda| {
            let rc = ResolventConfig { lambda, ..*template };
            match sweep_point(sp, u_op, gram, &rc, fp) {
                Ok(r) => r,
                Err(e) => SweepRecord::failed(lambda, &e),
            }
        })
        .collect();
    Ok(SweepReport { records })
}

fn sweep_point(
    sp: &SemilinearProblem,
    u_op: &EvolutionOperator,
    gram: &GramianOperator,
    rc: &ResolventConfig,
    fp: &FixedPointConfig,
) -> Result<SweepRecord> {
    let out = fixed_point_solve(sp, u_op, gram, rc, fp)?;
    if !out.report.converged {
        let err = Error::FixedPointNotConverged {
            iterations: out.report.iterations,
            update_norm: out.report.final_update_norm,
        };
        let mut rec = SweepRecord::failed(rc.lambda, &err);
        rec.fixedpoint_iters = out.report.iterations;
        return Ok(rec);
    }
    let cfg = sp.cfg();
    Ok(SweepRecord {
        lambda: rc.lambda,
        terminal_error: lp_norm(&out.trajectory.terminal().sub(&sp.linear.xt)?, cfg),
        control_energy: out.control.energy(),
        resolvent_iters: out.resolvent.iterations,
        fixedpoint_iters: out.report.iterations,
        identity_defect: semilinear_identity_defect(sp, u_op, gram, rc, &out.trajectory)?,
        failure: None,
    })
}
