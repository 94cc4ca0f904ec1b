//! Discrete evolution system for `ẋ = a(t, ξ) ∂²x/∂ξ²` with Dirichlet
//! boundary conditions.
//!
//! Each time interval `[t_j, t_{j+1}]` is advanced by the implicit midpoint
//! (Crank–Nicolson) rule with the coefficient frozen at `t_{j+1/2}` and the
//! second-order central-difference Laplacian. Step operators are kept in
//! factored tridiagonal form; the dense terminal propagators `U(T, t_j)` are
//! cached on demand for Gramian assembly.
//!
//! Adjoints are taken with respect to the weighted pairing of
//! [`crate::function_space::pairing`]: `U* = W⁻¹ Uᵀ W`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function_space::{same_grid, weighted_norm, LpConfig, SpatialGrid, StateVector};

/// Coefficient handle `a(t, ξ)`.
pub type Coefficient = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Generator `A(t) = a(t, ξ) ∂²/∂ξ²` on a uniform Dirichlet grid.
#[derive(Clone)]
pub struct GeneratorSpec {
    grid: Arc<SpatialGrid>,
    coefficient: Coefficient,
    delta: f64,
    holder_exponent: f64,
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorSpec")
            .field("n_interior", &self.grid.len())
            .field("delta", &self.delta)
            .field("holder_exponent", &self.holder_exponent)
            .finish_non_exhaustive()
    }
}

impl GeneratorSpec {
    pub fn new(
        grid: Arc<SpatialGrid>,
        coefficient: Coefficient,
        delta: f64,
        holder_exponent: f64,
    ) -> Result<Self> {
        if grid.dirichlet_spacing().is_none() {
            return Err(Error::invalid(
                "grid",
                "the generator needs the uniform Dirichlet grid",
            ));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
        }
        if !(holder_exponent > 0.0 && holder_exponent <= 1.0) {
            return Err(Error::invalid(
                "holder_exponent",
                format!("must lie in (0, 1], got {holder_exponent}"),
            ));
        }
        Ok(Self {
            grid,
            coefficient,
            delta,
            holder_exponent,
        })
    }

    /// `a ≡ c` with `δ = c` and `μ = 1`.
    pub fn constant(grid: Arc<SpatialGrid>, c: f64) -> Result<Self> {
        Self::new(grid, Arc::new(move |_, _| c), c, 1.0)
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn coefficient(&self, t: f64, xi: f64) -> f64 {
        (self.coefficient)(t, xi)
    }

    pub fn coefficient_handle(&self) -> &Coefficient {
        &self.coefficient
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn holder_exponent(&self) -> f64 {
        self.holder_exponent
    }

    /// Checks `a(t, ξ_i) ≥ δ` at every spatial node for the given time;
    /// reports the first offending location.
    pub fn check_lower_bound_at(&self, t: f64) -> Result<()> {
        for &xi in self.grid.nodes() {
            let value = self.coefficient(t, xi);
            if !(value >= self.delta) {
                return Err(Error::CoefficientBelowBound {
                    t,
                    xi,
                    value,
                    delta: self.delta,
                });
            }
        }
        Ok(())
    }
}

/// Uniform time grid on `[0, T]` with composite-trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Arc<Self>> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        let dt = horizon / n_steps as f64;
        let mut nodes: Vec<f64> = (0..=n_steps).map(|j| j as f64 * dt).collect();
        nodes[n_steps] = horizon;
        let mut weights = vec![dt; n_steps + 1];
        weights[0] = 0.5 * dt;
        weights[n_steps] = 0.5 * dt;
        Ok(Arc::new(Self {
            horizon,
            nodes,
            weights,
        }))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }

    /// Index of the terminal node `t_m = T`.
    pub fn last(&self) -> usize {
        self.n_steps()
    }
}

/// Tridiagonal matrix by diagonals; `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    fn mul(&self, x: &[f64], y: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    fn transpose(&self) -> Self {
        let n = self.diag.len();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            if i > 0 {
                lower[i] = self.upper[i - 1];
            }
            if i + 1 < n {
                upper[i] = self.lower[i + 1];
            }
        }
        Self {
            lower,
            diag: self.diag.clone(),
            upper,
        }
    }

    /// Thomas factorization without pivoting; fine for the diagonally
    /// dominant systems assembled here.
    fn factor(&self) -> Result<ThomasFactor> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut denom = vec![0.0; n];
        for i in 0..n {
            let d = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i] * c[i - 1]
            };
            if !(d.abs() > 1e-300) || !d.is_finite() {
                return Err(Error::SingularSolve { row: i, pivot: d });
            }
            denom[i] = d;
            if i + 1 < n {
                c[i] = self.upper[i] / d;
            }
        }
        Ok(ThomasFactor {
            lower: self.lower.clone(),
            c,
            denom,
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ThomasFactor {
    lower: Vec<f64>,
    c: Vec<f64>,
    denom: Vec<f64>,
}

impl ThomasFactor {
    fn solve_in_place(&self, d: &mut [f64]) {
        let n = d.len();
        d[0] /= self.denom[0];
        for i in 1..n {
            d[i] = (d[i] - self.lower[i] * d[i - 1]) / self.denom[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= self.c[i] * d[i + 1];
        }
    }
}

/// One Crank–Nicolson step `P = (I − ½Δt A)⁻¹ (I + ½Δt A)`.
#[derive(Debug, Clone)]
struct CrankNicolsonStep {
    explicit: Tridiagonal,
    implicit: ThomasFactor,
    explicit_t: Tridiagonal,
    implicit_t: ThomasFactor,
}

impl CrankNicolsonStep {
    fn assemble(a_mid: &[f64], h: f64, dt: f64) -> Result<Self> {
        let n = a_mid.len();
        let mut plus = Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        };
        let mut minus = plus.clone();
        for (i, &a) in a_mid.iter().enumerate() {
            let r = 0.5 * dt * a / (h * h);
            plus.diag[i] = 1.0 - 2.0 * r;
            minus.diag[i] = 1.0 + 2.0 * r;
            if i > 0 {
                plus.lower[i] = r;
                minus.lower[i] = -r;
            }
            if i + 1 < n {
                plus.upper[i] = r;
                minus.upper[i] = -r;
            }
        }
        let implicit = minus.factor()?;
        let implicit_t = minus.transpose().factor()?;
        Ok(Self {
            explicit_t: plus.transpose(),
            explicit: plus,
            implicit,
            implicit_t,
        })
    }

    /// `x ← P x`, using `scratch` as workspace.
    fn apply(&self, x: &mut [f64], scratch: &mut [f64]) {
        self.explicit.mul(x, scratch);
        self.implicit.solve_in_place(scratch);
        x.copy_from_slice(scratch);
    }

    /// `x ← Pᵀ x`.
    fn apply_transpose(&self, x: &mut [f64], scratch: &mut [f64]) {
        scratch.copy_from_slice(x);
        self.implicit_t.solve_in_place(scratch);
        self.explicit_t.mul(scratch, x);
    }
}

/// Build options for [`build_evolution_with`].
#[derive(Debug, Clone, Copy)]
pub struct EvolutionOptions {
    /// Cache the dense terminal propagators `U(T, t_j)` (one `n × n` matrix
    /// per time node).
    pub cache_terminal: bool,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self {
            cache_terminal: true,
        }
    }
}

/// The discrete two-parameter family `U(t_j, t_i)`.
#[derive(Debug, Clone)]
pub struct EvolutionOperator {
    grid: Arc<SpatialGrid>,
    time_grid: Arc<TimeGrid>,
    steps: Vec<CrankNicolsonStep>,
    /// `U(T, t_j)ᵀ` for every node `j`, when cached.
    terminal_t: Option<Vec<DMatrix<f64>>>,
    growth_l2: f64,
}

/// Builds the evolution system with the default options (terminal cache on).
pub fn build_evolution(gen: &GeneratorSpec, tg: &Arc<TimeGrid>) -> Result<EvolutionOperator> {
    build_evolution_with(gen, tg, EvolutionOptions::default())
}

pub fn build_evolution_with(
    gen: &GeneratorSpec,
    tg: &Arc<TimeGrid>,
    opts: EvolutionOptions,
) -> Result<EvolutionOperator> {
    let grid = gen.grid().clone();
    let h = grid
        .dirichlet_spacing()
        .ok_or_else(|| Error::invalid("grid", "the generator needs the uniform Dirichlet grid"))?;
    let dt = tg.dt();
    let nodes = tg.nodes();
    let mut steps = Vec::with_capacity(tg.n_steps());
    for j in 0..tg.n_steps() {
        gen.check_lower_bound_at(nodes[j])?;
        let t_mid = 0.5 * (nodes[j] + nodes[j + 1]);
        gen.check_lower_bound_at(t_mid)?;
        let a_mid: Vec<f64> = grid.nodes().iter().map(|&xi| gen.coefficient(t_mid, xi)).collect();
        steps.push(CrankNicolsonStep::assemble(&a_mid, h, dt)?);
    }
    gen.check_lower_bound_at(nodes[tg.n_steps()])?;

    let mut op = EvolutionOperator {
        grid,
        time_grid: tg.clone(),
        steps,
        terminal_t: None,
        growth_l2: 0.0,
    };
    if opts.cache_terminal {
        op.terminal_t = Some(op.compute_terminal_cache());
    }
    op.growth_l2 = op.growth_bound(LpConfig::hilbert());
    Ok(op)
}

impl EvolutionOperator {
    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn time_grid(&self) -> &Arc<TimeGrid> {
        &self.time_grid
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Probe-based bound `C_U ≥ max_j ‖U(t_j, 0)v‖₂ / ‖v‖₂`, recorded at build.
    pub fn recorded_growth(&self) -> f64 {
        self.growth_l2
    }

    pub fn has_terminal_cache(&self) -> bool {
        self.terminal_t.is_some()
    }

    fn compute_terminal_cache(&self) -> Vec<DMatrix<f64>> {
        let n = self.grid.len();
        let m = self.steps.len();
        let mut out = vec![DMatrix::<f64>::identity(n, n); m + 1];
        let mut scratch = vec![0.0; n];
        // U(T,t_j)ᵀ = P_jᵀ U(T,t_{j+1})ᵀ, column by column
        for j in (0..m).rev() {
            let mut next = out[j + 1].clone();
            for mut col in next.column_iter_mut() {
                self.steps[j].apply_transpose(col.as_mut_slice(), &mut scratch);
            }
            out[j] = next;
        }
        out
    }

    /// Dense `U(T, t_j)`, if the terminal cache was built.
    pub fn terminal_matrix(&self, j: usize) -> Option<DMatrix<f64>> {
        self.terminal_t
            .as_ref()
            .and_then(|c| c.get(j))
            .map(|m| m.transpose())
    }

    /// `U(T, t_j)ᵀ` from the cache.
    pub(crate) fn terminal_transpose(&self, j: usize) -> Option<&DMatrix<f64>> {
        self.terminal_t.as_ref().and_then(|c| c.get(j))
    }

    fn check_indices(&self, j: usize, i: usize) -> Result<()> {
        if i > j {
            return Err(Error::BackwardEvolution { start: i, end: j });
        }
        if j > self.steps.len() {
            return Err(Error::invalid(
                "time index",
                format!("{j} exceeds the last node {}", self.steps.len()),
            ));
        }
        Ok(())
    }

    /// `x ← U(t_{k+1}, t_k) x` on raw values.
    pub(crate) fn step_raw(&self, k: usize, x: &mut DVector<f64>) {
        let mut scratch = vec![0.0; x.len()];
        self.steps[k].apply(x.as_mut_slice(), &mut scratch);
    }

    pub(crate) fn apply_raw(&self, j: usize, i: usize, v: &DVector<f64>) -> DVector<f64> {
        let mut x = v.clone();
        let mut scratch = vec![0.0; x.len()];
        for k in i..j {
            self.steps[k].apply(x.as_mut_slice(), &mut scratch);
        }
        x
    }

    pub(crate) fn apply_adjoint_raw(&self, j: usize, i: usize, phi: &DVector<f64>) -> DVector<f64> {
        let w = self.grid.weights();
        let mut x = phi.component_mul(&DVector::from_column_slice(w));
        let mut scratch = vec![0.0; x.len()];
        for k in (i..j).rev() {
            self.steps[k].apply_transpose(x.as_mut_slice(), &mut scratch);
        }
        for (v, wi) in x.iter_mut().zip(w) {
            *v /= wi;
        }
        x
    }

    /// `U(t_j, t_i) v` for `i ≤ j`.
    pub fn apply(&self, j: usize, i: usize, v: &StateVector) -> Result<StateVector> {
        self.check_indices(j, i)?;
        same_grid(&self.grid, v.grid())?;
        Ok(StateVector::from_raw(
            self.grid.clone(),
            self.apply_raw(j, i, v.values()),
        ))
    }

    /// `U(t_j, t_i)* φ` with respect to the weighted pairing.
    pub fn apply_adjoint(&self, j: usize, i: usize, phi: &StateVector) -> Result<StateVector> {
        self.check_indices(j, i)?;
        same_grid(&self.grid, phi.grid())?;
        Ok(StateVector::from_raw(
            self.grid.clone(),
            self.apply_adjoint_raw(j, i, phi.values()),
        ))
    }

    /// Adjoint sweep `U(T, t_j)* φ` for all `j = 0..=m`.
    pub(crate) fn terminal_adjoint_sweep(&self, phi: &DVector<f64>) -> Vec<DVector<f64>> {
        let m = self.steps.len();
        let w = self.grid.weights();
        let mut cur = phi.component_mul(&DVector::from_column_slice(w));
        let mut scratch = vec![0.0; cur.len()];
        let mut out = vec![DVector::zeros(0); m + 1];
        let unweight = |x: &DVector<f64>| {
            let mut y = x.clone();
            for (v, wi) in y.iter_mut().zip(w) {
                *v /= wi;
            }
            y
        };
        out[m] = unweight(&cur);
        for j in (0..m).rev() {
            self.steps[j].apply_transpose(cur.as_mut_slice(), &mut scratch);
            out[j] = unweight(&cur);
        }
        out
    }

    /// Trapezoid mild solution `x(t_k) = U(t_k,0)x₀ + ∫₀^{t_k} U(t_k,s) g(s) ds`
    /// for forcing samples `g(t_j)`, via
    /// `x_{k+1} = P_k (x_k + ½Δt g_k) + ½Δt g_{k+1}`.
    pub(crate) fn mild_trajectory_raw(&self, x0: &DVector<f64>, forcing: &[DVector<f64>]) -> Vec<DVector<f64>> {
        debug_assert_eq!(forcing.len(), self.steps.len() + 1);
        let half = 0.5 * self.time_grid.dt();
        let mut scratch = vec![0.0; x0.len()];
        let mut out = Vec::with_capacity(forcing.len());
        let mut x = x0.clone();
        out.push(x.clone());
        for (k, step) in self.steps.iter().enumerate() {
            x.axpy(half, &forcing[k], 1.0);
            step.apply(x.as_mut_slice(), &mut scratch);
            x.axpy(half, &forcing[k + 1], 1.0);
            out.push(x.clone());
        }
        out
    }

    /// Terminal value of [`Self::mild_trajectory_raw`] without storing the path.
    pub(crate) fn mild_terminal_raw(&self, x0: &DVector<f64>, forcing: &[DVector<f64>]) -> DVector<f64> {
        debug_assert_eq!(forcing.len(), self.steps.len() + 1);
        let half = 0.5 * self.time_grid.dt();
        let mut scratch = vec![0.0; x0.len()];
        let mut x = x0.clone();
        for (k, step) in self.steps.iter().enumerate() {
            x.axpy(half, &forcing[k], 1.0);
            step.apply(x.as_mut_slice(), &mut scratch);
            x.axpy(half, &forcing[k + 1], 1.0);
        }
        x
    }

    /// Probe-based growth witness `max_j ‖U(t_j, 0)v‖ / ‖v‖` and the same for
    /// the adjoints in the dual norm; returns the larger of the two.
    pub fn growth_bound(&self, cfg: LpConfig) -> f64 {
        let w = self.grid.weights();
        let probes = probe_basis(&self.grid);
        let mut worst: f64 = 1.0;
        let mut scratch = vec![0.0; self.grid.len()];
        for v in &probes {
            let n0 = weighted_norm(v.as_slice(), w, cfg.p());
            let mut x = v.clone();
            for step in &self.steps {
                step.apply(x.as_mut_slice(), &mut scratch);
                worst = worst.max(weighted_norm(x.as_slice(), w, cfg.p()) / n0);
            }
            let q0 = weighted_norm(v.as_slice(), w, cfg.q());
            for y in self.terminal_adjoint_sweep(v) {
                worst = worst.max(weighted_norm(y.as_slice(), w, cfg.q()) / q0);
            }
        }
        worst
    }

    /// Largest relative defect of the evolution property on sampled triples
    /// `i ≤ r ≤ j` and of the terminal cache against stepwise composition.
    pub fn cocycle_defect(&self) -> f64 {
        let m = self.steps.len();
        let probes = probe_basis(&self.grid);
        let samples: Vec<usize> = {
            let mut s: Vec<usize> = (0..=4).map(|k| k * m / 4).collect();
            s.dedup();
            s
        };
        let rel = |a: &DVector<f64>, b: &DVector<f64>, scale: f64| (a - b).amax() / scale.max(1e-300);
        let mut worst: f64 = 0.0;
        for v in &probes {
            let scale = v.amax();
            for (ai, &i) in samples.iter().enumerate() {
                for (ar, &r) in samples.iter().enumerate().skip(ai) {
                    for &j in samples.iter().skip(ar) {
                        let direct = self.apply_raw(j, i, v);
                        let composed = self.apply_raw(j, r, &self.apply_raw(r, i, v));
                        worst = worst.max(rel(&direct, &composed, scale));
                    }
                }
            }
            if let Some(cache) = &self.terminal_t {
                for &j in &samples {
                    let cached = cache[j].tr_mul(v);
                    let stepped = self.apply_raw(m, j, v);
                    worst = worst.max(rel(&cached, &stepped, scale));
                }
            }
        }
        worst
    }
}

/// Probe vectors: low sine modes, an alternating vector and two spikes.
fn probe_basis(grid: &SpatialGrid) -> Vec<DVector<f64>> {
    let n = grid.len();
    let mut out: Vec<DVector<f64>> = (1..=5.min(n))
        .map(|k| DVector::from_iterator(n, grid.nodes().iter().map(|&x| (k as f64 * x).sin())))
        .collect();
    out.push(DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 }));
    let mut spike = DVector::zeros(n);
    spike[n / 2] = 1.0;
    out.push(spike);
    let mut edge = DVector::zeros(n);
    edge[0] = 1.0;
    out.push(edge);
    out
}

/// Normalized eigenfunction `w_n(ξ) = √(2/π) sin(nξ)` sampled on the grid.
pub fn eigenmode(grid: &Arc<SpatialGrid>, n: usize) -> StateVector {
    let c = (2.0 / PI).sqrt();
    let values = grid.nodes().iter().map(|&x| c * (n as f64 * x).sin()).collect();
    StateVector::new(grid.clone(), values).expect("sine samples are finite")
}

/// Exact decay factor `exp(−n² ∫ₛᵗ ā(τ) dτ)` of mode `n` for a
/// ξ-independent coefficient. The integral uses composite Simpson's rule.
pub fn spectral_reference(n_mode: usize, t: f64, s: f64, a_bar: impl Fn(f64) -> f64) -> Result<f64> {
    if t < s {
        return Err(Error::invalid("t", format!("t = {t} precedes s = {s}")));
    }
    if t == s {
        return Ok(1.0);
    }
    const PANELS: usize = 2048;
    let h = (t - s) / PANELS as f64;
    let mut acc = a_bar(s) + a_bar(t);
    for k in 1..PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * a_bar(s + k as f64 * h);
    }
    let integral = acc * h / 3.0;
    let n2 = (n_mode * n_mode) as f64;
    Ok((-n2 * integral).exp())
}

/// Solves `(λI − A(t₀)) f = g` on the grid and returns `(‖f‖_p, M/(λδ)·‖g‖_p)`
/// with `M = max_ξ a(t₀, ξ)`: the resolvent contraction estimate of the
/// generator at a frozen time.
pub fn resolvent_contraction(
    gen: &GeneratorSpec,
    t0: f64,
    lambda: f64,
    g: &StateVector,
    cfg: LpConfig,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    same_grid(gen.grid(), g.grid())?;
    gen.check_lower_bound_at(t0)?;
    let grid = gen.grid();
    let h = grid.dirichlet_spacing().expect("generator grid is uniform");
    let n = grid.len();
    let a: Vec<f64> = grid.nodes().iter().map(|&xi| gen.coefficient(t0, xi)).collect();
    let mut tri = Tridiagonal {
        lower: vec![0.0; n],
        diag: vec![0.0; n],
        upper: vec![0.0; n],
    };
    for i in 0..n {
        let r = a[i] / (h * h);
        tri.diag[i] = lambda + 2.0 * r;
        if i > 0 {
            tri.lower[i] = -r;
        }
        if i + 1 < n {
            tri.upper[i] = -r;
        }
    }
    let mut f = g.as_slice().to_vec();
    tri.factor()?.solve_in_place(&mut f);
    let big_m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = grid.weights();
    let nf = weighted_norm(&f, w, cfg.p());
    let ng = weighted_norm(g.as_slice(), w, cfg.p());
    Ok((nf, big_m / (lambda * gen.delta()) * ng))
}
