//! Input operator, controllability map and controllability Gramian.
//!
//! The control space `H = L²` lives on its own grid (the state grid for the
//! scaled-identity input) with the weighted inner product of that grid.
//! The Gramian is stored as the dense matrix of `Λ_T : X' → X` acting on
//! densities, `Λ_T = Σ_j τ_j U(T,t_j) B B* U(T,t_j)*`, with composite
//! trapezoid weights `τ_j`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionOperator, TimeGrid};
use crate::function_space::{same_grid, weighted_dot, LpConfig, SpatialGrid, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub enum InputKind {
    /// `Bu = η u` with `H` sharing the state grid.
    ScaledIdentity(f64),
    /// Nodal matrix from the `H` grid to the state grid.
    Dense(DMatrix<f64>),
}

/// Bounded input operator `B : H → X`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputOperator {
    kind: InputKind,
    state_grid: Arc<SpatialGrid>,
    control_grid: Arc<SpatialGrid>,
    norm_bound: f64,
}

impl InputOperator {
    /// `Bu = η u`. The recorded bound is the discrete `L² → L^p` norm
    /// `|η| w_min^{1/p − 1/2}`, which is `|η|` when `p = 2`.
    pub fn scaled_identity(grid: Arc<SpatialGrid>, eta: f64, cfg: LpConfig) -> Result<Self> {
        if !eta.is_finite() {
            return Err(Error::invalid("eta", "must be finite"));
        }
        let embed = grid.min_weight().powf(1.0 / cfg.p() - 0.5);
        Ok(Self {
            kind: InputKind::ScaledIdentity(eta),
            norm_bound: eta.abs() * embed,
            state_grid: grid.clone(),
            control_grid: grid,
        })
    }

    /// `B = 0` on the state grid.
    pub fn zero(grid: Arc<SpatialGrid>) -> Self {
        Self {
            kind: InputKind::ScaledIdentity(0.0),
            norm_bound: 0.0,
            state_grid: grid.clone(),
            control_grid: grid,
        }
    }

    /// Dense nodal matrix `state_grid.len() × control_grid.len()`.
    ///
    /// The recorded bound is `‖W_x^{1/2} B W_h^{-1/2}‖₂ · w_min^{1/p − 1/2}`,
    /// exact for `p = 2` and an upper bound otherwise.
    pub fn dense(
        matrix: DMatrix<f64>,
        state_grid: Arc<SpatialGrid>,
        control_grid: Arc<SpatialGrid>,
        cfg: LpConfig,
    ) -> Result<Self> {
        if matrix.nrows() != state_grid.len() {
            return Err(Error::DimensionMismatch {
                what: "input operator rows",
                expected: state_grid.len(),
                got: matrix.nrows(),
            });
        }
        if matrix.ncols() != control_grid.len() {
            return Err(Error::DimensionMismatch {
                what: "input operator columns",
                expected: control_grid.len(),
                got: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("input matrix", "entries must be finite"));
        }
        let wx = state_grid.weights();
        let wh = control_grid.weights();
        let scaled = DMatrix::from_fn(matrix.nrows(), matrix.ncols(), |i, k| {
            wx[i].sqrt() * matrix[(i, k)] / wh[k].sqrt()
        });
        let spectral = scaled.singular_values().iter().copied().fold(0.0, f64::max);
        let embed = state_grid.min_weight().powf(1.0 / cfg.p() - 0.5);
        Ok(Self {
            kind: InputKind::Dense(matrix),
            norm_bound: spectral * embed,
            state_grid,
            control_grid,
        })
    }

    pub fn kind(&self) -> &InputKind {
        &self.kind
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn state_grid(&self) -> &Arc<SpatialGrid> {
        &self.state_grid
    }

    pub fn control_grid(&self) -> &Arc<SpatialGrid> {
        &self.control_grid
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            InputKind::ScaledIdentity(eta) => *eta == 0.0,
            InputKind::Dense(m) => m.iter().all(|&v| v == 0.0),
        }
    }

    pub(crate) fn apply_raw(&self, u: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            InputKind::ScaledIdentity(eta) => u * *eta,
            InputKind::Dense(m) => m * u,
        }
    }

    pub(crate) fn adjoint_raw(&self, phi: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            InputKind::ScaledIdentity(eta) => phi * *eta,
            InputKind::Dense(m) => {
                let wx = self.state_grid.weights();
                let wh = self.control_grid.weights();
                let weighted = DVector::from_iterator(phi.len(), phi.iter().zip(wx).map(|(p, w)| p * w));
                let mut out = m.tr_mul(&weighted);
                for (v, w) in out.iter_mut().zip(wh) {
                    *v /= w;
                }
                out
            }
        }
    }

    /// Nodal matrix of `B` (dense copy).
    fn matrix(&self) -> DMatrix<f64> {
        match &self.kind {
            InputKind::ScaledIdentity(eta) => DMatrix::identity(self.state_grid.len(), self.state_grid.len()) * *eta,
            InputKind::Dense(m) => m.clone(),
        }
    }

    fn provenance(&self, hasher: &mut Sha256) {
        match &self.kind {
            InputKind::ScaledIdentity(eta) => {
                hasher.update(b"scaled_identity");
                hasher.update(eta.to_le_bytes());
            }
            InputKind::Dense(m) => {
                hasher.update(b"dense");
                for v in m.iter() {
                    hasher.update(v.to_le_bytes());
                }
            }
        }
    }
}

/// `Bu` for a control sample on the control grid.
pub fn apply_input(b: &InputOperator, u: &StateVector) -> Result<StateVector> {
    same_grid(&b.control_grid, u.grid())?;
    Ok(StateVector::from_raw(b.state_grid.clone(), b.apply_raw(u.values())))
}

/// `B*φ`, adjoint between the state pairing and the `H` inner product.
pub fn apply_input_adjoint(b: &InputOperator, phi: &StateVector) -> Result<StateVector> {
    same_grid(&b.state_grid, phi.grid())?;
    Ok(StateVector::from_raw(b.control_grid.clone(), b.adjoint_raw(phi.values())))
}

/// Time-sampled control `u(t_j)`, one `H` vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    time_grid: Arc<TimeGrid>,
    samples: Vec<StateVector>,
}

impl ControlSignal {
    pub fn new(time_grid: Arc<TimeGrid>, samples: Vec<StateVector>) -> Result<Self> {
        if samples.len() != time_grid.len() {
            return Err(Error::DimensionMismatch {
                what: "control samples",
                expected: time_grid.len(),
                got: samples.len(),
            });
        }
        if let Some(first) = samples.first() {
            for s in &samples[1..] {
                same_grid(first.grid(), s.grid())?;
            }
        }
        Ok(Self { time_grid, samples })
    }

    pub fn zeros(time_grid: Arc<TimeGrid>, grid: Arc<SpatialGrid>) -> Self {
        let samples = vec![StateVector::zeros(grid); time_grid.len()];
        Self { time_grid, samples }
    }

    pub fn time_grid(&self) -> &Arc<TimeGrid> {
        &self.time_grid
    }

    pub fn samples(&self) -> &[StateVector] {
        &self.samples
    }

    pub fn sample(&self, j: usize) -> &StateVector {
        &self.samples[j]
    }

    /// `∫₀ᵀ (u, w)_H dt` by the trapezoid rule.
    pub fn inner(&self, other: &ControlSignal) -> Result<f64> {
        if self.time_grid != other.time_grid {
            return Err(Error::GridMismatch("control signals use different time grids".into()));
        }
        let mut acc = 0.0;
        for ((a, b), tau) in self.samples.iter().zip(&other.samples).zip(self.time_grid.weights()) {
            same_grid(a.grid(), b.grid())?;
            acc += tau * weighted_dot(a.as_slice(), b.as_slice(), a.grid().weights());
        }
        Ok(acc)
    }

    /// Control energy `∫₀ᵀ ‖u‖²_H dt`.
    pub fn energy(&self) -> f64 {
        self.samples
            .iter()
            .zip(self.time_grid.weights())
            .map(|(s, tau)| tau * weighted_dot(s.as_slice(), s.as_slice(), s.grid().weights()))
            .sum()
    }

    /// `c·u + d·w`, sample by sample.
    pub fn combine(&self, c: f64, other: &ControlSignal, d: f64) -> Result<ControlSignal> {
        if self.time_grid != other.time_grid {
            return Err(Error::GridMismatch("control signals use different time grids".into()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| {
                same_grid(a.grid(), b.grid())?;
                Ok(StateVector::from_raw(a.grid().clone(), a.values() * c + b.values() * d))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ControlSignal {
            time_grid: self.time_grid.clone(),
            samples,
        })
    }

    pub fn scaled(&self, c: f64) -> ControlSignal {
        ControlSignal {
            time_grid: self.time_grid.clone(),
            samples: self.samples.iter().map(|s| s.scaled(c)).collect(),
        }
    }
}

fn check_signal(u_op: &EvolutionOperator, b: &InputOperator, u: &ControlSignal) -> Result<()> {
    if u.time_grid() != u_op.time_grid() {
        return Err(Error::GridMismatch("control and evolution use different time grids".into()));
    }
    same_grid(b.state_grid(), u_op.grid())?;
    for s in u.samples() {
        same_grid(b.control_grid(), s.grid())?;
    }
    Ok(())
}

/// `L_T u = ∫₀ᵀ U(T,t) B u(t) dt` by the trapezoid rule.
pub fn controllability_map(u_op: &EvolutionOperator, b: &InputOperator, u: &ControlSignal) -> Result<StateVector> {
    check_signal(u_op, b, u)?;
    let forcing: Vec<DVector<f64>> = u.samples().iter().map(|s| b.apply_raw(s.values())).collect();
    let zero = DVector::zeros(u_op.grid().len());
    let terminal = u_op.mild_terminal_raw(&zero, &forcing);
    Ok(StateVector::from_raw(u_op.grid().clone(), terminal))
}

/// `(L_T)*φ = B* U(T,t)* φ` sampled at every node.
pub fn controllability_map_adjoint(
    u_op: &EvolutionOperator,
    b: &InputOperator,
    phi: &StateVector,
) -> Result<ControlSignal> {
    same_grid(u_op.grid(), phi.grid())?;
    same_grid(b.state_grid(), u_op.grid())?;
    let samples = u_op
        .terminal_adjoint_sweep(phi.values())
        .iter()
        .map(|y| StateVector::from_raw(b.control_grid().clone(), b.adjoint_raw(y)))
        .collect();
    ControlSignal::new(u_op.time_grid().clone(), samples)
}

/// Dense controllability Gramian `Λ_T : X' → X`.
#[derive(Debug, Clone)]
pub struct GramianOperator {
    grid: Arc<SpatialGrid>,
    /// `Λ` acting on densities: `(Λφ)_i = Σ_k matrix[i,k] φ_k`.
    matrix: DMatrix<f64>,
    time_weights: Vec<f64>,
    build_hash: String,
}

/// Number of time nodes per parallel chunk in Gramian assembly. Fixed so
/// that the floating-point summation order does not depend on scheduling.
const GRAMIAN_CHUNK: usize = 16;

/// Assembles `Λ_T = Σ_j τ_j U(T,t_j) B B* U(T,t_j)*`.
///
/// Requires the terminal cache of `u_op`.
pub fn assemble_gramian(u_op: &EvolutionOperator, b: &InputOperator) -> Result<GramianOperator> {
    same_grid(b.state_grid(), u_op.grid())?;
    let tg = u_op.time_grid();
    let n = u_op.grid().len();
    let m = tg.n_steps();
    if !u_op.has_terminal_cache() {
        return Err(Error::invalid(
            "evolution operator",
            "Gramian assembly needs the terminal propagator cache",
        ));
    }
    let wx = u_op.grid().weights();
    let wh = b.control_grid().weights();
    let bt = b.matrix().transpose();
    // row-scaled Bᵀ: D_h^{1/2} Bᵀ
    let sqrt_bt = DMatrix::from_fn(bt.nrows(), bt.ncols(), |k, i| wh[k].sqrt().recip() * bt[(k, i)]);

    let nodes: Vec<usize> = (0..=m).collect();
    let partials: Vec<DMatrix<f64>> = nodes
        .par_chunks(GRAMIAN_CHUNK)
        .map(|chunk| {
            let mut s = DMatrix::<f64>::zeros(n, n);
            for &j in chunk {
                let tau = tg.weights()[j];
                let phi_t = u_op.terminal_transpose(j).expect("cache checked above");
                // K = D_h^{-1/2} Bᵀ U(T,t_j)ᵀ, S += τ Kᵀ K
                let k = &sqrt_bt * phi_t;
                s.gemm_tr(tau, &k, &k, 1.0);
            }
            s
        })
        .collect();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for p in &partials {
        s += p;
    }
    s = (&s + s.transpose()) * 0.5;
    // Λ = S W_x
    let mut matrix = s;
    for (k, mut col) in matrix.column_iter_mut().enumerate() {
        col *= wx[k];
    }

    let mut hasher = Sha256::new();
    for v in u_op.grid().nodes().iter().chain(wx) {
        hasher.update(v.to_le_bytes());
    }
    for v in tg.nodes().iter().chain(tg.weights()) {
        hasher.update(v.to_le_bytes());
    }
    if let Some(phi0) = u_op.terminal_transpose(0) {
        for v in phi0.iter() {
            hasher.update(v.to_le_bytes());
        }
    }
    b.provenance(&mut hasher);
    let build_hash = hex::encode(hasher.finalize());

    Ok(GramianOperator {
        grid: u_op.grid().clone(),
        matrix,
        time_weights: tg.weights().to_vec(),
        build_hash,
    })
}

impl GramianOperator {
    /// Wraps a dense `Λ` given directly on a grid (no provenance hash).
    pub fn from_matrix(grid: Arc<SpatialGrid>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return Err(Error::DimensionMismatch {
                what: "Gramian matrix",
                expected: grid.len(),
                got: matrix.nrows(),
            });
        }
        Ok(Self {
            grid,
            matrix,
            time_weights: Vec::new(),
            build_hash: String::new(),
        })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn time_weights(&self) -> &[f64] {
        &self.time_weights
    }

    pub fn build_hash(&self) -> &str {
        &self.build_hash
    }

    /// `Λφ` for a density `φ`.
    pub fn apply(&self, phi: &StateVector) -> Result<StateVector> {
        same_grid(&self.grid, phi.grid())?;
        Ok(StateVector::from_raw(self.grid.clone(), &self.matrix * phi.values()))
    }

    /// Mean diagonal entry, a cheap scale for `Λ`.
    pub fn trace_scale(&self) -> f64 {
        self.matrix.trace() / self.matrix.nrows() as f64
    }

    /// `⟨Λφ, ψ⟩`.
    pub fn form(&self, phi: &StateVector, psi: &StateVector) -> Result<f64> {
        let l = self.apply(phi)?;
        same_grid(&self.grid, psi.grid())?;
        Ok(weighted_dot(l.as_slice(), psi.as_slice(), self.grid.weights()))
    }

    /// `W^{1/2} Λ W^{-1/2}`, the matrix of `Λ` in the weighted orthonormal
    /// nodal basis; symmetric up to roundoff.
    fn normalized(&self) -> DMatrix<f64> {
        let w = self.grid.weights();
        let n = self.matrix.nrows();
        let a = DMatrix::from_fn(n, n, |i, k| w[i].sqrt() * self.matrix[(i, k)] / w[k].sqrt());
        (&a + a.transpose()) * 0.5
    }
}

/// Positivity certificate of the Gramian form.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Positivity {
    /// Smallest eigenvalue, with roundoff-level negatives reported as 0.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Relative eigenvalue floor below which the Gramian counts as singular.
pub const POSITIVITY_REL_TOL: f64 = 1e-10;

impl Positivity {
    pub fn value(&self) -> f64 {
        self.min_eigenvalue
    }

    /// `true` when the discrete Gramian is certified positive definite.
    pub fn is_positive(&self) -> bool {
        self.min_eigenvalue > POSITIVITY_REL_TOL * self.max_eigenvalue && self.min_eigenvalue > 0.0
    }
}

/// Smallest eigenvalue of the pairing-symmetrized Gramian form.
pub fn positivity_certificate(gram: &GramianOperator) -> Result<Positivity> {
    let eig = SymmetricEigen::new(gram.normalized());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let tol = 1e-10 * hi.abs().max(1.0);
    if lo < -tol {
        return Err(Error::GramianIndefinite(lo));
    }
    Ok(Positivity {
        min_eigenvalue: lo.max(0.0),
        max_eigenvalue: hi.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{build_evolution, GeneratorSpec};

    fn heat(n: usize, steps: usize) -> EvolutionOperator {
        let grid = SpatialGrid::uniform(n).unwrap();
        let gen = GeneratorSpec::constant(grid, 1.0).unwrap();
        build_evolution(&gen, &TimeGrid::uniform(1.0, steps).unwrap()).unwrap()
    }

    #[test]
    fn scaled_identity_application() {
        let grid = SpatialGrid::uniform(5).unwrap();
        let b = InputOperator::scaled_identity(grid.clone(), 2.5, LpConfig::hilbert()).unwrap();
        assert_eq!(b.norm_bound(), 2.5);
        let one = StateVector::from_fn(grid.clone(), |_| 1.0).unwrap();
        assert!(apply_input(&b, &one).unwrap().as_slice().iter().all(|&v| v == 2.5));
        assert!(apply_input(&b, &StateVector::zeros(grid.clone())).unwrap().is_zero());
        assert!(apply_input_adjoint(&b, &StateVector::zeros(grid)).unwrap().is_zero());
    }

    #[test]
    fn dense_single_column_adjoint() {
        let grid = SpatialGrid::uniform(6).unwrap();
        let mut m = DMatrix::zeros(6, 6);
        for i in 0..6 {
            m[(i, 2)] = (i as f64 + 1.0).sqrt();
        }
        let b = InputOperator::dense(m.clone(), grid.clone(), grid.clone(), LpConfig::hilbert()).unwrap();
        let phi = StateVector::from_fn(grid.clone(), |x| x.cos() + 0.3).unwrap();
        let bs = apply_input_adjoint(&b, &phi).unwrap();
        let w = grid.weights();
        let col_pairing: f64 = (0..6).map(|i| w[i] * m[(i, 2)] * phi.as_slice()[i]).sum();
        for (k, &v) in bs.as_slice().iter().enumerate() {
            if k == 2 {
                assert!((v - col_pairing / w[2]).abs() < 1e-14);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn dense_dimension_mismatch() {
        let grid = SpatialGrid::uniform(4).unwrap();
        let small = SpatialGrid::uniform(3).unwrap();
        assert!(InputOperator::dense(DMatrix::zeros(4, 4), grid.clone(), small.clone(), LpConfig::hilbert()).is_err());
        let b = InputOperator::scaled_identity(grid, 1.0, LpConfig::hilbert()).unwrap();
        assert_eq!(apply_input(&b, &StateVector::zeros(small)).unwrap_err().code(), "grid_mismatch");
    }

    #[test]
    fn zero_input_gives_zero_gramian() {
        let u = heat(11, 10);
        let b = InputOperator::zero(u.grid().clone());
        let g = assemble_gramian(&u, &b).unwrap();
        assert!(g.matrix().iter().all(|&v| v == 0.0));
        let cert = positivity_certificate(&g).unwrap();
        assert_eq!(cert.value(), 0.0);
        assert!(!cert.is_positive());
    }

    #[test]
    fn controllability_map_of_single_node_control() {
        let u_op = heat(15, 10);
        let grid = u_op.grid().clone();
        let b = InputOperator::scaled_identity(grid.clone(), 1.0, LpConfig::hilbert()).unwrap();
        let tg = u_op.time_grid().clone();
        let j = 4;
        let bump = StateVector::from_fn(grid.clone(), |x| x.sin() * (2.0 * x).cos()).unwrap();
        let samples = (0..tg.len())
            .map(|k| if k == j { bump.clone() } else { StateVector::zeros(grid.clone()) })
            .collect();
        let u = ControlSignal::new(tg.clone(), samples).unwrap();
        let got = controllability_map(&u_op, &b, &u).unwrap();
        let want = u_op.apply(tg.last(), j, &bump).unwrap().scaled(tg.weights()[j]);
        for (a, c) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((a - c).abs() < 1e-15);
        }
        let zero = ControlSignal::zeros(tg, grid);
        assert!(controllability_map(&u_op, &b, &zero).unwrap().is_zero());
    }

    #[test]
    fn adjoint_terminal_sample_is_input_adjoint() {
        let u_op = heat(13, 6);
        let grid = u_op.grid().clone();
        let b = InputOperator::scaled_identity(grid.clone(), 0.7, LpConfig::hilbert()).unwrap();
        let phi = StateVector::from_fn(grid.clone(), |x| x * x - 1.0).unwrap();
        let sig = controllability_map_adjoint(&u_op, &b, &phi).unwrap();
        let last = sig.sample(u_op.time_grid().last());
        assert_eq!(last.as_slice(), apply_input_adjoint(&b, &phi).unwrap().as_slice());
        let zero = controllability_map_adjoint(&u_op, &b, &StateVector::zeros(grid)).unwrap();
        assert_eq!(zero.energy(), 0.0);
    }

    #[test]
    fn single_node_identity_gramian() {
        // U = I collapsed onto one quadrature node of weight T
        let grid = SpatialGrid::uniform(4).unwrap();
        let t = 0.25;
        let w = grid.weights().to_vec();
        let matrix = DMatrix::from_fn(4, 4, |i, k| if i == k { t * w[i] / w[k] } else { 0.0 });
        let g = GramianOperator::from_matrix(grid, matrix).unwrap();
        let cert = positivity_certificate(&g).unwrap();
        assert!((cert.value() - t).abs() < 1e-15);
    }

    #[test]
    fn mode_one_projection_is_flagged() {
        let u_op = heat(21, 20);
        let grid = u_op.grid().clone();
        let w1 = crate::evolution::eigenmode(&grid, 1);
        let w = grid.weights();
        let m = DMatrix::from_fn(21, 21, |i, k| w1.as_slice()[i] * w1.as_slice()[k] * w[k]);
        let b = InputOperator::dense(m, grid.clone(), grid, LpConfig::hilbert()).unwrap();
        let g = assemble_gramian(&u_op, &b).unwrap();
        let cert = positivity_certificate(&g).unwrap();
        assert!(cert.value() < 1e-12);
        assert!(!cert.is_positive());
        assert!(cert.max_eigenvalue > 0.1);
    }

    #[test]
    fn gramian_hash_is_stable() {
        let u_op = heat(9, 5);
        let b = InputOperator::scaled_identity(u_op.grid().clone(), 1.0, LpConfig::hilbert()).unwrap();
        let a = assemble_gramian(&u_op, &b).unwrap();
        let c = assemble_gramian(&u_op, &b).unwrap();
        assert_eq!(a.build_hash(), c.build_hash());
        assert_eq!(a.build_hash().len(), 64);
        assert_eq!(a.matrix(), c.matrix());
    }
}
