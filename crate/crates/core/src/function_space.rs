//! Discrete model of `L^p([0, π])`.
//!
//! Grid functions are stored by their nodal values at interior points; the
//! homogeneous Dirichlet boundary values are implicit zeros. Integrals are
//! realized by a positive quadrature rule attached to the grid, which also
//! defines the pairing between a state and a dual element. Dual elements are
//! stored as densities on the same grid, so a functional `x'` acts on `x` by
//! `Σ w_i x_i x'_i`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interior nodes of `[0, π]` together with positive quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Spacing when the grid is the uniform Dirichlet grid `ξ_i = (i+1)h`,
    /// `h = π/(n+1)`.
    spacing: Option<f64>,
}

impl SpatialGrid {
    /// Uniform interior grid with `n` points and composite-trapezoid weights.
    ///
    /// With zero boundary values the trapezoid rule reduces to the weight `h`
    /// at every interior node.
    pub fn uniform(n: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(Error::invalid("n_interior", "must be at least 1"));
        }
        let h = PI / (n as f64 + 1.0);
        let nodes = (0..n).map(|i| (i as f64 + 1.0) * h).collect();
        Ok(Arc::new(Self {
            nodes,
            weights: vec![h; n],
            spacing: Some(h),
        }))
    }

    /// Cell-centred grid `ξ_i = (i + ½)π/n` with midpoint weights `π/n`.
    ///
    /// The weights sum to `π`, so constants integrate exactly. This grid has
    /// no finite-difference Laplacian attached and is rejected by the
    /// evolution builder.
    pub fn midpoint(n: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(Error::invalid("n_interior", "must be at least 1"));
        }
        let w = PI / n as f64;
        let nodes = (0..n).map(|i| (i as f64 + 0.5) * w).collect();
        Self::with_weights(nodes, vec![w; n])
    }

    /// Arbitrary nodes and weights, validated against the grid invariants.
    pub fn with_weights(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Arc<Self>> {
        if nodes.is_empty() {
            return Err(Error::invalid("nodes", "grid must have at least one node"));
        }
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "grid weights",
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if !(nodes[0] > 0.0 && nodes[nodes.len() - 1] < PI) {
            return Err(Error::invalid("nodes", "nodes must lie strictly inside (0, π)"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("nodes", "nodes must be strictly increasing"));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights", "weights must be positive and finite"));
        }
        let total: f64 = weights.iter().sum();
        if total > PI * (1.0 + 1e-14) {
            return Err(Error::invalid(
                "weights",
                format!("weights sum to {total}, exceeding the domain length π"),
            ));
        }
        Ok(Arc::new(Self {
            nodes,
            weights,
            spacing: None,
        }))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Spacing `h` of the uniform Dirichlet grid, `None` for other grids.
    pub fn dirichlet_spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Exponent pair `(p, q)` with `1/p + 1/q = 1` and `p ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpConfig {
    p: f64,
    q: f64,
}

impl LpConfig {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::invalid("p", format!("exponent must be finite and ≥ 2, got {p}")));
        }
        Ok(Self { p, q: p / (p - 1.0) })
    }

    pub fn hilbert() -> Self {
        Self { p: 2.0, q: 2.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Conjugate exponent `p/(p−1)`.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == 2.0
    }

    /// The same configuration with the roles of `p` and `q` swapped, used
    /// for norms of dual elements. Not a valid `LpConfig` for `p > 2`, so it
    /// is only exposed through [`lq_norm`].
    fn conjugate(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
        }
    }
}

impl fmt::Display for LpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L^{}", self.p)
    }
}

/// A grid function: an element of `X`, or a dual element stored as a density.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: Arc<SpatialGrid>,
    values: DVector<f64>,
}

impl StateVector {
    /// Wraps nodal values, rejecting non-finite entries and length mismatch.
    pub fn new(grid: Arc<SpatialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                what: "state vector",
                expected: grid.len(),
                got: values.len(),
            });
        }
        check_finite("state vector", &values)?;
        Ok(Self {
            grid,
            values: DVector::from_vec(values),
        })
    }

    pub fn from_dvector(grid: Arc<SpatialGrid>, values: DVector<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                what: "state vector",
                expected: grid.len(),
                got: values.len(),
            });
        }
        check_finite("state vector", values.as_slice())?;
        Ok(Self { grid, values })
    }

    /// Internal constructor for values produced by the library's own finite
    /// arithmetic.
    pub(crate) fn from_raw(grid: Arc<SpatialGrid>, values: DVector<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<SpatialGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: DVector::zeros(n),
        }
    }

    /// Samples `g(ξ_i)` at the grid nodes.
    pub fn from_fn(grid: Arc<SpatialGrid>, g: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&xi| g(xi)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_raw(self.grid.clone(), &self.values * c)
    }

    pub fn sub(&self, other: &StateVector) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_raw(self.grid.clone(), &self.values - &other.values))
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_raw(self.grid.clone(), &self.values + &other.values))
    }
}

pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

pub(crate) fn same_grid(a: &Arc<SpatialGrid>, b: &Arc<SpatialGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "grids with {} and {} nodes differ",
            a.len(),
            b.len()
        )))
    }
}

/// `(Σ w_i |v_i|^p)^{1/p}`, scaled by the max entry to avoid overflow.
pub(crate) fn weighted_norm(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        let s: f64 = values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * (v / peak) * (v / peak))
            .sum();
        return peak * s.sqrt();
    }
    let s: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v.abs() / peak).powf(p))
        .sum();
    peak * s.powf(1.0 / p)
}

pub(crate) fn weighted_dot(a: &[f64], b: &[f64], weights: &[f64]) -> f64 {
    a.iter().zip(b).zip(weights).map(|((x, y), w)| w * x * y).sum()
}

/// Pointwise duality map `|v|^{p−2} v ‖v‖^{2−p}` on raw values.
pub(crate) fn duality_values(values: &DVector<f64>, weights: &[f64], p: f64) -> DVector<f64> {
    if p == 2.0 {
        return values.clone();
    }
    let norm = weighted_norm(values.as_slice(), weights, p);
    if norm == 0.0 {
        return DVector::zeros(values.len());
    }
    // |v|^{p-2} v ‖v‖^{2-p} = sign(v) |v/‖v‖|^{p-1} ‖v‖
    values.map(|v| v.signum() * (v.abs() / norm).powf(p - 1.0) * norm)
}

/// Inverse duality map: the duality map of `L^q`, `|φ|^{q−2} φ ‖φ‖_q^{2−q}`.
pub(crate) fn inverse_duality_values(values: &DVector<f64>, weights: &[f64], q: f64) -> DVector<f64> {
    if q == 2.0 {
        return values.clone();
    }
    let norm = weighted_norm(values.as_slice(), weights, q);
    if norm == 0.0 {
        return DVector::zeros(values.len());
    }
    values.map(|v| v.signum() * (v.abs() / norm).powf(q - 1.0) * norm)
}

/// Discrete `‖v‖_{L^p}`. Zero exactly when `v ≡ 0`.
pub fn lp_norm(v: &StateVector, cfg: LpConfig) -> f64 {
    weighted_norm(v.as_slice(), v.grid.weights(), cfg.p())
}

/// Norm of a dual element: the discrete `L^q` norm with the same weights.
pub fn lq_norm(v: &StateVector, cfg: LpConfig) -> f64 {
    weighted_norm(v.as_slice(), v.grid.weights(), cfg.conjugate().p())
}

/// Duality pairing `⟨v, φ⟩ = Σ w_i v_i φ_i`.
pub fn pairing(v: &StateVector, phi: &StateVector) -> Result<f64> {
    same_grid(&v.grid, &phi.grid)?;
    Ok(weighted_dot(v.as_slice(), phi.as_slice(), v.grid.weights()))
}

/// Duality map `J: X → X'`, returned as a density.
pub fn duality_map(v: &StateVector, cfg: LpConfig) -> StateVector {
    StateVector::from_raw(
        v.grid.clone(),
        duality_values(&v.values, v.grid.weights(), cfg.p()),
    )
}

/// Inverse duality map `J^{-1}: X' → X`.
pub fn duality_map_inverse(phi: &StateVector, cfg: LpConfig) -> StateVector {
    StateVector::from_raw(
        phi.grid.clone(),
        inverse_duality_values(&phi.values, phi.grid.weights(), cfg.q()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = SpatialGrid::uniform(101).unwrap();
        assert!(g.nodes()[0] > 0.0 && g.nodes()[100] < PI);
        assert!(g.weights().iter().sum::<f64>() < PI);
        assert!(SpatialGrid::uniform(0).is_err());
        assert!(SpatialGrid::with_weights(vec![0.0, 1.0], vec![0.1, 0.1]).is_err());
        assert!(SpatialGrid::with_weights(vec![1.0, 2.0], vec![2.0, 2.0]).is_err());
        assert!(SpatialGrid::with_weights(vec![1.0, 2.0], vec![0.5, -0.1]).is_err());
    }

    #[test]
    fn lp_config_validation() {
        assert!(LpConfig::new(1.5).is_err());
        assert!(LpConfig::new(f64::INFINITY).is_err());
        let c = LpConfig::new(4.0).unwrap();
        assert!((1.0 / c.p() + 1.0 / c.q() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let g = SpatialGrid::uniform(3).unwrap();
        let err = StateVector::new(g.clone(), vec![0.0, f64::NAN, 1.0]).unwrap_err();
        assert_eq!(err.code(), "non_finite");
        assert!(StateVector::new(g, vec![0.0; 2]).is_err());
    }

    #[test]
    fn norm_of_zero_and_constants() {
        let g = SpatialGrid::midpoint(64).unwrap();
        let cfg = LpConfig::hilbert();
        assert_eq!(lp_norm(&StateVector::zeros(g.clone()), cfg), 0.0);
        let one = StateVector::from_fn(g, |_| 1.0).unwrap();
        assert!((lp_norm(&one, cfg) - PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn pairing_of_constants_and_mismatch() {
        let g = SpatialGrid::midpoint(40).unwrap();
        let one = StateVector::from_fn(g.clone(), |_| 1.0).unwrap();
        let two = StateVector::from_fn(g.clone(), |_| 2.0).unwrap();
        assert!((pairing(&one, &two).unwrap() - 2.0 * PI).abs() < 1e-13);
        assert_eq!(pairing(&one, &StateVector::zeros(g)).unwrap(), 0.0);
        let other = StateVector::zeros(SpatialGrid::uniform(40).unwrap());
        assert_eq!(pairing(&one, &other).unwrap_err().code(), "grid_mismatch");
    }

    #[test]
    fn duality_map_constants() {
        let g = SpatialGrid::midpoint(32).unwrap();
        let cfg = LpConfig::new(4.0).unwrap();
        let one = StateVector::from_fn(g.clone(), |_| 1.0).unwrap();
        let phi = duality_map(&one, cfg);
        for &v in phi.as_slice() {
            assert!((v - PI.powf(-0.5)).abs() < 1e-14);
        }
        assert!(duality_map(&StateVector::zeros(g), cfg).is_zero());
    }

    #[test]
    fn inverse_of_constant_density() {
        let g = SpatialGrid::midpoint(32).unwrap();
        let cfg = LpConfig::new(4.0).unwrap();
        let phi = StateVector::from_fn(g, |_| PI.powf(-0.5)).unwrap();
        let v = duality_map_inverse(&phi, cfg);
        for &x in v.as_slice() {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hilbert_duality_is_identity() {
        let g = SpatialGrid::uniform(17).unwrap();
        let v = StateVector::from_fn(g, |x| (3.0 * x).cos() - x).unwrap();
        assert_eq!(duality_map(&v, LpConfig::hilbert()), v);
        assert_eq!(duality_map_inverse(&v, LpConfig::hilbert()), v);
    }

    #[test]
    fn duality_map_zero_entries_are_fine() {
        let g = SpatialGrid::uniform(4).unwrap();
        let cfg = LpConfig::new(3.0).unwrap();
        let v = StateVector::new(g, vec![0.0, 1.0, 0.0, -2.0]).unwrap();
        let phi = duality_map(&v, cfg);
        assert_eq!(phi.as_slice()[0], 0.0);
        assert_eq!(phi.as_slice()[2], 0.0);
        let back = duality_map_inverse(&phi, cfg);
        for (a, b) in back.as_slice().iter().zip(v.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
