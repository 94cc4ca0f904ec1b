//! Regularized resolvent equation `λz + Λ J[z] = λh`.
//!
//! Its solution `z_λ(h) = λ(λI + Λ J)⁻¹ h` is the terminal miss of the
//! regularized feedback. For `p = 2` the equation is linear and solved
//! directly; otherwise Newton's method with the analytic derivative of the
//! duality map is used, falling back to a damped fixed-point iteration if
//! the line search stalls.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::control::GramianOperator;
use crate::error::{Error, Result};
use crate::function_space::{duality_values, same_grid, weighted_norm, LpConfig, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventConfig {
    pub lambda: f64,
    pub max_iter: usize,
    /// Residual tolerance `‖λz + ΛJ[z] − λh‖_p`; `None` uses `1e−10 (1 + ‖h‖_p)`.
    pub tol: Option<f64>,
    /// Relaxation of the fixed-point fallback, in `(0, 1]`.
    pub damping: f64,
}

impl ResolventConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        let rc = Self {
            lambda,
            max_iter: 200,
            tol: None,
            damping: 0.5,
        };
        rc.validate()?;
        Ok(rc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(Error::invalid("tol", "must be positive"));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", "must lie in (0, 1]"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }

    pub fn tolerance_for(&self, h_norm: f64) -> f64 {
        self.tol.unwrap_or(1e-10 * (1.0 + h_norm))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    HilbertDirect,
    Newton,
    DampedPicard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub z: StateVector,
    pub residual: f64,
    pub iterations: usize,
    pub path: SolvePath,
}

/// `‖λz + Λ J[z] − λh‖_p`.
pub fn resolvent_residual(
    gram: &GramianOperator,
    cfg: LpConfig,
    lambda: f64,
    h: &StateVector,
    z: &StateVector,
) -> Result<f64> {
    same_grid(gram.grid(), h.grid())?;
    same_grid(gram.grid(), z.grid())?;
    let w = gram.grid().weights();
    let r = raw_residual(gram.matrix(), w, cfg.p(), lambda, h.values(), z.values());
    Ok(weighted_norm(r.as_slice(), w, cfg.p()))
}

fn raw_residual(
    lam: &DMatrix<f64>,
    w: &[f64],
    p: f64,
    lambda: f64,
    h: &DVector<f64>,
    z: &DVector<f64>,
) -> DVector<f64> {
    let jz = duality_values(z, w, p);
    let mut r = lam * jz;
    r.axpy(lambda, z, 1.0);
    r.axpy(-lambda, h, 1.0);
    r
}

/// Solves `λz + Λ J[z] = λh`.
pub fn solve_resolvent(
    gram: &GramianOperator,
    cfg: LpConfig,
    rc: &ResolventConfig,
    h: &StateVector,
) -> Result<ResolventSolution> {
    rc.validate()?;
    same_grid(gram.grid(), h.grid())?;
    let grid = gram.grid().clone();
    let w = grid.weights();
    let p = cfg.p();
    let lambda = rc.lambda;
    let h_norm = weighted_norm(h.as_slice(), w, p);
    let tol = rc.tolerance_for(h_norm);
    let n = grid.len();
    let residual_of = |z: &DVector<f64>| weighted_norm(raw_residual(gram.matrix(), w, p, lambda, h.values(), z).as_slice(), w, p);

    if h.is_zero() {
        return Ok(ResolventSolution {
            z: StateVector::zeros(grid),
            residual: 0.0,
            iterations: 0,
            path: if cfg.is_hilbert() { SolvePath::HilbertDirect } else { SolvePath::Newton },
        });
    }

    if cfg.is_hilbert() {
        // (I + Λ/λ) z = h
        let mut a = gram.matrix() / lambda;
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        let lu = a.lu();
        let mut z = lu
            .solve(h.values())
            .ok_or_else(|| Error::LinearSolve("λI + Λ is singular".into()))?;
        // one step of iterative refinement
        let scaled = raw_residual(gram.matrix(), w, p, lambda, h.values(), &z) / lambda;
        if let Some(dz) = lu.solve(&scaled) {
            let candidate = &z - dz;
            if residual_of(&candidate) < residual_of(&z) {
                z = candidate;
            }
        }
        let residual = residual_of(&z);
        if residual > tol {
            return Err(Error::ResolventNotConverged {
                iterations: 1,
                best_residual: residual,
            });
        }
        return Ok(ResolventSolution {
            z: StateVector::from_raw(grid, z),
            residual,
            iterations: 1,
            path: SolvePath::HilbertDirect,
        });
    }

    let start = h.values() * (lambda / (lambda + gram.trace_scale().max(0.0)));
    let (z, residual, iterations, converged) = newton(gram.matrix(), w, p, lambda, h.values(), start, tol, rc.max_iter);
    if converged {
        return Ok(ResolventSolution {
            z: StateVector::from_raw(grid, z),
            residual,
            iterations,
            path: SolvePath::Newton,
        });
    }

    let (zp, rp, ip, conv_p) = damped_picard(gram.matrix(), w, p, lambda, h.values(), z, tol, rc.max_iter, rc.damping);
    if conv_p {
        return Ok(ResolventSolution {
            z: StateVector::from_raw(grid, zp),
            residual: rp,
            iterations: iterations + ip,
            path: SolvePath::DampedPicard,
        });
    }
    Err(Error::ResolventNotConverged {
        iterations: iterations + ip,
        best_residual: residual.min(rp),
    })
}

/// Derivative of the duality map at `z ≠ 0`:
/// `DJ = (p−1) diag(|ẑ|^{p−2}) + (2−p) ŝ (w∘ŝ)ᵀ` with `ẑ = z/‖z‖`,
/// `ŝ = |ẑ|^{p−2} ẑ`. Returned as `(diag, ŝ, w∘ŝ)`.
fn duality_jacobian_parts(z: &DVector<f64>, w: &[f64], p: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let norm = weighted_norm(z.as_slice(), w, p);
    let n = z.len();
    if norm == 0.0 {
        return (DVector::zeros(n), DVector::zeros(n), DVector::zeros(n));
    }
    let zh = z / norm;
    let diag = zh.map(|v| (p - 1.0) * v.abs().powf(p - 2.0));
    let s = zh.map(|v| v.abs().powf(p - 2.0) * v);
    let ws = DVector::from_iterator(n, s.iter().zip(w).map(|(a, b)| a * b));
    (diag, s, ws)
}

#[allow(clippy::too_many_arguments)]
fn newton(
    lam: &DMatrix<f64>,
    w: &[f64],
    p: f64,
    lambda: f64,
    h: &DVector<f64>,
    mut z: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> (DVector<f64>, f64, usize, bool) {
    let n = z.len();
    let norm = |r: &DVector<f64>| weighted_norm(r.as_slice(), w, p);
    let mut r = raw_residual(lam, w, p, lambda, h, &z);
    let mut res = norm(&r);
    let mut best = (z.clone(), res);
    // stop once the residual meets the tolerance both unscaled and divided
    // by λ, or when it stops improving after meeting the unscaled one
    for it in 0..max_iter {
        if res <= tol && (res / lambda <= tol || it > 0 && res >= 0.5 * best.1) {
            return (z, res, it, true);
        }
        let (diag, s, ws) = duality_jacobian_parts(&z, w, p);
        // Jacobian of λz + ΛJ[z]: λI + Λ DJ
        let mut jac = DMatrix::from_fn(n, n, |i, k| lam[(i, k)] * diag[k]);
        let ls = lam * &s;
        jac.ger(2.0 - p, &ls, &ws, 1.0);
        for i in 0..n {
            jac[(i, i)] += lambda;
        }
        let Some(step) = jac.lu().solve(&(-&r)) else {
            return (best.0, best.1, it, false);
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let cand = &z + &step * t;
            let rc = raw_residual(lam, w, p, lambda, h, &cand);
            let rn = norm(&rc);
            if rn <= (1.0 - 1e-4 * t) * res {
                z = cand;
                r = rc;
                res = rn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if res < best.1 {
            best = (z.clone(), res);
        }
        if !accepted {
            let done = best.1 <= tol;
            return (best.0, best.1, it + 1, done);
        }
    }
    let done = best.1 <= tol;
    (best.0, best.1, max_iter, done)
}

/// `z ← (1−ω)z + ω(h − λ⁻¹ Λ J[z])`.
#[allow(clippy::too_many_arguments)]
fn damped_picard(
    lam: &DMatrix<f64>,
    w: &[f64],
    p: f64,
    lambda: f64,
    h: &DVector<f64>,
    mut z: DVector<f64>,
    tol: f64,
    max_iter: usize,
    omega: f64,
) -> (DVector<f64>, f64, usize, bool) {
    let norm = |r: &DVector<f64>| weighted_norm(r.as_slice(), w, p);
    let mut best = (z.clone(), norm(&raw_residual(lam, w, p, lambda, h, &z)));
    for it in 0..max_iter {
        let jz = duality_values(&z, w, p);
        let target = h - (lam * jz) / lambda;
        z = &z * (1.0 - omega) + target * omega;
        let res = norm(&raw_residual(lam, w, p, lambda, h, &z));
        if !res.is_finite() {
            break;
        }
        if res < best.1 {
            best = (z.clone(), res);
        }
        if res <= tol {
            return (z, res, it + 1, true);
        }
    }
    (best.0, best.1, max_iter, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{lp_norm, SpatialGrid};

    fn weighted_identity_gramian(n: usize) -> GramianOperator {
        let grid = SpatialGrid::uniform(n).unwrap();
        // ⟨Λφ, ψ⟩ = ⟨φ, ψ⟩: Λ is the identity on densities
        GramianOperator::from_matrix(grid, DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn zero_gramian_returns_h_exactly() {
        let grid = SpatialGrid::uniform(12).unwrap();
        let g = GramianOperator::from_matrix(grid.clone(), DMatrix::zeros(12, 12)).unwrap();
        let h = StateVector::from_fn(grid, |x| (3.0 * x).sin() + 0.1 * x).unwrap();
        for p in [2.0, 4.0] {
            let cfg = LpConfig::new(p).unwrap();
            let sol = solve_resolvent(&g, cfg, &ResolventConfig::new(0.37).unwrap(), &h).unwrap();
            assert_eq!(sol.z, h);
        }
    }

    #[test]
    fn scalar_resolvent_in_hilbert_case() {
        let g = weighted_identity_gramian(9);
        let h = StateVector::from_fn(g.grid().clone(), |x| x.cos()).unwrap();
        let lambda = 0.3;
        let sol = solve_resolvent(&g, LpConfig::hilbert(), &ResolventConfig::new(lambda).unwrap(), &h).unwrap();
        assert_eq!(sol.path, SolvePath::HilbertDirect);
        for (z, hv) in sol.z.as_slice().iter().zip(h.as_slice()) {
            assert!((z - lambda / (lambda + 1.0) * hv).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_positive_lambda() {
        assert!(ResolventConfig::new(0.0).is_err());
        assert!(ResolventConfig::new(-1.0).is_err());
        let mut rc = ResolventConfig::new(1.0).unwrap();
        rc.damping = 0.0;
        assert!(rc.validate().is_err());
    }

    #[test]
    fn residual_is_positive_for_z_equal_h() {
        let g = weighted_identity_gramian(7);
        let h = StateVector::from_fn(g.grid().clone(), |x| x.sin()).unwrap();
        let cfg = LpConfig::new(3.0).unwrap();
        assert!(resolvent_residual(&g, cfg, 0.5, &h, &h).unwrap() > 0.0);
    }

    #[test]
    fn newton_handles_zero_entries() {
        let g = weighted_identity_gramian(8);
        let h = StateVector::new(g.grid().clone(), vec![0.0, 1.0, 0.0, -2.0, 0.5, 0.0, 0.0, 3.0]).unwrap();
        let cfg = LpConfig::new(4.0).unwrap();
        let sol = solve_resolvent(&g, cfg, &ResolventConfig::new(0.01).unwrap(), &h).unwrap();
        assert!(sol.residual <= 1e-10 * (1.0 + lp_norm(&h, cfg)));
        assert!(lp_norm(&sol.z, cfg) <= lp_norm(&h, cfg));
    }
}
