mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use lpcontrol::control::positivity_certificate;
use lpcontrol::diffusion::{DiffusionConfig, TargetKind};
use lpcontrol::function_space::{lp_norm, StateVector};
use lpcontrol::harness::config::InputSection;
use lpcontrol::harness::{execute, ExperimentConfig, Mode, RunStatus};
use lpcontrol::linear::{cost_value, lambda_sweep, simulate_closed_loop, synthesize};
use lpcontrol::resolvent::{resolvent_residual, solve_resolvent, ResolventConfig};
use lpcontrol::semilinear::{fixed_point_solve, FixedPointConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_control, setup, setup_with, uniform_vector};

/// Scalar model of the first discrete sine mode under Crank–Nicolson with
/// `a ≡ 1`, `η = 1`: returns `(r^N, γ)` with `r` the one-step factor and
/// `γ = Σ τ_j r^{2(N−j)}` the trapezoid Gramian eigenvalue.
fn mode_one_model(n_space: usize, n_time: usize) -> (f64, f64) {
    let h = PI / (n_space as f64 + 1.0);
    let mu = 4.0 / (h * h) * (0.5 * h).sin().powi(2);
    let dt = 1.0 / n_time as f64;
    let r = (1.0 - 0.5 * mu * dt) / (1.0 + 0.5 * mu * dt);
    let gamma: f64 = (0..=n_time)
        .map(|j| {
            let tau = if j == 0 || j == n_time { 0.5 * dt } else { dt };
            tau * r.powi(2 * (n_time - j) as i32)
        })
        .sum();
    (r.powi(n_time as i32), gamma)
}

#[test]
fn mode_one_gramian_eigenvalue_is_frozen() {
    let (_, gamma) = mode_one_model(101, 200);
    assert!((gamma - 0.432_358_820_896_025_4).abs() < 1e-15, "{gamma:.16}");
    let continuum = 0.5 * (1.0 - (-2.0f64).exp());
    assert!((gamma - continuum).abs() < 1e-4);

    let s = setup(2.0, false);
    let cert = positivity_certificate(&s.gram).unwrap();
    assert!((cert.max_eigenvalue - gamma).abs() < 1e-12 * gamma);
}

#[test]
fn mode_one_sweep_matches_scalar_oracle() {
    let c = 0.3;
    let s = setup_with(DiffusionConfig {
        sine_nonlinearity: false,
        target: TargetKind::Profile(Arc::new(move |x: f64| c * x.sin())),
        ..Default::default()
    });
    let (decay, gamma) = mode_one_model(101, 200);
    let d = c - decay;
    let lambdas = [1.0, 0.1, 0.01, 1e-3];
    let sweep = lambda_sweep(&s.sp.linear, &s.u_op, &s.gram, &lambdas).unwrap();
    let half_pi_sqrt = (0.5 * PI).sqrt();
    for (r, lambda) in sweep.records.iter().zip(lambdas) {
        let err = lambda * d.abs() / (lambda + gamma) * half_pi_sqrt;
        let energy = d * d * gamma / (lambda + gamma).powi(2) * 0.5 * PI;
        assert!((r.terminal_error - err).abs() <= 1e-10 * err, "{} vs {err}", r.terminal_error);
        assert!((r.control_energy - energy).abs() <= 1e-10 * energy);
    }
}

/// `J[z]` as a density on weights `w`, written independently of the crate.
fn oracle_duality(z: &DVector<f64>, w: &[f64], p: f64) -> DVector<f64> {
    let norm = z.iter().zip(w).map(|(v, wi)| wi * v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    if norm == 0.0 {
        return z.clone();
    }
    z.map(|v| v.abs().powf(p - 2.0) * v * norm.powf(2.0 - p))
}

/// Newton with a centered finite-difference Jacobian.
fn oracle_newton(lam: &DMatrix<f64>, w: &[f64], p: f64, lambda: f64, h: &DVector<f64>, start: DVector<f64>) -> DVector<f64> {
    let f = |z: &DVector<f64>| lam * oracle_duality(z, w, p) + z * lambda - h * lambda;
    let n = h.len();
    let mut z = start;
    for _ in 0..100 {
        let r = f(&z);
        if r.norm() < 1e-15 {
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let eps = 1e-7 * (1.0 + z[k].abs());
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += eps;
            zm[k] -= eps;
            jac.set_column(k, &((f(&zp) - f(&zm)) / (2.0 * eps)));
        }
        let step = jac.lu().solve(&r).unwrap();
        let mut t = 1.0;
        while f(&(&z - &step * t)).norm() > (1.0 - 1e-4 * t) * r.norm() && t > 1e-6 {
            t *= 0.5;
        }
        z -= step * t;
    }
    z
}

#[test]
fn three_node_resolvent_matches_multistart_newton() {
    let s = setup_with(DiffusionConfig {
        p: 4.0,
        sine_nonlinearity: false,
        n_space: 3,
        n_time: 40,
        ..Default::default()
    });
    let grid = s.gram.grid().clone();
    let w = grid.weights().to_vec();
    let cfg = s.sp.cfg();
    let h = StateVector::new(grid.clone(), vec![0.7, -0.2, 0.4]).unwrap();
    let lambda = 0.05;
    let sol = solve_resolvent(&s.gram, cfg, &ResolventConfig::new(lambda).unwrap(), &h).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut starts = vec![h.values().clone(), h.values() * 0.1, DVector::from_element(3, 1.0)];
    starts.extend((0..3).map(|_| DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0))));
    for start in starts {
        let z = oracle_newton(s.gram.matrix(), &w, 4.0, lambda, h.values(), start);
        for (a, b) in sol.z.as_slice().iter().zip(z.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
    let residual = resolvent_residual(&s.gram, cfg, lambda, &h, &sol.z).unwrap();
    assert!(residual <= 1e-10 * (1.0 + lp_norm(&h, cfg)));
}

#[test]
fn residual_grows_linearly_away_from_the_solution() {
    let s = setup(4.0, false);
    let cfg = s.sp.cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = uniform_vector(s.gram.grid(), &mut rng);
    let e = uniform_vector(s.gram.grid(), &mut rng);
    let lambda = 0.01;
    let z = solve_resolvent(&s.gram, cfg, &ResolventConfig::new(lambda).unwrap(), &h).unwrap().z;
    let r = |eps: f64| resolvent_residual(&s.gram, cfg, lambda, &h, &z.add(&e.scaled(eps)).unwrap()).unwrap();
    for eps in [1e-3, 1e-4] {
        let slope = r(eps) / r(0.5 * eps);
        assert!((slope - 2.0).abs() < 1e-2, "slope {slope}");
    }
}

#[test]
fn feedback_control_beats_random_controls() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let lambda = 0.01;
    for p in [2.0, 4.0] {
        let s = setup(p, false);
        let lp = &s.sp.linear;
        let syn = synthesize(lp, &s.u_op, &s.gram, &ResolventConfig::new(lambda).unwrap()).unwrap();
        let cost = |u: &lpcontrol::control::ControlSignal| {
            let x = simulate_closed_loop(lp, &s.u_op, u).unwrap();
            cost_value(&x, u, &lp.xt, lambda, lp.cfg).unwrap()
        };
        let best = cost(&syn.control);
        for k in 0..20 {
            let w = random_control(&lp.tg, lp.b.control_grid(), &mut rng);
            let scale: f64 = 10f64.powf(rng.random_range(-3.0..0.0));
            let candidate = if k % 2 == 0 {
                syn.control.combine(1.0, &w, scale).unwrap()
            } else {
                w.scaled(scale * 10.0)
            };
            assert!(best <= cost(&candidate), "p = {p}, k = {k}");
        }
    }
}

#[test]
fn reachable_target_needs_no_control() {
    let s = setup_with(DiffusionConfig {
        target: TargetKind::FreeFlowPerturbation(0.0),
        n_space: 31,
        n_time: 60,
        ..Default::default()
    });
    let out = fixed_point_solve(
        &s.sp,
        &s.u_op,
        &s.gram,
        &ResolventConfig::new(0.01).unwrap(),
        &FixedPointConfig::default(),
    )
    .unwrap();
    assert!(out.report.converged);
    assert!(out.control.energy() < 1e-16);
    let miss = lp_norm(&out.trajectory.terminal().sub(&s.sp.linear.xt).unwrap(), s.sp.cfg());
    assert!(miss < 1e-9, "{miss}");
}

fn small_config(mode: Mode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.mode = mode;
    cfg.diffusion.n_space = 31;
    cfg.diffusion.n_time = 60;
    cfg
}

#[test]
fn verify_mode_passes_on_defaults() {
    let mut cfg = ExperimentConfig::default();
    cfg.mode = Mode::Verify;
    let (report, _) = execute(&cfg).unwrap();
    let failed: Vec<_> = report.verification.iter().filter(|c| c.fails_gate()).collect();
    assert!(failed.is_empty(), "{failed:?}");
    assert_eq!(report.status, RunStatus::Ok);
    assert_eq!(report.status.exit_code(), 0);
}

#[test]
fn degenerate_input_is_reported_not_swept() {
    for mode in [Mode::Linear, Mode::Semilinear] {
        let mut cfg = small_config(mode);
        cfg.diffusion.input = InputSection::Zero;
        let (report, _) = execute(&cfg).unwrap();
        assert_eq!(report.status, RunStatus::NotControllable);
        assert_eq!(report.status.exit_code(), 3);
        assert!(report.sweep.is_none());
        assert_eq!(report.positivity.unwrap().value(), 0.0);
    }
}

#[test]
fn execution_is_deterministic() {
    for mode in [Mode::Linear, Mode::Semilinear] {
        let cfg = small_config(mode);
        let a = execute(&cfg).unwrap().0;
        let b = execute(&cfg).unwrap().0;
        assert_eq!(lpcontrol::harness::report_json(&a), lpcontrol::harness::report_json(&b));
    }
}

#[test]
fn linear_sweep_reaches_target_on_coarse_grid() {
    let (report, _) = execute(&small_config(Mode::Linear)).unwrap();
    assert_eq!(report.status, RunStatus::Ok);
    let sweep = report.sweep.unwrap();
    let d = report.target_defect_norm.unwrap();
    assert!(sweep.records.last().unwrap().terminal_error < 0.01 * d);
}
