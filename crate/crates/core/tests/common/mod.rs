#![allow(dead_code)]

use std::sync::Arc;

use lpcontrol::control::{assemble_gramian, ControlSignal, GramianOperator};
use lpcontrol::diffusion::{build_problem, DiffusionConfig};
use lpcontrol::evolution::{build_evolution, EvolutionOperator, TimeGrid};
use lpcontrol::function_space::{SpatialGrid, StateVector};
use lpcontrol::harness::suites::smooth_probe;
use lpcontrol::semilinear::SemilinearProblem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Setup {
    pub sp: SemilinearProblem,
    pub u_op: EvolutionOperator,
    pub gram: GramianOperator,
}

pub fn setup_with(dc: DiffusionConfig) -> Setup {
    let sp = build_problem(&dc).expect("problem");
    let u_op = build_evolution(&sp.linear.gen, &sp.linear.tg).expect("evolution");
    let gram = assemble_gramian(&u_op, &sp.linear.b).expect("gramian");
    Setup { sp, u_op, gram }
}

/// Default diffusion problem at exponent `p`.
pub fn setup(p: f64, sine: bool) -> Setup {
    setup_with(DiffusionConfig {
        p,
        sine_nonlinearity: sine,
        ..Default::default()
    })
}

/// Small grid for the cheaper property tests.
pub fn small_setup(p: f64, sine: bool) -> Setup {
    setup_with(DiffusionConfig {
        p,
        sine_nonlinearity: sine,
        n_space: 15,
        n_time: 24,
        ..Default::default()
    })
}

pub fn uniform_vector(grid: &Arc<SpatialGrid>, rng: &mut ChaCha8Rng) -> StateVector {
    let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    StateVector::new(grid.clone(), v).unwrap()
}

/// Control with smooth random spatial profiles and unit energy.
pub fn random_control(tg: &Arc<TimeGrid>, grid: &Arc<SpatialGrid>, rng: &mut ChaCha8Rng) -> ControlSignal {
    let a: f64 = rng.random_range(-1.0..1.0);
    let b: f64 = rng.random_range(-1.0..1.0);
    let samples = tg
        .nodes()
        .iter()
        .map(|&t| {
            let s = smooth_probe(grid, rng);
            s.scaled(1.0 + a * t + b * (3.0 * t).sin())
        })
        .collect();
    let u = ControlSignal::new(tg.clone(), samples).unwrap();
    let e = u.energy();
    u.scaled(1.0 / e.sqrt())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
