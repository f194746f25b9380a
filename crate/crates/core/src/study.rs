//! Convergence-robustness study: closed-form root finding against shooting
//! from the same kind of initial guesses.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::form1;
use crate::model::{Formulation, Problem, Target};
use crate::rootsolve::{inf_norm, SearchOptions, SolverOptions};
use crate::shooting::{solve_shooting, ShootingOptions, Shot};

/// `Q` values of the default guess grid.
pub const GRID_Q: [f64; 5] = [1.19, 1.20, 1.21, 1.22, 1.23];
/// `T_f` values of the default guess grid.
pub const GRID_TF: [f64; 5] = [0.92, 0.93, 0.94, 0.95, 0.96];
/// Reference shooting solution `(λ₁, λ₂, λ₃(0), T_f)`, two decimals.
pub const REFERENCE_SHOT: [f64; 4] = [-0.17, -0.89, -0.68, 0.94];
/// Reference `(Q, T_f)`, two decimals.
pub const REFERENCE_ROOT: [f64; 2] = [1.21, 0.94];
/// Distance to the optimum below which a converged start counts as optimal.
pub const OPTIMUM_TOL: f64 = 1e-6;

/// Target `(cos 30°, sin 30°)` at `μ = 0.5`.
pub fn reference_problem() -> Problem {
    Problem::new(0.5, Target::polar(1.0, PI / 6.0).expect("valid target"), Formulation::Form1).expect("valid problem")
}

/// `Q × T_f` grid in row-major order.
pub fn guess_grid(q: &[f64], tf: &[f64]) -> Vec<[f64; 2]> {
    q.iter().flat_map(|&a| tf.iter().map(move |&b| [a, b])).collect()
}

/// `n` guesses, each coordinate scaled by an independent factor `1 + U(−spread, spread)`.
pub fn perturbed_guesses(center: &[f64], n: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| center.iter().map(|c| c * (1.0 + rng.random_range(-spread..=spread))).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessOutcome {
    pub guess: Vec<f64>,
    pub converged: bool,
    /// Converged and within [`OPTIMUM_TOL`] of the reference optimum.
    pub optimal: bool,
    pub iterations: usize,
    pub root: Vec<f64>,
    pub final_residual_norm: f64,
    /// Seconds. Informational only.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub attempts: usize,
    pub converged: usize,
    pub optimal: usize,
    /// `optimal / attempts`.
    pub rate: f64,
}

pub fn summarize(outcomes: &[GuessOutcome]) -> RateSummary {
    let attempts = outcomes.len();
    let converged = outcomes.iter().filter(|o| o.converged).count();
    let optimal = outcomes.iter().filter(|o| o.optimal).count();
    let rate = if attempts == 0 { 0.0 } else { optimal as f64 / attempts as f64 };
    RateSummary { attempts, converged, optimal, rate }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    inf_norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

/// Single-start `(Q, T_f)` solve from `guess`.
pub fn nlp_outcome(problem: &Problem, optimum: &[f64; 2], guess: [f64; 2], solver: &SolverOptions) -> GuessOutcome {
    let start = Instant::now();
    let opts = SearchOptions { solver: *solver, n_starts: 1, seed: 0 };
    let mut out = match form1::solve(problem, Some(guess), &opts) {
        Ok((p, rep)) => GuessOutcome {
            guess: guess.to_vec(),
            converged: true,
            optimal: distance(&[p.q, p.tf], optimum) < OPTIMUM_TOL,
            iterations: rep.iterations,
            root: vec![p.q, p.tf],
            final_residual_norm: rep.final_residual_norm,
            wall_time: 0.0,
        },
        Err(e) => failed(guess.to_vec(), e),
    };
    out.wall_time = start.elapsed().as_secs_f64();
    out
}

/// Single shooting solve from `guess`.
pub fn shooting_outcome(problem: &Problem, optimum: &Shot, guess: Shot, opts: &ShootingOptions) -> GuessOutcome {
    let start = Instant::now();
    let mut out = match solve_shooting(problem, guess, opts) {
        Ok((shot, rep)) => GuessOutcome {
            guess: guess.to_array().to_vec(),
            converged: true,
            optimal: distance(&shot.to_array(), &optimum.to_array()) < OPTIMUM_TOL,
            iterations: rep.iterations,
            root: shot.to_array().to_vec(),
            final_residual_norm: rep.final_residual_norm,
            wall_time: 0.0,
        },
        Err(e) => failed(guess.to_array().to_vec(), e),
    };
    out.wall_time = start.elapsed().as_secs_f64();
    out
}

fn failed(guess: Vec<f64>, err: crate::Error) -> GuessOutcome {
    let (iterations, root, residual) = match err {
        crate::Error::NonConvergence(rep) => (rep.iterations, rep.root, rep.final_residual_norm),
        _ => (0, Vec::new(), f64::INFINITY),
    };
    GuessOutcome {
        guess,
        converged: false,
        optimal: false,
        iterations,
        root,
        final_residual_norm: residual,
        wall_time: 0.0,
    }
}
