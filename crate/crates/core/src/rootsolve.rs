//! Damped Newton root finding for the small square systems produced by the
//! closed-form formulations (2 or 3 unknowns) and by shooting (4 unknowns).

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Outcome of a root solve. A failed solve is a report with `converged == false`,
/// never an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Infinity norm of the residual at `root`.
    pub final_residual_norm: f64,
    pub guess_used: Vec<f64>,
    pub root: Vec<f64>,
    pub multistart_attempts: usize,
    /// Seconds. Informational only.
    pub wall_time: f64,
}

/// Per-coordinate closed box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "bound dimensions differ");
        assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u), "empty box");
        Self { lower, upper }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn project(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on the residual infinity norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Forward-difference step relative to `max(|x_j|, 1)`.
    pub fd_rel_step: f64,
    pub max_backtracks: usize,
    /// Stop when an accepted step is shorter than this (infinity norm).
    pub min_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100, fd_rel_step: 1e-7, max_backtracks: 30, min_step: 1e-14 }
    }
}

/// Multistart settings used by the formulation solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub solver: SolverOptions,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), n_starts: 64, seed: 42 }
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn fd_jacobian<F>(f: &F, x: &[f64], r: &[f64], bounds: &Bounds, rel_step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(r.len(), n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let mut h = rel_step * x[j].abs().max(1.0);
        if x[j] + h > bounds.upper[j] {
            h = -h;
        }
        probe[j] = x[j] + h;
        let rp = f(&probe);
        probe[j] = x[j];
        if rp.len() != r.len() || !all_finite(&rp) {
            return None;
        }
        for i in 0..r.len() {
            jac[(i, j)] = (rp[i] - r[i]) / h;
        }
    }
    Some(jac)
}

fn newton_direction(jac: DMatrix<f64>, r: &[f64]) -> Option<Vec<f64>> {
    let rhs = -DVector::from_column_slice(r);
    if let Some(dx) = jac.clone().lu().solve(&rhs) {
        if dx.iter().all(|v| v.is_finite()) {
            return Some(dx.iter().copied().collect());
        }
    }
    // Singular Jacobian: minimum-norm least-squares step.
    let dx = jac.svd(true, true).solve(&rhs, 1e-14).ok()?;
    dx.iter().all(|v| v.is_finite()).then(|| dx.iter().copied().collect())
}

/// Damped Newton with a forward-difference Jacobian, halving line search on
/// `‖r‖₂` and projection onto `bounds`.
pub fn solve_system<F>(residual_fn: F, guess: &[f64], bounds: &Bounds, opts: &SolverOptions) -> SolveReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let start = Instant::now();
    assert_eq!(guess.len(), bounds.dim(), "guess and bounds dimensions differ");
    let mut x = guess.to_vec();
    bounds.project(&mut x);
    let mut r = residual_fn(&x);
    assert_eq!(r.len(), x.len(), "residual dimension must match the number of unknowns");

    let mut report = SolveReport {
        converged: false,
        iterations: 0,
        final_residual_norm: f64::INFINITY,
        guess_used: guess.to_vec(),
        root: x.clone(),
        multistart_attempts: 1,
        wall_time: 0.0,
    };
    if !all_finite(&r) {
        report.wall_time = start.elapsed().as_secs_f64();
        return report;
    }

    let mut iterations = 0;
    while iterations < opts.max_iter {
        if inf_norm(&r) < opts.tol {
            break;
        }
        let Some(jac) = fd_jacobian(&residual_fn, &x, &r, bounds, opts.fd_rel_step) else { break };
        let Some(dx) = newton_direction(jac, &r) else { break };
        iterations += 1;

        let base = sq_norm(&r);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let mut trial: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + t * di).collect();
            bounds.project(&mut trial);
            let rt = residual_fn(&trial);
            if all_finite(&rt) && sq_norm(&rt) < base {
                accepted = Some((trial, rt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, rt)) = accepted else { break };
        let step = x.iter().zip(&trial).fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        x = trial;
        r = rt;
        if step < opts.min_step {
            break;
        }
    }

    report.final_residual_norm = inf_norm(&r);
    report.converged = report.final_residual_norm < opts.tol;
    report.iterations = iterations;
    report.root = x;
    report.wall_time = start.elapsed().as_secs_f64();
    report
}

/// Deterministic multistart around `center`.
///
/// Start 0 is `center` itself; later starts scale every coordinate by an
/// independent log-uniform factor in `[0.5, 1.5]` (then project onto the box).
/// Returns the first converged report in start order, otherwise the failed
/// report with the smallest residual.
pub fn multistart<F>(
    residual_fn: F,
    center: &[f64],
    bounds: &Bounds,
    n_starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> SolveReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    assert!(n_starts >= 1, "multistart needs at least one start");
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (0.5_f64.ln(), 1.5_f64.ln());
    let mut best: Option<SolveReport> = None;
    for attempt in 0..n_starts {
        let mut guess = center.to_vec();
        if attempt > 0 {
            for g in guess.iter_mut() {
                *g *= rng.random_range(lo..hi).exp();
            }
            bounds.project(&mut guess);
        }
        let mut report = solve_system(&residual_fn, &guess, bounds, opts);
        report.multistart_attempts = attempt + 1;
        if report.converged {
            report.wall_time = start.elapsed().as_secs_f64();
            return report;
        }
        let better = best
            .as_ref()
            .is_none_or(|b| report.final_residual_norm < b.final_residual_norm || b.final_residual_norm.is_nan());
        if better {
            best = Some(report);
        }
    }
    let mut report = best.expect("at least one start ran");
    report.multistart_attempts = n_starts;
    report.wall_time = start.elapsed().as_secs_f64();
    report
}

/// Runs [`solve_system`] from every seed, in order. `multistart_attempts` of
/// each report is its 1-based seed index.
pub fn solve_from_seeds<F>(
    residual_fn: F,
    seeds: &[Vec<f64>],
    bounds: &Bounds,
    opts: &SolverOptions,
) -> Vec<SolveReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    seeds
        .iter()
        .enumerate()
        .map(|(i, seed)| {
            let mut rep = solve_system(&residual_fn, seed, bounds, opts);
            rep.multistart_attempts = i + 1;
            rep
        })
        .collect()
}

/// `n` points geometrically spaced from `lo` to `hi` inclusive.
pub(crate) fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| lo * r.powi(i as i32)).collect()
}

/// `n` points linearly spaced from `lo` to `hi` inclusive.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_quadratic() {
        let rep = solve_system(|x| vec![x[0] * x[0] - 4.0], &[3.0], &Bounds::unbounded(1), &SolverOptions::default());
        assert!(rep.converged);
        assert!((rep.root[0] - 2.0).abs() < 1e-10);
        assert!(rep.final_residual_norm < 1e-10);
    }

    #[test]
    fn linear_system_in_one_step() {
        let f = |x: &[f64]| vec![x[0] + x[1] - 3.0, x[0] - x[1] - 1.0];
        let rep = solve_system(f, &[0.0, 0.0], &Bounds::unbounded(2), &SolverOptions::default());
        assert!(rep.converged);
        // One exact Newton step; a second may polish the finite-difference error.
        assert!(rep.iterations <= 2);
        assert!((rep.root[0] - 2.0).abs() < 1e-10 && (rep.root[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nan_residual_fails_immediately() {
        let rep = solve_system(|_| vec![f64::NAN], &[1.0], &Bounds::unbounded(1), &SolverOptions::default());
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn no_root_reports_failure() {
        let rep = solve_system(|x| vec![x[0] * x[0] + 1.0], &[0.5], &Bounds::unbounded(1), &SolverOptions::default());
        assert!(!rep.converged);
        assert!(rep.final_residual_norm >= 1.0);
    }

    #[test]
    fn box_projection_keeps_iterates_inside() {
        // Root at -2 is outside the box, root at 2 inside.
        let b = Bounds::new(vec![0.5], vec![10.0]);
        let rep = solve_system(|x| vec![x[0] * x[0] - 4.0], &[0.6], &b, &SolverOptions::default());
        assert!(rep.converged && (rep.root[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn single_start_matches_direct_solve() {
        let f = |x: &[f64]| vec![x[0].exp() - 3.0, x[1] * x[1] * x[1] - x[0]];
        let b = Bounds::new(vec![-5.0, -5.0], vec![5.0, 5.0]);
        let opts = SolverOptions::default();
        let a = solve_system(f, &[0.3, 0.7], &b, &opts);
        let m = multistart(f, &[0.3, 0.7], &b, 1, 7, &opts);
        assert_eq!(a.root, m.root);
        assert_eq!(a.iterations, m.iterations);
        assert_eq!(m.multistart_attempts, 1);
    }

    #[test]
    fn seeds_run_in_order() {
        let reps = solve_from_seeds(
            |x| vec![x[0] * x[0] - 4.0],
            &[vec![3.0], vec![-3.0]],
            &Bounds::unbounded(1),
            &SolverOptions::default(),
        );
        assert!((reps[0].root[0] - 2.0).abs() < 1e-10 && (reps[1].root[0] + 2.0).abs() < 1e-10);
        assert_eq!((reps[0].multistart_attempts, reps[1].multistart_attempts), (1, 2));
    }

    #[test]
    fn spacing_helpers() {
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = geomspace(1.0, 8.0, 4);
        assert!((g[1] - 2.0).abs() < 1e-14 && (g[3] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn multistart_is_deterministic() {
        // Newton diverges from the center; later starts must be reproducible.
        let f = |x: &[f64]| vec![x[0].atan() - 0.2];
        let b = Bounds::new(vec![-50.0], vec![50.0]);
        let opts = SolverOptions { max_iter: 3, ..SolverOptions::default() };
        let a = multistart(f, &[20.0], &b, 16, 99, &opts);
        let c = multistart(f, &[20.0], &b, 16, 99, &opts);
        assert_eq!(a.root, c.root);
        assert_eq!(a.guess_used, c.guess_used);
        assert_eq!(a.multistart_attempts, c.multistart_attempts);
    }
}
