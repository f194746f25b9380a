//! Indirect shooting on the raw necessary conditions of the heading-angle
//! formulation, plus RK4 replay of closed-form controls.
//!
//! With `λ₁ = c₁`, `λ₂ = c₂` constant, the integrated state is `(x, y, θ, λ₃)`:
//!
//! ```text
//! v = −(c₁ cos θ + c₂ sin θ)/μ      ω = −λ₃/μ
//! x' = T_f v cos θ   y' = T_f v sin θ   θ' = T_f ω   λ₃' = T_f v (c₁ sin θ − c₂ cos θ)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hamiltonian, kinematics_unchecked, Control, Problem, State, TrajectorySample};
use crate::rootsolve::{solve_system, Bounds, SolveReport, SolverOptions};
use crate::trajectory::ClosedForm;

pub const DEFAULT_STEPS: usize = 10_000;
pub const MIN_STEPS: usize = 100;

/// Unknowns of the boundary-value problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub c1: f64,
    pub c2: f64,
    pub lambda3_0: f64,
    pub tf: f64,
}

impl Shot {
    pub fn new(c1: f64, c2: f64, lambda3_0: f64, tf: f64) -> Self {
        Self { c1, c2, lambda3_0, tf }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.c1, self.c2, self.lambda3_0, self.tf]
    }
}

/// Integrated state `(x, y, θ, λ₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub lambda3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub n_steps: usize,
    pub solver: SolverOptions,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { n_steps: DEFAULT_STEPS, solver: SolverOptions::default() }
    }
}

/// Classical fixed-step RK4 for `y' = f(τ, y)` on `[0, 1]`.
///
/// `observe` sees every grid point including both ends. Stops with
/// [`Error::Integration`] at the first non-finite stage.
pub fn rk4<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    n_steps: usize,
    mut observe: impl FnMut(f64, &[f64; N]),
) -> Result<[f64; N]> {
    let h = 1.0 / n_steps as f64;
    let mut y = y0;
    observe(0.0, &y);
    let shift = |y: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + s * k[i]) };
    for i in 0..n_steps {
        let t = i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &shift(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &shift(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &shift(&y, &k3, h));
        for j in 0..N {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t_next = if i + 1 == n_steps { 1.0 } else { (i + 1) as f64 * h };
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration { tau: t_next });
        }
        observe(t_next, &y);
    }
    Ok(y)
}

fn controls(shot: &Shot, theta: f64, lambda3: f64, mu: f64) -> Control {
    let (s, c) = theta.sin_cos();
    Control { v: -(shot.c1 * c + shot.c2 * s) / mu, omega: -lambda3 / mu }
}

fn shooting_rhs(shot: &Shot, mu: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |_, y| {
        let (s, c) = y[2].sin_cos();
        let v = -(shot.c1 * c + shot.c2 * s) / mu;
        let omega = -y[3] / mu;
        [shot.tf * v * c, shot.tf * v * s, shot.tf * omega, shot.tf * v * (shot.c1 * s - shot.c2 * c)]
    }
}

fn check_shot(shot: &Shot, mu: f64, n_steps: usize) -> Result<()> {
    if n_steps < MIN_STEPS {
        return Err(Error::Domain { what: "n_steps", value: n_steps as f64, expected: "n_steps >= 100" });
    }
    if !(shot.tf.is_finite() && shot.tf > 0.0) {
        return Err(Error::Domain { what: "final time T_f", value: shot.tf, expected: "T_f > 0" });
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain { what: "mu", value: mu, expected: "0 < mu < 1" });
    }
    Ok(())
}

fn to_sample(shot: &Shot, mu: f64, tau: f64, y: &[f64; 4]) -> TrajectorySample {
    let state = State { x: y[0], y: y[1], theta: y[2] };
    let control = controls(shot, y[2], y[3], mu);
    let lambdas = [shot.c1, shot.c2, y[3]];
    TrajectorySample {
        tau,
        state,
        control,
        costates: lambdas.to_vec(),
        hamiltonian: hamiltonian(&state, &control, lambdas, shot.tf, mu),
    }
}

/// Integrates the shot and records every grid point.
pub fn rk4_rollout(shot: &Shot, mu: f64, n_steps: usize) -> Result<Vec<TrajectorySample>> {
    check_shot(shot, mu, n_steps)?;
    let mut out = Vec::with_capacity(n_steps + 1);
    rk4(shooting_rhs(shot, mu), [0.0, 0.0, 0.0, shot.lambda3_0], n_steps, |t, y| out.push(to_sample(shot, mu, t, y)))?;
    Ok(out)
}

/// Final `(x, y, θ, λ₃)` without storing the trajectory.
pub fn rk4_endpoint(shot: &Shot, mu: f64, n_steps: usize) -> Result<ShootingState> {
    check_shot(shot, mu, n_steps)?;
    let y = rk4(shooting_rhs(shot, mu), [0.0, 0.0, 0.0, shot.lambda3_0], n_steps, |_, _| {})?;
    Ok(ShootingState { x: y[0], y: y[1], theta: y[2], lambda3: y[3] })
}

/// `(x(1) − x_f, y(1) − y_f, λ₃(1), H(0))`.
pub fn shoot_residual(shot: &Shot, problem: &Problem, n_steps: usize) -> Result<[f64; 4]> {
    let end = rk4_endpoint(shot, problem.mu, n_steps)?;
    let (xf, yf) = problem.target.xy();
    let start = to_sample(shot, problem.mu, 0.0, &[0.0, 0.0, 0.0, shot.lambda3_0]);
    Ok([end.x - xf, end.y - yf, end.lambda3, start.hamiltonian])
}

/// Single Newton solve of [`shoot_residual`] from `guess`.
pub fn solve_shooting(problem: &Problem, guess: Shot, opts: &ShootingOptions) -> Result<(Shot, SolveReport)> {
    problem.validate()?;
    let bounds = Bounds::new(
        vec![f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, 1e-3],
        vec![f64::INFINITY, f64::INFINITY, f64::INFINITY, 100.0],
    );
    let f = |x: &[f64]| {
        shoot_residual(&Shot::new(x[0], x[1], x[2], x[3]), problem, opts.n_steps)
            .map(|r| r.to_vec())
            .unwrap_or(vec![f64::NAN; 4])
    };
    let report = solve_system(f, &guess.to_array(), &bounds, &opts.solver);
    if !report.converged {
        return Err(Error::NonConvergence(Box::new(report)));
    }
    let shot = Shot::new(report.root[0], report.root[1], report.root[2], report.root[3]);
    Ok((shot, report))
}

/// Integrates the kinematics from the origin under the closed-form controls of
/// `trajectory` and returns the final state.
pub fn replay_controls(trajectory: &dyn ClosedForm, n_steps: usize) -> Result<State> {
    if n_steps < MIN_STEPS {
        return Err(Error::Domain { what: "n_steps", value: n_steps as f64, expected: "n_steps >= 100" });
    }
    let tf = trajectory.tf();
    let f = |tau: f64, y: &[f64; 3]| {
        let control = trajectory.control_at(tau.clamp(0.0, 1.0)).unwrap_or(Control { v: f64::NAN, omega: f64::NAN });
        let d = kinematics_unchecked(&State { x: y[0], y: y[1], theta: y[2] }, &control, tf);
        [d.x, d.y, d.theta]
    };
    let y = rk4(f, [0.0; 3], n_steps, |_, _| {})?;
    Ok(State { x: y[0], y: y[1], theta: y[2] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form1;
    use crate::model::{control_radius, Formulation, Target};
    use crate::rootsolve::SearchOptions;
    use std::f64::consts::PI;

    fn reference_problem() -> Problem {
        Problem::new(0.5, Target::polar(1.0, PI / 6.0).unwrap(), Formulation::Form1).unwrap()
    }

    #[test]
    fn rk4_integrates_exponential() {
        let y = rk4(|_, y: &[f64; 1]| [y[0]], [1.0], 1000, |_, _| {}).unwrap();
        assert!((y[0] - 1.0_f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn straight_line_shot() {
        let mu = 0.5;
        let c1 = -control_radius(mu) * mu;
        let shot = Shot::new(c1, 0.0, 0.0, mu / (c1 * c1).sqrt());
        let r = shoot_residual(
            &shot,
            &Problem::new(mu, Target::cartesian(1.0, 0.0).unwrap(), Formulation::Form1).unwrap(),
            1000,
        )
        .unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn rounded_shot_lands_near_target() {
        let end = rk4_endpoint(&Shot::new(-0.17, -0.89, -0.68, 0.94), 0.5, DEFAULT_STEPS).unwrap();
        assert!((end.x - (PI / 6.0).cos()).hypot(end.y - 0.5) < 1e-2);
    }

    #[test]
    fn closed_form_solution_is_a_root() {
        let (p, _) = form1::solve(&reference_problem(), None, &SearchOptions::default()).unwrap();
        let r = shoot_residual(&Shot::from_array(p.shot()), &reference_problem(), DEFAULT_STEPS).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-6), "{r:?}");
    }

    #[test]
    fn solve_from_rounded_values() {
        let (shot, rep) =
            solve_shooting(&reference_problem(), Shot::new(-0.17, -0.89, -0.68, 0.94), &ShootingOptions::default())
                .unwrap();
        assert!(rep.final_residual_norm < 1e-8);
        assert!((shot.tf - 0.94).abs() < 0.01);
    }

    #[test]
    fn hamiltonian_conserved_along_rollout() {
        let (p, _) = form1::solve(&reference_problem(), None, &SearchOptions::default()).unwrap();
        let roll = rk4_rollout(&Shot::from_array(p.shot()), 0.5, DEFAULT_STEPS).unwrap();
        assert_eq!(roll.len(), DEFAULT_STEPS + 1);
        assert!(roll.iter().all(|s| s.hamiltonian.abs() < 1e-8));
    }

    #[test]
    fn blow_up_is_reported() {
        let err = rk4(|_, y: &[f64; 1]| [y[0] * y[0]], [10.0], 1000, |_, _| {}).unwrap_err();
        assert!(matches!(err, Error::Integration { tau } if tau > 0.0 && tau <= 1.0));
        assert!(rk4_endpoint(&Shot::new(0.0, 0.0, 0.0, 1.0), 0.5, 10).is_err());
    }

    #[test]
    fn replay_matches_closed_form_endpoint() {
        let (p, _) = form1::solve(&reference_problem(), None, &SearchOptions::default()).unwrap();
        let end = replay_controls(&p, DEFAULT_STEPS).unwrap();
        let exact = p.eval_state(1.0).unwrap();
        assert!((end.x - exact.x).abs() < 1e-10 && (end.y - exact.y).abs() < 1e-10);
    }
}
