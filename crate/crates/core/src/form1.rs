//! Heading-angle (Hamiltonian) formulation.
//!
//! With `u = (T_f z/μ)τ + η` and `m = Q/2` the optimal solution is
//!
//! ```text
//! θ(τ) = asin(√m sn(u, m)) − φ            φ = asin(√m sn(η, m))
//! v(τ) = (z√m/μ) sn(u, m)                 ω(τ) = (z√m/μ) cn(u, m)
//! λ₁ = −z sin φ,  λ₂ = −z cos φ           λ₃(τ) = −z√m cn(u, m)
//! x(τ) = −√m cos φ cn(u) + sin φ (u − E(am u)) + C_x
//! y(τ) =  √m sin φ cn(u) + cos φ (u − E(am u)) + C_y
//! ```
//!
//! subject to `z²Q = 4μ(1−μ)` (λ₄ ≡ 0) and `T_f z/μ + η = (2n+1)K(m)`
//! (λ₃(1) = 0). Only `(Q, T_f)` remain, fixed by the terminal position.
//!
//! The heading stays on the principal `asin` branch because `|√m sn| < 1`.
//! Targets below the x-axis are solved in the reflected problem and mapped back.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::elliptic::{epsilon_unchecked, jacobi_unchecked, k_unchecked};
use crate::error::{Error, Result};
use crate::model::{
    check_tau, control_radius, hamiltonian, straight_line_time, Control, Formulation, Problem, State, TrajectorySample,
};
use crate::rootsolve::{geomspace, linspace, multistart, solve_from_seeds, Bounds, SearchOptions, SolveReport};
use crate::trajectory::ClosedForm;

pub const Q_MIN: f64 = 1e-4;
pub const Q_MAX: f64 = 2.0 - 1e-4;
pub const TF_MIN: f64 = 1e-3;
pub const TF_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Form1Params {
    pub mu: f64,
    pub tf: f64,
    pub q: f64,
    /// Branch index in `T_f z/μ + η = (2n+1)K(m)`.
    pub n: u32,
    pub z: f64,
    pub phi: f64,
    #[serde(with = "crate::nonfinite")]
    pub eta: f64,
    pub m: f64,
    pub cx: f64,
    pub cy: f64,
    /// Constant costates `(λ₁, λ₂)` of the unreflected solution.
    pub lambda1: f64,
    pub lambda2: f64,
    /// Solution reflected about the x-axis.
    pub mirror: bool,
    /// Straight-line limit `m → 1`.
    pub degenerate: bool,
}

impl Form1Params {
    /// Closed-form constants from the free pair `(Q, T_f)`.
    pub fn derive(q: f64, tf: f64, mu: f64, n: u32) -> Result<Self> {
        if !(q > 0.0 && q < 2.0) {
            return Err(Error::Domain { what: "Q", value: q, expected: "0 < Q < 2" });
        }
        if !(tf.is_finite() && tf > 0.0) {
            return Err(Error::Domain { what: "final time T_f", value: tf, expected: "T_f > 0" });
        }
        let m = 0.5 * q;
        let z = (4.0 * mu * (1.0 - mu) / q).sqrt();
        let eta = (2 * n + 1) as f64 * k_unchecked(m) - tf * z / mu;
        let root_m = m.sqrt();
        let at_eta = jacobi_unchecked(eta, m);
        let phi = (root_m * at_eta.sn).asin();
        let (sp, cp) = phi.sin_cos();
        let drift = eta - epsilon_unchecked(eta, m);
        Ok(Self {
            mu,
            tf,
            q,
            n,
            z,
            phi,
            eta,
            m,
            cx: root_m * cp * at_eta.cn - sp * drift,
            cy: -root_m * sp * at_eta.cn - cp * drift,
            lambda1: -z * sp,
            lambda2: -z * cp,
            mirror: false,
            degenerate: false,
        })
    }

    /// Straight-line solution to a target at distance `r` on the initial heading.
    pub fn straight_line(mu: f64, r: f64) -> Self {
        let z = (2.0 * mu * (1.0 - mu)).sqrt();
        Self {
            mu,
            tf: straight_line_time(mu, r),
            q: 2.0,
            n: 0,
            z,
            phi: std::f64::consts::FRAC_PI_2,
            eta: f64::INFINITY,
            m: 1.0,
            cx: 0.0,
            cy: 0.0,
            lambda1: -z,
            lambda2: 0.0,
            mirror: false,
            degenerate: true,
        }
    }

    pub fn with_mirror(mut self, mirror: bool) -> Self {
        self.mirror = mirror;
        self
    }

    /// Phase `u(τ)`.
    pub fn phase(&self, tau: f64) -> f64 {
        self.tf * self.z / self.mu * tau + self.eta
    }

    fn reflect(&self) -> f64 {
        if self.mirror {
            -1.0
        } else {
            1.0
        }
    }

    fn evaluate(&self, tau: f64) -> (State, Control, [f64; 4]) {
        let f = self.reflect();
        if self.degenerate {
            let v = control_radius(self.mu);
            let state = State { x: v * self.tf * tau, y: 0.0, theta: 0.0 };
            return (state, Control { v, omega: 0.0 }, [self.lambda1, 0.0, 0.0, 0.0]);
        }
        let u = self.phase(tau);
        let t = jacobi_unchecked(u, self.m);
        let root_m = self.m.sqrt();
        let (sp, cp) = self.phi.sin_cos();
        let drift = u - epsilon_unchecked(u, self.m);
        let state = State {
            x: -root_m * cp * t.cn + sp * drift + self.cx,
            y: f * (root_m * sp * t.cn + cp * drift + self.cy),
            theta: f * ((root_m * t.sn).asin() - self.phi),
        };
        let amp = self.z * root_m / self.mu;
        let control = Control { v: amp * t.sn, omega: f * amp * t.cn };
        let lambda3 = -self.z * root_m * t.cn;
        let lambda4 = (-1.0 + self.mu + self.z * self.z * self.m / (2.0 * self.mu)) * tau;
        (state, control, [self.lambda1, f * self.lambda2, f * lambda3, lambda4])
    }

    pub fn eval_state(&self, tau: f64) -> Result<State> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).0)
    }

    pub fn eval_control(&self, tau: f64) -> Result<Control> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).1)
    }

    /// `(λ₁, λ₂, λ₃, λ₄)` at `tau`.
    pub fn eval_costates(&self, tau: f64) -> Result<[f64; 4]> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).2)
    }

    /// Time at which `ω` is stationary and `v` vanishes, `τ* = −ημ/(T_f z)`.
    /// Lies in `(0, 1)` only for maneuvers that start by backing up.
    pub fn stationary_time(&self) -> f64 {
        if self.degenerate {
            return f64::NEG_INFINITY;
        }
        -self.eta * self.mu / (self.tf * self.z)
    }

    /// `T_f z − μ(2n+1)K(m)`, i.e. `−μη`: zero on the boundary between forward-only
    /// and reversing maneuvers, negative on the forward-only side.
    pub fn transition_condition(&self) -> f64 {
        if self.degenerate {
            return f64::NEG_INFINITY;
        }
        self.tf * self.z - self.mu * (2 * self.n + 1) as f64 * k_unchecked(self.m)
    }

    /// Shooting unknowns `(λ₁, λ₂, λ₃(0), T_f)` equivalent to this solution.
    pub fn shot(&self) -> [f64; 4] {
        let c = self.eval_costates(0.0).expect("tau = 0 is in range");
        [c[0], c[1], c[2], self.tf]
    }
}

impl ClosedForm for Form1Params {
    fn formulation(&self) -> Formulation {
        Formulation::Form1
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn tf(&self) -> f64 {
        self.tf
    }

    fn sample(&self, tau: f64) -> Result<TrajectorySample> {
        check_tau(tau)?;
        let (state, control, l) = self.evaluate(tau);
        Ok(TrajectorySample {
            tau,
            state,
            control,
            costates: vec![l[0], l[1], l[2]],
            hamiltonian: hamiltonian(&state, &control, [l[0], l[1], l[2]], self.tf, self.mu),
        })
    }
}

/// Terminal-position mismatch `(x(1) − x_f, y(1) − y_f)` for the pair `(Q, T_f)`.
pub fn residual(q: f64, tf: f64, n: u32, problem: &Problem) -> Result<[f64; 2]> {
    let (_, mirror) = problem.target.upper_half();
    let p = Form1Params::derive(q, tf, problem.mu, n)?.with_mirror(mirror);
    let end = p.evaluate(1.0).0;
    let (xf, yf) = problem.target.xy();
    Ok([end.x - xf, end.y - yf])
}

/// Default initial guess `(Q₀, T_f₀)`.
pub fn default_guess(problem: &Problem) -> [f64; 2] {
    [1.0, straight_line_time(problem.mu, problem.target.r)]
}

pub fn bounds() -> Bounds {
    Bounds::new(vec![Q_MIN, TF_MIN], vec![Q_MAX, TF_MAX])
}

/// Final times closer than this count as equal-cost roots.
pub(crate) const TIE_TOL: f64 = 1e-9;

/// `Q` seeds of the default search.
pub(crate) fn seed_q() -> Vec<f64> {
    linspace(0.1, 1.9, 10)
}

/// `T_f` seeds of the default search, from the straight-line time upwards.
pub(crate) fn seed_tf(mu: f64, r: f64) -> Vec<f64> {
    let t0 = straight_line_time(mu, r);
    geomspace(t0, 16.0 * t0, 8)
}

/// Solves for `(Q, T_f)`.
///
/// With an explicit `guess`, multistart Newton runs on branch `n = 0`, then
/// `n = 1` if that fails, and the first root found is returned. Without one,
/// Newton runs from the default guess and a fixed seed grid on both branches
/// and the root with the smallest `T_f` (hence cost) is returned, ties going
/// to `n = 0`; multistart around the default guess is the fallback.
pub fn solve(problem: &Problem, guess: Option<[f64; 2]>, opts: &SearchOptions) -> Result<(Form1Params, SolveReport)> {
    problem.validate()?;
    let (upper, mirror) = problem.target.upper_half();
    if upper.on_axis() {
        return Ok((Form1Params::straight_line(problem.mu, upper.r), trivial_report()));
    }
    let start = Instant::now();
    let box_ = bounds();
    if guess.is_none() {
        let mut seeds = vec![default_guess(problem).to_vec()];
        for q in seed_q() {
            seeds.extend(seed_tf(problem.mu, upper.r).into_iter().map(|tf| vec![q, tf]));
        }
        let mut best: Option<(Form1Params, SolveReport)> = None;
        for n in 0..=1u32 {
            let f = |x: &[f64]| residual(x[0], x[1], n, problem).map(|r| r.to_vec()).unwrap_or(vec![f64::NAN; 2]);
            for rep in solve_from_seeds(f, &seeds, &box_, &opts.solver).into_iter().filter(|r| r.converged) {
                let p = Form1Params::derive(rep.root[0], rep.root[1], problem.mu, n)?;
                if best.as_ref().is_none_or(|(b, _)| p.tf < b.tf - TIE_TOL) {
                    best = Some((p, rep));
                }
            }
        }
        if let Some((p, mut rep)) = best {
            rep.multistart_attempts = 2 * seeds.len();
            rep.wall_time = start.elapsed().as_secs_f64();
            return Ok((p.with_mirror(mirror), rep));
        }
    }
    let guess = guess.unwrap_or_else(|| default_guess(problem));
    let mut best: Option<SolveReport> = None;
    for n in 0..=1u32 {
        let f = |x: &[f64]| residual(x[0], x[1], n, problem).map(|r| r.to_vec()).unwrap_or(vec![f64::NAN; 2]);
        let report = multistart(f, &guess, &box_, opts.n_starts, opts.seed, &opts.solver);
        if report.converged {
            let p = Form1Params::derive(report.root[0], report.root[1], problem.mu, n)?.with_mirror(mirror);
            return Ok((p, report));
        }
        if best.as_ref().is_none_or(|b| report.final_residual_norm < b.final_residual_norm) {
            best = Some(report);
        }
    }
    Err(Error::NonConvergence(Box::new(best.expect("both branches attempted"))))
}

pub(crate) fn trivial_report() -> SolveReport {
    SolveReport {
        converged: true,
        iterations: 0,
        final_residual_norm: 0.0,
        guess_used: Vec::new(),
        root: Vec::new(),
        multistart_attempts: 0,
        wall_time: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Target;
    use std::f64::consts::PI;

    fn reference_problem() -> Problem {
        Problem::new(0.5, Target::polar(1.0, PI / 6.0).unwrap(), Formulation::Form1).unwrap()
    }

    #[test]
    fn derive_matches_reference_constants() {
        let p = Form1Params::derive(1.21, 0.94, 0.5, 0).unwrap();
        assert!((p.z - (1.0_f64 / 1.21).sqrt()).abs() < 1e-12);
        assert!((p.z - 0.9091).abs() < 1e-4);
        assert!((p.z * p.z * p.q - 4.0 * 0.25).abs() < 1e-12);
        assert!((p.tf * p.z / p.mu + p.eta - k_unchecked(p.m)).abs() < 1e-12);
    }

    #[test]
    fn zero_phase_offset_gives_zero_phi() {
        let (q, mu) = (1.3_f64, 0.5_f64);
        let z = (4.0 * mu * (1.0 - mu) / q).sqrt();
        let tf = mu * k_unchecked(q / 2.0) / z;
        let p = Form1Params::derive(q, tf, mu, 0).unwrap();
        assert!(p.eta.abs() < 1e-14);
        assert!(p.phi.abs() < 1e-14);
        assert!(p.transition_condition().abs() < 1e-10);
        assert!(p.stationary_time().abs() < 1e-14);
    }

    #[test]
    fn derive_rejects_bad_inputs() {
        assert!(Form1Params::derive(0.0, 1.0, 0.5, 0).is_err());
        assert!(Form1Params::derive(2.0, 1.0, 0.5, 0).is_err());
        assert!(Form1Params::derive(1.0, 0.0, 0.5, 0).is_err());
    }

    #[test]
    fn origin_and_terminal_conditions() {
        let p = Form1Params::derive(1.0, 1.0, 0.5, 0).unwrap();
        let s0 = p.eval_state(0.0).unwrap();
        assert!(s0.x.abs() < 1e-14 && s0.y.abs() < 1e-14 && s0.theta.abs() < 1e-14);
        let c1 = p.eval_control(1.0).unwrap();
        assert!(c1.omega.abs() < 1e-12);
        assert!((c1.v - control_radius(0.5)).abs() < 1e-12);
        let l = p.eval_costates(1.0).unwrap();
        assert!(l[2].abs() < 1e-12);
        assert!(p.eval_state(1.5).is_err());
    }

    #[test]
    fn control_circle_and_zero_lambda4() {
        let p = Form1Params::derive(0.8, 1.7, 0.5, 0).unwrap();
        for i in 0..=20 {
            let tau = i as f64 / 20.0;
            let c = p.eval_control(tau).unwrap();
            assert!((c.v * c.v + c.omega * c.omega - 2.0).abs() < 1e-12);
            assert!(p.eval_costates(tau).unwrap()[3].abs() < 1e-14);
        }
    }

    #[test]
    fn reference_guess_lands_near_target() {
        let r = residual(1.21, 0.94, 0, &reference_problem()).unwrap();
        assert!(r[0].hypot(r[1]) < 5e-3);
        let r = residual(1.31, 0.94, 0, &reference_problem()).unwrap();
        assert!(r[0].hypot(r[1]) > 1e-3);
    }

    #[test]
    fn heading_derivative_matches_angular_rate() {
        let p = Form1Params::derive(1.1, 1.4, 0.4, 0).unwrap();
        let h = 1e-6;
        let d = (p.eval_state(0.5 + h).unwrap().theta - p.eval_state(0.5 - h).unwrap().theta) / (2.0 * h);
        assert!((d - p.tf * p.eval_control(0.5).unwrap().omega).abs() < 1e-6);
    }

    #[test]
    fn solve_reference_problem() {
        let (p, rep) = solve(&reference_problem(), Some([1.21, 0.94]), &SearchOptions::default()).unwrap();
        assert!(rep.converged && rep.final_residual_norm < 1e-10);
        assert!((p.q - 1.21).abs() < 0.01 && (p.tf - 0.94).abs() < 0.01);
        assert!(p.eta > 0.0);
        assert!(p.stationary_time() < 0.0);
        assert!(p.transition_condition() < 0.0);
    }

    #[test]
    fn straight_line_case() {
        let prob = Problem::new(0.5, Target::cartesian(1.0, 0.0).unwrap(), Formulation::Form1).unwrap();
        let (p, _) = solve(&prob, None, &SearchOptions::default()).unwrap();
        assert!(p.degenerate);
        assert!((p.tf - 0.5_f64.sqrt()).abs() < 1e-12);
        let c = p.eval_control(0.3).unwrap();
        assert!((c.v - 2.0_f64.sqrt()).abs() < 1e-12 && c.omega == 0.0);
        assert!(p.transition_condition() != 0.0);
        let end = p.eval_state(1.0).unwrap();
        assert!((end.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_target() {
        let up = Problem::new(0.5, Target::polar(1.0, 0.6).unwrap(), Formulation::Form1).unwrap();
        let down = Problem::new(0.5, Target::polar(1.0, -0.6).unwrap(), Formulation::Form1).unwrap();
        let (pu, _) = solve(&up, None, &SearchOptions::default()).unwrap();
        let (pd, _) = solve(&down, None, &SearchOptions::default()).unwrap();
        assert!(pd.mirror && !pu.mirror);
        assert!((pu.tf - pd.tf).abs() < 1e-10);
        let (a, b) = (pu.eval_state(0.7).unwrap(), pd.eval_state(0.7).unwrap());
        assert!((a.x - b.x).abs() < 1e-9 && (a.y + b.y).abs() < 1e-9 && (a.theta + b.theta).abs() < 1e-9);
        let e = pd.eval_state(1.0).unwrap();
        assert!((e.y + 0.6_f64.sin()).abs() < 1e-9);
    }
}
