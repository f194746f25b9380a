//! Variational formulation with multipliers `ζ₁…ζ₄`.
//!
//! The costates live on the intersection of two cylinders,
//! `ζ₁² + ζ₃² = K²` with `K = ±√(2μ(1−μ))` and `ζ₁² + ζ₂² = ε²`. With
//! `m = K²/ε²` and `u = (T_f ε/μ)τ + η`:
//!
//! ```text
//! ζ₁ = K sn(u, m)    ζ₂ = −ε dn(u, m)    ζ₃ = K cn(u, m)
//! v  = −ζ₁/μ         ω  = −ζ₃/μ
//! θ  = −s asin(√m sn u) + C_θ,   s = sign(Kε)
//! x  = (K/ε) cos C_θ cn(u) − sin C_θ (u − E(am u)) + C_x
//! y  = (K/ε) sin C_θ cn(u) + cos C_θ (u − E(am u)) + C_y
//! ```
//!
//! `ζ₃(1) = 0` fixes `η = K(m) − T_f ε/μ`, leaving `(ε, T_f)` as unknowns.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::elliptic::{epsilon_unchecked, jacobi_unchecked, k_unchecked};
use crate::error::{Error, Result};
use crate::form1::{seed_q, seed_tf, trivial_report, TIE_TOL};
use crate::model::{
    check_tau, control_radius, straight_line_time, Control, Formulation, Problem, State, TrajectorySample,
};
use crate::rootsolve::{multistart, solve_from_seeds, Bounds, SearchOptions, SolveReport};
use crate::trajectory::ClosedForm;

pub const EPS_MAX: f64 = 100.0;
pub const TF_MIN: f64 = 1e-3;
pub const TF_MAX: f64 = 100.0;
/// Keeps `m = K²/ε²` at most `1 − 5e−5` inside the solver box.
const M_CEILING: f64 = 1.0 - 5e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Form2Params {
    pub mu: f64,
    pub tf: f64,
    pub eps: f64,
    /// Sign of `K`, either `1` or `-1`.
    pub k_sign: i8,
    pub k: f64,
    pub m: f64,
    #[serde(with = "crate::nonfinite")]
    pub eta: f64,
    pub c_theta: f64,
    pub cx: f64,
    pub cy: f64,
    pub mirror: bool,
    pub degenerate: bool,
}

impl Form2Params {
    pub fn derive(eps: f64, tf: f64, mu: f64, k_sign: i8) -> Result<Self> {
        if k_sign != 1 && k_sign != -1 {
            return Err(Error::Domain { what: "k_sign", value: k_sign as f64, expected: "+1 or -1" });
        }
        if !(tf.is_finite() && tf > 0.0) {
            return Err(Error::Domain { what: "final time T_f", value: tf, expected: "T_f > 0" });
        }
        let k = k_sign as f64 * control_radius(mu) * mu;
        let m = k * k / (eps * eps);
        if !(eps.is_finite() && m < 1.0) {
            return Err(Error::Domain { what: "epsilon", value: eps, expected: "eps^2 > 2 mu (1 - mu)" });
        }
        let eta = k_unchecked(m) - tf * eps / mu;
        let s = (k * eps).signum();
        let at_eta = jacobi_unchecked(eta, m);
        let c_theta = s * (m.sqrt() * at_eta.sn).asin();
        let (st, ct) = c_theta.sin_cos();
        let ratio = k / eps;
        let drift = eta - epsilon_unchecked(eta, m);
        Ok(Self {
            mu,
            tf,
            eps,
            k_sign,
            k,
            m,
            eta,
            c_theta,
            cx: -ratio * ct * at_eta.cn + st * drift,
            cy: -ratio * st * at_eta.cn - ct * drift,
            mirror: false,
            degenerate: false,
        })
    }

    /// Straight-line solution, `ε = |K|` and `m = 1`.
    pub fn straight_line(mu: f64, r: f64) -> Self {
        let k = -control_radius(mu) * mu;
        Self {
            mu,
            tf: straight_line_time(mu, r),
            eps: -k,
            k_sign: -1,
            k,
            m: 1.0,
            eta: f64::INFINITY,
            c_theta: 0.0,
            cx: 0.0,
            cy: 0.0,
            mirror: false,
            degenerate: true,
        }
    }

    pub fn with_mirror(mut self, mirror: bool) -> Self {
        self.mirror = mirror;
        self
    }

    pub fn phase(&self, tau: f64) -> f64 {
        self.tf * self.eps / self.mu * tau + self.eta
    }

    fn reflect(&self) -> f64 {
        if self.mirror {
            -1.0
        } else {
            1.0
        }
    }

    fn evaluate(&self, tau: f64) -> (State, Control, [f64; 3]) {
        let f = self.reflect();
        if self.degenerate {
            let v = -self.k / self.mu;
            let state = State { x: v * self.tf * tau, y: 0.0, theta: 0.0 };
            return (state, Control { v, omega: 0.0 }, [self.k, 0.0, 0.0]);
        }
        let u = self.phase(tau);
        let t = jacobi_unchecked(u, self.m);
        let s = (self.k * self.eps).signum();
        let (st, ct) = self.c_theta.sin_cos();
        let ratio = self.k / self.eps;
        let drift = u - epsilon_unchecked(u, self.m);
        let state = State {
            x: ratio * ct * t.cn - st * drift + self.cx,
            y: f * (ratio * st * t.cn + ct * drift + self.cy),
            theta: f * (-s * (self.m.sqrt() * t.sn).asin() + self.c_theta),
        };
        let zeta = [self.k * t.sn, -f * self.eps * t.dn, f * self.k * t.cn];
        let control = Control { v: -zeta[0] / self.mu, omega: -zeta[2] / self.mu };
        (state, control, zeta)
    }

    pub fn eval_state(&self, tau: f64) -> Result<State> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).0)
    }

    pub fn eval_control(&self, tau: f64) -> Result<Control> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).1)
    }

    /// `(ζ₁, ζ₂, ζ₃)` at `tau`.
    pub fn eval_costates(&self, tau: f64) -> Result<[f64; 3]> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).2)
    }

    /// Point of the cylinder intersection curve at angle `delta`:
    /// `ζ₁ = |K| sin δ`, `ζ₃ = |K| cos δ`, and `ζ₂` on the sheet the solution uses.
    pub fn costate_geometry(&self, delta: f64) -> Result<[f64; 3]> {
        let radius = self.k.abs();
        let (sd, cd) = delta.sin_cos();
        let rest = self.eps * self.eps - radius * radius * sd * sd;
        if rest < 0.0 {
            return Err(Error::Domain { what: "delta", value: delta, expected: "eps^2 >= 2 mu (1 - mu) sin^2(delta)" });
        }
        let sheet = -self.eps.signum() * self.reflect();
        Ok([radius * sd, sheet * rest.sqrt(), radius * cd])
    }

    /// `dζ₄/dτ = −1 + μ + (ζ₁² + ζ₃²)/(2μ)`, zero on the optimal cylinder.
    pub fn zeta4_rate(&self, tau: f64) -> Result<f64> {
        let z = self.eval_costates(tau)?;
        Ok(-1.0 + self.mu + (z[0] * z[0] + z[2] * z[2]) / (2.0 * self.mu))
    }
}

impl ClosedForm for Form2Params {
    fn formulation(&self) -> Formulation {
        Formulation::Form2
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn tf(&self) -> f64 {
        self.tf
    }

    fn sample(&self, tau: f64) -> Result<TrajectorySample> {
        check_tau(tau)?;
        let (state, control, z) = self.evaluate(tau);
        let (v, w, mu) = (control.v, control.omega, self.mu);
        let h = self.tf * (1.0 - mu + 0.5 * mu * (v * v + w * w) + z[0] * v + z[2] * w);
        Ok(TrajectorySample { tau, state, control, costates: z.to_vec(), hamiltonian: h })
    }
}

/// Terminal-position mismatch for `(ε, T_f)` on the `k_sign` branch.
pub fn residual(eps: f64, tf: f64, k_sign: i8, problem: &Problem) -> Result<[f64; 2]> {
    let (_, mirror) = problem.target.upper_half();
    let p = Form2Params::derive(eps, tf, problem.mu, k_sign)?.with_mirror(mirror);
    let end = p.evaluate(1.0).0;
    let (xf, yf) = problem.target.xy();
    Ok([end.x - xf, end.y - yf])
}

/// `(ε₀, T_f₀)`, matching the form1 default through `ε = z` at `Q = 1`.
pub fn default_guess(problem: &Problem) -> [f64; 2] {
    let mu = problem.mu;
    [(4.0 * mu * (1.0 - mu)).sqrt(), straight_line_time(mu, problem.target.r)]
}

pub fn bounds(mu: f64) -> Bounds {
    let k = control_radius(mu) * mu;
    Bounds::new(vec![k / M_CEILING.sqrt(), TF_MIN], vec![EPS_MAX, TF_MAX])
}

/// Solves both `K` branches and keeps the cheaper root; equal costs favour `K < 0`.
///
/// Without a `guess`, Newton runs from the default guess and a fixed seed grid
/// on each branch; multistart around the default guess is the fallback.
pub fn solve(problem: &Problem, guess: Option<[f64; 2]>, opts: &SearchOptions) -> Result<(Form2Params, SolveReport)> {
    problem.validate()?;
    let (upper, mirror) = problem.target.upper_half();
    if upper.on_axis() {
        return Ok((Form2Params::straight_line(problem.mu, upper.r), trivial_report()));
    }
    let start = Instant::now();
    let box_ = bounds(problem.mu);
    let mut best: Option<(Form2Params, SolveReport)> = None;
    let mut best_fail: Option<SolveReport> = None;
    let keep = |cand: (Form2Params, SolveReport), best: &mut Option<(Form2Params, SolveReport)>| {
        if best.as_ref().is_none_or(|(b, _)| cand.0.tf < b.tf - TIE_TOL) {
            *best = Some(cand);
        }
    };
    if guess.is_none() {
        let z_scale = (4.0 * problem.mu * (1.0 - problem.mu)).sqrt();
        let mut seeds = vec![default_guess(problem).to_vec()];
        for q in seed_q() {
            seeds.extend(seed_tf(problem.mu, upper.r).into_iter().map(|tf| vec![z_scale / q.sqrt(), tf]));
        }
        for k_sign in [-1i8, 1] {
            let f = |x: &[f64]| residual(x[0], x[1], k_sign, problem).map(|r| r.to_vec()).unwrap_or(vec![f64::NAN; 2]);
            for rep in solve_from_seeds(f, &seeds, &box_, &opts.solver).into_iter().filter(|r| r.converged) {
                let p = Form2Params::derive(rep.root[0], rep.root[1], problem.mu, k_sign)?;
                keep((p, rep), &mut best);
            }
        }
        if let Some((p, mut rep)) = best {
            rep.multistart_attempts = 2 * seeds.len();
            rep.wall_time = start.elapsed().as_secs_f64();
            return Ok((p.with_mirror(mirror), rep));
        }
    }
    let guess = guess.unwrap_or_else(|| default_guess(problem));
    for k_sign in [-1i8, 1] {
        let f = |x: &[f64]| residual(x[0], x[1], k_sign, problem).map(|r| r.to_vec()).unwrap_or(vec![f64::NAN; 2]);
        let report = multistart(f, &guess, &box_, opts.n_starts, opts.seed, &opts.solver);
        if report.converged {
            let p = Form2Params::derive(report.root[0], report.root[1], problem.mu, k_sign)?;
            keep((p, report), &mut best);
        } else if best_fail.as_ref().is_none_or(|b| report.final_residual_norm < b.final_residual_norm) {
            best_fail = Some(report);
        }
    }
    match best {
        Some((p, rep)) => Ok((p.with_mirror(mirror), rep)),
        None => Err(Error::NonConvergence(Box::new(best_fail.expect("a failed branch exists")))),
    }
}
