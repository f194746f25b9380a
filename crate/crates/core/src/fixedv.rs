//! Constant linear velocity `v_c`, chosen optimally along with `T_f`.
//!
//! The costates lie on the cylinder `ζ₁² + ζ₂² = K_c²` and the extruded
//! parabola `½ζ₃² = μ v_c ζ₁ + C_c`, with `C_c = μ(1−μ) + μ²v_c²/2`.
//! With `u = Λτ + η`, `Λ² = v_c T_f² K_c/μ`, `η = K(m) − Λ`:
//!
//! ```text
//! ζ₁ = K_c (1 − 2m sn²)      ζ₂ = −2√m K_c sn dn      ζ₃ = −A cn
//! ω  = (A/μ) cn               A² = 2μ v_c K_c + 2C_c
//! θ  = 2 asin(√m sn u) + C_θ
//! x  = T_f v_c (2cos C_θ E(am u)/Λ − cos C_θ τ + 2√m sin C_θ cn(u)/Λ) + C_x
//! y  = T_f v_c (2sin C_θ E(am u)/Λ − sin C_θ τ − 2√m cos C_θ cn(u)/Λ) + C_y
//! ζ₅ = −T_f(μ v_c + K_c)τ + (2K_c T_f/Λ)(u − E(am u)) + C_ζ₅
//! ```
//!
//! The unknowns are `(m, T_f, v_c)`; the third equation is `ζ₅(0) = ζ₅(1)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::elliptic::{e_complete_unchecked, epsilon_unchecked, jacobi_unchecked, k_unchecked};
use crate::error::{Error, Result};
use crate::form1::{seed_tf, trivial_report, TIE_TOL};
use crate::model::{
    check_tau, control_radius, straight_line_time, Control, Formulation, Problem, State, TrajectorySample,
};
use crate::rootsolve::{linspace, multistart, solve_from_seeds, Bounds, SearchOptions, SolveReport};
use crate::trajectory::ClosedForm;

pub const M_MIN: f64 = 0.5 + 1e-9;
pub const M_MAX: f64 = 1.0 - 1e-9;
pub const TF_MIN: f64 = 1e-3;
pub const TF_MAX: f64 = 100.0;
pub const VC_MIN: f64 = 1e-3;
pub const VC_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedVParams {
    pub mu: f64,
    pub tf: f64,
    pub vc: f64,
    pub m: f64,
    pub cc: f64,
    pub kc: f64,
    pub lambda_cap: f64,
    #[serde(with = "crate::nonfinite")]
    pub eta: f64,
    pub c_theta: f64,
    pub cx: f64,
    pub cy: f64,
    pub c_zeta5: f64,
    pub mirror: bool,
    pub degenerate: bool,
}

impl FixedVParams {
    pub fn derive(m: f64, tf: f64, vc: f64, mu: f64) -> Result<Self> {
        if !(m > 0.5 && m < 1.0) {
            return Err(Error::Domain { what: "m", value: m, expected: "0.5 < m < 1" });
        }
        if !(tf.is_finite() && tf > 0.0) {
            return Err(Error::Domain { what: "final time T_f", value: tf, expected: "T_f > 0" });
        }
        if !(vc.is_finite() && vc > 0.0) {
            return Err(Error::Domain { what: "velocity v_c", value: vc, expected: "v_c > 0" });
        }
        let cc = mu * (1.0 - mu) + 0.5 * mu * mu * vc * vc;
        let kc = cc / (vc * mu * (2.0 * m - 1.0));
        let lambda_cap = tf * (vc * kc / mu).sqrt();
        let eta = k_unchecked(m) - lambda_cap;
        let at_eta = jacobi_unchecked(eta, m);
        let root_m = m.sqrt();
        let c_theta = -2.0 * (root_m * at_eta.sn).asin();
        let (st, ct) = c_theta.sin_cos();
        let e_eta = epsilon_unchecked(eta, m);
        let scale = tf * vc;
        Ok(Self {
            mu,
            tf,
            vc,
            m,
            cc,
            kc,
            lambda_cap,
            eta,
            c_theta,
            cx: -scale * (2.0 * ct * e_eta + 2.0 * root_m * st * at_eta.cn) / lambda_cap,
            cy: -scale * (2.0 * st * e_eta - 2.0 * root_m * ct * at_eta.cn) / lambda_cap,
            c_zeta5: -2.0 * kc * tf / lambda_cap * (eta - e_eta),
            mirror: false,
            degenerate: false,
        })
    }

    /// Straight-line limit `m = 1`.
    pub fn straight_line(mu: f64, r: f64) -> Self {
        let vc = control_radius(mu);
        let kc = vc * mu;
        Self {
            mu,
            tf: straight_line_time(mu, r),
            vc,
            m: 1.0,
            cc: 2.0 * mu * (1.0 - mu),
            kc,
            lambda_cap: r,
            eta: f64::INFINITY,
            c_theta: 0.0,
            cx: 0.0,
            cy: 0.0,
            c_zeta5: 0.0,
            mirror: false,
            degenerate: true,
        }
    }

    pub fn with_mirror(mut self, mirror: bool) -> Self {
        self.mirror = mirror;
        self
    }

    pub fn phase(&self, tau: f64) -> f64 {
        self.lambda_cap * tau + self.eta
    }

    /// Amplitude `A = √(2μ v_c K_c + 2C_c)` of `ζ₃`.
    pub fn zeta3_amplitude(&self) -> f64 {
        (2.0 * self.mu * self.vc * self.kc + 2.0 * self.cc).sqrt()
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
            let state = State { x: self.vc * self.tf * tau, y: 0.0, theta: 0.0 };
            return (state, Control { v: self.vc, omega: 0.0 }, [-self.kc, 0.0, 0.0, 0.0]);
        }
        let u = self.phase(tau);
        let t = jacobi_unchecked(u, self.m);
        let e_u = epsilon_unchecked(u, self.m);
        let root_m = self.m.sqrt();
        let (st, ct) = self.c_theta.sin_cos();
        let (scale, lam) = (self.tf * self.vc, self.lambda_cap);
        let state = State {
            x: scale * (2.0 * ct * e_u / lam - ct * tau + 2.0 * root_m * st * t.cn / lam) + self.cx,
            y: f * (scale * (2.0 * st * e_u / lam - st * tau - 2.0 * root_m * ct * t.cn / lam) + self.cy),
            theta: f * (2.0 * (root_m * t.sn).asin() + self.c_theta),
        };
        let a = self.zeta3_amplitude();
        let zeta5 =
            -self.tf * (self.mu * self.vc + self.kc) * tau + 2.0 * self.kc * self.tf / lam * (u - e_u) + self.c_zeta5;
        let zeta = [
            self.kc * (1.0 - 2.0 * self.m * t.sn * t.sn),
            -f * 2.0 * root_m * self.kc * t.sn * t.dn,
            -f * a * t.cn,
            zeta5,
        ];
        (state, Control { v: self.vc, omega: f * a / self.mu * t.cn }, zeta)
    }

    pub fn eval_state(&self, tau: f64) -> Result<State> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).0)
    }

    pub fn eval_control(&self, tau: f64) -> Result<Control> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).1)
    }

    /// `(ζ₁, ζ₂, ζ₃, ζ₅)` at `tau`.
    pub fn eval_costates(&self, tau: f64) -> Result<[f64; 4]> {
        check_tau(tau)?;
        Ok(self.evaluate(tau).2)
    }

    /// `dζ₄/dτ = −(1 − μ + μv_c²/2 + μω²/2 + ζ₁v_c + ζ₃ω)`, evaluated from the closed forms.
    pub fn zeta4_rate(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        let (_, c, z) = self.evaluate(tau);
        let mu = self.mu;
        Ok(-(1.0 - mu + 0.5 * mu * self.vc * self.vc + 0.5 * mu * c.omega * c.omega + z[0] * self.vc + z[2] * c.omega))
    }

    /// Periodicity mismatch `(ζ₅(1) − ζ₅(0))/T_f`.
    pub fn zeta5_mismatch(&self) -> f64 {
        if self.degenerate {
            return self.kc - self.mu * self.vc;
        }
        let (k, e) = (k_unchecked(self.m), e_complete_unchecked(self.m));
        let e_eta = epsilon_unchecked(self.eta, self.m);
        -self.mu * self.vc - self.kc + 2.0 * self.kc / self.lambda_cap * ((k - e) - (self.eta - e_eta))
    }
}

impl ClosedForm for FixedVParams {
    fn formulation(&self) -> Formulation {
        Formulation::FixedV
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

/// `(x(1) − x_f, y(1) − y_f, (ζ₅(1) − ζ₅(0))/T_f)` for the triple `(m, T_f, v_c)`.
pub fn residual3(m: f64, tf: f64, vc: f64, problem: &Problem) -> Result<[f64; 3]> {
    let (_, mirror) = problem.target.upper_half();
    let p = FixedVParams::derive(m, tf, vc, problem.mu)?.with_mirror(mirror);
    let end = p.evaluate(1.0).0;
    let (xf, yf) = problem.target.xy();
    Ok([end.x - xf, end.y - yf, p.zeta5_mismatch()])
}

/// `(m₀, T_f₀, v_c₀)`.
pub fn default_guess(problem: &Problem) -> [f64; 3] {
    let mu = problem.mu;
    [0.75, straight_line_time(mu, problem.target.r), control_radius(mu)]
}

pub fn bounds() -> Bounds {
    Bounds::new(vec![M_MIN, TF_MIN, VC_MIN], vec![M_MAX, TF_MAX, VC_MAX])
}

/// Cost samples used to rank roots of the default search.
const RANK_SAMPLES: usize = 201;

/// Solves for `(m, T_f, v_c)`.
///
/// With an explicit `guess`, multistart Newton runs around it. Without one,
/// Newton runs from the default guess and a fixed seed grid and the root with
/// the smallest quadrature cost is returned; multistart around the default
/// guess is the fallback.
pub fn solve(problem: &Problem, guess: Option<[f64; 3]>, opts: &SearchOptions) -> Result<(FixedVParams, SolveReport)> {
    problem.validate()?;
    let (upper, mirror) = problem.target.upper_half();
    if upper.on_axis() {
        return Ok((FixedVParams::straight_line(problem.mu, upper.r), trivial_report()));
    }
    let start = Instant::now();
    let f = |x: &[f64]| residual3(x[0], x[1], x[2], problem).map(|r| r.to_vec()).unwrap_or(vec![f64::NAN; 3]);
    if guess.is_none() {
        let vc0 = control_radius(problem.mu);
        let mut seeds = vec![default_guess(problem).to_vec()];
        for m in linspace(0.55, 0.95, 5) {
            for tf in seed_tf(problem.mu, upper.r) {
                seeds.extend([0.5, 1.0, 1.5].map(|s| vec![m, tf, s * vc0]));
            }
        }
        let mut best: Option<(FixedVParams, f64, SolveReport)> = None;
        for rep in solve_from_seeds(f, &seeds, &bounds(), &opts.solver).into_iter().filter(|r| r.converged) {
            let p = FixedVParams::derive(rep.root[0], rep.root[1], rep.root[2], problem.mu)?;
            let Ok(cost) = p.cost(RANK_SAMPLES) else { continue };
            if best.as_ref().is_none_or(|(_, c, _)| cost < c - TIE_TOL) {
                best = Some((p, cost, rep));
            }
        }
        if let Some((p, _, mut rep)) = best {
            rep.multistart_attempts = seeds.len();
            rep.wall_time = start.elapsed().as_secs_f64();
            return Ok((p.with_mirror(mirror), rep));
        }
    }
    let guess = guess.unwrap_or_else(|| default_guess(problem));
    let report = multistart(f, &guess, &bounds(), opts.n_starts, opts.seed, &opts.solver);
    if !report.converged {
        return Err(Error::NonConvergence(Box::new(report)));
    }
    let p = FixedVParams::derive(report.root[0], report.root[1], report.root[2], problem.mu)?.with_mirror(mirror);
    Ok((p, report))
}
