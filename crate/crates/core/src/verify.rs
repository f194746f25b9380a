//! Invariant checks over solved trajectories.

use serde::{Deserialize, Serialize};

use crate::elliptic::{jacobi_unchecked, k_unchecked};
use crate::error::Result;
use crate::fixedv::FixedVParams;
use crate::form1::{self, Form1Params};
use crate::form2::{self, Form2Params};
use crate::model::{kinematics_unchecked, Formulation, Problem};
use crate::plan::Solution;
use crate::rootsolve::SearchOptions;
use crate::shooting::{replay_controls, rk4_rollout, Shot, DEFAULT_STEPS};
use crate::trajectory::ClosedForm;

pub const DEFAULT_SAMPLES: usize = 101;
/// Central-difference step for derivative checks.
pub const FD_STEP: f64 = 1e-6;

pub const TOL_TERMINAL: f64 = 1e-8;
pub const TOL_ORIGIN: f64 = 1e-12;
pub const TOL_HAMILTONIAN: f64 = 1e-8;
pub const TOL_CIRCLE: f64 = 1e-10;
pub const TOL_SURFACE: f64 = 1e-10;
pub const TOL_TRANSVERSALITY: f64 = 1e-10;
pub const TOL_ZETA5: f64 = 1e-8;
pub const TOL_ODE: f64 = 1e-6;
pub const TOL_COST: f64 = 1e-6;
pub const TOL_PARAMS: f64 = 1e-12;
pub const TOL_AGREEMENT: f64 = 1e-6;
pub const TOL_REPLAY: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, max_violation: f64, tolerance: f64) -> Self {
        Self { name: name.into(), max_violation, tolerance, pass: max_violation <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { checks, pass }
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.pass = self.checks.iter().all(|c| c.pass);
    }
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { 1.0 } else { i as f64 / (n - 1) as f64 }).collect()
}

/// Maximum of `f` over `taus`; any error or NaN counts as an infinite violation.
fn worst(taus: &[f64], f: impl Fn(f64) -> Result<f64>) -> f64 {
    taus.iter().fold(0.0_f64, |acc, &t| match f(t) {
        Ok(v) if !v.is_nan() => acc.max(v.abs()),
        _ => f64::INFINITY,
    })
}

fn central(f: impl Fn(f64) -> Result<f64>, tau: f64) -> Result<f64> {
    Ok((f(tau + FD_STEP)? - f(tau - FD_STEP)?) / (2.0 * FD_STEP))
}

fn interior(taus: &[f64]) -> Vec<f64> {
    taus.iter().copied().filter(|t| (2.0 * FD_STEP..=1.0 - 2.0 * FD_STEP).contains(t)).collect()
}

fn common_checks(sol: &dyn ClosedForm, problem: &Problem, taus: &[f64]) -> Vec<Check> {
    let (xf, yf) = problem.target.xy();
    let mut out = Vec::new();
    let end = worst(&[1.0], |t| sol.state_at(t).map(|s| (s.x - xf).abs().max((s.y - yf).abs())));
    out.push(Check::new("terminal_position", end, TOL_TERMINAL));
    let origin = worst(&[0.0], |t| sol.state_at(t).map(|s| s.x.abs().max(s.y.abs()).max(s.theta.abs())));
    out.push(Check::new("initial_state", origin, TOL_ORIGIN));
    out.push(Check::new("hamiltonian", worst(taus, |t| sol.sample(t).map(|s| s.hamiltonian)), TOL_HAMILTONIAN));

    let inner = interior(taus);
    let tf = sol.tf();
    let ode = worst(&inner, |t| {
        let d = kinematics_unchecked(&sol.state_at(t)?, &sol.control_at(t)?, tf);
        let dx = central(|s| sol.state_at(s).map(|v| v.x), t)?;
        let dy = central(|s| sol.state_at(s).map(|v| v.y), t)?;
        let dth = central(|s| sol.state_at(s).map(|v| v.theta), t)?;
        Ok((dx - d.x).abs().max((dy - d.y).abs()).max((dth - d.theta).abs()))
    });
    out.push(Check::new("state_ode_residual", ode, TOL_ODE));
    out
}

fn circle_check(sol: &dyn ClosedForm, taus: &[f64]) -> Check {
    let mu = sol.mu();
    let r2 = 2.0 * (1.0 - mu) / mu;
    Check::new(
        "control_circle",
        worst(taus, |t| sol.control_at(t).map(|c| c.v * c.v + c.omega * c.omega - r2)),
        TOL_CIRCLE,
    )
}

fn cost_check(sol: &dyn ClosedForm, n: usize) -> Check {
    let expected = 2.0 * sol.tf() * (1.0 - sol.mu());
    let v = match sol.cost(n) {
        Ok(c) => (c - expected).abs(),
        Err(_) => f64::INFINITY,
    };
    Check::new("cost_identity", v, TOL_COST)
}

fn form1_checks(p: &Form1Params, taus: &[f64], n: usize) -> Vec<Check> {
    let mut out = vec![circle_check(p, taus), cost_check(p, n)];
    out.push(Check::new(
        "transversality_lambda3",
        worst(&[1.0], |t| p.eval_costates(t).map(|l| l[2])),
        TOL_TRANSVERSALITY,
    ));
    out.push(Check::new("lambda4_zero", worst(taus, |t| p.eval_costates(t).map(|l| l[3])), TOL_TRANSVERSALITY));
    let inner = interior(taus);
    let ode = worst(&inner, |t| {
        let (s, c, l) = (p.eval_state(t)?, p.eval_control(t)?, p.eval_costates(t)?);
        let rhs = p.tf * c.v * (l[0] * s.theta.sin() - l[1] * s.theta.cos());
        Ok(central(|u| p.eval_costates(u).map(|l| l[2]), t)? - rhs)
    });
    out.push(Check::new("costate_ode_residual", ode, TOL_ODE));
    if !p.degenerate {
        let m = p.q / 2.0;
        let sn_eta = jacobi_unchecked(p.eta, m).sn;
        let consistency = (p.z * p.z * p.q - 4.0 * p.mu * (1.0 - p.mu))
            .abs()
            .max((p.tf * p.z / p.mu + p.eta - (2 * p.n + 1) as f64 * k_unchecked(m)).abs())
            .max((p.phi - (m.sqrt() * sn_eta).asin()).abs())
            .max((p.m - m).abs());
        out.push(Check::new("params_consistency", consistency, TOL_PARAMS));
    }
    out
}

fn form2_checks(p: &Form2Params, taus: &[f64], n: usize) -> Vec<Check> {
    let mut out = vec![circle_check(p, taus), cost_check(p, n)];
    let k2 = 2.0 * p.mu * (1.0 - p.mu);
    out.push(Check::new(
        "cylinder_k",
        worst(taus, |t| p.eval_costates(t).map(|z| z[0] * z[0] + z[2] * z[2] - k2)),
        TOL_SURFACE,
    ));
    out.push(Check::new(
        "cylinder_eps",
        worst(taus, |t| p.eval_costates(t).map(|z| z[0] * z[0] + z[1] * z[1] - p.eps * p.eps)),
        TOL_SURFACE,
    ));
    out.push(Check::new("zeta4_stationary", worst(taus, |t| p.zeta4_rate(t)), TOL_SURFACE));
    out.push(Check::new(
        "transversality_zeta3",
        worst(&[1.0], |t| p.eval_costates(t).map(|z| z[2])),
        TOL_TRANSVERSALITY,
    ));
    let inner = interior(taus);
    let (tf, mu) = (p.tf, p.mu);
    let ode = worst(&inner, |t| {
        let z = p.eval_costates(t)?;
        let rhs = [-tf * z[1] * z[2] / mu, tf * z[0] * z[2] / mu, tf * z[0] * z[1] / mu];
        let mut w = 0.0_f64;
        for (i, r) in rhs.iter().enumerate() {
            w = w.max((central(|u| p.eval_costates(u).map(|z| z[i]), t)? - r).abs());
        }
        Ok(w)
    });
    out.push(Check::new("costate_ode_residual", ode, TOL_ODE));
    if !p.degenerate {
        let consistency = (p.eta - (k_unchecked(p.m) - p.tf * p.eps / p.mu))
            .abs()
            .max((p.m - p.k * p.k / (p.eps * p.eps)).abs())
            .max((p.k.abs() - k2.sqrt()).abs());
        out.push(Check::new("params_consistency", consistency, TOL_PARAMS));
    }
    out
}

fn fixedv_checks(p: &FixedVParams, taus: &[f64]) -> Vec<Check> {
    let mut out = Vec::new();
    let (mu, vc, tf) = (p.mu, p.vc, p.tf);
    let scale = p.kc.powi(2).max(1.0);
    out.push(Check::new(
        "cylinder_kc",
        worst(taus, |t| p.eval_costates(t).map(|z| (z[0] * z[0] + z[1] * z[1] - p.kc * p.kc) / scale)),
        TOL_SURFACE,
    ));
    let pscale = p.cc.max(1.0);
    out.push(Check::new(
        "parabola",
        worst(taus, |t| p.eval_costates(t).map(|z| (0.5 * z[2] * z[2] - z[0] * mu * vc - p.cc) / pscale)),
        TOL_SURFACE,
    ));
    out.push(Check::new("zeta4_stationary", worst(taus, |t| p.zeta4_rate(t)), TOL_SURFACE));
    out.push(Check::new(
        "transversality_zeta3",
        worst(&[1.0], |t| p.eval_costates(t).map(|z| z[2])),
        TOL_TRANSVERSALITY,
    ));
    out.push(Check::new(
        "terminal_zeta1",
        worst(&[1.0], |t| p.eval_costates(t).map(|z| z[0] + p.cc / (mu * vc))),
        TOL_TRANSVERSALITY,
    ));
    out.push(Check::new(
        "zeta5_periodicity",
        worst(&[0.0], |_| Ok(p.eval_costates(1.0)?[3] - p.eval_costates(0.0)?[3])),
        TOL_ZETA5,
    ));
    out.push(Check::new("constant_velocity", worst(taus, |t| p.eval_control(t).map(|c| c.v - vc)), 0.0));
    let inner = interior(taus);
    let ode = worst(&inner, |t| {
        let z = p.eval_costates(t)?;
        let rhs = [-tf * z[1] * z[2] / mu, tf * z[0] * z[2] / mu, -tf * z[1] * vc, -tf * mu * vc - tf * z[0]];
        let mut w = 0.0_f64;
        for (i, r) in rhs.iter().enumerate() {
            w = w.max((central(|u| p.eval_costates(u).map(|z| z[i]), t)? - r).abs());
        }
        Ok(w)
    });
    out.push(Check::new("costate_ode_residual", ode, TOL_ODE));
    if !p.degenerate {
        let consistency = ((p.cc - (mu * (1.0 - mu) + 0.5 * mu * mu * vc * vc)) / pscale)
            .abs()
            .max(((p.kc - p.cc / (vc * mu * (2.0 * p.m - 1.0))) / p.kc.max(1.0)).abs())
            .max(((p.lambda_cap.powi(2) - vc * tf * tf * p.kc / mu) / p.lambda_cap.powi(2).max(1.0)).abs())
            .max((p.eta - (k_unchecked(p.m) - p.lambda_cap)).abs());
        out.push(Check::new("params_consistency", consistency, TOL_PARAMS));
    }
    out
}

/// Runs every applicable check on `solution` over `n_samples` equispaced points.
pub fn check_all(solution: &Solution, problem: &Problem, n_samples: usize) -> VerificationReport {
    let taus = grid(n_samples.max(2));
    let mut checks = common_checks(solution, problem, &taus);
    checks.extend(match solution {
        Solution::Form1(p) => form1_checks(p, &taus, n_samples.max(2)),
        Solution::Form2(p) => form2_checks(p, &taus, n_samples.max(2)),
        Solution::FixedV(p) => fixedv_checks(p, &taus),
    });
    VerificationReport::new(checks)
}

/// Checks a shot against the raw necessary conditions: terminal position,
/// `λ₃(1) = 0` and `|H| ≈ 0` along the rollout.
pub fn check_shot(shot: &Shot, problem: &Problem, n_steps: usize) -> VerificationReport {
    let (xf, yf) = problem.target.xy();
    match rk4_rollout(shot, problem.mu, n_steps) {
        Ok(roll) => {
            let end = roll.last().expect("rollout is non-empty");
            let h = roll.iter().fold(0.0_f64, |a, s| a.max(s.hamiltonian.abs()));
            VerificationReport::new(vec![
                Check::new("terminal_position", (end.state.x - xf).abs().max((end.state.y - yf).abs()), TOL_TERMINAL),
                Check::new("transversality_lambda3", end.costates[2].abs(), TOL_TRANSVERSALITY.max(TOL_TERMINAL)),
                Check::new("hamiltonian", h, TOL_HAMILTONIAN),
            ])
        }
        Err(_) => VerificationReport::new(vec![Check::new("rollout", f64::INFINITY, 0.0)]),
    }
}

/// RK4 replay of the controls lands on the target.
pub fn replay_check(solution: &dyn ClosedForm, problem: &Problem, n_steps: usize) -> Check {
    let (xf, yf) = problem.target.xy();
    let v = match replay_controls(solution, n_steps) {
        Ok(s) => (s.x - xf).abs().max((s.y - yf).abs()),
        Err(_) => f64::INFINITY,
    };
    Check::new("control_replay_endpoint", v, TOL_REPLAY)
}

/// Solves `problem` with both heading-angle and variational formulations and
/// checks that they describe the same trajectory.
pub fn cross_check(problem: &Problem, opts: &SearchOptions) -> Result<VerificationReport> {
    let (p1, _) = form1::solve(&problem.with_formulation(Formulation::Form1), None, opts)?;
    let (p2, _) = form2::solve(&problem.with_formulation(Formulation::Form2), None, opts)?;
    Ok(compare(&p1, &p2, problem))
}

/// Agreement checks between a form1 and a form2 solution of the same problem.
pub fn compare(p1: &Form1Params, p2: &Form2Params, problem: &Problem) -> VerificationReport {
    let taus = grid(DEFAULT_SAMPLES);
    let mut checks = vec![
        Check::new("tf_agreement", (p1.tf - p2.tf).abs(), TOL_AGREEMENT),
        Check::new("eps_equals_z", (p1.z - p2.eps).abs(), TOL_AGREEMENT),
        Check::new("m_equals_half_q", (p1.q / 2.0 - p2.m).abs(), TOL_AGREEMENT),
    ];
    let states = worst(&taus, |t| {
        let (a, b) = (p1.eval_state(t)?, p2.eval_state(t)?);
        Ok((a.x - b.x).abs().max((a.y - b.y).abs()).max((a.theta - b.theta).abs()))
    });
    checks.push(Check::new("state_agreement", states, TOL_AGREEMENT));
    let controls = worst(&taus, |t| {
        let (a, b) = (p1.eval_control(t)?, p2.eval_control(t)?);
        Ok((a.v - b.v).abs().max((a.omega - b.omega).abs()))
    });
    checks.push(Check::new("control_agreement", controls, TOL_AGREEMENT));
    let mut report = VerificationReport::new(checks);
    let mut r1 = replay_check(p1, problem, DEFAULT_STEPS);
    r1.name = "form1_control_replay".into();
    let mut r2 = replay_check(p2, problem, DEFAULT_STEPS);
    r2.name = "form2_control_replay".into();
    report.extend(VerificationReport::new(vec![r1, r2]));
    report
}
