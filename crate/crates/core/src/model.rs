//! Unicycle kinematics, the planning request, and quantities shared by every
//! formulation (Hamiltonian, cost).
//!
//! Time is normalized, `τ = t / T_f ∈ [0, 1]`, so every rate below is per unit `τ`
//! and carries a factor `T_f`. Units are nominal (meters, seconds, radians).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible weight; the upper bound is `1 - MU_MIN`.
pub const MU_MIN: f64 = 1e-3;

/// Targets with `|α|` at or below this are treated as lying on the initial heading.
pub const ON_AXIS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Form1,
    Form2,
    FixedV,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Form1 => "form1",
            Formulation::Form2 => "form2",
            Formulation::FixedV => "fixedv",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "form1" => Ok(Formulation::Form1),
            "form2" => Ok(Formulation::Form2),
            "fixedv" => Ok(Formulation::FixedV),
            other => Err(Error::InvalidProblem(format!("unknown formulation '{other}'"))),
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Terminal position in polar form, `α` normalized to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub r: f64,
    #[serde(rename = "alpha_rad")]
    pub alpha: f64,
}

impl Target {
    pub fn polar(r: f64, alpha: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidProblem(format!("target radius must be positive, got {r}")));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidProblem(format!("target angle must be finite, got {alpha}")));
        }
        let mut a = alpha.rem_euclid(2.0 * PI);
        if a > PI {
            a -= 2.0 * PI;
        }
        Ok(Self { r, alpha: a })
    }

    pub fn cartesian(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || (x == 0.0 && y == 0.0) {
            return Err(Error::InvalidProblem(format!("target ({x}, {y}) must be finite and not the origin")));
        }
        Ok(Self { r: x.hypot(y), alpha: y.atan2(x) })
    }

    pub fn xy(&self) -> (f64, f64) {
        (self.r * self.alpha.cos(), self.r * self.alpha.sin())
    }

    /// Reflection into the upper half plane: `(target with α >= 0, was_reflected)`.
    pub fn upper_half(&self) -> (Target, bool) {
        if self.alpha < 0.0 {
            (Target { r: self.r, alpha: -self.alpha }, true)
        } else {
            (*self, false)
        }
    }

    /// Whether the target lies straight ahead of the initial heading.
    pub fn on_axis(&self) -> bool {
        self.alpha.abs() <= ON_AXIS_TOL
    }
}

/// A point-to-point planning request from the origin with zero heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub mu: f64,
    pub target: Target,
    pub formulation: Formulation,
}

impl Problem {
    pub fn new(mu: f64, target: Target, formulation: Formulation) -> Result<Self> {
        let p = Self { mu, target, formulation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= MU_MIN && self.mu <= 1.0 - MU_MIN) {
            return Err(Error::InvalidProblem(format!(
                "weight mu = {} must lie in [{MU_MIN}, {}]",
                self.mu,
                1.0 - MU_MIN
            )));
        }
        Target::polar(self.target.r, self.target.alpha).map(|_| ())
    }

    pub fn with_formulation(&self, formulation: Formulation) -> Self {
        Self { formulation, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub v: f64,
    pub omega: f64,
}

/// Everything known about an optimal trajectory at one normalized time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub tau: f64,
    pub state: State,
    pub control: Control,
    /// `λ₁..λ₃` (form1), `ζ₁..ζ₃` (form2) or `ζ₁, ζ₂, ζ₃, ζ₅` (fixedv).
    pub costates: Vec<f64>,
    pub hamiltonian: f64,
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::Domain { what: "normalized time tau", value: tau, expected: "0 <= tau <= 1" })
    }
}

fn check_tf(tf: f64) -> Result<()> {
    if tf.is_finite() && tf > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what: "final time T_f", value: tf, expected: "T_f > 0" })
    }
}

/// `d(x, y, θ)/dτ = (T_f v cos θ, T_f v sin θ, T_f ω)`.
pub fn kinematics_rhs(state: &State, control: &Control, tf: f64) -> Result<State> {
    check_tf(tf)?;
    Ok(kinematics_unchecked(state, control, tf))
}

#[inline]
pub(crate) fn kinematics_unchecked(state: &State, control: &Control, tf: f64) -> State {
    let (s, c) = state.theta.sin_cos();
    State { x: tf * control.v * c, y: tf * control.v * s, theta: tf * control.omega }
}

/// Hamiltonian of the heading-angle formulation for costates `(λ₁, λ₂, λ₃)`.
pub fn hamiltonian(state: &State, control: &Control, lambdas: [f64; 3], tf: f64, mu: f64) -> f64 {
    let (s, c) = state.theta.sin_cos();
    let Control { v, omega } = *control;
    tf * ((1.0 - mu)
        + 0.5 * mu * (omega * omega + v * v)
        + lambdas[0] * v * c
        + lambdas[1] * v * s
        + lambdas[2] * omega)
}

/// Running cost `(1 − μ) + μ(v² + ω²)/2` per unit real time.
#[inline]
pub fn running_cost(control: &Control, mu: f64) -> f64 {
    (1.0 - mu) + 0.5 * mu * (control.v * control.v + control.omega * control.omega)
}

/// `J = T_f ∫₀¹ ((1 − μ) + μ(v² + ω²)/2) dτ` from controls sampled on an
/// equispaced grid covering `[0, 1]`.
///
/// Composite Simpson when the number of intervals is even; with an odd count the
/// last three intervals use Simpson's 3/8 rule. Two samples fall back to the
/// trapezoid rule.
pub fn cost_quadrature(controls: &[Control], tf: f64, mu: f64) -> Result<f64> {
    if controls.len() < 2 {
        return Err(Error::InsufficientSamples(controls.len()));
    }
    check_tf(tf)?;
    let f: Vec<f64> = controls.iter().map(|c| running_cost(c, mu)).collect();
    let intervals = f.len() - 1;
    let h = 1.0 / intervals as f64;
    let integral = match intervals {
        1 => 0.5 * h * (f[0] + f[1]),
        _ => {
            let (simpson_end, tail) = if intervals.is_multiple_of(2) {
                (intervals, 0.0)
            } else {
                let s = intervals - 3;
                (s, 3.0 * h / 8.0 * (f[s] + 3.0 * f[s + 1] + 3.0 * f[s + 2] + f[s + 3]))
            };
            let mut acc = 0.0;
            for i in (0..simpson_end).step_by(2) {
                acc += f[i] + 4.0 * f[i + 1] + f[i + 2];
            }
            acc * h / 3.0 + tail
        }
    };
    Ok(tf * integral)
}

/// Radius `√(2μ(1−μ))/μ` of the circle every optimal `(v, ω)` lies on.
pub fn control_radius(mu: f64) -> f64 {
    (2.0 * mu * (1.0 - mu)).sqrt() / mu
}

/// Maneuver time of the straight-line solution to a target at distance `r`
/// on the initial heading.
pub fn straight_line_time(mu: f64, r: f64) -> f64 {
    mu * r / (2.0 * mu * (1.0 - mu)).sqrt()
}
