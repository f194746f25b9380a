//! Formulation-independent entry point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedv::{self, FixedVParams};
use crate::form1::{self, Form1Params};
use crate::form2::{self, Form2Params};
use crate::model::{Formulation, Problem, TrajectorySample};
use crate::rootsolve::{SearchOptions, SolveReport};
use crate::trajectory::ClosedForm;

/// A solved closed-form trajectory of any formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solution {
    Form1(Form1Params),
    Form2(Form2Params),
    FixedV(FixedVParams),
}

impl Solution {
    pub fn as_closed_form(&self) -> &dyn ClosedForm {
        match self {
            Solution::Form1(p) => p,
            Solution::Form2(p) => p,
            Solution::FixedV(p) => p,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            Solution::Form1(p) => p.degenerate,
            Solution::Form2(p) => p.degenerate,
            Solution::FixedV(p) => p.degenerate,
        }
    }

    /// The solver unknowns: `(Q, T_f)`, `(ε, T_f)` or `(m, T_f, v_c)`.
    pub fn unknowns(&self) -> Vec<f64> {
        match self {
            Solution::Form1(p) => vec![p.q, p.tf],
            Solution::Form2(p) => vec![p.eps, p.tf],
            Solution::FixedV(p) => vec![p.m, p.tf, p.vc],
        }
    }
}

impl ClosedForm for Solution {
    fn formulation(&self) -> Formulation {
        self.as_closed_form().formulation()
    }

    fn mu(&self) -> f64 {
        self.as_closed_form().mu()
    }

    fn tf(&self) -> f64 {
        self.as_closed_form().tf()
    }

    fn sample(&self, tau: f64) -> Result<TrajectorySample> {
        self.as_closed_form().sample(tau)
    }
}

/// Solves `problem` with its selected formulation. `guess`, when given, must
/// hold the formulation's unknowns in [`Solution::unknowns`] order.
pub fn solve(problem: &Problem, guess: Option<&[f64]>, opts: &SearchOptions) -> Result<(Solution, SolveReport)> {
    let want = match problem.formulation {
        Formulation::FixedV => 3,
        _ => 2,
    };
    if let Some(g) = guess {
        if g.len() != want {
            return Err(Error::InvalidProblem(format!(
                "{} expects {want} guess values, got {}",
                problem.formulation,
                g.len()
            )));
        }
    }
    match problem.formulation {
        Formulation::Form1 => {
            form1::solve(problem, guess.map(|g| [g[0], g[1]]), opts).map(|(p, r)| (Solution::Form1(p), r))
        }
        Formulation::Form2 => {
            form2::solve(problem, guess.map(|g| [g[0], g[1]]), opts).map(|(p, r)| (Solution::Form2(p), r))
        }
        Formulation::FixedV => {
            fixedv::solve(problem, guess.map(|g| [g[0], g[1], g[2]]), opts).map(|(p, r)| (Solution::FixedV(p), r))
        }
    }
}
