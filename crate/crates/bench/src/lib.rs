//! Fixtures shared by the planner benchmarks.

use etoc_core::study::reference_problem;
use etoc_core::{Formulation, Problem, Target};

pub const SWEEP_STEPS: usize = 12;

/// `r = 1`, `μ = 0.5`, bearings evenly spaced over `[5°, 90°]`.
pub fn sweep_problems(formulation: Formulation) -> Vec<Problem> {
    (0..SWEEP_STEPS)
        .map(|i| {
            let deg = 5.0 + 85.0 * i as f64 / (SWEEP_STEPS - 1) as f64;
            Problem::new(0.5, Target::polar(1.0, deg.to_radians()).expect("valid target"), formulation)
                .expect("valid problem")
        })
        .collect()
}

pub fn reference(formulation: Formulation) -> Problem {
    reference_problem().with_formulation(formulation)
}
