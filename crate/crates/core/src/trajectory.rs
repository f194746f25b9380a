use crate::error::{Error, Result};
use crate::model::{cost_quadrature, Control, Formulation, State, TrajectorySample};

/// Common read-only view of a closed-form optimal trajectory.
pub trait ClosedForm {
    fn formulation(&self) -> Formulation;
    fn mu(&self) -> f64;
    fn tf(&self) -> f64;

    /// Full sample at normalized time `tau ∈ [0, 1]`.
    fn sample(&self, tau: f64) -> Result<TrajectorySample>;

    fn state_at(&self, tau: f64) -> Result<State> {
        self.sample(tau).map(|s| s.state)
    }

    fn control_at(&self, tau: f64) -> Result<Control> {
        self.sample(tau).map(|s| s.control)
    }

    /// `n` equispaced samples covering `[0, 1]`, endpoints exact.
    fn samples(&self, n: usize) -> Result<Vec<TrajectorySample>> {
        if n < 2 {
            return Err(Error::InsufficientSamples(n));
        }
        (0..n)
            .map(|i| {
                let tau = if i + 1 == n { 1.0 } else { i as f64 / (n - 1) as f64 };
                self.sample(tau)
            })
            .collect()
    }

    /// Quadrature cost over `n` samples.
    fn cost(&self, n: usize) -> Result<f64> {
        let controls: Vec<Control> = self.samples(n)?.into_iter().map(|s| s.control).collect();
        cost_quadrature(&controls, self.tf(), self.mu())
    }
}
