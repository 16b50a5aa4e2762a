//! Solvers for the eigenvalue-based equations and the Bethe equations, conversion
//! between the two frameworks, and dual-state data.

mod bethe;
mod continuation;
mod dual;
mod equations;
mod evb;
mod ode;

use crate::model::SpectralSet;

pub use bethe::{solve_bethe_all, solve_bethe_direct};
pub use dual::{
    dual_lambdas, dual_rapidities, hyperbolic_collapse_point, hyperbolic_singular_point,
};
pub(crate) use equations::residual_evb_dd;
pub use equations::{
    bethe_jacobian, evb_jacobian, max_norm, max_norm_c, residual_bethe, residual_evb,
    Representation,
};
pub use evb::{solve_evb_all, solve_evb_seed};
pub use ode::{
    attach_rapidities, lambdas_complex, lambdas_from_rapidities, rapidities_from_lambdas,
    rapidities_from_lambdas_in,
};

/// Newton and continuation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Absolute max-norm tolerance on the final residual.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Coupling to continue to; the model's own `g` when `None`.
    pub target_g: Option<f64>,
    /// Starting `|g|` as a fraction of the level scale.
    pub start_fraction: f64,
    /// Continuation step controller, in units of the path parameter `t ∈ [0, 1]`.
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub shrink: f64,
    pub grow: f64,
    pub grow_after: usize,
    /// Height of the complex bulge of the coupling path, relative to its length.
    pub detour: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            newton_tol: 1e-12,
            max_iter: 200,
            target_g: None,
            start_fraction: 1e-3,
            initial_step: 1e-3,
            max_step: 0.05,
            min_step: 1e-9,
            shrink: 0.5,
            grow: 2.0,
            grow_after: 3,
            detour: 0.3,
        }
    }
}

impl SolveOptions {
    pub fn with_target(mut self, g: f64) -> Self {
        self.target_g = Some(g);
        self
    }

    pub(crate) fn validate(&self) -> crate::error::Result<()> {
        let ok = self.newton_tol > 0.0
            && self.max_iter >= 1
            && self.start_fraction > 0.0
            && self.initial_step > 0.0
            && self.max_step >= self.min_step
            && self.min_step > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.grow >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(crate::error::Error::Precondition(format!(
                "invalid solver options: {self:?}"
            )))
        }
    }
}

/// The monic polynomial `P(z) = Π_a (z − v_a)`, kept through its roots.
#[derive(Clone, Debug, PartialEq)]
pub struct BethePolynomial {
    pub degree: usize,
    pub roots: SpectralSet,
}

impl BethePolynomial {
    pub fn eval(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        self.roots.values.iter().map(|v| z - v).product()
    }
}
