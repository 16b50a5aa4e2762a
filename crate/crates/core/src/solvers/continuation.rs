//! Predictor-corrector continuation in the coupling.
//!
//! The path runs from a small starting coupling, where the solutions are known
//! in closed form, to the target coupling. It may bulge into the complex plane
//! to step around singular points on the real axis. The predictor is the
//! tangent `dx/dg⁻¹ = −J⁻¹ ∂F/∂g⁻¹`; the corrector is plain Newton.

use num_complex::Complex64;

use super::equations::{BetheSystem, EvbSystem};
use super::SolveOptions;
use crate::linalg::{CMatrix, Lu, ONE};

pub(crate) trait Homotopy {
    fn residual(&self, x: &[Complex64], g_inv: Complex64) -> Vec<Complex64>;
    fn jacobian(&self, x: &[Complex64], g_inv: Complex64) -> CMatrix;
    fn d_g_inv(&self, x: &[Complex64]) -> Vec<Complex64>;

    fn admissible(&self, _x: &[Complex64]) -> bool {
        true
    }
}

impl Homotopy for EvbSystem<'_> {
    fn residual(&self, x: &[Complex64], g_inv: Complex64) -> Vec<Complex64> {
        EvbSystem::residual(self, x, g_inv)
    }
    fn jacobian(&self, x: &[Complex64], g_inv: Complex64) -> CMatrix {
        EvbSystem::jacobian(self, x, g_inv)
    }
    fn d_g_inv(&self, x: &[Complex64]) -> Vec<Complex64> {
        EvbSystem::d_g_inv(self, x)
    }
}

impl Homotopy for BetheSystem<'_> {
    fn residual(&self, x: &[Complex64], g_inv: Complex64) -> Vec<Complex64> {
        BetheSystem::residual(self, x, g_inv)
    }
    fn jacobian(&self, x: &[Complex64], g_inv: Complex64) -> CMatrix {
        BetheSystem::jacobian(self, x, g_inv)
    }
    fn d_g_inv(&self, x: &[Complex64]) -> Vec<Complex64> {
        BetheSystem::d_g_inv(self, x)
    }
    fn admissible(&self, x: &[Complex64]) -> bool {
        let scale = self.eps.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
        let tol = 1e-9 * scale;
        x.iter().enumerate().all(|(a, va)| {
            self.eps.iter().all(|&e| (va - e).norm() > tol)
                && x[a + 1..].iter().all(|vb| (va - vb).norm() > tol)
        })
    }
}

/// `g(t) = start + t (end − start) + i · detour · |end − start| · sin(π t)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CouplingPath {
    pub start: f64,
    pub end: f64,
    pub detour: f64,
}

impl CouplingPath {
    pub fn at(&self, t: f64) -> Complex64 {
        let span = self.end - self.start;
        Complex64::new(
            self.start + t * span,
            self.detour * span.abs() * (std::f64::consts::PI * t).sin(),
        )
    }
}

fn inf_norm(x: &[Complex64]) -> f64 {
    x.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn solve(j: &CMatrix, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let b = CMatrix::from_column_slice(rhs.len(), 1, rhs);
    let sol = Lu::new(j).solve(&b)?;
    let out: Vec<Complex64> = sol.iter().copied().collect();
    out.iter().all(|z| z.is_finite()).then_some(out)
}

/// Relative step size below which stalled Newton steps are attributed to rounding.
const NOISE_FLOOR: f64 = 1e-7;

/// Newton corrector with a contraction requirement. Returns the converged point.
///
/// Converges when the step drops below `rel_step · ‖x‖`, or when steps stop
/// contracting while already below the rounding floor of an ill-conditioned Jacobian.
pub(crate) fn newton<H: Homotopy>(
    sys: &H,
    x0: &[Complex64],
    g_inv: Complex64,
    max_iter: usize,
    rel_step: f64,
) -> Option<Vec<Complex64>> {
    let mut x = x0.to_vec();
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        let f = sys.residual(&x, g_inv);
        let dx = solve(&sys.jacobian(&x, g_inv), &f)?;
        let step = inf_norm(&dx);
        let size = inf_norm(&x).max(1.0);
        let stalled = last_step < f64::INFINITY && step > 0.5 * last_step;
        if stalled && step > NOISE_FLOOR * size {
            return None;
        }
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
        if !sys.admissible(&x) {
            return None;
        }
        if step <= rel_step * size || stalled {
            return Some(x);
        }
        last_step = step;
    }
    None
}

/// Tracks a solution along `path`. On failure returns the real part of the last accepted coupling.
pub(crate) fn track<H: Homotopy>(
    sys: &H,
    x_start: &[Complex64],
    path: CouplingPath,
    opts: &SolveOptions,
) -> Result<Vec<Complex64>, f64> {
    let g_inv_at = |t: f64| ONE / path.at(t);
    let mut x = newton(sys, x_start, g_inv_at(0.0), 50, 1e-13).ok_or(path.start)?;
    if x.is_empty() {
        return Ok(x);
    }
    let mut t = 0.0;
    let mut dt = opts.initial_step;
    let mut streak = 0;
    while t < 1.0 {
        dt = dt.min(1.0 - t).min(opts.max_step);
        let t_next = if 1.0 - t - dt < 1e-14 { 1.0 } else { t + dt };
        let (gi0, gi1) = (g_inv_at(t), g_inv_at(t_next));

        let accepted = (|| {
            let dfdg = sys.d_g_inv(&x);
            let tangent = solve(&sys.jacobian(&x, gi0), &dfdg)?;
            let delta = gi1 - gi0;
            let predicted: Vec<Complex64> = x
                .iter()
                .zip(&tangent)
                .map(|(xi, ti)| xi - ti * delta)
                .collect();
            let corrected = newton(sys, &predicted, gi1, 8, 1e-12)?;
            let predictor_step = predicted
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - q).norm())
                .fold(0.0, f64::max);
            let correction = corrected
                .iter()
                .zip(&predicted)
                .map(|(p, q)| (p - q).norm())
                .fold(0.0, f64::max);
            if correction > 0.3 * predictor_step + 1e-9 * inf_norm(&x).max(1.0) {
                return None;
            }
            Some(corrected)
        })();

        match accepted {
            Some(next) => {
                x = next;
                t = t_next;
                streak += 1;
                if streak >= opts.grow_after {
                    dt *= opts.grow;
                    streak = 0;
                }
            }
            None => {
                dt *= opts.shrink;
                streak = 0;
                if dt < opts.min_step {
                    return Err(path.at(t).re);
                }
            }
        }
    }
    Ok(x)
}
