//! Dual representation: the same eigenstate built from `L − N` lowering operators on `|↑…↑⟩`.

use super::equations::Representation;
use super::ode::rapidities_from_lambdas_in;
use crate::error::{Error, Result};
use crate::model::{EigenstateRecord, LambdaSet, ModelKind, ModelParams, SpectralSet};

/// Distance in `g⁻¹` below which a hyperbolic coupling counts as a singular integer.
const SINGULAR_TOL: f64 = 1e-6;

/// `Λ'_i = Λ_i + 2/g` (rational) or `Λ_i + g⁻¹/ε_i` (hyperbolic), with `L − N` particles.
pub fn dual_lambdas(model: &ModelParams, lambdas: &LambdaSet) -> LambdaSet {
    let g_inv = model.g_inv();
    let shifted = lambdas
        .lambdas
        .iter()
        .zip(&model.epsilons)
        .map(|(&x, &e)| match model.kind {
            ModelKind::Rational => x + 2.0 * g_inv,
            ModelKind::Hyperbolic => x + g_inv / e,
        })
        .collect();
    LambdaSet::new(shifted, model.len().saturating_sub(lambdas.particle_number))
}

/// The integer `p` when `g⁻¹` sits on `{0, …, L−2N−1} ∪ {−1, …, −N}`, where dual
/// rapidities diverge or original rapidities collapse to zero.
pub fn hyperbolic_singular_point(model: &ModelParams, n: usize) -> Option<i64> {
    if model.kind != ModelKind::Hyperbolic {
        return None;
    }
    let g_inv = model.g_inv();
    let p = g_inv.round();
    if (g_inv - p).abs() > SINGULAR_TOL {
        return None;
    }
    let p = p as i64;
    let upper = model.len() as i64 - 2 * n as i64 - 1;
    ((0..=upper).contains(&p) || (-(n as i64)..=-1).contains(&p)).then_some(p)
}

/// The integer `k` when `g⁻¹ = k ∈ {L−2N, …, L−N}`, `k ≥ 1`, where `k` dual rapidities
/// collapse onto the pole at `v = 0`.
pub fn hyperbolic_collapse_point(model: &ModelParams, n: usize) -> Option<i64> {
    if model.kind != ModelKind::Hyperbolic || n > model.len() {
        return None;
    }
    let g_inv = model.g_inv();
    let p = g_inv.round();
    if (g_inv - p).abs() > SINGULAR_TOL {
        return None;
    }
    let p = p as i64;
    let (l, n) = (model.len() as i64, n as i64);
    (p >= 1 && (l - 2 * n..=l - n).contains(&p)).then_some(p)
}

/// Dual rapidities of a solved record, through the polynomial fit on the shifted `Λ'`.
pub fn dual_rapidities(model: &ModelParams, record: &EigenstateRecord) -> Result<SpectralSet> {
    if let Some(point) = hyperbolic_singular_point(model, record.n) {
        return Err(Error::SingularPoint {
            point,
            context: format!(
                "dual rapidities diverge or vanish for L = {}, N = {}",
                model.len(),
                record.n
            ),
        });
    }
    if let Some(point) = hyperbolic_collapse_point(model, record.n) {
        return Err(Error::SingularPoint {
            point,
            context: format!(
                "{point} dual rapidities collapse onto v = 0 for L = {}, N = {}",
                model.len(),
                record.n
            ),
        });
    }
    let dual = dual_lambdas(model, &record.lambdas);
    let n_dual = dual.particle_number;
    Ok(rapidities_from_lambdas_in(model, &dual, n_dual, Representation::Dual)?.roots)
}
