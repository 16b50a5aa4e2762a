//! Fixtures shared by the property and acceptance tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rg_core::cauchy::CauchyPair;
use rg_core::model::{EigenstateRecord, ModelKind, ModelParams};
use rg_core::solvers::{attach_rapidities, solve_evb_all, SolveOptions};

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// `count` sorted values in `[lo, hi)` with pairwise gaps of at least `gap`.
pub fn separated_levels<R: Rng>(rng: &mut R, count: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
    loop {
        let mut eps: Vec<f64> = (0..count).map(|_| rng.gen_range(lo..hi)).collect();
        eps.sort_by(f64::total_cmp);
        if eps.windows(2).all(|w| w[1] - w[0] >= gap) {
            return eps;
        }
    }
}

/// Interlaced nodes built from positive gaps: sorted reals dealt alternately to `ε` and `x`
/// while both need more, with the imaginary offsets added to `x`.
pub fn interlaced_pair(
    start: f64,
    gaps: &[f64],
    m: usize,
    n: usize,
    offsets: &[f64],
) -> CauchyPair {
    assert!(gaps.len() >= m + n && offsets.len() >= n);
    let mut x = start;
    let (mut eps, mut xs) = (Vec::with_capacity(m), Vec::with_capacity(n));
    for &gap in &gaps[..m + n] {
        x += gap;
        let to_eps = xs.len() == n || (eps.len() < m && eps.len() <= xs.len());
        if to_eps {
            eps.push(Complex64::new(x, 0.0));
        } else {
            let k = xs.len();
            xs.push(Complex64::new(x, offsets[k]));
        }
    }
    CauchyPair::new(eps, xs)
}

/// Whether `g⁻¹` keeps at least `margin` from every integer in `[−L, L]`.
pub fn away_from_integers(g: f64, l: usize, margin: f64) -> bool {
    let g_inv = 1.0 / g;
    (-(l as i64)..=l as i64).all(|p| (g_inv - p as f64).abs() >= margin)
}

pub fn solved(model: &ModelParams, n: usize) -> Vec<EigenstateRecord> {
    let opts = SolveOptions::default();
    let mut records =
        solve_evb_all(model, n, &opts).unwrap_or_else(|e| panic!("{model:?} N = {n}: {e}"));
    for r in &mut records {
        attach_rapidities(model, r).unwrap_or_else(|e| panic!("{model:?} N = {n}: {e}"));
    }
    records
}

pub fn model(kind: ModelKind, g: f64, eps: &[f64]) -> ModelParams {
    ModelParams::new(kind, g, eps.to_vec())
}
