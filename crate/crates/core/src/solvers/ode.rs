//! Moving between the eigenvalue-based variables and the rapidities.
//!
//! The polynomial `P(z) = Π_a (z − v_a)` obeys `P'(ε_i) = Λ_i P(ε_i)` at every
//! level, which is linear in its coefficients. Those are fitted by least squares
//! in a shifted and scaled variable, the roots come from the companion matrix,
//! and a joint Newton polish on the Bethe equations removes the rounding left
//! by the root extraction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::bethe::solve_bethe_direct;
use super::equations::Representation;
use super::{BethePolynomial, SolveOptions};
use crate::error::{Error, Result};
use crate::linalg::c;
use crate::model::{EigenstateRecord, LambdaSet, ModelParams, SpectralRole, SpectralSet};

/// Relative least-squares residual above which the `Λ_i` are declared inconsistent.
const FIT_TOL: f64 = 1e-8;

/// `Λ_i = Σ_a 1/(ε_i − v_a)` as complex numbers, for arbitrary rapidity sets.
pub fn lambdas_complex(model: &ModelParams, rapidities: &SpectralSet) -> Result<Vec<Complex64>> {
    rapidities.check_regular(model)?;
    Ok(model
        .epsilons
        .iter()
        .map(|&e| rapidities.values.iter().map(|v| (c(e) - v).inv()).sum())
        .collect())
}

/// Real `Λ_i` of a conjugation-closed rapidity set.
pub fn lambdas_from_rapidities(model: &ModelParams, rapidities: &SpectralSet) -> Result<LambdaSet> {
    let lam = lambdas_complex(model, rapidities)?;
    for (level, z) in lam.iter().enumerate() {
        if z.im.abs() > 1e-9 * z.re.abs().max(1.0) {
            return Err(Error::NonReal { level, imag: z.im });
        }
    }
    Ok(LambdaSet::new(
        lam.iter().map(|z| z.re).collect(),
        rapidities.len(),
    ))
}

/// Rapidities of the state described by `lambdas`, solving the ordinary Bethe equations.
pub fn rapidities_from_lambdas(
    model: &ModelParams,
    lambdas: &LambdaSet,
    n: usize,
) -> Result<BethePolynomial> {
    rapidities_from_lambdas_in(model, lambdas, n, Representation::Original)
}

/// As [`rapidities_from_lambdas`], polishing against the equations of the given representation.
pub fn rapidities_from_lambdas_in(
    model: &ModelParams,
    lambdas: &LambdaSet,
    n: usize,
    repr: Representation,
) -> Result<BethePolynomial> {
    let role = match repr {
        Representation::Original => SpectralRole::OnShell,
        Representation::Dual => SpectralRole::Dual,
    };
    if lambdas.len() != model.len() {
        return Err(Error::Precondition(format!(
            "{} eigenvalue-based variables for L = {}",
            lambdas.len(),
            model.len()
        )));
    }
    if n > model.len() {
        return Err(Error::Precondition(format!(
            "degree {n} exceeds L = {}",
            model.len()
        )));
    }
    if n == 0 {
        let residual = lambdas.lambdas.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if residual > FIT_TOL * lambdas.lambdas.iter().fold(1.0_f64, |m, x| m.max(x.abs())) {
            return Err(Error::InconsistentLambdas {
                degree: 0,
                residual,
            });
        }
        return Ok(BethePolynomial {
            degree: 0,
            roots: SpectralSet::empty(role),
        });
    }

    let eps = &model.epsilons;
    let center = eps.iter().sum::<f64>() / eps.len() as f64;
    let spread = eps.iter().fold(0.0_f64, |m, e| m.max((e - center).abs()));
    let s = if spread > 0.0 { spread } else { 1.0 };
    let roots_t = fit_and_factor(eps, &lambdas.lambdas, n, center, s)?;
    let seed: Vec<Complex64> = roots_t.iter().map(|t| c(center) + t * s).collect();

    let opts = SolveOptions {
        newton_tol: 1e-14,
        max_iter: 100,
        ..SolveOptions::default()
    };
    let polished = polish_roots(model, SpectralSet::new(seed, role), &opts)?;
    Ok(BethePolynomial {
        degree: n,
        roots: polished,
    })
}

/// Fills in the record's rapidities from its eigenvalue-based variables if they are absent.
pub fn attach_rapidities(model: &ModelParams, record: &mut EigenstateRecord) -> Result<()> {
    if record.rapidities.is_none() {
        record.rapidities = Some(rapidities_from_lambdas(model, &record.lambdas, record.n)?.roots);
    }
    Ok(())
}

/// Fits the monic `Q(t) = tⁿ + Σ q_k tᵏ` with `Q'(t_i) = s Λ_i Q(t_i)` and returns its roots.
fn fit_and_factor(
    eps: &[f64],
    lam: &[f64],
    n: usize,
    center: f64,
    s: f64,
) -> Result<Vec<Complex64>> {
    let l = eps.len();
    let t: Vec<f64> = eps.iter().map(|e| (e - center) / s).collect();
    let mut a = DMatrix::<f64>::zeros(l, n);
    let mut b = DVector::<f64>::zeros(l);
    for i in 0..l {
        let sl = s * lam[i];
        let row_scale = 1.0 / sl.abs().max(1.0);
        for k in 0..=n {
            let dpow = if k == 0 {
                0.0
            } else {
                k as f64 * t[i].powi(k as i32 - 1)
            };
            let entry = (dpow - sl * t[i].powi(k as i32)) * row_scale;
            if k < n {
                a[(i, k)] = entry;
            } else {
                b[i] = -entry;
            }
        }
    }
    let col_scale: Vec<f64> = (0..n)
        .map(|k| {
            let norm = a.column(k).norm();
            if norm > 0.0 {
                1.0 / norm
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = a.clone();
    for (k, &cs) in col_scale.iter().enumerate() {
        scaled.column_mut(k).scale_mut(cs);
    }
    let svd = scaled.svd(true, true);
    let y = svd
        .solve(&b, 1e-14)
        .map_err(|_| Error::InconsistentLambdas {
            degree: n,
            residual: f64::INFINITY,
        })?;
    let q: Vec<f64> = (0..n).map(|k| y[k] * col_scale[k]).collect();
    let qv = DVector::from_vec(q.clone());
    let residual = (&a * &qv - &b).norm() / (b.norm() + (&a * &qv).norm()).max(f64::MIN_POSITIVE);
    if residual.is_nan() || residual > FIT_TOL {
        return Err(Error::InconsistentLambdas {
            degree: n,
            residual,
        });
    }

    let mut companion = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        companion[(k, k - 1)] = 1.0;
    }
    for k in 0..n {
        companion[(k, n - 1)] = -q[k];
    }
    Ok(companion.complex_eigenvalues().iter().copied().collect())
}

/// Joint Newton polish; conjugate pairs are made exactly symmetric first when the fit left them slightly off.
fn polish_roots(
    model: &ModelParams,
    seed: SpectralSet,
    opts: &SolveOptions,
) -> Result<SpectralSet> {
    let seed = symmetrize(seed);
    match solve_bethe_direct(model, &seed, opts) {
        Ok(v) => Ok(symmetrize(v).sorted()),
        Err(Error::Divergence { .. }) => {
            let loose = SolveOptions {
                newton_tol: 1e-12,
                ..opts.clone()
            };
            solve_bethe_direct(model, &seed, &loose).map(|v| symmetrize(v).sorted())
        }
        Err(e) => Err(e),
    }
}

fn symmetrize(set: SpectralSet) -> SpectralSet {
    let mut values = set.values.clone();
    let n = values.len();
    let mut done = vec![false; n];
    for a in 0..n {
        if done[a] {
            continue;
        }
        let va = values[a];
        let scale = va.norm().max(1.0);
        if va.im.abs() <= 1e-10 * scale {
            values[a] = c(va.re);
            done[a] = true;
            continue;
        }
        let partner = (0..n).filter(|&b| b != a && !done[b]).min_by(|&x, &y| {
            (values[x] - va.conj())
                .norm()
                .total_cmp(&(values[y] - va.conj()).norm())
        });
        if let Some(b) = partner {
            if (values[b] - va.conj()).norm() <= 1e-6 * scale {
                let mid = (va + values[b].conj()) * 0.5;
                values[a] = mid;
                values[b] = mid.conj();
                done[b] = true;
            }
        }
        done[a] = true;
    }
    SpectralSet::new(values, set.role)
}
