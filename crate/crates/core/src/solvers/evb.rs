//! All eigenstates of a sector by continuation of the eigenvalue-based equations
//! from small coupling, one path per occupation of the levels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::bethe::bethe_seed_state;
use super::continuation::{track, CouplingPath};
use super::equations::{max_norm, EvbSystem};
use super::SolveOptions;
use crate::error::{Error, Result};
use crate::linalg::c;
use crate::model::{EigenstateRecord, LambdaSet, ModelKind, ModelParams, OccupationState};

pub(crate) fn occupation_label(occ: &OccupationState, l: usize) -> String {
    occ.to_bitstring(l)
}

/// Starting coupling with the sign of the target; `|g₀|` is small against every level spacing.
pub(crate) fn start_coupling(model: &ModelParams, target: f64, opts: &SolveOptions) -> f64 {
    let scale = match model.kind {
        ModelKind::Rational => model.min_gap(),
        ModelKind::Hyperbolic => model.min_gap() / model.scale(),
    };
    let g0 = target.signum() * opts.start_fraction * scale;
    if g0.abs() >= target.abs() {
        target
    } else {
        g0
    }
}

fn evb_seed(model: &ModelParams, occ: &OccupationState, g: f64) -> Vec<Complex64> {
    let mut lam = vec![c(0.0); model.len()];
    for &i in occ.indices() {
        lam[i] = match model.kind {
            ModelKind::Rational => c(-2.0 / g),
            ModelKind::Hyperbolic => c(-1.0 / (g * model.epsilons[i])),
        };
    }
    lam
}

/// Real Newton at a fixed coupling with the residual accumulated in double-double.
///
/// Steps are taken without a residual test: near-singular directions of the
/// Jacobian barely show up in the residual, and only the step size tells when
/// `x` has settled to rounding level. The best point seen is kept as a fallback
/// if the iteration wanders off. Returns the point and its max-norm residual.
pub(crate) fn polish(
    sys: &EvbSystem,
    x0: Vec<f64>,
    g: f64,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut x = x0;
    let mut res = max_norm(&sys.residual_accurate(&x, g));
    let mut best = (x.clone(), res);
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        let f = sys.residual_accurate(&x, g);
        let jac: DMatrix<f64> = sys
            .jacobian(&x.iter().map(|&v| c(v)).collect::<Vec<_>>(), c(1.0 / g))
            .map(|z| z.re);
        let Some(dx) = jac.lu().solve(&DVector::from_vec(f)) else {
            break;
        };
        let step = dx.amax();
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi -= d;
        }
        res = max_norm(&sys.residual_accurate(&x, g));
        if !res.is_finite() {
            break;
        }
        if res < best.1 {
            best = (x.clone(), res);
        }
        let size = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let settled = step <= 4.0 * f64::EPSILON * size;
        let stalled = step >= 0.5 * last_step && step <= 1e-6 * size;
        if settled || stalled {
            break;
        }
        last_step = step;
    }
    if res.is_finite() && res <= tol.max(100.0 * best.1) {
        (x, res)
    } else {
        best
    }
}

fn sector_mismatch(model: &ModelParams, lam: &[f64], n: usize, g: f64) -> f64 {
    let nf = n as f64;
    match model.kind {
        ModelKind::Rational => {
            let sum: f64 = lam.iter().sum();
            (sum + 2.0 * nf / g).abs() / (nf / g.abs() + 1.0)
        }
        ModelKind::Hyperbolic => {
            let l = model.len() as f64;
            let weighted: f64 = lam.iter().zip(&model.epsilons).map(|(x, e)| x * e).sum();
            let expected = nf + g * ((nf - l / 2.0).powi(2) - l * l / 4.0);
            (-g * weighted - expected).abs() / (expected.abs() + 1.0)
        }
    }
}

fn attempt(
    model: &ModelParams,
    occ: &OccupationState,
    target: f64,
    opts: &SolveOptions,
) -> Result<EigenstateRecord> {
    let sys = EvbSystem::new(model);
    let g0 = start_coupling(model, target, opts);
    let detour = match model.kind {
        ModelKind::Rational => 0.0,
        ModelKind::Hyperbolic => opts.detour,
    };
    let path = CouplingPath {
        start: g0,
        end: target,
        detour,
    };
    let label = occupation_label(occ, model.len());
    let tracked = track(&sys, &evb_seed(model, occ, g0), path, opts).map_err(|last_good_g| {
        Error::Continuation {
            seed: label.clone(),
            last_good_g,
        }
    })?;

    let real: Vec<f64> = tracked.iter().map(|z| z.re).collect();
    let (lambdas, residual) = polish(&sys, real, target, opts.newton_tol, opts.max_iter);
    if !lambdas.iter().all(|v| v.is_finite()) {
        return Err(Error::Continuation {
            seed: label,
            last_good_g: target,
        });
    }
    let n = occ.len();
    if sector_mismatch(model, &lambdas, n, target) > 1e-6 {
        return Err(Error::Continuation {
            seed: label,
            last_good_g: target,
        });
    }
    Ok(EigenstateRecord {
        n,
        lambdas: LambdaSet::new(lambdas, n),
        rapidities: None,
        seed_occupation: occ.clone(),
        residual_norm: residual,
        converged: residual <= opts.newton_tol,
    })
}

/// Continues the state seeded by `occ` from small coupling to the target coupling.
///
/// Retries with progressively smaller continuation steps before giving up.
pub fn solve_evb_seed(
    model: &ModelParams,
    occ: &OccupationState,
    opts: &SolveOptions,
) -> Result<EigenstateRecord> {
    let model = model.clone().checked()?;
    opts.validate()?;
    if occ.indices().last().is_some_and(|&i| i >= model.len()) {
        return Err(Error::Precondition(format!(
            "occupation {:?} out of range for L = {}",
            occ.indices(),
            model.len()
        )));
    }
    let target = opts.target_g.unwrap_or(model.g);
    if target == 0.0 || !target.is_finite() {
        return Err(Error::Precondition(
            "target coupling must be finite and nonzero".into(),
        ));
    }
    let model = model.with_g(target);
    let mut local = opts.clone();
    let mut last_err = None;
    for _ in 0..3 {
        match attempt(&model, occ, target, &local) {
            Ok(rec) => return Ok(rec),
            Err(e) => last_err = Some(e),
        }
        local.max_step /= 4.0;
        local.initial_step /= 4.0;
    }
    // The Bethe equations are conditioned differently along the path; try them before giving up.
    match bethe_seed_state(&model, occ, opts) {
        Ok(rec)
            if rec.converged
                && sector_mismatch(&model, &rec.lambdas.lambdas, occ.len(), target) <= 1e-6 =>
        {
            Ok(rec)
        }
        _ => Err(last_err.expect("at least one attempt")),
    }
}

/// Every eigenstate of the sector with `n` excitations, ordered like the seeds
/// `OccupationState::all(L, n)`.
pub fn solve_evb_all(
    model: &ModelParams,
    n: usize,
    opts: &SolveOptions,
) -> Result<Vec<EigenstateRecord>> {
    let l = model.len();
    if n > l {
        return Err(Error::Precondition(format!("N = {n} exceeds L = {l}")));
    }
    let seeds = OccupationState::all(l, n);
    let records: Vec<Result<EigenstateRecord>> = seeds
        .par_iter()
        .map(|occ| solve_evb_seed(model, occ, opts))
        .collect();
    let records: Vec<EigenstateRecord> = records.into_iter().collect::<Result<_>>()?;
    check_distinct(&records, l, 1e6 * opts.newton_tol)?;
    Ok(records)
}

pub(crate) fn check_distinct(records: &[EigenstateRecord], l: usize, threshold: f64) -> Result<()> {
    for (a, ra) in records.iter().enumerate() {
        for rb in &records[a + 1..] {
            let gap = ra
                .lambdas
                .lambdas
                .iter()
                .zip(&rb.lambdas.lambdas)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let scale = ra
                .lambdas
                .lambdas
                .iter()
                .fold(1.0_f64, |m, x| m.max(x.abs()));
            if gap <= threshold * scale {
                return Err(Error::DuplicateSolution {
                    first: occupation_label(&ra.seed_occupation, l),
                    second: occupation_label(&rb.seed_occupation, l),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::residual_evb;

    #[test]
    fn two_level_rational() {
        let m = ModelParams::rational(0.1, vec![1.0, 2.0]);
        let recs = solve_evb_all(&m, 1, &SolveOptions::default()).unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert!(r.converged);
            assert!(max_norm(&residual_evb(&m, &r.lambdas)) < 1e-12);
        }
    }

    #[test]
    fn vacuum_and_full_sectors() {
        let m = ModelParams::rational(0.7, vec![0.3, 1.1, 1.9]);
        let vac = solve_evb_all(&m, 0, &SolveOptions::default()).unwrap();
        assert_eq!(vac.len(), 1);
        assert!(vac[0].lambdas.lambdas.iter().all(|&x| x == 0.0));
        let full = solve_evb_all(&m, 3, &SolveOptions::default()).unwrap();
        assert_eq!(full.len(), 1);
        assert!((full[0].lambdas.sum() + 2.0 * 3.0 / 0.7).abs() < 1e-9);
    }

    #[test]
    fn negative_coupling_and_hyperbolic() {
        for m in [
            ModelParams::rational(-1.0, vec![0.2, 0.9, 1.7, 2.6]),
            ModelParams::hyperbolic(0.8, vec![0.6, 1.0, 1.7, 2.3]),
            ModelParams::hyperbolic(-0.3, vec![0.6, 1.0, 1.7, 2.3]),
        ] {
            let recs = solve_evb_all(&m, 2, &SolveOptions::default()).unwrap();
            assert_eq!(recs.len(), 6);
            assert!(recs.iter().all(|r| r.residual_norm <= 1e-12), "{m:?}");
        }
    }

    #[test]
    fn rejects_too_many_particles() {
        let m = ModelParams::rational(1.0, vec![1.0, 2.0]);
        assert!(matches!(
            solve_evb_all(&m, 3, &SolveOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
