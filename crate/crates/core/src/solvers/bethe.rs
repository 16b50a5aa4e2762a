//! Direct solution of the Bethe equations for the rapidities.

use num_complex::Complex64;
use rayon::prelude::*;

use super::continuation::{track, CouplingPath};
use super::equations::{max_norm_c, BetheSystem, EvbSystem, Representation};
use super::evb::{check_distinct, occupation_label, polish, start_coupling};
use super::ode::lambdas_from_rapidities;
use super::SolveOptions;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, Lu};
use crate::model::{
    EigenstateRecord, LambdaSet, ModelKind, ModelParams, OccupationState, SpectralRole, SpectralSet,
};

fn regular(model: &ModelParams, v: &[Complex64]) -> Result<()> {
    SpectralSet::off_shell(v.to_vec()).check_regular(model)
}

/// Damped Newton on the Bethe equations in the representation given by the seed's role.
///
/// Iterates while the residual keeps dropping and accepts the result when the
/// max-norm residual is below `newton_tol` relative to the largest term of the equations. The result is sorted and tagged `OnShell`
/// (or `Dual` for dual seeds).
pub fn solve_bethe_direct(
    model: &ModelParams,
    seed: &SpectralSet,
    opts: &SolveOptions,
) -> Result<SpectralSet> {
    opts.validate()?;
    seed.check_regular(model)?;
    let repr = Representation::of(seed);
    let role = match repr {
        Representation::Original => SpectralRole::OnShell,
        Representation::Dual => SpectralRole::Dual,
    };
    let sys = BetheSystem::new(model, repr);
    let g_inv = c(opts.target_g.map_or(model.g_inv(), |g| 1.0 / g));
    let mut v = seed.values.clone();
    let mut f = sys.residual(&v, g_inv);
    let mut res = max_norm_c(&f);
    for _ in 0..opts.max_iter {
        if res <= 1e-2 * opts.newton_tol * sys.term_scale(&v, g_inv).max(1.0) {
            break;
        }
        let b = CMatrix::from_column_slice(f.len(), 1, &f);
        let dx = Lu::new(&sys.jacobian(&v, g_inv))
            .solve(&b)
            .ok_or_else(|| Error::Degenerate("singular Bethe Jacobian".into()))?;
        let mut damping = 1.0;
        let mut accepted = false;
        while damping >= 1e-4 {
            let trial: Vec<Complex64> = v
                .iter()
                .zip(dx.iter())
                .map(|(x, d)| x - d * damping)
                .collect();
            if regular(model, &trial).is_ok() {
                let trial_f = sys.residual(&trial, g_inv);
                let trial_res = max_norm_c(&trial_f);
                if trial_res.is_finite() && trial_res < res {
                    v = trial;
                    f = trial_f;
                    res = trial_res;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            if res > opts.newton_tol * sys.term_scale(&v, g_inv).max(1.0) {
                regular(
                    model,
                    &v.iter()
                        .zip(dx.iter())
                        .map(|(x, d)| x - d)
                        .collect::<Vec<_>>(),
                )?;
            }
            break;
        }
    }
    if res <= opts.newton_tol * sys.term_scale(&v, g_inv).max(1.0) {
        return Ok(SpectralSet::new(v, role).sorted());
    }
    Err(Error::Divergence {
        residual: res,
        iterations: opts.max_iter,
    })
}

fn bethe_seed(model: &ModelParams, occ: &OccupationState, g: f64) -> Vec<Complex64> {
    occ.indices()
        .iter()
        .map(|&i| {
            let e = model.epsilons[i];
            match model.kind {
                ModelKind::Rational => c(e + g / 2.0),
                ModelKind::Hyperbolic => c(e * (1.0 + g)),
            }
        })
        .collect()
}

pub(crate) fn bethe_seed_state(
    model: &ModelParams,
    occ: &OccupationState,
    opts: &SolveOptions,
) -> Result<EigenstateRecord> {
    let target = opts.target_g.unwrap_or(model.g);
    let model = model.with_g(target);
    let label = occupation_label(occ, model.len());
    let sys = BetheSystem::new(&model, Representation::Original);
    let g0 = start_coupling(&model, target, opts);
    let path = CouplingPath {
        start: g0,
        end: target,
        detour: opts.detour,
    };
    let mut local = opts.clone();
    let mut tracked = None;
    let mut last_good = g0;
    for _ in 0..3 {
        match track(&sys, &bethe_seed(&model, occ, g0), path, &local) {
            Ok(v) => {
                tracked = Some(v);
                break;
            }
            Err(g) => last_good = g,
        }
        local.max_step /= 4.0;
        local.initial_step /= 4.0;
    }
    let tracked = tracked.ok_or(Error::Continuation {
        seed: label,
        last_good_g: last_good,
    })?;
    let direct_opts = SolveOptions {
        target_g: Some(target),
        ..opts.clone()
    };
    let rapidities = solve_bethe_direct(&model, &SpectralSet::on_shell(tracked), &direct_opts)?;
    let lambdas = lambdas_from_rapidities(&model, &rapidities)?;
    let evb = EvbSystem::new(&model);
    let (x, residual) = polish(
        &evb,
        lambdas.lambdas,
        target,
        opts.newton_tol,
        opts.max_iter,
    );
    Ok(EigenstateRecord {
        n: occ.len(),
        lambdas: LambdaSet::new(x, occ.len()),
        rapidities: Some(rapidities),
        seed_occupation: occ.clone(),
        residual_norm: residual,
        converged: residual <= opts.newton_tol,
    })
}

/// Every eigenstate of the sector by continuation of the Bethe equations themselves.
///
/// The coupling path leaves the real axis so that rapidities never collide on the
/// way; records carry both the rapidities and the eigenvalue-based variables.
pub fn solve_bethe_all(
    model: &ModelParams,
    n: usize,
    opts: &SolveOptions,
) -> Result<Vec<EigenstateRecord>> {
    let model = model.clone().checked()?;
    opts.validate()?;
    let l = model.len();
    if n > l {
        return Err(Error::Precondition(format!("N = {n} exceeds L = {l}")));
    }
    let seeds = OccupationState::all(l, n);
    let records: Vec<Result<EigenstateRecord>> = seeds
        .par_iter()
        .map(|occ| bethe_seed_state(&model, occ, opts))
        .collect();
    let records: Vec<EigenstateRecord> = records.into_iter().collect::<Result<_>>()?;
    check_distinct(&records, l, 1e6 * opts.newton_tol)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::residual_bethe;

    #[test]
    fn single_level_converges() {
        let m = ModelParams::rational(1.0, vec![0.5]);
        let seed = SpectralSet::on_shell(vec![c(0.5 + 0.4)]);
        let v = solve_bethe_direct(&m, &seed, &SolveOptions::default()).unwrap();
        assert!((v.values[0] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn exact_seed_is_fixed_point() {
        let m = ModelParams::rational(0.6, vec![1.1]);
        let seed = SpectralSet::on_shell(vec![c(1.4)]);
        let v = solve_bethe_direct(&m, &seed, &SolveOptions::default()).unwrap();
        assert_eq!(v.values, seed.values);
    }

    #[test]
    fn both_two_level_branches() {
        // 1/g + ½/(1 − v) + ½/(2 − v) = 0 has one root near each level for small g.
        let m = ModelParams::rational(0.1, vec![1.0, 2.0]);
        let opts = SolveOptions::default();
        let a = solve_bethe_direct(
            &m,
            &SpectralSet::from_real(&[1.04], SpectralRole::OnShell),
            &opts,
        )
        .unwrap();
        let b = solve_bethe_direct(
            &m,
            &SpectralSet::from_real(&[2.04], SpectralRole::OnShell),
            &opts,
        )
        .unwrap();
        assert!((a.values[0].re - 1.0).abs() < 0.1 && (b.values[0].re - 2.0).abs() < 0.1);
        assert!(max_norm_c(&residual_bethe(&m, &a).unwrap()) < 1e-12);
        assert!(max_norm_c(&residual_bethe(&m, &b).unwrap()) < 1e-12);
    }

    #[test]
    fn bethe_continuation_matches_evb() {
        for m in [
            ModelParams::rational(1.0, vec![0.2, 0.9, 1.7, 2.6]),
            ModelParams::hyperbolic(0.7, vec![0.6, 1.0, 1.7, 2.3]),
        ] {
            let opts = SolveOptions::default();
            let direct = solve_bethe_all(&m, 2, &opts).unwrap();
            let evb = crate::solvers::solve_evb_all(&m, 2, &opts).unwrap();
            assert_eq!(direct.len(), 6);
            for r in &direct {
                let hit = evb.iter().any(|e| {
                    e.lambdas
                        .lambdas
                        .iter()
                        .zip(&r.lambdas.lambdas)
                        .all(|(x, y)| (x - y).abs() < 1e-8 * x.abs().max(1.0))
                });
                assert!(hit, "{m:?}: {:?}", r.lambdas);
            }
        }
    }
}
