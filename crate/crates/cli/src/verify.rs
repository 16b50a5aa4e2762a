//! `rg verify`: property suites with pass/fail lines and worst deviations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rg_core::cauchy::{
    borchardt_permanent, cauchy_det_closed_form, cauchy_inverse, cauchy_matrix, check_hadamard3,
    check_matrix_det_lemma, check_sylvester_mixed, CauchyPair,
};
use rg_core::error::Error;
use rg_core::linalg::{det_lu, permanent_ryser, CMatrix};
use rg_core::model::{EigenstateRecord, ModelParams};
use rg_core::oracle::{
    build_bethe_state, max_commutator, verify_eigenstate, verify_quadratic_identity,
};
use rg_core::overlap::{dual_ratio, gaudin_norm, gaudin_norm_evb, oracle_norm, slavnov};
use rg_core::solvers::{attach_rapidities, dual_rapidities, solve_evb_all, SolveOptions};

use crate::args::{Common, Suite, VerifyArgs};
use crate::exit::{CliError, CliResult, VERIFY_FAILED};
use crate::output::{emit, load_model};

const CAUCHY_INSTANCES: usize = 200;
const CAUCHY_TOL: f64 = 1e-8;
const INVERSE_TOL: f64 = 1e-10;
const OPERATOR_TOL: f64 = 1e-10;
const EIGENSTATE_TOL: f64 = 1e-9;
const OVERLAP_TOL: f64 = 1e-9;
/// Dense operator checks stop here whatever `--lmax` says.
const DENSE_LMAX: usize = 8;

struct Property {
    name: String,
    worst: f64,
    tol: f64,
    note: Option<String>,
}

impl Property {
    fn new(name: impl Into<String>, tol: f64) -> Self {
        Property {
            name: name.into(),
            worst: 0.0,
            tol,
            note: None,
        }
    }

    fn record(&mut self, deviation: f64) {
        if deviation.is_nan() {
            self.worst = f64::INFINITY;
        } else {
            self.worst = self.worst.max(deviation);
        }
    }

    fn fail(&mut self, why: String) {
        self.worst = f64::INFINITY;
        self.note.get_or_insert(why);
    }

    fn passes(&self) -> bool {
        self.worst <= self.tol
    }

    fn line(&self) -> String {
        let status = if self.passes() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{status} {} worst={:.3e} tol={:.0e}",
            self.name, self.worst, self.tol
        );
        if let Some(note) = &self.note {
            line.push_str(&format!(" ({note})"));
        }
        line
    }
}

pub fn run(common: &Common, args: &VerifyArgs) -> CliResult<()> {
    let model = load_model(common)?;
    let lmax = args.lmax.min(model.len());
    let opts = SolveOptions {
        newton_tol: common.tol,
        ..SolveOptions::default()
    };
    let suites: &[Suite] = match args.suite {
        Suite::All => &[
            Suite::Cauchy,
            Suite::Charges,
            Suite::Duality,
            Suite::Orthogonality,
        ],
        Suite::Cauchy => &[Suite::Cauchy],
        Suite::Charges => &[Suite::Charges],
        Suite::Duality => &[Suite::Duality],
        Suite::Orthogonality => &[Suite::Orthogonality],
    };
    let mut properties = Vec::new();
    for suite in suites {
        match suite {
            Suite::Cauchy => properties.extend(cauchy_suite(common.seed)),
            Suite::Charges => properties.extend(charges_suite(&model, lmax, &opts)),
            Suite::Duality => properties.push(duality_suite(&model, lmax, &opts)),
            Suite::Orthogonality => properties.extend(orthogonality_suite(&model, lmax, &opts)),
            Suite::All => unreachable!(),
        }
    }
    let mut text: String = properties.iter().map(|p| p.line() + "\n").collect();
    let failed = properties.iter().filter(|p| !p.passes()).count();
    text.push_str(&format!(
        "{} properties, {failed} failed\n",
        properties.len()
    ));
    emit(common, &text)?;
    if failed > 0 {
        return Err(CliError::new(
            VERIFY_FAILED,
            format!("{failed} properties failed"),
        ));
    }
    Ok(())
}

fn sub_models(model: &ModelParams, lmax: usize) -> impl Iterator<Item = ModelParams> + '_ {
    (1..=lmax).map(|l| ModelParams::new(model.kind, model.g, model.epsilons[..l].to_vec()))
}

fn solved(
    model: &ModelParams,
    n: usize,
    opts: &SolveOptions,
) -> Result<Vec<EigenstateRecord>, Error> {
    let mut records = solve_evb_all(model, n, opts)?;
    for r in &mut records {
        attach_rapidities(model, r)?;
    }
    Ok(records)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Interlaced nodes: `m + n` sorted reals with gaps and moduli of at least 5% of the window
/// half-width, dealt alternately to `ε` and `x` while both need more; `x` gets a small
/// imaginary part.
fn random_pair(rng: &mut ChaCha8Rng, m: usize, n: usize) -> CauchyPair {
    let width = 1.0 + (m + n) as f64 / 2.0;
    let gap = 0.05 * width;
    let mut reals: Vec<f64> = Vec::with_capacity(m + n);
    while reals.len() < m + n {
        let x = rng.gen_range(-width..width);
        if x.abs() >= gap && reals.iter().all(|y| (x - y).abs() >= gap) {
            reals.push(x);
        }
    }
    reals.sort_by(f64::total_cmp);
    let (mut eps, mut xs) = (Vec::with_capacity(m), Vec::with_capacity(n));
    for x in reals {
        let to_eps = xs.len() == n || (eps.len() < m && eps.len() <= xs.len());
        if to_eps {
            eps.push(Complex64::new(x, 0.0));
        } else {
            xs.push(Complex64::new(x, rng.gen_range(-0.3..0.3)));
        }
    }
    CauchyPair::new(eps, xs)
}

fn cauchy_suite(seed: u64) -> Vec<Property> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inverse = Property::new("cauchy/inverse", INVERSE_TOL);
    let mut closed = Property::new("cauchy/closed-form-det", CAUCHY_TOL);
    let mut permanent = Property::new("cauchy/borchardt-permanent", CAUCHY_TOL);
    let mut sylvester = Property::new("cauchy/sylvester-mixed", CAUCHY_TOL);
    let mut hadamard = Property::new("cauchy/hadamard3", CAUCHY_TOL);
    let mut lemma = Property::new("cauchy/det-lemma-mixed", CAUCHY_TOL);
    for _ in 0..CAUCHY_INSTANCES {
        let n = rng.gen_range(1..=7);
        let pair = random_pair(&mut rng, n, n);
        let outcome = (|| -> Result<(), Error> {
            let cm = cauchy_matrix(&pair)?;
            let prod = &cm * cauchy_inverse(&pair)?;
            inverse.record(
                (prod - CMatrix::identity(n, n))
                    .iter()
                    .fold(0.0_f64, |acc, z| acc.max(z.norm())),
            );
            closed.record(rel(cauchy_det_closed_form(&pair)?, det_lu(&cm)));
            permanent.record(rel(borchardt_permanent(&pair)?, permanent_ryser(&cm)));
            Ok(())
        })();
        if let Err(e) = outcome {
            inverse.fail(e.to_string());
        }

        let (m, k) = (rng.gen_range(0..=7), rng.gen_range(0..=7));
        match check_sylvester_mixed(&random_pair(&mut rng, m, k)) {
            Ok(c) => sylvester.record(c.rel_diff()),
            Err(e) => sylvester.fail(e.to_string()),
        }

        let n = rng.gen_range(1..=5);
        match check_hadamard3(&random_pair(&mut rng, n, n)) {
            Ok(c) => hadamard.record(c.rel_diff()),
            Err(e) => hadamard.fail(e.to_string()),
        }

        let k = rng.gen_range(0..=5);
        let m = k + rng.gen_range(0..=3);
        let big_g = Complex64::new(rng.gen_range(-3.0..3.0), 0.0);
        match check_matrix_det_lemma(&random_pair(&mut rng, m, k), big_g) {
            Ok(c) => lemma.record(c.rel_diff()),
            Err(e) => lemma.fail(e.to_string()),
        }
    }
    vec![inverse, closed, permanent, sylvester, hadamard, lemma]
}

fn charges_suite(model: &ModelParams, lmax: usize, opts: &SolveOptions) -> Vec<Property> {
    let mut commutators = Property::new("charges/commutators", OPERATOR_TOL);
    let mut quadratic = Property::new("charges/quadratic-identity", OPERATOR_TOL);
    let mut eigen = Property::new("charges/eigenvalues", EIGENSTATE_TOL);
    for sub in sub_models(model, lmax.min(DENSE_LMAX)) {
        for n in 0..=sub.len() {
            match max_commutator(&sub, n) {
                Ok(x) => commutators.record(x),
                Err(e) => commutators.fail(e.to_string()),
            }
            match verify_quadratic_identity(&sub, n) {
                Ok(r) => quadratic.record(r.worst()),
                Err(e) => quadratic.fail(e.to_string()),
            }
            match solved(&sub, n, opts) {
                Ok(records) => {
                    for r in &records {
                        match verify_eigenstate(&sub, r) {
                            Ok(rep) => eigen.record(rep.worst()),
                            Err(e) => eigen.fail(e.to_string()),
                        }
                    }
                }
                Err(e) => eigen.fail(format!("L = {}, N = {n}: {e}", sub.len())),
            }
        }
    }
    vec![commutators, quadratic, eigen]
}

fn duality_suite(model: &ModelParams, lmax: usize, opts: &SolveOptions) -> Property {
    let mut ratio = Property::new("duality/ratio", EIGENSTATE_TOL);
    let mut skipped = 0usize;
    for sub in sub_models(model, lmax.min(DENSE_LMAX)) {
        for n in 0..=sub.len() {
            let records = match solved(&sub, n, opts) {
                Ok(r) => r,
                Err(e) => {
                    ratio.fail(format!("L = {}, N = {n}: {e}", sub.len()));
                    continue;
                }
            };
            for r in &records {
                let c = match dual_ratio(&sub, r) {
                    Ok(c) => c,
                    Err(Error::OutOfValidity(_) | Error::SingularPoint { .. }) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => {
                        ratio.fail(e.to_string());
                        continue;
                    }
                };
                let deviation = (|| -> Result<f64, Error> {
                    let orig = build_bethe_state(&sub, r.rapidities()?, false)?;
                    let dual = build_bethe_state(&sub, &dual_rapidities(&sub, r)?, true)?;
                    let scale = orig
                        .amplitudes
                        .iter()
                        .fold(0.0_f64, |m, z| m.max((c * z).norm()));
                    let diff = orig
                        .amplitudes
                        .iter()
                        .zip(&dual.amplitudes)
                        .fold(0.0_f64, |m, (a, d)| m.max((c * a - d).norm()));
                    Ok(diff / scale)
                })();
                match deviation {
                    Ok(x) => ratio.record(x),
                    Err(e) => ratio.fail(e.to_string()),
                }
            }
        }
    }
    if skipped > 0 {
        ratio.note.get_or_insert(format!(
            "{skipped} states outside the ratio's validity range skipped"
        ));
    }
    ratio
}

fn orthogonality_suite(model: &ModelParams, lmax: usize, opts: &SolveOptions) -> Vec<Property> {
    let mut orthogonal = Property::new("orthogonality/distinct-states", OVERLAP_TOL);
    let mut norms = Property::new("orthogonality/norms", OVERLAP_TOL);
    for sub in sub_models(model, lmax.min(DENSE_LMAX)) {
        for n in 0..=sub.len() {
            let records = match solved(&sub, n, opts) {
                Ok(r) => r,
                Err(e) => {
                    orthogonal.fail(format!("L = {}, N = {n}: {e}", sub.len()));
                    continue;
                }
            };
            let mut gaudin = Vec::with_capacity(records.len());
            for r in &records {
                let check = (|| -> Result<f64, Error> {
                    let a = gaudin_norm(&sub, r)?;
                    let b = gaudin_norm_evb(&sub, r)?;
                    let o = oracle_norm(&sub, r.rapidities()?)?;
                    gaudin.push(a);
                    let scale = o.abs().max(f64::MIN_POSITIVE);
                    Ok(((a - o).abs().max((b - o).abs())) / scale)
                })();
                match check {
                    Ok(x) => norms.record(x),
                    Err(e) => {
                        gaudin.push(f64::NAN);
                        norms.fail(e.to_string());
                    }
                }
            }
            for (a, ra) in records.iter().enumerate() {
                for (b, rb) in records.iter().enumerate().filter(|&(b, _)| b != a) {
                    let value = ra
                        .rapidities()
                        .and_then(|v| slavnov(&sub, v, rb.rapidities()?));
                    match value {
                        Ok(z) => orthogonal.record(z.norm() / (gaudin[a] * gaudin[b]).abs().sqrt()),
                        Err(e) => orthogonal.fail(e.to_string()),
                    }
                }
            }
        }
    }
    vec![orthogonal, norms]
}
