//! Acceptance gate: nine criteria, one PASS/FAIL line each; exits nonzero on any failure.

mod common;

use std::time::{Duration, Instant};

use common::{interlaced_pair, model, separated_levels, solved};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rg_core::cauchy::{
    borchardt_permanent, cauchy_inverse, cauchy_matrix, check_hadamard3, check_matrix_det_lemma,
    check_sylvester_mixed,
};
use rg_core::linalg::{permanent_ryser, CMatrix};
use rg_core::model::{
    EigenstateRecord, ModelKind, ModelParams, OccupationState, SpectralRole, SpectralSet,
};
use rg_core::oracle::{build_bethe_state, max_commutator, verify_quadratic_identity};
use rg_core::overlap::{
    dual_ratio, gaudin_matrix, gaudin_norm, gaudin_norm_evb, j_l_matrix, max_pairwise_deviation,
    oracle_norm, overlap, overlap_scale, Ket, Method, OverlapRequest,
};
use rg_core::solvers::{
    dual_rapidities, lambdas_from_rapidities, max_norm_c, rapidities_from_lambdas, residual_bethe,
    residual_evb, solve_evb_all, SolveOptions,
};

const SIZES: [usize; 3] = [2, 4, 6];
const COUPLINGS: [f64; 3] = [0.25, 1.0, 4.0];
const KETS_PER_STATE: usize = 5;
const SEED: u64 = 20_240_917;

struct Outcome {
    worst: f64,
    tol: f64,
    elapsed: Duration,
    budget: Option<Duration>,
    failures: Vec<String>,
}

impl Outcome {
    fn new(tol: f64) -> Self {
        Outcome {
            worst: 0.0,
            tol,
            elapsed: Duration::ZERO,
            budget: None,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, deviation: f64, what: impl FnOnce() -> String) {
        if (deviation.is_nan() || deviation > self.tol) && self.failures.len() < 5 {
            self.failures.push(format!("{} ({deviation:.3e})", what()));
        }
        self.worst = if deviation.is_nan() {
            f64::INFINITY
        } else {
            self.worst.max(deviation)
        };
    }

    fn error(&mut self, what: String) {
        self.worst = f64::INFINITY;
        if self.failures.len() < 5 {
            self.failures.push(what);
        }
    }

    fn passed(&self) -> bool {
        self.failures.is_empty()
            && self.worst <= self.tol
            && self.budget.is_none_or(|b| self.elapsed < b)
    }
}

fn run(
    number: usize,
    name: &str,
    budget: Option<Duration>,
    body: impl FnOnce(&mut Outcome),
    tol: f64,
) -> bool {
    let mut outcome = Outcome::new(tol);
    outcome.budget = budget;
    let start = Instant::now();
    body(&mut outcome);
    outcome.elapsed = start.elapsed();
    let status = if outcome.passed() { "PASS" } else { "FAIL" };
    let budget_text = budget
        .map(|b| format!(" budget={}s", b.as_secs()))
        .unwrap_or_default();
    println!(
        "{status} criterion {number}: {name} worst={:.3e} tol={:.0e} time={:.2}s{budget_text}",
        outcome.worst,
        outcome.tol,
        outcome.elapsed.as_secs_f64()
    );
    for f in &outcome.failures {
        println!("    {f}");
    }
    outcome.passed()
}

/// Coupling with `g⁻¹` moved by ½ when it lies within 0.1 of an integer in `[−N, top(N)]` for some `N`.
fn shifted_coupling(g: f64, l: usize, top: impl Fn(i64) -> i64) -> f64 {
    let near =
        |g_inv: f64| (0..=l as i64).any(|n| (-n..=top(n)).any(|p| (g_inv - p as f64).abs() < 0.1));
    let g_inv = 1.0 / g;
    if near(g_inv) {
        let shifted = g_inv + 0.5;
        assert!(!near(shifted));
        1.0 / shifted
    } else {
        g
    }
}

/// Keeps `g⁻¹` away from `[−N, L−2N−1]`, where rapidities collapse or dual rapidities diverge.
fn hyperbolic_coupling(g: f64, l: usize) -> f64 {
    shifted_coupling(g, l, |n| l as i64 - 2 * n - 1)
}

/// Also keeps `g⁻¹` away from `[L−2N, L−N]`, where dual rapidities collapse onto zero.
fn dual_safe_coupling(g: f64, l: usize) -> f64 {
    shifted_coupling(g, l, |n| l as i64 - n)
}

/// Fixture models: `L ∈ {2, 4, 6}`, three couplings, levels in `[0, L]` (rational) or
/// `[0.5, 2.5]` (hyperbolic) with separation at least 0.05.
fn fixture_models(kind: ModelKind, rng: &mut ChaCha8Rng) -> Vec<ModelParams> {
    let mut out = Vec::new();
    for l in SIZES {
        for g in COUPLINGS {
            let (eps, g) = match kind {
                ModelKind::Rational => (separated_levels(rng, l, 0.0, l as f64, 0.05), g),
                ModelKind::Hyperbolic => (
                    separated_levels(rng, l, 0.5, 2.5, 0.05),
                    hyperbolic_coupling(g, l),
                ),
            };
            out.push(model(kind, g, &eps));
        }
    }
    out
}

fn label(m: &ModelParams, r: &EigenstateRecord) -> String {
    format!(
        "{:?} L={} g={:.4} N={} seed={}",
        m.kind,
        m.len(),
        m.g,
        r.n,
        r.seed_occupation.to_bitstring(m.len())
    )
}

fn random_ket(rng: &mut ChaCha8Rng, m: &ModelParams, n: usize) -> SpectralSet {
    let (lo, hi) = (m.epsilons[0] - 0.5, m.epsilons[m.len() - 1] + 0.5);
    SpectralSet::off_shell(
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(lo..hi), rng.gen_range(-0.5..0.5)))
            .collect(),
    )
}

fn cross_formula(kind: ModelKind, out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + kind as u64);
    for m in fixture_models(kind, &mut rng) {
        for n in 0..=m.len() / 2 {
            for bra in solved(&m, n) {
                let bra_norm = oracle_norm(&m, bra.rapidities().unwrap()).unwrap();
                for _ in 0..KETS_PER_STATE {
                    let w = random_ket(&mut rng, &m, n);
                    let values: Result<Vec<Complex64>, _> = Method::ALL
                        .iter()
                        .map(|&method| {
                            overlap(&OverlapRequest {
                                model: &m,
                                bra: &bra,
                                ket: Ket::Rapidities(w.clone()),
                                method,
                            })
                        })
                        .map(|r| r.map(|x| x.value))
                        .collect();
                    match values {
                        Ok(values) => {
                            let scale =
                                overlap_scale(values[3], bra_norm, oracle_norm(&m, &w).unwrap());
                            out.record(max_pairwise_deviation(&values, scale), || {
                                format!("{} ket {:?}", label(&m, &bra), w.values)
                            });
                        }
                        Err(e) => out.error(format!("{}: {e}", label(&m, &bra))),
                    }
                }
            }
        }
    }
}

fn criterion_3(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let opts = SolveOptions::default();
    for kind in [ModelKind::Rational, ModelKind::Hyperbolic] {
        for l in 1..=8 {
            for g in COUPLINGS {
                let (eps, g) = match kind {
                    ModelKind::Rational => (separated_levels(&mut rng, l, 0.0, l as f64, 0.05), g),
                    ModelKind::Hyperbolic => (
                        separated_levels(&mut rng, l, 0.5, 2.5, 0.05),
                        hyperbolic_coupling(g, l),
                    ),
                };
                let m = model(kind, g, &eps);
                let mut total = 0usize;
                for n in 0..=l {
                    match solve_evb_all(&m, n, &opts) {
                        Ok(records) => {
                            let expected = OccupationState::all(l, n).len();
                            let bad =
                                records.len() != expected || records.iter().any(|r| !r.converged);
                            out.record(if bad { f64::INFINITY } else { 0.0 }, || {
                                format!("{kind:?} L={l} g={g} N={n}: {} records", records.len())
                            });
                            total += records.len();
                        }
                        Err(e) => out.error(format!("{kind:?} L={l} g={g} N={n}: {e}")),
                    }
                }
                out.record(if total == 1 << l { 0.0 } else { f64::INFINITY }, || {
                    format!("{kind:?} L={l} g={g}: {total} states")
                });
            }
        }
    }
}

fn criterion_4(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    for kind in [ModelKind::Rational, ModelKind::Hyperbolic] {
        for l in 1..=6 {
            for g in COUPLINGS {
                let (eps, g) = match kind {
                    ModelKind::Rational => (separated_levels(&mut rng, l, 0.0, l as f64, 0.05), g),
                    ModelKind::Hyperbolic => (
                        separated_levels(&mut rng, l, 0.5, 2.5, 0.05),
                        dual_safe_coupling(g, l),
                    ),
                };
                let m = model(kind, g, &eps);
                for n in 0..=l {
                    if kind == ModelKind::Hyperbolic && 2 * n >= l {
                        continue;
                    }
                    for r in solved(&m, n) {
                        let orig = build_bethe_state(&m, r.rapidities().unwrap(), false).unwrap();
                        let dual_set = match dual_rapidities(&m, &r) {
                            Ok(d) => d.with_role(SpectralRole::Dual),
                            Err(e) => {
                                out.error(format!("{}: {e}", label(&m, &r)));
                                continue;
                            }
                        };
                        let dual = build_bethe_state(&m, &dual_set, true).unwrap();
                        let componentwise = |lhs: &[Complex64], rhs: &[Complex64], c: Complex64| {
                            let scale = rhs.iter().fold(0.0_f64, |a, z| a.max((c * z).norm()));
                            lhs.iter()
                                .zip(rhs)
                                .fold(0.0_f64, |a, (x, y)| a.max((x - c * y).norm()))
                                / scale
                        };
                        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                        let p = l as i32 - 2 * n as i32;
                        let deviation = match kind {
                            // |v⟩ = (−1)^N (g/2)^{L−2N} |v'⟩, and the implemented ratio for |v'⟩ in terms of |v⟩.
                            ModelKind::Rational => {
                                let stated = Complex64::new(sign * (g / 2.0).powi(p), 0.0);
                                let a = componentwise(&orig.amplitudes, &dual.amplitudes, stated);
                                let b = componentwise(
                                    &dual.amplitudes,
                                    &orig.amplitudes,
                                    dual_ratio(&m, &r).unwrap(),
                                );
                                a.max(b)
                            }
                            ModelKind::Hyperbolic => componentwise(
                                &dual.amplitudes,
                                &orig.amplitudes,
                                dual_ratio(&m, &r).unwrap(),
                            ),
                        };
                        out.record(deviation, || label(&m, &r));
                    }
                }
            }
        }
    }
}

fn criterion_5(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    for kind in [ModelKind::Rational, ModelKind::Hyperbolic] {
        for m in fixture_models(kind, &mut rng) {
            for n in 0..=m.len() {
                let records = solved(&m, n);
                let mut norms = Vec::with_capacity(records.len());
                for r in &records {
                    let o = oracle_norm(&m, r.rapidities().unwrap()).unwrap();
                    let a = gaudin_norm(&m, r).unwrap();
                    let b = gaudin_norm_evb(&m, r).unwrap();
                    out.record((a - o).abs().max((b - o).abs()) / o.abs(), || {
                        format!("norms {}: {a} {b} {o}", label(&m, r))
                    });
                    norms.push(o);
                }
                for (i, bra) in records.iter().enumerate() {
                    for (j, ket) in records.iter().enumerate().filter(|&(j, _)| j != i) {
                        let w = ket.rapidities().unwrap().clone();
                        for method in [Method::Slavnov, Method::DetJ, Method::DetK] {
                            match overlap(&OverlapRequest {
                                model: &m,
                                bra,
                                ket: Ket::Rapidities(w.clone()),
                                method,
                            }) {
                                Ok(r) => out.record(
                                    r.value.norm() / (norms[i] * norms[j]).abs().sqrt(),
                                    || {
                                        format!(
                                            "{method:?} {} vs {}",
                                            label(&m, bra),
                                            ket.seed_occupation.to_bitstring(m.len())
                                        )
                                    },
                                ),
                                Err(e) => out.error(format!("{method:?} {}: {e}", label(&m, bra))),
                            }
                        }
                    }
                }
            }
        }
    }
}

fn criterion_6(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let h = 1e-6;
    for kind in [ModelKind::Rational, ModelKind::Hyperbolic] {
        for m in fixture_models(kind, &mut rng) {
            let l = m.len();
            for n in 1..=l {
                for r in solved(&m, n) {
                    let v = r.rapidities().unwrap();
                    let weight = if kind == ModelKind::Rational {
                        2.0
                    } else {
                        1.0
                    };
                    let g = gaudin_matrix(&m, v).unwrap();
                    for b in 0..n {
                        let (mut plus, mut minus) = (v.clone(), v.clone());
                        plus.values[b] += h;
                        minus.values[b] -= h;
                        let (rp, rm) = (
                            residual_bethe(&m, &plus).unwrap(),
                            residual_bethe(&m, &minus).unwrap(),
                        );
                        for a in 0..n {
                            let fd = (rp[a] - rm[a]) / (2.0 * h) * weight;
                            out.record((fd - g[(a, b)]).norm() / g[(a, b)].norm(), || {
                                format!("Gaudin ({a},{b}) {}", label(&m, &r))
                            });
                        }
                    }
                    let lam = r.lambdas.to_complex();
                    let j = j_l_matrix(&m, &lam, &lam).unwrap();
                    for k in 0..l {
                        let step = if kind == ModelKind::Rational {
                            h
                        } else {
                            h / m.epsilons[k]
                        };
                        let (mut plus, mut minus) = (r.lambdas.clone(), r.lambdas.clone());
                        plus.lambdas[k] += step;
                        minus.lambdas[k] -= step;
                        let (rp, rm) = (residual_evb(&m, &plus), residual_evb(&m, &minus));
                        for i in 0..l {
                            let fd = (rp[i] - rm[i]) / (2.0 * h);
                            let entry = j[(k, i)].re;
                            out.record((fd - entry).abs() / entry.abs(), || {
                                format!("J_L ({k},{i}) {}", label(&m, &r))
                            });
                        }
                    }
                }
            }
        }
    }
}

fn criterion_7(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let gen = |rng: &mut ChaCha8Rng, m: usize, n: usize| {
        let gaps: Vec<f64> = (0..m + n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let offsets: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        interlaced_pair(rng.gen_range(-3.0..0.0), &gaps, m, n, &offsets)
    };
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let p = gen(&mut rng, n, n);
        let prod = cauchy_matrix(&p).unwrap() * cauchy_inverse(&p).unwrap();
        let inv_dev = (prod - CMatrix::identity(n, n))
            .iter()
            .fold(0.0_f64, |a, z| a.max(z.norm()));
        out.record(inv_dev, || format!("inverse n={n}"));
    }
    for _ in 0..1000 {
        let n = rng.gen_range(1..=7);
        let p = gen(&mut rng, n, n);
        let naive = permanent_ryser(&cauchy_matrix(&p).unwrap());
        out.record(common::rel(borchardt_permanent(&p).unwrap(), naive), || {
            format!("permanent n={n}")
        });
    }
    for _ in 0..1000 {
        let (m, n) = (rng.gen_range(0..=8), rng.gen_range(0..=8));
        let c = check_sylvester_mixed(&gen(&mut rng, m, n)).unwrap();
        out.record(c.rel_diff(), || format!("sylvester m={m} n={n}"));
    }
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let c = check_hadamard3(&gen(&mut rng, n, n)).unwrap();
        out.record(c.rel_diff(), || format!("hadamard n={n}"));
    }
    for _ in 0..1000 {
        let n = rng.gen_range(0..=6);
        let m = n + rng.gen_range(0..=3);
        let big_g = Complex64::new(rng.gen_range(-3.0..3.0), 0.0);
        // Shift the window to positive nodes so no node is zero.
        let mut p = gen(&mut rng, m, n);
        for z in p.eps.iter_mut().chain(p.xs.iter_mut()) {
            *z += 4.0;
        }
        let c = check_matrix_det_lemma(&p, big_g).unwrap();
        out.record(c.rel_diff(), || format!("det lemma m={m} n={n} G={big_g}"));
    }
}

fn criterion_8(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    for kind in [ModelKind::Rational, ModelKind::Hyperbolic] {
        for m in fixture_models(kind, &mut rng) {
            for n in 0..=m.len() {
                for r in solve_evb_all(&m, n, &SolveOptions::default()).unwrap() {
                    let v = match rapidities_from_lambdas(&m, &r.lambdas, n) {
                        Ok(p) => p.roots,
                        Err(e) => {
                            out.error(format!("{}: {e}", label(&m, &r)));
                            continue;
                        }
                    };
                    out.record(max_norm_c(&residual_bethe(&m, &v).unwrap()), || {
                        format!("Bethe residual {}", label(&m, &r))
                    });
                    let back = lambdas_from_rapidities(&m, &v).unwrap();
                    let scale = r
                        .lambdas
                        .lambdas
                        .iter()
                        .fold(1.0_f64, |a, x| a.max(x.abs()));
                    let dev = back
                        .lambdas
                        .iter()
                        .zip(&r.lambdas.lambdas)
                        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
                    out.record(dev / scale, || format!("round trip {}", label(&m, &r)));
                }
            }
        }
    }
}

fn criterion_9(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    for kind in [ModelKind::Rational, ModelKind::Hyperbolic] {
        for l in 1..=4 {
            for g in COUPLINGS {
                let eps = match kind {
                    ModelKind::Rational => separated_levels(&mut rng, l, 0.0, l as f64, 0.05),
                    ModelKind::Hyperbolic => separated_levels(&mut rng, l, 0.5, 2.5, 0.05),
                };
                let m = model(kind, g, &eps);
                for n in 0..=l {
                    let what = || format!("{kind:?} L={l} g={g} N={n}");
                    out.record(max_commutator(&m, n).unwrap(), what);
                    out.record(verify_quadratic_identity(&m, n).unwrap().worst(), what);
                }
            }
        }
    }
}

fn main() {
    let results = [
        run(
            1,
            "cross-formula equivalence (rational)",
            Some(Duration::from_secs(60)),
            |o| cross_formula(ModelKind::Rational, o),
            1e-9,
        ),
        run(
            2,
            "cross-formula equivalence (hyperbolic)",
            None,
            |o| cross_formula(ModelKind::Hyperbolic, o),
            1e-9,
        ),
        run(3, "completeness", None, criterion_3, 0.0),
        run(4, "duality ratio", None, criterion_4, 1e-9),
        run(5, "orthogonality and norms", None, criterion_5, 1e-9),
        run(6, "Jacobian identities", None, criterion_6, 1e-5),
        run(
            7,
            "Cauchy identity suite",
            Some(Duration::from_secs(30)),
            criterion_7,
            1e-8,
        ),
        run(8, "framework round trip", None, criterion_8, 1e-8),
        run(9, "operator-level checks", None, criterion_9, 1e-10),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
