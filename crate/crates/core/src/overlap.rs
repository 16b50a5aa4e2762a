//! Determinant formulas for inner products between an on-shell bra and an
//! arbitrary ket, normalizations, product-state overlaps and dual-state ratios.
//!
//! All values are bilinear in the two rapidity sets: `⟨v|` is
//! `⟨↓…↓| Π_a S⁻(v_a)` with the same coefficients as the ket, which coincides
//! with the Hermitian conjugate for conjugation-closed on-shell sets.

use num_complex::Complex64;

use crate::cauchy::{borchardt_permanent, j_eps_matrix, j_x_matrix, CauchyPair};
use crate::dd::{det_cdd, log_det_cdd, Cdd, Dd};
use crate::error::{Error, Result};
use crate::linalg::{c, det_lu, rcond, CMatrix, LogDet, Lu, ONE, ZERO};
use crate::model::{
    EigenstateRecord, ModelKind, ModelParams, OccupationState, SpectralRole, SpectralSet,
};
use crate::oracle::{build_bethe_state, exact_inner_product};
use crate::solvers::{
    bethe_jacobian, evb_jacobian, hyperbolic_singular_point, lambdas_complex, max_norm_c,
    residual_bethe, residual_evb_dd,
};

/// Largest Bethe residual accepted for an on-shell bra, relative to `max(1, 1/|g|)`.
pub const ON_SHELL_TOL: f64 = 1e-9;

/// Tolerance for `g⁻¹ + 1 − k` counted as zero.
const POCHHAMMER_TOL: f64 = 1e-10;

/// Newton steps used to refine rapidities before the double-double Gaudin determinant.
const REFINE_STEPS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Slavnov,
    DetJ,
    DetK,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Slavnov, Method::DetJ, Method::DetK, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Slavnov => "slavnov",
            Method::DetJ => "detj",
            Method::DetK => "detk",
            Method::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown method {s:?}")))
    }
}

/// Scalar prefactor of a determinant formula, kept as phase and log-magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prefactor {
    pub phase: Complex64,
    pub log_abs: f64,
    pub kind: PrefactorKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrefactorKind {
    /// `(−1)^N (g/2)^power`.
    GHalfPower(i64),
    /// `(−1)^N (Π ε / Π v) / Π_{k=1}^{L−2N}(g⁻¹ + 1 − k)` with the product reported.
    Hyperbolic {
        pochhammer: f64,
    },
    /// Vandermonde-type or product prefactor of the rapidity formulas.
    Rapidity,
    None,
}

impl Prefactor {
    fn one() -> Self {
        Prefactor {
            phase: ONE,
            log_abs: 0.0,
            kind: PrefactorKind::None,
        }
    }

    fn from_value(z: Complex64, kind: PrefactorKind) -> Self {
        if z == ZERO {
            Prefactor {
                phase: ZERO,
                log_abs: f64::NEG_INFINITY,
                kind,
            }
        } else {
            Prefactor {
                phase: z / z.norm(),
                log_abs: z.norm().ln(),
                kind,
            }
        }
    }

    pub fn value(&self) -> Complex64 {
        LogDet {
            phase: self.phase,
            log_abs: self.log_abs,
        }
        .value()
    }

    fn times(&self, det: LogDet) -> Complex64 {
        LogDet {
            phase: self.phase * det.phase,
            log_abs: self.log_abs + det.log_abs,
        }
        .value()
    }
}

/// The ket side of an overlap request.
#[derive(Clone, Debug, PartialEq)]
pub enum Ket {
    Rapidities(SpectralSet),
    /// Eigenvalue-based variables `Λ_i(w)`, possibly complex for off-shell sets.
    Lambdas(Vec<Complex64>),
    Occupation(OccupationState),
}

#[derive(Clone, Debug)]
pub struct OverlapRequest<'a> {
    pub model: &'a ModelParams,
    pub bra: &'a EigenstateRecord,
    pub ket: Ket,
    pub method: Method,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapResult {
    pub value: Complex64,
    pub method: Method,
    /// Reciprocal 1-norm condition number of the matrix whose determinant was taken.
    pub condition_estimate: f64,
    pub prefactor: Prefactor,
}

fn sign_n(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_lengths(on_shell: &SpectralSet, off_shell: &SpectralSet) -> Result<()> {
    if on_shell.len() != off_shell.len() {
        return Err(Error::Precondition(format!(
            "rapidity sets differ in size: {} vs {}",
            on_shell.len(),
            off_shell.len()
        )));
    }
    Ok(())
}

fn check_on_shell(model: &ModelParams, v: &SpectralSet) -> Result<()> {
    let res = max_norm_c(&residual_bethe(
        model,
        &v.clone().with_role(SpectralRole::OnShell),
    )?);
    let tol = ON_SHELL_TOL * (1.0 / model.g.abs()).max(1.0);
    if res > tol {
        return Err(Error::Precondition(format!(
            "bra is off shell: Bethe residual {res:.3e}"
        )));
    }
    Ok(())
}

/// Rejects `v_a ≈ w_b` and repeated entries in the combined set.
fn check_combined(model: &ModelParams, xs: &[Complex64]) -> Result<()> {
    let tol = model.collision_threshold();
    for a in 0..xs.len() {
        for b in (a + 1)..xs.len() {
            if (xs[a] - xs[b]).norm() <= tol {
                return Err(Error::Collision(format!(
                    "parameters {a} and {b} coincide at {}",
                    xs[a]
                )));
            }
        }
    }
    Ok(())
}

fn bra_rapidities(record: &EigenstateRecord) -> Result<&SpectralSet> {
    if !record.converged {
        return Err(Error::Precondition("bra record is not converged".into()));
    }
    record.rapidities()
}

/// `[Π_{k=1}^{m}(g⁻¹ + 1 − k)]⁻¹`, continued to `m < 0` as `Π_{k=1}^{|m|}(g⁻¹ + k)`.
fn inverse_pochhammer(g_inv: f64, m: i64) -> Result<f64> {
    if m >= 0 {
        let mut p = 1.0;
        for k in 1..=m {
            let f = g_inv + 1.0 - k as f64;
            if f.abs() <= POCHHAMMER_TOL * g_inv.abs().max(1.0) {
                return Err(Error::SingularPoint {
                    point: k - 1,
                    context: format!("factor k = {k} of the prefactor vanishes"),
                });
            }
            p *= f;
        }
        Ok(1.0 / p)
    } else {
        Ok((1..=-m).map(|k| g_inv + k as f64).product())
    }
}

/// `Π_{k=1}^{L−2N}(g⁻¹ + 1 − k)`.
pub fn hyperbolic_pochhammer(model: &ModelParams, n: usize) -> f64 {
    let m = model.len() as i64 - 2 * n as i64;
    (1..=m.max(0))
        .map(|k| model.g_inv() + 1.0 - k as f64)
        .product()
}

/// Slavnov determinant `⟨v|w⟩` for on-shell `v` and arbitrary `w`.
pub fn slavnov(
    model: &ModelParams,
    on_shell: &SpectralSet,
    off_shell: &SpectralSet,
) -> Result<Complex64> {
    slavnov_parts(model, on_shell, off_shell).map(|(value, _, _)| value)
}

fn slavnov_parts(
    model: &ModelParams,
    on_shell: &SpectralSet,
    off_shell: &SpectralSet,
) -> Result<(Complex64, f64, Prefactor)> {
    check_lengths(on_shell, off_shell)?;
    on_shell.check_regular(model)?;
    off_shell.check_regular(model)?;
    check_on_shell(model, on_shell)?;
    let (v, w) = (&on_shell.values, &off_shell.values);
    let mut combined = v.clone();
    combined.extend_from_slice(w);
    check_combined(model, &combined)?;
    let n = v.len();
    let eps = model.epsilons_complex();

    let mut num = ONE;
    let mut den = ONE;
    for a in 0..n {
        for b in 0..n {
            if a != b || model.kind == ModelKind::Hyperbolic {
                num *= v[a] - w[b];
            }
            if a < b {
                den *= (v[b] - v[a]) * (w[a] - w[b]);
            }
        }
    }
    let prefactor = Prefactor::from_value(num / den, PrefactorKind::Rapidity);

    let s = match model.kind {
        ModelKind::Rational => CMatrix::from_fn(n, n, |a, b| {
            let levels: Complex64 = eps.iter().map(|e| ONE / ((v[a] - e) * (w[b] - e))).sum();
            let others: Complex64 = (0..n)
                .filter(|&c| c != a)
                .map(|c| ONE / ((v[a] - v[c]) * (w[b] - v[c])))
                .sum();
            (v[b] - w[b]) / (v[a] - w[b]) * (levels - others * 2.0)
        }),
        ModelKind::Hyperbolic => {
            let coupling = c(model.g_inv() + 1.0);
            CMatrix::from_fn(n, n, |a, b| {
                let levels: Complex64 = eps.iter().map(|e| ONE / (w[b] - e)).sum();
                let others: Complex64 = (0..n)
                    .filter(|&c| c != a)
                    .map(|c| ONE / (w[b] - v[c]))
                    .sum();
                let d = v[a] - w[b];
                w[b] / (d * d) * (levels - others * 2.0 - coupling / w[b])
            })
        }
    };
    let value = prefactor.times(Lu::new(&s).log_det());
    Ok((value, rcond(&s), prefactor))
}

fn det_j_prefactor(model: &ModelParams, bra: &EigenstateRecord) -> Result<Prefactor> {
    let n = bra.n;
    let l = model.len();
    let m = l as i64 - 2 * n as i64;
    let sign = sign_n(n);
    match model.kind {
        ModelKind::Rational => Ok(Prefactor {
            phase: c(sign
                * if m % 2 != 0 && model.g < 0.0 {
                    -1.0
                } else {
                    1.0
                }),
            log_abs: m as f64 * (model.g.abs() / 2.0).ln(),
            kind: PrefactorKind::GHalfPower(m),
        }),
        ModelKind::Hyperbolic => {
            let v_prod = bra.rapidities()?.product();
            if v_prod == ZERO {
                return Err(Error::Degenerate("a rapidity sits at zero".into()));
            }
            let inv_poch = inverse_pochhammer(model.g_inv(), m)?;
            let eps_prod: f64 = model.epsilons.iter().product();
            let value = c(sign * eps_prod * inv_poch) / v_prod;
            Ok(Prefactor::from_value(
                value,
                PrefactorKind::Hyperbolic {
                    pochhammer: 1.0 / inv_poch,
                },
            ))
        }
    }
}

/// `J_L` with diagonal `c_i + Λ_i(v) + Λ_i(w) − Σ_{k≠i} 1/(ε_i − ε_k)`, where `c_i = 2/g`
/// (rational) or `g⁻¹/ε_i` (hyperbolic).
pub fn j_l_matrix(
    model: &ModelParams,
    bra_lambdas: &[Complex64],
    ket_lambdas: &[Complex64],
) -> Result<CMatrix> {
    let l = model.len();
    if bra_lambdas.len() != l || ket_lambdas.len() != l {
        return Err(Error::Precondition(format!(
            "expected {l} eigenvalue-based variables, got {} and {}",
            bra_lambdas.len(),
            ket_lambdas.len()
        )));
    }
    let eps = &model.epsilons;
    let sums = model.level_sums();
    Ok(CMatrix::from_fn(l, l, |i, j| {
        if i == j {
            let shift = match model.kind {
                ModelKind::Rational => 2.0 / model.g,
                ModelKind::Hyperbolic => model.g_inv() / eps[i],
            };
            bra_lambdas[i] + ket_lambdas[i] + c(shift - sums[i])
        } else {
            c(-1.0 / (eps[i] - eps[j]))
        }
    }))
}

/// Eigenvalue-based determinant `⟨v|w⟩` from the bra record and the ket's `Λ_i(w)`.
pub fn det_j_overlap(
    model: &ModelParams,
    bra: &EigenstateRecord,
    ket_lambdas: &[Complex64],
) -> Result<Complex64> {
    det_j_parts(model, bra, ket_lambdas).map(|(value, _, _)| value)
}

fn det_j_parts(
    model: &ModelParams,
    bra: &EigenstateRecord,
    ket_lambdas: &[Complex64],
) -> Result<(Complex64, f64, Prefactor)> {
    if !bra.converged {
        return Err(Error::Precondition("bra record is not converged".into()));
    }
    let prefactor = det_j_prefactor(model, bra)?;
    let j = j_l_matrix(model, &bra.lambdas.to_complex(), ket_lambdas)?;
    let bra_dd: Vec<Cdd> = refine_lambdas(model, bra)
        .into_iter()
        .map(Cdd::from)
        .collect();
    let ket_dd: Vec<Cdd> = ket_lambdas.iter().map(|&z| Cdd::from(z)).collect();
    Ok((
        prefactor.times(det_j_dd(model, &bra_dd, &ket_dd)),
        rcond(&j),
        prefactor,
    ))
}

/// `K_2N` on the combined set `{x} = {v} ∪ {w}`.
pub fn k_matrix(model: &ModelParams, xs: &[Complex64]) -> CMatrix {
    let eps = model.epsilons_complex();
    let n2 = xs.len();
    CMatrix::from_fn(n2, n2, |a, b| {
        if a == b {
            let levels: Complex64 = eps.iter().map(|e| ONE / (xs[a] - e)).sum();
            let others: Complex64 = (0..n2)
                .filter(|&k| k != a)
                .map(|k| ONE / (xs[a] - xs[k]))
                .sum();
            let shift = match model.kind {
                ModelKind::Rational => c(2.0 / model.g),
                ModelKind::Hyperbolic => c(model.g_inv() + 1.0) / xs[a],
            };
            shift - levels + others
        } else {
            -ONE / (xs[a] - xs[b])
        }
    })
}

/// `(−1)^N det K_2N`, times `Π w_b` in the hyperbolic model.
pub fn det_k_overlap(
    model: &ModelParams,
    on_shell: &SpectralSet,
    off_shell: &SpectralSet,
) -> Result<Complex64> {
    det_k_parts(model, on_shell, off_shell).map(|(value, _, _)| value)
}

fn det_k_parts(
    model: &ModelParams,
    on_shell: &SpectralSet,
    off_shell: &SpectralSet,
) -> Result<(Complex64, f64, Prefactor)> {
    check_lengths(on_shell, off_shell)?;
    on_shell.check_regular(model)?;
    off_shell.check_regular(model)?;
    check_on_shell(model, on_shell)?;
    let mut xs = on_shell.values.clone();
    xs.extend_from_slice(&off_shell.values);
    check_combined(model, &xs)?;
    if model.kind == ModelKind::Hyperbolic
        && xs.iter().any(|x| x.norm() <= model.collision_threshold())
    {
        return Err(Error::pole("parameter at zero", 0.0, 0.0));
    }
    let sign = c(sign_n(on_shell.len()));
    let pre = match model.kind {
        ModelKind::Rational => sign,
        ModelKind::Hyperbolic => sign * off_shell.product(),
    };
    let prefactor = Prefactor::from_value(pre, PrefactorKind::Rapidity);
    let k = k_matrix(model, &xs);
    Ok((prefactor.times(Lu::new(&k).log_det()), rcond(&k), prefactor))
}

/// `N × N` Gaudin matrix: diagonal `Σ_i 1/(ε_i − v_a)² − 2 Σ_{c≠a} 1/(v_c − v_a)² [− (1+g⁻¹)/v_a²]`,
/// off-diagonal `2/(v_a − v_b)²`; the bracketed term is hyperbolic only.
pub fn gaudin_matrix(model: &ModelParams, rapidities: &SpectralSet) -> Result<CMatrix> {
    rapidities.check_regular(model)?;
    let v = &rapidities.values;
    let n = v.len();
    let eps = model.epsilons_complex();
    Ok(CMatrix::from_fn(n, n, |a, b| {
        if a == b {
            let levels: Complex64 = eps.iter().map(|e| ONE / ((e - v[a]) * (e - v[a]))).sum();
            let others: Complex64 = (0..n)
                .filter(|&k| k != a)
                .map(|k| ONE / ((v[k] - v[a]) * (v[k] - v[a])))
                .sum();
            let extra = match model.kind {
                ModelKind::Rational => ZERO,
                ModelKind::Hyperbolic => c(model.g_inv() + 1.0) / (v[a] * v[a]),
            };
            levels - others * 2.0 - extra
        } else {
            let d = v[a] - v[b];
            c(2.0) / (d * d)
        }
    }))
}

/// `⟨v|v⟩` as the Gaudin determinant, times `Π v_a` in the hyperbolic model.
///
/// Near-collisions of a complex pair with a level make this determinant very
/// sensitive to the last bits of the rapidities, so they are refined and the
/// determinant taken in double-double arithmetic.
pub fn gaudin_norm(model: &ModelParams, record: &EigenstateRecord) -> Result<f64> {
    let v = bra_rapidities(record)?;
    v.check_regular(model)?;
    let x = refine_rapidities(model, v)?;
    let det = det_cdd(gaudin_rows_dd(model, &x));
    let value = match model.kind {
        ModelKind::Rational => det,
        ModelKind::Hyperbolic => x.iter().fold(det, |acc, &xa| acc * xa),
    };
    Ok(value.to_c64().re)
}

fn level_coupling_dd(model: &ModelParams) -> Cdd {
    let g_inv = Dd::from(1.0) / Dd::from(model.g);
    match model.kind {
        ModelKind::Rational => Cdd {
            re: g_inv,
            im: Dd::ZERO,
        },
        ModelKind::Hyperbolic => Cdd {
            re: g_inv + Dd::from(1.0),
            im: Dd::ZERO,
        },
    }
}

fn bethe_residual_dd(model: &ModelParams, x: &[Cdd]) -> Vec<Complex64> {
    let coupling = level_coupling_dd(model);
    let one = Cdd::from(1.0);
    (0..x.len())
        .map(|a| {
            let levels = model
                .epsilons
                .iter()
                .fold(Cdd::ZERO, |acc, &e| acc + one / (Cdd::from(e) - x[a]));
            let pairs = (0..x.len())
                .filter(|&b| b != a)
                .fold(Cdd::ZERO, |acc, b| acc + one / (x[b] - x[a]));
            let f = match model.kind {
                ModelKind::Rational => coupling + levels * 0.5 - pairs,
                ModelKind::Hyperbolic => coupling / x[a] + levels - pairs * 2.0,
            };
            f.to_c64()
        })
        .collect()
}

/// Newton refinement with the double-precision Jacobian and a double-double residual.
fn refine_rapidities(model: &ModelParams, v: &SpectralSet) -> Result<Vec<Cdd>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    let on_shell = v.clone().with_role(SpectralRole::OnShell);
    let lu = Lu::new(&bethe_jacobian(model, &on_shell)?);
    let mut x: Vec<Cdd> = v.values.iter().map(|&z| Cdd::from(z)).collect();
    let scale = v.values.iter().fold(model.scale(), |m, z| m.max(z.norm()));
    for _ in 0..REFINE_STEPS {
        let f = bethe_residual_dd(model, &x);
        let Some(dx) = lu.solve(&CMatrix::from_column_slice(f.len(), 1, &f)) else {
            break;
        };
        for (xa, d) in x.iter_mut().zip(dx.iter()) {
            *xa = *xa - Cdd::from(*d);
        }
        if dx.iter().all(|d| d.norm() <= 1e-30 * scale) {
            break;
        }
    }
    Ok(x)
}

/// The Gaudin matrix in double-double, with the same entries as [`gaudin_matrix`].
fn gaudin_rows_dd(model: &ModelParams, x: &[Cdd]) -> Vec<Vec<Cdd>> {
    let n = x.len();
    let one = Cdd::from(1.0);
    let sq = |z: Cdd| one / (z * z);
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    if a == b {
                        let levels = model
                            .epsilons
                            .iter()
                            .fold(Cdd::ZERO, |acc, &e| acc + sq(Cdd::from(e) - x[a]));
                        let others = (0..n)
                            .filter(|&k| k != a)
                            .fold(Cdd::ZERO, |acc, k| acc + sq(x[k] - x[a]));
                        let extra = match model.kind {
                            ModelKind::Rational => Cdd::ZERO,
                            ModelKind::Hyperbolic => level_coupling_dd(model) / (x[a] * x[a]),
                        };
                        levels - others * 2.0 - extra
                    } else {
                        sq(x[a] - x[b]) * 2.0
                    }
                })
                .collect()
        })
        .collect()
}

/// `J_L` of the normalization: diagonal `c_i + 2Λ_i − Σ_{k≠i} 1/(ε_i − ε_k)`.
pub fn gaudin_matrix_evb(model: &ModelParams, lambdas: &[f64]) -> Result<CMatrix> {
    let lam: Vec<Complex64> = lambdas.iter().map(|&x| c(x)).collect();
    j_l_matrix(model, &lam, &lam)
}

/// `⟨v|v⟩` through the eigenvalue-based `L × L` determinant.
///
/// `Λ` is refined and the determinant taken in double-double: close levels make the
/// entries large against the determinant.
pub fn gaudin_norm_evb(model: &ModelParams, record: &EigenstateRecord) -> Result<f64> {
    if !record.converged {
        return Err(Error::Precondition("bra record is not converged".into()));
    }
    let prefactor = det_j_prefactor(model, record)?;
    let lam: Vec<Cdd> = refine_lambdas(model, record)
        .into_iter()
        .map(Cdd::from)
        .collect();
    Ok(prefactor.times(det_j_dd(model, &lam, &lam)).re)
}

/// `det J_L` with entries and elimination in double-double.
fn det_j_dd(model: &ModelParams, bra: &[Cdd], ket: &[Cdd]) -> LogDet {
    let eps = &model.epsilons;
    let one = Dd::from(1.0);
    let g_inv = one / Dd::from(model.g);
    let inv_gap = |i: usize, j: usize| one / (Dd::from(eps[i]) - Dd::from(eps[j]));
    let rows = (0..eps.len())
        .map(|i| {
            (0..eps.len())
                .map(|j| {
                    if i == j {
                        let sums = (0..eps.len())
                            .filter(|&k| k != i)
                            .fold(Dd::ZERO, |acc, k| acc + inv_gap(i, k));
                        let shift = match model.kind {
                            ModelKind::Rational => g_inv * 2.0,
                            ModelKind::Hyperbolic => g_inv / Dd::from(eps[i]),
                        };
                        bra[i] + ket[i] + Cdd::from(shift - sums)
                    } else {
                        Cdd::from(-inv_gap(i, j))
                    }
                })
                .collect()
        })
        .collect();
    log_det_cdd(rows)
}

/// Newton refinement of `Λ` with the double-precision Jacobian and a double-double residual.
fn refine_lambdas(model: &ModelParams, record: &EigenstateRecord) -> Vec<Dd> {
    let mut lam: Vec<Dd> = record
        .lambdas
        .lambdas
        .iter()
        .map(|&x| Dd::from(x))
        .collect();
    let lu = Lu::new(&evb_jacobian(model, &record.lambdas).map(c));
    let scale = record
        .lambdas
        .lambdas
        .iter()
        .fold(model.scale(), |m, x| m.max(x.abs()));
    for _ in 0..REFINE_STEPS {
        let f: Vec<Complex64> = residual_evb_dd(model, &lam)
            .into_iter()
            .map(|r| c(r.to_f64()))
            .collect();
        let Some(dx) = lu.solve(&CMatrix::from_column_slice(f.len(), 1, &f)) else {
            break;
        };
        for (x, d) in lam.iter_mut().zip(dx.iter()) {
            *x = *x - Dd::from(d.re);
        }
        if dx.iter().all(|d| d.norm() <= 1e-30 * scale) {
            break;
        }
    }
    lam
}

/// The three evaluations of a product-state overlap `⟨i_1 … i_N | v⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductOverlap {
    /// Izergin-Borchardt determinant.
    pub value: Complex64,
    /// `det J_N`; only for on-shell rapidities.
    pub det_j: Option<Complex64>,
    /// `det K_N`; only for on-shell rapidities.
    pub det_k: Option<Complex64>,
}

impl ProductOverlap {
    /// Largest relative deviation between the available routes.
    pub fn max_deviation(&self) -> f64 {
        let scale = self.value.norm().max(f64::MIN_POSITIVE);
        [self.det_j, self.det_k]
            .iter()
            .flatten()
            .map(|z| (z - self.value).norm() / scale)
            .fold(0.0, f64::max)
    }
}

/// `⟨i_1 … i_N | v_1 … v_N⟩`.
pub fn izergin_borchardt(
    model: &ModelParams,
    occ: &OccupationState,
    rapidities: &SpectralSet,
) -> Result<ProductOverlap> {
    let n = occ.len();
    if rapidities.len() != n {
        return Err(Error::Precondition(format!(
            "{} occupied levels but {} rapidities",
            n,
            rapidities.len()
        )));
    }
    if occ.indices().iter().any(|&i| i >= model.len()) {
        return Err(Error::Precondition(format!(
            "occupation {:?} exceeds L = {}",
            occ.indices(),
            model.len()
        )));
    }
    rapidities.check_regular(model)?;
    let levels: Vec<Complex64> = occ
        .indices()
        .iter()
        .map(|&i| c(model.epsilons[i]))
        .collect();
    let v = &rapidities.values;

    let mut num = ONE;
    let mut den = ONE;
    for b in 0..n {
        for va in v {
            num *= levels[b] - va;
        }
        for cc in (b + 1)..n {
            den *= levels[b] - levels[cc];
        }
    }
    for a in 0..n {
        for cc in 0..a {
            den *= v[a] - v[cc];
        }
    }
    let sq = CMatrix::from_fn(n, n, |b, a| {
        let d = levels[b] - v[a];
        ONE / (d * d)
    });
    let weight = match model.kind {
        ModelKind::Rational => ONE,
        ModelKind::Hyperbolic => c(occ
            .indices()
            .iter()
            .map(|&i| model.epsilons[i].sqrt())
            .product()),
    };
    let value = weight * num / den * det_lu(&sq);

    let (det_j, det_k) = if rapidities.role == SpectralRole::OnShell {
        let pair = CauchyPair::new(levels, v.clone());
        (
            Some(weight * det_lu(&j_eps_matrix(&pair)?)),
            Some(weight * det_lu(&j_x_matrix(&pair)?)),
        )
    } else {
        (None, None)
    };
    Ok(ProductOverlap {
        value,
        det_j,
        det_k,
    })
}

/// Product-state overlap through Borchardt's permanent, valid for any rapidities.
pub fn product_overlap_permanent(
    model: &ModelParams,
    occ: &OccupationState,
    rapidities: &SpectralSet,
) -> Result<Complex64> {
    let levels: Vec<Complex64> = occ
        .indices()
        .iter()
        .map(|&i| c(model.epsilons[i]))
        .collect();
    let weight = match model.kind {
        ModelKind::Rational => 1.0,
        ModelKind::Hyperbolic => occ
            .indices()
            .iter()
            .map(|&i| model.epsilons[i].sqrt())
            .product(),
    };
    Ok(c(weight) * borchardt_permanent(&CauchyPair::new(levels, rapidities.values.clone()))?)
}

/// The scalar `c` with `|v'⟩ = c |v⟩` for the dual representation of the record's state.
///
/// Rational: `(−1)^N (2/g)^{L−2N}`. Hyperbolic: `(−1)^N (Π v / Π √ε) Π_{k=1}^{L−2N}(g⁻¹ + 1 − k)`,
/// only for `L − 2N > 0`.
pub fn dual_ratio(model: &ModelParams, record: &EigenstateRecord) -> Result<Complex64> {
    if !record.converged {
        return Err(Error::Precondition("record is not converged".into()));
    }
    let n = record.n;
    let m = model.len() as i64 - 2 * n as i64;
    let sign = sign_n(n);
    match model.kind {
        ModelKind::Rational => Ok(c(sign * (2.0 / model.g).powi(m as i32))),
        ModelKind::Hyperbolic => {
            if m <= 0 {
                return Err(Error::OutOfValidity(format!(
                    "hyperbolic dual ratio needs L − 2N > 0, got {m}"
                )));
            }
            if let Some(point) = hyperbolic_singular_point(model, n) {
                return Err(Error::SingularPoint {
                    point,
                    context: "dual ratio".into(),
                });
            }
            let v = record.rapidities()?;
            let root_eps: f64 = model.epsilons.iter().map(|e| e.sqrt()).product();
            Ok(c(sign * hyperbolic_pochhammer(model, n) / root_eps) * v.product())
        }
    }
}

fn ket_rapidities(ket: &Ket) -> Result<&SpectralSet> {
    match ket {
        Ket::Rapidities(w) => Ok(w),
        _ => Err(Error::MissingRapidities(
            "ket given without rapidities".into(),
        )),
    }
}

fn oracle_overlap(model: &ModelParams, bra: &EigenstateRecord, ket: &Ket) -> Result<Complex64> {
    let bra_state = build_bethe_state(model, bra_rapidities(bra)?, false)?;
    match ket {
        Ket::Rapidities(w) => exact_inner_product(&bra_state, &build_bethe_state(model, w, false)?),
        Ket::Occupation(occ) => {
            if occ.len() != bra.n {
                return Err(Error::BasisMismatch(
                    model.len(),
                    bra.n,
                    model.len(),
                    occ.len(),
                ));
            }
            Ok(bra_state.amplitude(occ).map(|z| z.conj()).unwrap_or(ZERO))
        }
        Ket::Lambdas(_) => Err(Error::MissingRapidities(
            "oracle needs ket rapidities".into(),
        )),
    }
}

/// Whether `w` is a reordering of `v` up to the collision threshold.
fn same_set(model: &ModelParams, v: &SpectralSet, w: &SpectralSet) -> bool {
    if v.len() != w.len() {
        return false;
    }
    let tol = model.collision_threshold();
    let mut used = vec![false; w.len()];
    v.values.iter().all(|a| {
        match (0..w.len()).find(|&k| !used[k] && (w.values[k] - a).norm() <= tol) {
            Some(k) => {
                used[k] = true;
                true
            }
            None => false,
        }
    })
}

/// Evaluates `⟨bra|ket⟩` by the requested method.
///
/// A ket equal to the bra is a norm: Slavnov and DetK then give the Gaudin
/// determinant, their common coinciding limit.
///
/// For an occupation ket the methods map to the product-state routes: Slavnov to the
/// Izergin-Borchardt determinant, DetJ to `J_N`, DetK to `K_N`.
pub fn overlap(request: &OverlapRequest) -> Result<OverlapResult> {
    let OverlapRequest {
        model,
        bra,
        ket,
        method,
    } = request;
    if !bra.converged {
        return Err(Error::Precondition("bra record is not converged".into()));
    }
    if bra.n
        != match ket {
            Ket::Rapidities(w) => w.len(),
            Ket::Occupation(occ) => occ.len(),
            Ket::Lambdas(_) => bra.n,
        }
    {
        return Err(Error::Precondition(
            "bra and ket belong to different sectors".into(),
        ));
    }
    let (value, condition_estimate, prefactor) = match (method, ket) {
        (Method::Oracle, _) => (oracle_overlap(model, bra, ket)?, 1.0, Prefactor::one()),
        (_, Ket::Occupation(occ)) => {
            let v = bra_rapidities(bra)?
                .clone()
                .with_role(SpectralRole::OnShell);
            let routes = izergin_borchardt(model, occ, &v)?;
            let value = match method {
                Method::DetJ => routes.det_j.unwrap_or(routes.value),
                Method::DetK => routes.det_k.unwrap_or(routes.value),
                _ => routes.value,
            };
            (value.conj(), f64::NAN, Prefactor::one())
        }
        (Method::Slavnov | Method::DetK, Ket::Rapidities(w))
            if same_set(model, bra_rapidities(bra)?, w) =>
        {
            let v = bra_rapidities(bra)?;
            (
                c(gaudin_norm(model, bra)?),
                rcond(&gaudin_matrix(model, v)?),
                Prefactor::one(),
            )
        }
        (Method::Slavnov, _) => slavnov_parts(model, bra_rapidities(bra)?, ket_rapidities(ket)?)?,
        (Method::DetK, _) => det_k_parts(model, bra_rapidities(bra)?, ket_rapidities(ket)?)?,
        (Method::DetJ, Ket::Lambdas(lam)) => det_j_parts(model, bra, lam)?,
        (Method::DetJ, Ket::Rapidities(w)) => det_j_parts(model, bra, &lambdas_complex(model, w)?)?,
    };
    if !value.is_finite() {
        return Err(Error::Singular(format!(
            "{} produced a non-finite value",
            method.name()
        )));
    }
    Ok(OverlapResult {
        value,
        method: *method,
        condition_estimate,
        prefactor,
    })
}

/// Largest pairwise relative deviation among values, relative to `scale`.
pub fn max_pairwise_deviation(values: &[Complex64], scale: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..values.len() {
        for b in (a + 1)..values.len() {
            worst = worst.max((values[a] - values[b]).norm() / scale);
        }
    }
    worst
}

/// Relative scale for comparing overlaps: `|value| + √(⟨v|v⟩⟨w|w⟩)`.
pub fn overlap_scale(value: Complex64, bra_norm: f64, ket_norm: f64) -> f64 {
    value.norm() + (bra_norm.abs() * ket_norm.abs()).sqrt()
}

/// Squared norm of an arbitrary Bethe state through the oracle.
pub fn oracle_norm(model: &ModelParams, rapidities: &SpectralSet) -> Result<f64> {
    Ok(build_bethe_state(model, rapidities, false)?.norm_sqr())
}
