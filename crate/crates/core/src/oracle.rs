//! Brute-force reference: explicit Bethe states and conserved charges in the
//! fixed-magnetization sector of the spin-1/2 Hilbert space.
//!
//! A basis state is the set of up spins, stored as a bitmask (bit `i` = level `i`).
//! Sector bases are ordered lexicographically on the sorted index lists, the same
//! order as [`OccupationState::all`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cauchy::{borchardt_permanent, CauchyPair};
use crate::error::{Error, Result};
use crate::linalg::{permanent_ryser, CMatrix, ONE, ZERO};
use crate::model::{EigenstateRecord, ModelKind, ModelParams, OccupationState, SpectralSet};
use crate::solvers::max_norm;

/// Largest permanent order expanded directly; larger ones go through Borchardt.
const DIRECT_PERMANENT_MAX: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct SectorBasis {
    l: usize,
    n: usize,
    states: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl SectorBasis {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        if l > 63 {
            return Err(Error::Precondition(format!(
                "sector basis limited to L < 64, got {l}"
            )));
        }
        if n > l {
            return Err(Error::Precondition(format!("N = {n} exceeds L = {l}")));
        }
        let states: Vec<u64> = OccupationState::all(l, n)
            .iter()
            .map(OccupationState::mask)
            .collect();
        let index = states.iter().enumerate().map(|(k, &m)| (m, k)).collect();
        Ok(SectorBasis {
            l,
            n,
            states,
            index,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    pub fn occupation(&self, k: usize) -> OccupationState {
        OccupationState::from_mask(self.states[k], self.l)
    }
}

#[derive(Clone, Debug)]
pub struct SectorAmplitudes {
    pub basis: Arc<SectorBasis>,
    pub amplitudes: Vec<Complex64>,
}

impl SectorAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, occ: &OccupationState) -> Option<Complex64> {
        self.basis.index_of(occ.mask()).map(|k| self.amplitudes[k])
    }

    /// Text dump, one `bitstring re im` line per basis state.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, a) in self.amplitudes.iter().enumerate() {
            let bits = self.basis.occupation(k).to_bitstring(self.basis.l);
            let _ = writeln!(out, "{bits} {:.16e} {:.16e}", a.re, a.im);
        }
        out
    }
}

/// Permanent of the weight matrix `[w(level_b, x_a)]` with `w = s_i/(ε_i − x)`.
fn weighted_permanent(
    model: &ModelParams,
    levels: &[usize],
    xs: &[Complex64],
) -> Result<Complex64> {
    let eps: Vec<Complex64> = levels
        .iter()
        .map(|&i| Complex64::new(model.epsilons[i], 0.0))
        .collect();
    let weight: Complex64 = match model.kind {
        ModelKind::Rational => ONE,
        ModelKind::Hyperbolic => Complex64::new(
            levels.iter().map(|&i| model.epsilons[i].sqrt()).product(),
            0.0,
        ),
    };
    let k = levels.len();
    let perm = if k <= DIRECT_PERMANENT_MAX {
        permanent_ryser(&CMatrix::from_fn(k, k, |b, a| ONE / (eps[b] - xs[a])))
    } else {
        borchardt_permanent(&CauchyPair::new(eps, xs.to_vec()))?
    };
    Ok(weight * perm)
}

/// Amplitudes of `Π_a S⁺(v_a)|↓…↓⟩`, or with `dual` of `Π_a S⁻(v_a)|↑…↑⟩` expressed in the
/// sector with `L − |v|` up spins.
pub fn build_bethe_state(
    model: &ModelParams,
    rapidities: &SpectralSet,
    dual: bool,
) -> Result<SectorAmplitudes> {
    let l = model.len();
    let m = rapidities.len();
    if m > l {
        return Err(Error::Precondition(format!(
            "{m} rapidities exceed L = {l}"
        )));
    }
    rapidities.check_regular(model)?;
    let n = if dual { l - m } else { m };
    let basis = Arc::new(SectorBasis::new(l, n)?);
    let amplitudes = (0..basis.len())
        .map(|k| {
            let occ = basis.occupation(k);
            let levels = if dual { occ.complement(l) } else { occ };
            weighted_permanent(model, levels.indices(), &rapidities.values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SectorAmplitudes { basis, amplitudes })
}

/// `Σ_k conj(a_k) b_k`.
pub fn exact_inner_product(a: &SectorAmplitudes, b: &SectorAmplitudes) -> Result<Complex64> {
    if a.basis.l != b.basis.l || a.basis.n != b.basis.n {
        return Err(Error::BasisMismatch(
            a.basis.l, a.basis.n, b.basis.l, b.basis.n,
        ));
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Coefficients of the exchange and Ising terms of `R_i` for the pair `(i, j)`.
fn pair_coefficients(model: &ModelParams, i: usize, j: usize) -> (f64, f64) {
    let (ei, ej) = (model.epsilons[i], model.epsilons[j]);
    let base = model.g / (ei - ej);
    match model.kind {
        ModelKind::Rational => (0.5 * base, base),
        ModelKind::Hyperbolic => ((ei * ej).sqrt() * base, 2.0 * ei * base),
    }
}

/// Dense matrix of `R_i` on the sector basis.
pub fn conserved_charge(model: &ModelParams, i: usize, basis: &SectorBasis) -> DMatrix<f64> {
    let dim = basis.len();
    let mut r = DMatrix::zeros(dim, dim);
    for (col, &mask) in basis.states.iter().enumerate() {
        let up = |k: usize| mask >> k & 1 == 1;
        let sz = |k: usize| if up(k) { 0.5 } else { -0.5 };
        let mut diag = if up(i) { 1.0 } else { 0.0 };
        for j in (0..basis.l).filter(|&j| j != i) {
            let (flip, ising) = pair_coefficients(model, i, j);
            diag += ising * (sz(i) * sz(j) - 0.25);
            if up(i) != up(j) {
                let row = basis.index[&(mask ^ (1 << i) ^ (1 << j))];
                r[(row, col)] += flip;
            }
        }
        r[(col, col)] += diag;
    }
    r
}

pub fn conserved_charges(model: &ModelParams, basis: &SectorBasis) -> Vec<DMatrix<f64>> {
    (0..model.len())
        .map(|i| conserved_charge(model, i, basis))
        .collect()
}

fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest `‖[R_i, R_j]‖_max` over all pairs in the sector.
pub fn max_commutator(model: &ModelParams, n: usize) -> Result<f64> {
    let basis = SectorBasis::new(model.len(), n)?;
    let rs = conserved_charges(model, &basis);
    let mut worst: f64 = 0.0;
    for a in 0..rs.len() {
        for b in (a + 1)..rs.len() {
            worst = worst.max(max_abs_real(&(&rs[a] * &rs[b] - &rs[b] * &rs[a])));
        }
    }
    Ok(worst)
}

/// Per-level max-norm residuals of an operator or eigenvalue identity.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelReport {
    pub residuals: Vec<f64>,
}

impl LevelReport {
    pub fn worst(&self) -> f64 {
        max_norm(&self.residuals)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() < tol
    }
}

/// `R_i² − R_i + c_i Σ_{j≠i}(R_i − R_j)/(ε_i − ε_j)` with `c_i = g/2` (rational) or `g ε_i` (hyperbolic).
pub fn verify_quadratic_identity(model: &ModelParams, n: usize) -> Result<LevelReport> {
    let basis = SectorBasis::new(model.len(), n)?;
    let rs = conserved_charges(model, &basis);
    let eps = &model.epsilons;
    let residuals = (0..rs.len())
        .map(|i| {
            let c = match model.kind {
                ModelKind::Rational => model.g / 2.0,
                ModelKind::Hyperbolic => model.g * eps[i],
            };
            let mut m = &rs[i] * &rs[i] - &rs[i];
            for j in (0..rs.len()).filter(|&j| j != i) {
                m += (&rs[i] - &rs[j]) * (c / (eps[i] - eps[j]));
            }
            max_abs_real(&m)
        })
        .collect();
    Ok(LevelReport { residuals })
}

/// Eigenvalues `r_i` of the charges for an eigenvalue-based set.
pub fn charge_eigenvalues(model: &ModelParams, lambdas: &[f64]) -> Vec<f64> {
    lambdas
        .iter()
        .zip(&model.epsilons)
        .map(|(lam, e)| match model.kind {
            ModelKind::Rational => -model.g / 2.0 * lam,
            ModelKind::Hyperbolic => -model.g * e * lam,
        })
        .collect()
}

/// `‖R_i ψ − r_i ψ‖ / ‖ψ‖` per level, for the state built from the record's rapidities.
pub fn verify_eigenstate(model: &ModelParams, record: &EigenstateRecord) -> Result<LevelReport> {
    let state = build_bethe_state(model, record.rapidities()?, false)?;
    let norm = state.norm_sqr().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate("Bethe state vanishes identically".into()));
    }
    let r = charge_eigenvalues(model, &record.lambdas.lambdas);
    let psi = CMatrix::from_column_slice(state.amplitudes.len(), 1, &state.amplitudes);
    let residuals = (0..model.len())
        .map(|i| {
            let op = conserved_charge(model, i, &state.basis).map(|x| Complex64::new(x, 0.0));
            let diff = &op * &psi - &psi * Complex64::new(r[i], 0.0);
            diff.norm() / norm
        })
        .collect();
    Ok(LevelReport { residuals })
}

/// Sorted spectrum of `R_i` in the sector, through the symmetrized charge basis.
pub fn charge_spectrum(model: &ModelParams, i: usize, n: usize) -> Result<Vec<f64>> {
    let basis = SectorBasis::new(model.len(), n)?;
    let mut r = conserved_charge(model, i, &basis);
    if model.kind == ModelKind::Hyperbolic {
        // R_i is not symmetric in the hyperbolic case; its eigenvalues are still real.
        let mut ev: Vec<f64> = r.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        return Ok(ev);
    }
    r = (&r + r.transpose()) * 0.5;
    let mut ev: Vec<f64> = r.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `⟨↑…↑| Π_α S⁺(x_α) |↓…↓⟩` for `|x| = L`, read off the explicit state.
pub fn domain_wall_overlap(model: &ModelParams, xs: &SpectralSet) -> Result<Complex64> {
    if xs.len() != model.len() {
        return Err(Error::Precondition(format!(
            "need {} parameters, got {}",
            model.len(),
            xs.len()
        )));
    }
    let state = build_bethe_state(model, xs, false)?;
    Ok(state.amplitudes.first().copied().unwrap_or(ZERO))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpectralRole;

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_is_lexicographic() {
        let b = SectorBasis::new(4, 2).unwrap();
        assert_eq!(b.len(), 6);
        let bits: Vec<String> = (0..b.len())
            .map(|k| b.occupation(k).to_bitstring(4))
            .collect();
        assert_eq!(bits, ["1100", "1010", "1001", "0110", "0101", "0011"]);
        assert_eq!(b.index_of(0b0101), Some(1));
    }

    #[test]
    fn single_level_state() {
        let model = ModelParams::rational(0.8, vec![1.0]);
        let v = 1.0 + 0.4;
        let s = build_bethe_state(&model, &SpectralSet::on_shell(vec![cx(v)]), false).unwrap();
        assert!((s.amplitudes[0] - cx(1.0 / (1.0 - v))).norm() < 1e-15);
        let nn = exact_inner_product(&s, &s).unwrap();
        assert!((nn.re - 4.0 / 0.64).abs() < 1e-12);
    }

    #[test]
    fn vacuum_amplitude() {
        let model = ModelParams::rational(1.0, vec![1.0, 2.0, 3.0]);
        let s =
            build_bethe_state(&model, &SpectralSet::empty(SpectralRole::OnShell), false).unwrap();
        assert_eq!(s.amplitudes, vec![ONE]);
    }

    #[test]
    fn two_term_permanent() {
        let model = ModelParams::rational(1.0, vec![1.0, 2.0, 3.0]);
        let (v1, v2) = (0.3, 4.1);
        let s = build_bethe_state(&model, &SpectralSet::off_shell(vec![cx(v1), cx(v2)]), false)
            .unwrap();
        let expect = 1.0 / ((1.0 - v1) * (2.0 - v2)) + 1.0 / ((1.0 - v2) * (2.0 - v1));
        let occ = OccupationState::new(vec![0, 1], 3).unwrap();
        assert!((s.amplitude(&occ).unwrap() - cx(expect)).norm() < 1e-14);
    }

    #[test]
    fn borchardt_branch_matches_direct() {
        let eps: Vec<f64> = (0..7).map(|i| 1.0 + i as f64 * 0.7).collect();
        let model = ModelParams::hyperbolic(0.3, eps.clone());
        let xs: Vec<Complex64> = (0..7)
            .map(|a| Complex64::new(0.2 + a as f64 * 0.9, 0.1 * a as f64))
            .collect();
        let all: Vec<usize> = (0..7).collect();
        let via_borchardt = weighted_permanent(&model, &all, &xs).unwrap();
        let direct = permanent_ryser(&CMatrix::from_fn(7, 7, |b, a| {
            cx(eps[b].sqrt()) / (cx(eps[b]) - xs[a])
        }));
        assert!((via_borchardt - direct).norm() < 1e-10 * direct.norm());
    }

    #[test]
    fn single_level_charge() {
        let model = ModelParams::rational(1.0, vec![2.0]);
        assert_eq!(
            conserved_charge(&model, 0, &SectorBasis::new(1, 0).unwrap())[(0, 0)],
            0.0
        );
        assert_eq!(
            conserved_charge(&model, 0, &SectorBasis::new(1, 1).unwrap())[(0, 0)],
            1.0
        );
    }

    #[test]
    fn charges_commute_and_satisfy_quadratic_identity() {
        for model in [
            ModelParams::rational(0.7, vec![0.3, 1.1, 1.9, 3.2]),
            ModelParams::hyperbolic(0.45, vec![0.6, 1.1, 1.9, 2.4]),
        ] {
            for n in 0..=4 {
                assert!(max_commutator(&model, n).unwrap() < 1e-12);
                assert!(verify_quadratic_identity(&model, n).unwrap().passes(1e-10));
            }
        }
    }

    #[test]
    fn mismatched_bases_rejected() {
        let model = ModelParams::rational(1.0, vec![1.0, 2.0]);
        let a = build_bethe_state(&model, &SpectralSet::off_shell(vec![cx(0.5)]), false).unwrap();
        let b =
            build_bethe_state(&model, &SpectralSet::empty(SpectralRole::OffShell), false).unwrap();
        assert_eq!(
            exact_inner_product(&a, &b),
            Err(Error::BasisMismatch(2, 1, 2, 0))
        );
    }
}
