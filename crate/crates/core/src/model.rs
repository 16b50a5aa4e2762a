//! Model parameters and the state representations shared by every other module.
//!
//! All types here are plain values: cheap to clone, `Send + Sync`, no interior
//! mutability.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for level separation and rapidity collisions.
pub const DEFAULT_COLLISION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rational,
    Hyperbolic,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Rational => f.write_str("rational"),
            ModelKind::Hyperbolic => f.write_str("hyperbolic"),
        }
    }
}

/// Relative tolerances, scaled by `max |ε_i|` when applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub level_separation: f64,
    pub collision: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            level_separation: DEFAULT_COLLISION_TOL,
            collision: DEFAULT_COLLISION_TOL,
        }
    }
}

/// Coupling, model kind and the real single-particle levels `ε_1 … ε_L`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub g: f64,
    pub epsilons: Vec<f64>,
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Empty,
    ZeroCoupling,
    NonFinite(&'static str),
    LevelsTooClose { i: usize, j: usize, gap: f64 },
    NonPositiveLevel { i: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "at least one level required"),
            Violation::ZeroCoupling => write!(f, "g != 0 required"),
            Violation::NonFinite(what) => write!(f, "{what} must be finite"),
            Violation::LevelsTooClose { i, j, gap } => {
                write!(f, "levels too close: |eps_{i} - eps_{j}| = {gap:.3e}")
            }
            Violation::NonPositiveLevel { i, value } => {
                write!(
                    f,
                    "eps_i > 0 required for hyperbolic models (eps_{i} = {value})"
                )
            }
        }
    }
}

/// Outcome of [`validate_model`]; empty when the model is usable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

pub fn validate_model(model: &ModelParams) -> ValidationReport {
    let mut violations = Vec::new();
    if model.epsilons.is_empty() {
        violations.push(Violation::Empty);
    }
    if !model.g.is_finite() {
        violations.push(Violation::NonFinite("g"));
    } else if model.g == 0.0 {
        violations.push(Violation::ZeroCoupling);
    }
    if model.epsilons.iter().any(|e| !e.is_finite()) {
        violations.push(Violation::NonFinite("epsilon"));
        return ValidationReport { violations };
    }
    let threshold = model.tolerances.level_separation * model.scale();
    for i in 0..model.epsilons.len() {
        for j in (i + 1)..model.epsilons.len() {
            let gap = (model.epsilons[i] - model.epsilons[j]).abs();
            if gap <= threshold {
                violations.push(Violation::LevelsTooClose { i, j, gap });
            }
        }
    }
    if model.kind == ModelKind::Hyperbolic {
        for (i, &e) in model.epsilons.iter().enumerate() {
            if e <= 0.0 {
                violations.push(Violation::NonPositiveLevel { i, value: e });
            }
        }
    }
    ValidationReport { violations }
}

impl ModelParams {
    pub fn new(kind: ModelKind, g: f64, epsilons: Vec<f64>) -> Self {
        ModelParams {
            kind,
            g,
            epsilons,
            tolerances: Tolerances::default(),
        }
    }

    pub fn rational(g: f64, epsilons: Vec<f64>) -> Self {
        Self::new(ModelKind::Rational, g, epsilons)
    }

    pub fn hyperbolic(g: f64, epsilons: Vec<f64>) -> Self {
        Self::new(ModelKind::Hyperbolic, g, epsilons)
    }

    /// Returns the model unchanged if it passes validation.
    pub fn checked(self) -> Result<Self> {
        let report = validate_model(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidModel(report.messages()))
        }
    }

    pub fn with_g(&self, g: f64) -> Self {
        ModelParams { g, ..self.clone() }
    }

    /// Number of levels `L`.
    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn g_inv(&self) -> f64 {
        1.0 / self.g
    }

    /// `max |ε_i|`, or 1 when every level is zero.
    pub fn scale(&self) -> f64 {
        let m = self
            .epsilons
            .iter()
            .fold(0.0_f64, |acc, e| acc.max(e.abs()));
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    /// Smallest pairwise level gap (the scale itself for `L = 1`).
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                gap = gap.min((self.epsilons[i] - self.epsilons[j]).abs());
            }
        }
        if gap.is_finite() {
            gap
        } else {
            self.scale()
        }
    }

    pub(crate) fn collision_threshold(&self) -> f64 {
        self.tolerances.collision * self.scale()
    }

    pub fn epsilons_complex(&self) -> Vec<Complex64> {
        self.epsilons
            .iter()
            .map(|&e| Complex64::new(e, 0.0))
            .collect()
    }

    /// `Σ_{k≠i} 1/(ε_i − ε_k)`, the level-only part of every Gaudin-like diagonal.
    pub(crate) fn level_sums(&self) -> Vec<f64> {
        let eps = &self.epsilons;
        (0..eps.len())
            .map(|i| {
                (0..eps.len())
                    .filter(|&k| k != i)
                    .map(|k| 1.0 / (eps[i] - eps[k]))
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralRole {
    OnShell,
    Dual,
    OffShell,
}

/// An ordered multiset of complex rapidities, dual rapidities or free parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSet {
    pub values: Vec<Complex64>,
    pub role: SpectralRole,
}

impl SpectralSet {
    pub fn new(values: Vec<Complex64>, role: SpectralRole) -> Self {
        SpectralSet { values, role }
    }

    pub fn off_shell(values: Vec<Complex64>) -> Self {
        Self::new(values, SpectralRole::OffShell)
    }

    pub fn on_shell(values: Vec<Complex64>) -> Self {
        Self::new(values, SpectralRole::OnShell)
    }

    pub fn from_real(values: &[f64], role: SpectralRole) -> Self {
        Self::new(
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            role,
        )
    }

    pub fn empty(role: SpectralRole) -> Self {
        Self::new(Vec::new(), role)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted by (real part, imaginary part).
    pub fn sorted(&self) -> Self {
        let mut values = self.values.clone();
        values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        SpectralSet {
            values,
            role: self.role,
        }
    }

    pub fn with_role(mut self, role: SpectralRole) -> Self {
        self.role = role;
        self
    }

    pub fn product(&self) -> Complex64 {
        self.values.iter().product()
    }

    pub fn min_pairwise_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (a, va) in self.values.iter().enumerate() {
            for vb in &self.values[a + 1..] {
                gap = gap.min((va - vb).norm());
            }
        }
        gap
    }

    /// Every value has a partner `v̄` within `tol` (self-partnered when real).
    pub fn is_conjugation_closed(&self, tol: f64) -> bool {
        let mut used = vec![false; self.values.len()];
        for (a, v) in self.values.iter().enumerate() {
            if used[a] {
                continue;
            }
            if v.im.abs() <= tol {
                used[a] = true;
                continue;
            }
            let partner = (0..self.values.len())
                .filter(|&b| b != a && !used[b])
                .find(|&b| (self.values[b] - v.conj()).norm() <= tol);
            match partner {
                Some(b) => {
                    used[a] = true;
                    used[b] = true;
                }
                None => return false,
            }
        }
        true
    }

    /// Fails if some value sits on a level `ε_i` or two values coincide.
    pub fn check_regular(&self, model: &ModelParams) -> Result<()> {
        let threshold = model.collision_threshold();
        for (a, v) in self.values.iter().enumerate() {
            for (i, &e) in model.epsilons.iter().enumerate() {
                if (v - e).norm() <= threshold {
                    return Err(Error::pole(format!("rapidity {a} on level {i}"), v, e));
                }
            }
        }
        if self.min_pairwise_gap() <= threshold {
            return Err(Error::Degenerate(format!(
                "rapidities closer than {threshold:.1e}"
            )));
        }
        Ok(())
    }
}

/// The eigenvalue-based variables `Λ_i = Σ_a 1/(ε_i − v_a)` of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSet {
    pub lambdas: Vec<f64>,
    pub particle_number: usize,
}

impl LambdaSet {
    pub fn new(lambdas: Vec<f64>, particle_number: usize) -> Self {
        LambdaSet {
            lambdas,
            particle_number,
        }
    }

    pub fn vacuum(l: usize) -> Self {
        LambdaSet {
            lambdas: vec![0.0; l],
            particle_number: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.lambdas.iter().all(|l| l.is_finite())
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.lambdas
            .iter()
            .map(|&l| Complex64::new(l, 0.0))
            .collect()
    }
}

/// A product state `Π_{i ∈ occ} S_i^+ |↓…↓⟩`, given as sorted level indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OccupationState {
    occupied: Vec<usize>,
}

impl OccupationState {
    pub fn new(occupied: Vec<usize>, l: usize) -> Result<Self> {
        if occupied.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(format!(
                "occupied levels must be strictly increasing, got {occupied:?}"
            )));
        }
        if let Some(&last) = occupied.last() {
            if last >= l {
                return Err(Error::Precondition(format!(
                    "level index {last} out of range for L = {l}"
                )));
            }
        }
        Ok(OccupationState { occupied })
    }

    pub fn from_mask(mask: u64, l: usize) -> Self {
        OccupationState {
            occupied: (0..l).filter(|&i| mask >> i & 1 == 1).collect(),
        }
    }

    /// Character `i` of the bitstring describes level `i`.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let mut occupied = Vec::new();
        for (i, c) in bits.chars().enumerate() {
            match c {
                '1' => occupied.push(i),
                '0' => {}
                other => {
                    return Err(Error::Parse {
                        location: format!("bitstring position {i}"),
                        message: format!("expected '0' or '1', found {other:?}"),
                    })
                }
            }
        }
        Ok(OccupationState { occupied })
    }

    pub fn to_bitstring(&self, l: usize) -> String {
        (0..l)
            .map(|i| if self.occupied.contains(&i) { '1' } else { '0' })
            .collect()
    }

    pub fn mask(&self) -> u64 {
        self.occupied.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn indices(&self) -> &[usize] {
        &self.occupied
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    /// All `C(l, n)` occupations with `n` levels, in lexicographic order of the index tuples.
    pub fn all(l: usize, n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        if n > l {
            return out;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            out.push(OccupationState {
                occupied: idx.clone(),
            });
            let Some(pos) = (0..n).rev().find(|&k| idx[k] < l - n + k) else {
                return out;
            };
            idx[pos] += 1;
            for k in pos + 1..n {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }

    pub fn complement(&self, l: usize) -> Self {
        OccupationState {
            occupied: (0..l).filter(|i| !self.occupied.contains(i)).collect(),
        }
    }
}

/// A solved eigenstate in the sector with `n` excitations.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenstateRecord {
    pub n: usize,
    pub lambdas: LambdaSet,
    pub rapidities: Option<SpectralSet>,
    pub seed_occupation: OccupationState,
    pub residual_norm: f64,
    pub converged: bool,
}

impl EigenstateRecord {
    pub fn rapidities(&self) -> Result<&SpectralSet> {
        self.rapidities.as_ref().ok_or_else(|| {
            Error::MissingRapidities(format!(
                "record seeded from {:?}",
                self.seed_occupation.indices()
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_rational_model() {
        let m = ModelParams::rational(1.0, vec![1.0, 2.0, 3.0]);
        assert!(validate_model(&m).is_valid());
    }

    #[test]
    fn hyperbolic_needs_positive_levels() {
        let m = ModelParams::hyperbolic(1.0, vec![-1.0, 2.0]);
        let report = validate_model(&m);
        assert_eq!(
            report.violations,
            vec![Violation::NonPositiveLevel { i: 0, value: -1.0 }]
        );
        assert!(report.messages()[0].contains("eps_i > 0 required"));
    }

    #[test]
    fn close_levels_rejected() {
        let m = ModelParams::rational(1.0, vec![1.0, 1.0 + 1e-12, 3.0]);
        let report = validate_model(&m);
        assert_eq!(report.violations.len(), 1);
        assert!(report.messages()[0].contains("levels too close"));
    }

    #[test]
    fn zero_coupling_rejected() {
        let m = ModelParams::rational(0.0, vec![1.0]);
        assert_eq!(validate_model(&m).violations, vec![Violation::ZeroCoupling]);
        assert!(m.checked().is_err());
    }

    #[test]
    fn spectral_sort_and_conjugation() {
        let s = SpectralSet::on_shell(vec![
            Complex64::new(2.0, -1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 1.0),
        ]);
        let sorted = s.sorted();
        assert_eq!(sorted.values[0], Complex64::new(1.0, 0.0));
        assert_eq!(sorted.values[1], Complex64::new(2.0, -1.0));
        assert!(s.is_conjugation_closed(1e-12));
        let t = SpectralSet::on_shell(vec![Complex64::new(2.0, 1.0)]);
        assert!(!t.is_conjugation_closed(1e-12));
    }

    #[test]
    fn regularity_checks() {
        let m = ModelParams::rational(1.0, vec![1.0, 2.0]);
        let on_level = SpectralSet::from_real(&[1.0], SpectralRole::OffShell);
        assert!(matches!(
            on_level.check_regular(&m),
            Err(Error::Pole { .. })
        ));
        let twin = SpectralSet::from_real(&[1.5, 1.5], SpectralRole::OffShell);
        assert!(matches!(twin.check_regular(&m), Err(Error::Degenerate(_))));
    }

    #[test]
    fn occupation_bitstrings() {
        let occ = OccupationState::from_bitstring("0101").unwrap();
        assert_eq!(occ.indices(), &[1, 3]);
        assert_eq!(occ.to_bitstring(4), "0101");
        assert_eq!(occ.mask(), 0b1010);
        assert_eq!(occ.complement(4).indices(), &[0, 2]);
        assert_eq!(OccupationState::from_mask(0b1010, 4), occ);
        assert!(OccupationState::new(vec![2, 1], 4).is_err());
        assert!(OccupationState::new(vec![1, 4], 4).is_err());
        assert!(OccupationState::from_bitstring("01x").is_err());
        let all = OccupationState::all(4, 2);
        let tuples: Vec<_> = all.iter().map(|o| o.indices().to_vec()).collect();
        assert_eq!(
            tuples,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(OccupationState::all(3, 0).len(), 1);
        assert_eq!(OccupationState::all(3, 3).len(), 1);
        assert!(OccupationState::all(2, 3).is_empty());
    }
}
