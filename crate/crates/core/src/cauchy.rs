//! Cauchy matrices `C_iα = 1/(ε_i − x_α)` and the exact identities built on them:
//! the closed-form inverse, Borchardt's permanent, the `J_ε`/`J_x` factorizations,
//! the mixed-size Sylvester identity, the second-order Hadamard identity and the
//! matrix-determinant-lemma prefactor.
//!
//! Products `p(x) = Π(x − ε_i)` and `q(x) = Π(x − x_α)` and their derivatives at
//! the nodes are always evaluated as running products, never through expanded
//! coefficients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, det_lu, hadamard, CMatrix, Lu, ONE, ZERO};

/// Relative tolerance for poles and coinciding nodes inside a pair.
pub const CAUCHY_TOL: f64 = 1e-12;

/// The two node sets of a (possibly rectangular) Cauchy matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyPair {
    pub eps: Vec<Complex64>,
    pub xs: Vec<Complex64>,
}

/// Both sides of a determinant identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
}

impl IdentityCheck {
    pub fn abs_diff(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }

    /// `|lhs − rhs| / max(|lhs|, |rhs|)`, or the absolute difference if both vanish.
    pub fn rel_diff(&self) -> f64 {
        let scale = self.lhs.norm().max(self.rhs.norm());
        if scale == 0.0 {
            0.0
        } else {
            self.abs_diff() / scale
        }
    }
}

impl CauchyPair {
    pub fn new(eps: Vec<Complex64>, xs: Vec<Complex64>) -> Self {
        CauchyPair { eps, xs }
    }

    pub fn from_real(eps: &[f64], xs: &[f64]) -> Self {
        CauchyPair {
            eps: eps.iter().map(|&e| c(e)).collect(),
            xs: xs.iter().map(|&x| c(x)).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.eps.len()
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn is_square(&self) -> bool {
        self.m() == self.n()
    }

    fn scale(&self) -> f64 {
        let m = self
            .eps
            .iter()
            .chain(&self.xs)
            .fold(0.0_f64, |acc, z| acc.max(z.norm()));
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    fn check_poles(&self) -> Result<()> {
        let tol = CAUCHY_TOL * self.scale();
        for (i, e) in self.eps.iter().enumerate() {
            for (a, x) in self.xs.iter().enumerate() {
                if (e - x).norm() <= tol {
                    return Err(Error::pole(format!("eps[{i}] = xs[{a}]"), e, x));
                }
            }
        }
        Ok(())
    }

    fn check_distinct(&self) -> Result<()> {
        let tol = CAUCHY_TOL * self.scale();
        for (name, set) in [("eps", &self.eps), ("xs", &self.xs)] {
            for a in 0..set.len() {
                for b in (a + 1)..set.len() {
                    if (set[a] - set[b]).norm() <= tol {
                        return Err(Error::Collision(format!(
                            "{name}[{a}] and {name}[{b}] coincide"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn require_square(&self, op: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{op} needs a square pair, got {}x{}",
                self.m(),
                self.n()
            )))
        }
    }
}

/// `Π_{k≠skip}(z − nodes_k)`.
fn product_except(z: Complex64, nodes: &[Complex64], skip: Option<usize>) -> Complex64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(k, _)| Some(k) != skip)
        .map(|(_, &n)| z - n)
        .product()
}

pub fn cauchy_matrix(pair: &CauchyPair) -> Result<CMatrix> {
    pair.check_poles()?;
    Ok(CMatrix::from_fn(pair.m(), pair.n(), |i, a| {
        ONE / (pair.eps[i] - pair.xs[a])
    }))
}

/// Closed-form inverse, entry `(α, i) = −1/(ε_i − x_α) · p(x_α) q(ε_i) / (p'(ε_i) q'(x_α))`.
pub fn cauchy_inverse(pair: &CauchyPair) -> Result<CMatrix> {
    pair.require_square("cauchy_inverse")?;
    pair.check_poles()?;
    pair.check_distinct()?;
    let n = pair.n();
    let p_at_x: Vec<_> = pair
        .xs
        .iter()
        .map(|&x| product_except(x, &pair.eps, None))
        .collect();
    let q_at_eps: Vec<_> = pair
        .eps
        .iter()
        .map(|&e| product_except(e, &pair.xs, None))
        .collect();
    let dp_at_eps: Vec<_> = (0..n)
        .map(|i| product_except(pair.eps[i], &pair.eps, Some(i)))
        .collect();
    let dq_at_x: Vec<_> = (0..n)
        .map(|a| product_except(pair.xs[a], &pair.xs, Some(a)))
        .collect();
    Ok(CMatrix::from_fn(n, n, |a, i| {
        -(p_at_x[a] * q_at_eps[i]) / ((pair.eps[i] - pair.xs[a]) * dp_at_eps[i] * dq_at_x[a])
    }))
}

/// `det C = Π_{j<i}(ε_i − ε_j) Π_{α<β}(x_α − x_β) / Π_{i,α}(ε_i − x_α)`.
pub fn cauchy_det_closed_form(pair: &CauchyPair) -> Result<Complex64> {
    pair.require_square("cauchy_det_closed_form")?;
    pair.check_poles()?;
    let n = pair.n();
    let mut num = ONE;
    for i in 0..n {
        for j in 0..i {
            num *= pair.eps[i] - pair.eps[j];
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            num *= pair.xs[a] - pair.xs[b];
        }
    }
    let mut den = ONE;
    for e in &pair.eps {
        for x in &pair.xs {
            den *= e - x;
        }
    }
    Ok(num / den)
}

/// Permanent of the Cauchy matrix as `det[C ∗ C] / det[C]`.
pub fn borchardt_permanent(pair: &CauchyPair) -> Result<Complex64> {
    pair.require_square("borchardt_permanent")?;
    if pair.n() == 0 {
        return Ok(ONE);
    }
    pair.check_distinct()?;
    let cm = cauchy_matrix(pair)?;
    let det_c = det_lu(&cm);
    if det_c == ZERO {
        return Err(Error::Singular(
            "Cauchy matrix with distinct nodes reported singular".into(),
        ));
    }
    Ok(det_lu(&hadamard(&cm, &cm)) / det_c)
}

/// `(J_ε)_ii = Σ_α 1/(ε_i − x_α) − Σ_{k≠i} 1/(ε_i − ε_k)`, `(J_ε)_ij = −1/(ε_i − ε_j)`.
pub fn j_eps_matrix(pair: &CauchyPair) -> Result<CMatrix> {
    pair.check_poles()?;
    pair.check_distinct()?;
    let (eps, xs) = (&pair.eps, &pair.xs);
    Ok(CMatrix::from_fn(pair.m(), pair.m(), |i, j| {
        if i == j {
            let to_x: Complex64 = xs.iter().map(|x| ONE / (eps[i] - x)).sum();
            let to_eps: Complex64 = (0..eps.len())
                .filter(|&k| k != i)
                .map(|k| ONE / (eps[i] - eps[k]))
                .sum();
            to_x - to_eps
        } else {
            -ONE / (eps[i] - eps[j])
        }
    }))
}

/// `(J_x)_αα = −Σ_i 1/(x_α − ε_i) + Σ_{κ≠α} 1/(x_α − x_κ)`, `(J_x)_αβ = −1/(x_α − x_β)`.
pub fn j_x_matrix(pair: &CauchyPair) -> Result<CMatrix> {
    pair.check_poles()?;
    pair.check_distinct()?;
    let (eps, xs) = (&pair.eps, &pair.xs);
    Ok(CMatrix::from_fn(pair.n(), pair.n(), |a, b| {
        if a == b {
            let to_eps: Complex64 = eps.iter().map(|e| ONE / (xs[a] - e)).sum();
            let to_x: Complex64 = (0..xs.len())
                .filter(|&k| k != a)
                .map(|k| ONE / (xs[a] - xs[k]))
                .sum();
            to_x - to_eps
        } else {
            -ONE / (xs[a] - xs[b])
        }
    }))
}

/// `det[1_n + J_x]` against `det[1_m + J_ε]`; sizes may differ.
pub fn check_sylvester_mixed(pair: &CauchyPair) -> Result<IdentityCheck> {
    let jx = j_x_matrix(pair)?;
    let je = j_eps_matrix(pair)?;
    let lhs = det_lu(&(CMatrix::identity(pair.n(), pair.n()) + jx));
    let rhs = det_lu(&(CMatrix::identity(pair.m(), pair.m()) + je));
    Ok(IdentityCheck { lhs, rhs })
}

/// `det[2 (C∗C∗C)] / det[C∗C]` against `det[J_x + Cᵀ J_ε⁻¹ C]`.
pub fn check_hadamard3(pair: &CauchyPair) -> Result<IdentityCheck> {
    pair.require_square("check_hadamard3")?;
    let cm = cauchy_matrix(pair)?;
    let c2 = hadamard(&cm, &cm);
    let c3 = hadamard(&c2, &cm);
    let det_c2 = det_lu(&c2);
    if det_c2 == ZERO {
        return Err(Error::Singular("C*C".into()));
    }
    let lhs = det_lu(&(c3 * c(2.0))) / det_c2;

    let je = j_eps_matrix(pair)?;
    let jx = j_x_matrix(pair)?;
    let je_inv_c = Lu::new(&je)
        .solve(&cm)
        .ok_or_else(|| Error::Singular("J_eps".into()))?;
    let rhs = det_lu(&(jx + cm.transpose() * je_inv_c));
    Ok(IdentityCheck { lhs, rhs })
}

/// Matrix-determinant-lemma identity between `Π ε_i · det[(G−1)/(2ε) + J_ε]` and
/// `Π_{k=1}^{m−n}((G+1)/2 − k) · Π x_α · det[(G+1)/(2x) + J_x]`, with `m ≥ n`.
pub fn check_matrix_det_lemma(pair: &CauchyPair, big_g: Complex64) -> Result<IdentityCheck> {
    if pair.m() < pair.n() {
        return Err(Error::Precondition(format!(
            "matrix determinant lemma needs m >= n, got m = {}, n = {}",
            pair.m(),
            pair.n()
        )));
    }
    if let Some(z) = pair.eps.iter().chain(&pair.xs).find(|z| z.norm() == 0.0) {
        return Err(Error::Precondition(format!(
            "zero node {z} in matrix determinant lemma"
        )));
    }
    let mut je = j_eps_matrix(pair)?;
    let mut jx = j_x_matrix(pair)?;
    for (i, e) in pair.eps.iter().enumerate() {
        je[(i, i)] += (big_g - ONE) / (c(2.0) * e);
    }
    for (a, x) in pair.xs.iter().enumerate() {
        jx[(a, a)] += (big_g + ONE) / (c(2.0) * x);
    }
    let eps_prod: Complex64 = pair.eps.iter().product();
    let x_prod: Complex64 = pair.xs.iter().product();
    let shift: Complex64 = (1..=(pair.m() - pair.n()))
        .map(|k| (big_g + ONE) / c(2.0) - c(k as f64))
        .product();
    Ok(IdentityCheck {
        lhs: eps_prod * det_lu(&je),
        rhs: shift * x_prod * det_lu(&jx),
    })
}
