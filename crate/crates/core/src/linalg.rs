//! Dense complex linear algebra helpers: determinants through a partially
//! pivoted LU factorization, a 1-norm reciprocal condition number, and
//! permanents for small matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Determinant in `sign · exp(log_abs)` form. `log_abs = -inf` marks a zero determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub phase: Complex64,
    pub log_abs: f64,
}

impl LogDet {
    pub fn value(&self) -> Complex64 {
        if self.log_abs == f64::NEG_INFINITY {
            ZERO
        } else {
            self.phase * self.log_abs.exp()
        }
    }
}

/// Partially pivoted LU factorization of a square complex matrix.
pub struct Lu {
    inner: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl Lu {
    pub fn new(m: &CMatrix) -> Self {
        assert!(
            m.is_square(),
            "LU requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        );
        Lu {
            inner: m.clone().lu(),
            n: m.nrows(),
        }
    }

    pub fn det(&self) -> Complex64 {
        if self.n == 0 {
            return ONE;
        }
        self.inner.determinant()
    }

    pub fn log_det(&self) -> LogDet {
        if self.n == 0 {
            return LogDet {
                phase: ONE,
                log_abs: 0.0,
            };
        }
        let u = self.inner.u();
        let mut phase = c(self.inner.p().determinant::<f64>());
        let mut log_abs = 0.0;
        for k in 0..self.n {
            let d = u[(k, k)];
            let norm = d.norm();
            if norm == 0.0 {
                return LogDet {
                    phase: ZERO,
                    log_abs: f64::NEG_INFINITY,
                };
            }
            phase *= d / norm;
            log_abs += norm.ln();
        }
        LogDet { phase, log_abs }
    }

    pub fn solve(&self, b: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
        self.inner.solve(b)
    }

    pub fn inverse(&self) -> Option<CMatrix> {
        if self.n == 0 {
            return Some(CMatrix::zeros(0, 0));
        }
        self.inner.try_inverse()
    }
}

/// Determinant through pivoted LU; the `0 × 0` determinant is 1 and singular matrices give 0.
pub fn det_lu(m: &CMatrix) -> Complex64 {
    Lu::new(m).det()
}

pub fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Reciprocal condition number `1 / (‖A‖₁ ‖A⁻¹‖₁)`; 0 for singular input, 1 for the empty matrix.
pub fn rcond(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    match Lu::new(m).inverse() {
        Some(inv) => {
            let r = 1.0 / (norm1(m) * norm1(&inv));
            if r.is_finite() {
                r
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hadamard(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.component_mul(b)
}

/// Permanent through Ryser's inclusion-exclusion formula with Gray-code updates, `O(2^n n)`.
pub fn permanent_ryser(m: &CMatrix) -> Complex64 {
    let n = m.nrows();
    assert!(m.is_square());
    if n == 0 {
        return ONE;
    }
    assert!(n < 32, "permanent_ryser is limited to n < 32");
    let mut row_sums = vec![ZERO; n];
    let mut total = ZERO;
    let mut gray: u32 = 0;
    for k in 1u32..(1 << n) {
        let next = k ^ (k >> 1);
        let flipped = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << flipped) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += m[(i, flipped)];
            } else {
                *s -= m[(i, flipped)];
            }
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        if next.count_ones() % 2 == 1 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        total
    } else {
        -total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_permanent(m: &CMatrix) -> Complex64 {
        fn rec(m: &CMatrix, row: usize, used: &mut Vec<bool>) -> Complex64 {
            if row == m.nrows() {
                return ONE;
            }
            let mut acc = ZERO;
            for col in 0..m.ncols() {
                if !used[col] {
                    used[col] = true;
                    acc += m[(row, col)] * rec(m, row + 1, used);
                    used[col] = false;
                }
            }
            acc
        }
        rec(m, 0, &mut vec![false; m.ncols()])
    }

    #[test]
    fn det_identity_and_empty() {
        assert_eq!(det_lu(&CMatrix::identity(3, 3)), ONE);
        assert_eq!(det_lu(&CMatrix::zeros(0, 0)), ONE);
        let swap = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!((det_lu(&swap) + ONE).norm() < 1e-15);
    }

    #[test]
    fn singular_det_is_zero() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        assert!(det_lu(&m).norm() < 1e-15);
        assert_eq!(rcond(&m), 0.0);
    }

    #[test]
    fn log_det_matches_det() {
        let m = CMatrix::from_fn(4, 4, |i, j| {
            Complex64::new((i * 3 + j) as f64 % 5.0 + 0.5, (i as f64 - j as f64) * 0.3)
        });
        let lu = Lu::new(&m);
        assert!((lu.log_det().value() - lu.det()).norm() < 1e-12 * lu.det().norm());
    }

    #[test]
    fn ryser_matches_naive() {
        for n in 0..6 {
            let m = CMatrix::from_fn(n, n, |i, j| {
                Complex64::new(
                    1.0 / (i as f64 + 2.0 * j as f64 + 1.0),
                    (i * j) as f64 * 0.1,
                )
            });
            let a = permanent_ryser(&m);
            let b = naive_permanent(&m);
            assert!(
                (a - b).norm() <= 1e-12 * b.norm().max(1.0),
                "n={n}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn rcond_of_identity() {
        assert!((rcond(&CMatrix::identity(5, 5)) - 1.0).abs() < 1e-15);
    }
}
