//! Double-double arithmetic for residuals whose terms cancel strongly.
//!
//! Only what the residual and norm evaluations need: sums, products and quotients
//! of unevaluated pairs `hi + lo` with `|lo| ≤ ulp(hi)/2`, their complex
//! counterparts and a small pivoted determinant.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::linalg::LogDet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn norm(hi: f64, lo: f64) -> Dd {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::norm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::norm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        Dd::norm(p, e + self.lo * b)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd { hi: q1, lo: q2 } + Dd::from(q3)
    }
}

impl From<Dd> for Cdd {
    fn from(re: Dd) -> Cdd {
        Cdd { re, im: Dd::ZERO }
    }
}

/// Complex double-double.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn magnitude(self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }
}

impl From<Complex64> for Cdd {
    fn from(z: Complex64) -> Cdd {
        Cdd {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }
}

impl From<f64> for Cdd {
    fn from(x: f64) -> Cdd {
        Cdd {
            re: Dd::from(x),
            im: Dd::ZERO,
        }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re + b.re,
            im: self.im + b.im,
        }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re - b.re,
            im: self.im - b.im,
        }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}

impl Mul<f64> for Cdd {
    type Output = Cdd;
    fn mul(self, b: f64) -> Cdd {
        Cdd {
            re: self.re * b,
            im: self.im * b,
        }
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, b: Cdd) -> Cdd {
        let den = b.re * b.re + b.im * b.im;
        Cdd {
            re: (self.re * b.re + self.im * b.im) / den,
            im: (self.im * b.re - self.re * b.im) / den,
        }
    }
}

/// Pivots of Gaussian elimination with partial pivoting and whether the row swaps are odd;
/// `None` for a singular matrix. Rows of equal length.
fn pivots_cdd(mut m: Vec<Vec<Cdd>>) -> Option<(Vec<Cdd>, bool)> {
    let n = m.len();
    let mut pivots = Vec::with_capacity(n);
    let mut odd = false;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&a, &b| m[a][k].magnitude().total_cmp(&m[b][k].magnitude()))
            .expect("non-empty range");
        if m[p][k].magnitude() == 0.0 {
            return None;
        }
        if p != k {
            m.swap(p, k);
            odd = !odd;
        }
        let pivot = m[k][k];
        pivots.push(pivot);
        for r in (k + 1)..n {
            let f = m[r][k] / pivot;
            let (upper, lower) = m.split_at_mut(r);
            for (x, &t) in lower[0][k + 1..].iter_mut().zip(&upper[k][k + 1..]) {
                *x = *x - f * t;
            }
        }
    }
    Some((pivots, odd))
}

/// Determinant by Gaussian elimination with partial pivoting; an empty matrix gives 1.
pub(crate) fn det_cdd(m: Vec<Vec<Cdd>>) -> Cdd {
    match pivots_cdd(m) {
        None => Cdd::ZERO,
        Some((pivots, odd)) => {
            let det = pivots.into_iter().fold(Cdd::from(1.0), |acc, p| acc * p);
            if odd {
                -det
            } else {
                det
            }
        }
    }
}

/// As [`det_cdd`], as phase and log-magnitude.
pub(crate) fn log_det_cdd(m: Vec<Vec<Cdd>>) -> LogDet {
    match pivots_cdd(m) {
        None => LogDet {
            phase: Complex64::new(0.0, 0.0),
            log_abs: f64::NEG_INFINITY,
        },
        Some((pivots, odd)) => {
            let sign = if odd { -1.0 } else { 1.0 };
            pivots.iter().fold(
                LogDet {
                    phase: Complex64::new(sign, 0.0),
                    log_abs: 0.0,
                },
                |acc, p| {
                    let z = p.to_c64();
                    LogDet {
                        phase: acc.phase * (z / z.norm()),
                        log_abs: acc.log_abs + z.norm().ln(),
                    }
                },
            )
        }
    }
}
