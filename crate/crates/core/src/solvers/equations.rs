//! Residuals and analytic Jacobians of the eigenvalue-based (quadratic) equations
//! and of the Bethe equations, for both model kinds.
//!
//! The internal systems take a complex coupling so the continuation driver can
//! leave the real axis; the public wrappers evaluate at the model's real `g`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dd::Dd;
use crate::error::Result;
use crate::linalg::{c, CMatrix, ONE, ZERO};
use crate::model::{LambdaSet, ModelKind, ModelParams, SpectralRole, SpectralSet};

/// Which representation of an eigenstate a rapidity set describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    /// Raising operators on `|↓…↓⟩`.
    Original,
    /// Lowering operators on `|↑…↑⟩`; the Bethe equations flip the sign of `g⁻¹`.
    Dual,
}

impl Representation {
    pub fn of(set: &SpectralSet) -> Self {
        match set.role {
            SpectralRole::Dual => Representation::Dual,
            _ => Representation::Original,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Representation::Original => 1.0,
            Representation::Dual => -1.0,
        }
    }
}

/// Quadratic equations in `Λ` at a (possibly complex) inverse coupling.
pub(crate) struct EvbSystem<'a> {
    pub kind: ModelKind,
    pub eps: &'a [f64],
    pub level_sums: Vec<f64>,
}

impl<'a> EvbSystem<'a> {
    pub fn new(model: &'a ModelParams) -> Self {
        EvbSystem {
            kind: model.kind,
            eps: &model.epsilons,
            level_sums: model.level_sums(),
        }
    }

    pub fn residual(&self, lam: &[Complex64], g_inv: Complex64) -> Vec<Complex64> {
        let eps = self.eps;
        (0..eps.len())
            .map(|i| match self.kind {
                ModelKind::Rational => {
                    let pair: Complex64 = (0..eps.len())
                        .filter(|&j| j != i)
                        .map(|j| (lam[i] - lam[j]) / (eps[i] - eps[j]))
                        .sum();
                    lam[i] * lam[i] + c(2.0) * g_inv * lam[i] - pair
                }
                ModelKind::Hyperbolic => {
                    let pair: Complex64 = (0..eps.len())
                        .filter(|&j| j != i)
                        .map(|j| (lam[i] * eps[i] - lam[j] * eps[j]) / (eps[i] - eps[j]))
                        .sum();
                    lam[i] * lam[i] * eps[i] + g_inv * lam[i] - pair
                }
            })
            .collect()
    }

    /// Real residual at real coupling `g`, accumulated in double-double and rounded once.
    ///
    /// The pair sums cancel to many digits when levels are close, which puts the
    /// floor of a plain evaluation far above the rounding of the solution itself.
    pub fn residual_accurate(&self, lam: &[f64], g: f64) -> Vec<f64> {
        let lam: Vec<Dd> = lam.iter().map(|&x| Dd::from(x)).collect();
        self.residual_dd(&lam, g)
            .into_iter()
            .map(Dd::to_f64)
            .collect()
    }

    pub fn residual_dd(&self, lam: &[Dd], g: f64) -> Vec<Dd> {
        let eps = self.eps;
        let g_inv = Dd::from(1.0) / Dd::from(g);
        (0..eps.len())
            .map(|i| {
                let li = lam[i];
                let mut pair = Dd::ZERO;
                for j in (0..eps.len()).filter(|&j| j != i) {
                    let gap = Dd::from(eps[i]) - Dd::from(eps[j]);
                    let num = match self.kind {
                        ModelKind::Rational => li - lam[j],
                        ModelKind::Hyperbolic => li * eps[i] - lam[j] * eps[j],
                    };
                    pair = pair + num / gap;
                }
                match self.kind {
                    ModelKind::Rational => li * li + g_inv * li * 2.0 - pair,
                    ModelKind::Hyperbolic => li * li * eps[i] + g_inv * li - pair,
                }
            })
            .collect()
    }

    /// `∂E_i/∂Λ_j`.
    pub fn jacobian(&self, lam: &[Complex64], g_inv: Complex64) -> CMatrix {
        let eps = self.eps;
        let l = eps.len();
        CMatrix::from_fn(l, l, |i, j| match (self.kind, i == j) {
            (ModelKind::Rational, true) => c(2.0) * lam[i] + c(2.0) * g_inv - c(self.level_sums[i]),
            (ModelKind::Rational, false) => c(1.0 / (eps[i] - eps[j])),
            (ModelKind::Hyperbolic, true) => {
                c(2.0 * eps[i]) * lam[i] + g_inv - c(eps[i] * self.level_sums[i])
            }
            (ModelKind::Hyperbolic, false) => c(eps[j] / (eps[i] - eps[j])),
        })
    }

    /// `∂E_i/∂(g⁻¹)`.
    pub fn d_g_inv(&self, lam: &[Complex64]) -> Vec<Complex64> {
        match self.kind {
            ModelKind::Rational => lam.iter().map(|&l| c(2.0) * l).collect(),
            ModelKind::Hyperbolic => lam.to_vec(),
        }
    }
}

/// Bethe equations for `N` rapidities in a given representation.
pub(crate) struct BetheSystem<'a> {
    pub kind: ModelKind,
    pub eps: &'a [f64],
    pub sign: f64,
}

impl<'a> BetheSystem<'a> {
    pub fn new(model: &'a ModelParams, repr: Representation) -> Self {
        BetheSystem {
            kind: model.kind,
            eps: &model.epsilons,
            sign: repr.sign(),
        }
    }

    fn coupling(&self, g_inv: Complex64) -> Complex64 {
        match self.kind {
            ModelKind::Rational => g_inv * self.sign,
            ModelKind::Hyperbolic => ONE + g_inv * self.sign,
        }
    }

    pub fn residual(&self, v: &[Complex64], g_inv: Complex64) -> Vec<Complex64> {
        let coupling = self.coupling(g_inv);
        (0..v.len())
            .map(|a| {
                let levels: Complex64 = self.eps.iter().map(|&e| ONE / (e - v[a])).sum();
                let pairs: Complex64 = (0..v.len())
                    .filter(|&b| b != a)
                    .map(|b| ONE / (v[b] - v[a]))
                    .sum();
                match self.kind {
                    ModelKind::Rational => coupling + levels * 0.5 - pairs,
                    ModelKind::Hyperbolic => coupling / v[a] + levels - pairs * 2.0,
                }
            })
            .collect()
    }

    /// Sum of the magnitudes of the terms of each equation, used to judge convergence.
    pub fn term_scale(&self, v: &[Complex64], g_inv: Complex64) -> f64 {
        let coupling = self.coupling(g_inv);
        (0..v.len())
            .map(|a| {
                let levels: f64 = self.eps.iter().map(|&e| 1.0 / (e - v[a]).norm()).sum();
                let pairs: f64 = (0..v.len())
                    .filter(|&b| b != a)
                    .map(|b| 1.0 / (v[b] - v[a]).norm())
                    .sum();
                match self.kind {
                    ModelKind::Rational => coupling.norm() + 0.5 * levels + pairs,
                    ModelKind::Hyperbolic => (coupling / v[a]).norm() + levels + 2.0 * pairs,
                }
            })
            .fold(0.0, f64::max)
    }

    /// `∂F_a/∂v_b`.
    pub fn jacobian(&self, v: &[Complex64], g_inv: Complex64) -> CMatrix {
        let coupling = self.coupling(g_inv);
        let n = v.len();
        let pair_weight = match self.kind {
            ModelKind::Rational => 1.0,
            ModelKind::Hyperbolic => 2.0,
        };
        let level_weight = match self.kind {
            ModelKind::Rational => 0.5,
            ModelKind::Hyperbolic => 1.0,
        };
        CMatrix::from_fn(n, n, |a, b| {
            if a == b {
                let levels: Complex64 = self
                    .eps
                    .iter()
                    .map(|&e| ONE / ((e - v[a]) * (e - v[a])))
                    .sum();
                let pairs: Complex64 = (0..n)
                    .filter(|&k| k != a)
                    .map(|k| ONE / ((v[k] - v[a]) * (v[k] - v[a])))
                    .sum();
                let own = match self.kind {
                    ModelKind::Rational => ZERO,
                    ModelKind::Hyperbolic => -coupling / (v[a] * v[a]),
                };
                own + levels * level_weight - pairs * pair_weight
            } else {
                c(pair_weight) / ((v[b] - v[a]) * (v[b] - v[a]))
            }
        })
    }

    /// `∂F_a/∂(g⁻¹)`.
    pub fn d_g_inv(&self, v: &[Complex64]) -> Vec<Complex64> {
        match self.kind {
            ModelKind::Rational => vec![c(self.sign); v.len()],
            ModelKind::Hyperbolic => v.iter().map(|&x| c(self.sign) / x).collect(),
        }
    }
}

/// Residual of the eigenvalue-based equations at the model coupling.
pub fn residual_evb(model: &ModelParams, lambdas: &LambdaSet) -> Vec<f64> {
    EvbSystem::new(model).residual_accurate(&lambdas.lambdas, model.g)
}

/// [`residual_evb`] at double-double `Λ`, unrounded.
pub(crate) fn residual_evb_dd(model: &ModelParams, lambdas: &[Dd]) -> Vec<Dd> {
    EvbSystem::new(model).residual_dd(lambdas, model.g)
}

/// Analytic Jacobian `∂E_i/∂Λ_j` of [`residual_evb`].
pub fn evb_jacobian(model: &ModelParams, lambdas: &LambdaSet) -> DMatrix<f64> {
    let sys = EvbSystem::new(model);
    sys.jacobian(&lambdas.to_complex(), c(model.g_inv()))
        .map(|z| z.re)
}

pub fn max_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_norm_c(values: &[Complex64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.norm()))
}

/// Residual of the Bethe equations; sets with role `Dual` are checked against the dual equations.
pub fn residual_bethe(model: &ModelParams, rapidities: &SpectralSet) -> Result<Vec<Complex64>> {
    rapidities.check_regular(model)?;
    let sys = BetheSystem::new(model, Representation::of(rapidities));
    Ok(sys.residual(&rapidities.values, c(model.g_inv())))
}

/// Analytic Jacobian `∂F_a/∂v_b` of [`residual_bethe`].
pub fn bethe_jacobian(model: &ModelParams, rapidities: &SpectralSet) -> Result<CMatrix> {
    rapidities.check_regular(model)?;
    let sys = BetheSystem::new(model, Representation::of(rapidities));
    Ok(sys.jacobian(&rapidities.values, c(model.g_inv())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evb_single_level_solutions() {
        let g = 0.37;
        let m = ModelParams::rational(g, vec![1.3]);
        let r = residual_evb(&m, &LambdaSet::new(vec![-2.0 / g], 1));
        assert!(r[0].abs() < 1e-14);

        let h = ModelParams::hyperbolic(g, vec![1.3]);
        let r = residual_evb(&h, &LambdaSet::new(vec![-1.0 / (g * 1.3)], 1));
        assert!(r[0].abs() < 1e-14);
    }

    #[test]
    fn accurate_residual_matches_plain() {
        for kind in [ModelKind::Rational, ModelKind::Hyperbolic] {
            let m = ModelParams::new(kind, 0.3, vec![0.4, 1.0, 1.05, 2.5]);
            let lam = [-1.3, 0.4, 2.2, -0.7];
            let sys = EvbSystem::new(&m);
            let plain = sys.residual(&lam.map(c), c(1.0 / 0.3));
            let acc = sys.residual_accurate(&lam, 0.3);
            for (p, a) in plain.iter().zip(&acc) {
                assert!((p.re - a).abs() < 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn evb_vacuum() {
        let m = ModelParams::rational(0.8, vec![0.1, 0.5, 1.7, 2.2]);
        assert!(residual_evb(&m, &LambdaSet::vacuum(4))
            .iter()
            .all(|&r| r == 0.0));
    }

    #[test]
    fn bethe_single_level_solutions() {
        let (g, e) = (0.6, 1.1);
        let m = ModelParams::rational(g, vec![e]);
        let v = SpectralSet::on_shell(vec![c(e + g / 2.0)]);
        assert!(residual_bethe(&m, &v).unwrap()[0].norm() < 1e-14);

        let h = ModelParams::hyperbolic(g, vec![e]);
        let v = SpectralSet::on_shell(vec![c((1.0 + g) * e)]);
        assert!(residual_bethe(&h, &v).unwrap()[0].norm() < 1e-14);

        assert!(
            residual_bethe(&m, &SpectralSet::empty(SpectralRole::OnShell))
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn dual_equations_flip_coupling() {
        let (g, e) = (0.6, 1.1);
        let m = ModelParams::rational(g, vec![e]);
        // −1/g + ½/(ε − v') = 0  ⇒  v' = ε − g/2
        let v = SpectralSet::new(vec![c(e - g / 2.0)], SpectralRole::Dual);
        assert!(residual_bethe(&m, &v).unwrap()[0].norm() < 1e-14);
    }

    fn finite_difference_check(kind: ModelKind) {
        let m = ModelParams::new(kind, 0.7, vec![0.4, 1.0, 1.9, 2.5]);
        let lam = LambdaSet::new(vec![-1.3, 0.4, 2.2, -0.7], 2);
        let jac = evb_jacobian(&m, &lam);
        let h = 1e-6;
        for j in 0..4 {
            let mut plus = lam.clone();
            let mut minus = lam.clone();
            plus.lambdas[j] += h;
            minus.lambdas[j] -= h;
            let (rp, rm) = (residual_evb(&m, &plus), residual_evb(&m, &minus));
            for i in 0..4 {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                assert!(
                    (fd - jac[(i, j)]).abs() < 1e-7 * jac[(i, j)].abs().max(1.0),
                    "{kind:?} ({i},{j})"
                );
            }
        }

        let v = SpectralSet::off_shell(vec![
            Complex64::new(0.7, 0.3),
            Complex64::new(0.7, -0.3),
            c(3.1),
        ]);
        let jac = bethe_jacobian(&m, &v).unwrap();
        for b in 0..3 {
            let mut plus = v.clone();
            let mut minus = v.clone();
            plus.values[b] += h;
            minus.values[b] -= h;
            let (rp, rm) = (
                residual_bethe(&m, &plus).unwrap(),
                residual_bethe(&m, &minus).unwrap(),
            );
            for a in 0..3 {
                let fd = (rp[a] - rm[a]) / (2.0 * h);
                assert!(
                    (fd - jac[(a, b)]).norm() < 1e-7 * jac[(a, b)].norm().max(1.0),
                    "{kind:?} ({a},{b})"
                );
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        finite_difference_check(ModelKind::Rational);
        finite_difference_check(ModelKind::Hyperbolic);
    }
}
