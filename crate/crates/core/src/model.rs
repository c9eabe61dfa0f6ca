//! Parameters, derived quantities, the weighted phase-space norm and the
//! potentials shared by the integrator, the calculators and the oracles.

use serde::{Deserialize, Serialize};

use crate::error::{positive, KlmcError, Result};
use crate::numerics::one_minus_exp_neg;

/// Discretization triple: step size `h`, friction `gamma`, inverse mass `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlmcParams {
    h: f64,
    gamma: f64,
    eta: f64,
}

/// Quantities derived from [`KlmcParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    /// ζ = hγ.
    pub zeta: f64,
    /// δ = e^{−ζ}.
    pub delta: f64,
    /// 1 − δ, evaluated without cancellation.
    pub one_minus_delta: f64,
    /// 1 − δ², evaluated without cancellation.
    pub one_minus_delta_sq: f64,
}

impl KlmcParams {
    pub fn new(h: f64, gamma: f64, eta: f64) -> Result<Self> {
        let p = Self {
            h: positive("h", h)?,
            gamma: positive("gamma", gamma)?,
            eta: positive("eta", eta)?,
        };
        let zeta = p.zeta();
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(KlmcError::InvalidParameter {
                name: "h*gamma",
                value: zeta,
                reason: "zeta = h*gamma must be finite and > 0",
            });
        }
        Ok(p)
    }

    /// Build from the (ζ, γ, η) parametrization.
    pub fn from_zeta(zeta: f64, gamma: f64, eta: f64) -> Result<Self> {
        let gamma = positive("gamma", gamma)?;
        Self::new(positive("zeta", zeta)? / gamma, gamma, eta)
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn zeta(&self) -> f64 {
        self.h * self.gamma
    }

    pub fn derive(&self) -> Derived {
        let zeta = self.zeta();
        Derived {
            zeta,
            delta: (-zeta).exp(),
            one_minus_delta: one_minus_exp_neg(zeta),
            one_minus_delta_sq: one_minus_exp_neg(2.0 * zeta),
        }
    }

    /// R(λ) = ηλ/γ², the scaled Hessian eigenvalue.
    pub fn r_of(&self, lambda: f64) -> f64 {
        self.eta * lambda / (self.gamma * self.gamma)
    }

    /// Same step with a different h.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(h, self.gamma, self.eta)
    }
}

/// Strong convexity `alpha` and smoothness `beta` of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityProfile {
    alpha: f64,
    beta: f64,
}

impl ConvexityProfile {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let alpha = positive("alpha", alpha)?;
        let beta = positive("beta", beta)?;
        if beta < alpha {
            return Err(KlmcError::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be >= alpha",
            });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn kappa(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// Coefficients of ‖z‖²_{a,b} = ‖x‖² + 2b⟨x,v⟩ + a‖v‖².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    a: f64,
    b: f64,
}

impl WeightedNorm {
    /// Requires a > 0, b ≥ 0 and 4b² ≤ a.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let a = positive("a", a)?;
        if !(b.is_finite() && b >= 0.0) {
            return Err(KlmcError::InvalidParameter {
                name: "b",
                value: b,
                reason: "must be finite and >= 0",
            });
        }
        // 4b² ≤ a up to one ulp, so that norm_for(γ) always passes.
        if 4.0 * b * b > a * (1.0 + 4.0 * f64::EPSILON) {
            return Err(KlmcError::InvalidParameter {
                name: "b",
                value: b,
                reason: "requires 4*b^2 <= a",
            });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Scalar form for one (x, v) coordinate pair.
    #[inline]
    pub fn quad(&self, x: f64, v: f64) -> f64 {
        x * x + 2.0 * self.b * x * v + self.a * v * v
    }

    /// Gram matrix G = [[1, b], [b, a]].
    pub fn gram(&self) -> [[f64; 2]; 2] {
        [[1.0, self.b], [self.b, self.a]]
    }
}

/// The norm used throughout the contraction analysis: a = 4/γ², b = 1/γ.
pub fn norm_for(gamma: f64) -> Result<WeightedNorm> {
    let gamma = positive("gamma", gamma)?;
    WeightedNorm::new(4.0 / (gamma * gamma), 1.0 / gamma)
}

/// ‖x‖² + 2b⟨x,v⟩ + a‖v‖².
pub fn weighted_norm_sq(norm: &WeightedNorm, z: &PhaseState) -> f64 {
    z.x.iter().zip(&z.v).map(|(&x, &v)| norm.quad(x, v)).sum()
}

/// Weighted norm of the difference z1 − z2 without allocating.
pub fn weighted_dist_sq(norm: &WeightedNorm, z1: &PhaseState, z2: &PhaseState) -> f64 {
    z1.x.iter()
        .zip(&z1.v)
        .zip(z2.x.iter().zip(&z2.v))
        .map(|((&x1, &v1), (&x2, &v2))| norm.quad(x1 - x2, v1 - v2))
        .sum()
}

/// Position and momentum in ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(KlmcError::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        if x.is_empty() {
            return Err(KlmcError::InvalidParameter {
                name: "dim",
                value: 0.0,
                reason: "state dimension must be >= 1",
            });
        }
        let s = Self { x, v };
        if !s.is_finite() {
            return Err(KlmcError::PoisonedState { step: 0 });
        }
        Ok(s)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            x: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }
}

/// A potential U with a gradient oracle and known Hessian bounds.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes ∇U(x) into `out`.
    fn grad(&self, x: &[f64], out: &mut [f64]);

    fn profile(&self) -> ConvexityProfile;

    /// Hessian spectrum as (eigenvalue, multiplicity) when U is quadratic.
    fn quadratic_modes(&self) -> Option<Vec<(f64, usize)>> {
        None
    }
}

impl<T: Potential + ?Sized> Potential for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) {
        (**self).grad(x, out)
    }
    fn profile(&self) -> ConvexityProfile {
        (**self).profile()
    }
    fn quadratic_modes(&self) -> Option<Vec<(f64, usize)>> {
        (**self).quadratic_modes()
    }
}

/// U(x) = (λ/2)‖x‖².
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicQuadratic {
    dim: usize,
    lambda: f64,
}

impl IsotropicQuadratic {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(KlmcError::InvalidParameter {
                name: "dim",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(Self {
            dim,
            lambda: positive("lambda", lambda)?,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Potential for IsotropicQuadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.lambda * xi;
        }
    }

    fn profile(&self) -> ConvexityProfile {
        ConvexityProfile {
            alpha: self.lambda,
            beta: self.lambda,
        }
    }

    fn quadratic_modes(&self) -> Option<Vec<(f64, usize)>> {
        Some(vec![(self.lambda, self.dim)])
    }
}

/// U(x) = Σ (λ_i/2) x_i² with a user-supplied spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropicQuadratic {
    eigs: Vec<f64>,
}

fn check_spectrum(eigs: &[f64]) -> Result<()> {
    if eigs.is_empty() {
        return Err(KlmcError::InvalidParameter {
            name: "dim",
            value: 0.0,
            reason: "spectrum must be non-empty",
        });
    }
    for &l in eigs {
        positive("lambda", l)?;
    }
    Ok(())
}

fn spectrum_bounds(eigs: &[f64]) -> (f64, f64) {
    eigs.iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &l| (lo.min(l), hi.max(l)))
}

impl AnisotropicQuadratic {
    pub fn new(eigs: Vec<f64>) -> Result<Self> {
        check_spectrum(&eigs)?;
        Ok(Self { eigs })
    }

    pub fn eigs(&self) -> &[f64] {
        &self.eigs
    }
}

impl Potential for AnisotropicQuadratic {
    fn dim(&self) -> usize {
        self.eigs.len()
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &xi), &l) in out.iter_mut().zip(x).zip(&self.eigs) {
            *o = l * xi;
        }
    }

    fn profile(&self) -> ConvexityProfile {
        let (alpha, beta) = spectrum_bounds(&self.eigs);
        ConvexityProfile { alpha, beta }
    }

    fn quadratic_modes(&self) -> Option<Vec<(f64, usize)>> {
        Some(collapse_modes(&self.eigs))
    }
}

/// Group equal eigenvalues into (λ, multiplicity), preserving first-seen order.
pub fn collapse_modes(eigs: &[f64]) -> Vec<(f64, usize)> {
    let mut modes: Vec<(f64, usize)> = Vec::new();
    for &l in eigs {
        match modes.iter_mut().find(|(m, _)| *m == l) {
            Some((_, k)) => *k += 1,
            None => modes.push((l, 1)),
        }
    }
    modes
}

/// U(x) = Σ (λ_i/2) x_i² + s Σ log cosh(x_i).
///
/// The Hessian is diag(λ_i + s·sech²(x_i)), so it lies between
/// min λ_i and max λ_i + s.
#[derive(Debug, Clone, PartialEq)]
pub struct LogCoshQuadratic {
    eigs: Vec<f64>,
    s: f64,
}

impl LogCoshQuadratic {
    pub fn new(eigs: Vec<f64>, s: f64) -> Result<Self> {
        check_spectrum(&eigs)?;
        if !(s.is_finite() && s >= 0.0) {
            return Err(KlmcError::InvalidParameter {
                name: "s",
                value: s,
                reason: "must be finite and >= 0",
            });
        }
        Ok(Self { eigs, s })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.eigs)
            .map(|(&xi, &l)| 0.5 * l * xi * xi + self.s * log_cosh(xi))
            .sum()
    }
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Potential for LogCoshQuadratic {
    fn dim(&self) -> usize {
        self.eigs.len()
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &xi), &l) in out.iter_mut().zip(x).zip(&self.eigs) {
            *o = l * xi + self.s * xi.tanh();
        }
    }

    fn profile(&self) -> ConvexityProfile {
        let (alpha, beta) = spectrum_bounds(&self.eigs);
        ConvexityProfile {
            alpha,
            beta: beta + self.s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derive_unit_params() {
        let p = KlmcParams::new(1.0, 1.0, 1.0).unwrap();
        let d = p.derive();
        assert_eq!(d.zeta, 1.0);
        assert!((d.delta - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert_eq!(p.r_of(1.0), 1.0);
    }

    #[test]
    fn r_of_with_inverse_beta_mass() {
        let beta = 3.7;
        let p = KlmcParams::new(0.5, 2.0, 1.0 / beta).unwrap();
        assert!((p.r_of(beta) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn delta_tends_to_one_monotonically() {
        let ds: Vec<f64> = (1..=12)
            .map(|k| KlmcParams::new(10f64.powi(-k), 1.0, 1.0).unwrap().derive().delta)
            .collect();
        assert!(ds.iter().all(|&d| d < 1.0));
        assert!(ds.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(KlmcParams::new(0.0, 1.0, 1.0).is_err());
        assert!(KlmcParams::new(1.0, -1.0, 1.0).is_err());
        assert!(KlmcParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(KlmcParams::new(f64::INFINITY, 1.0, 1.0).is_err());
        assert!(ConvexityProfile::new(2.0, 1.0).is_err());
        assert!(norm_for(0.0).is_err());
        assert!(WeightedNorm::new(1.0, 0.6).is_err());
    }

    #[test]
    fn norm_examples() {
        let n = WeightedNorm::new(1.0, 0.0).unwrap();
        let z = PhaseState::new(vec![1.0, 0.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(weighted_norm_sq(&n, &z), 5.0);

        let n = WeightedNorm::new(4.0, 1.0).unwrap();
        let z = PhaseState::new(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(weighted_norm_sq(&n, &z), 7.0);

        let n = norm_for(2.0).unwrap();
        assert_eq!((n.a(), n.b()), (1.0, 0.5));
        let n = norm_for(1.0).unwrap();
        assert_eq!((n.a(), n.b()), (4.0, 1.0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert_eq!(
            PhaseState::new(vec![1.0, 2.0], vec![1.0]),
            Err(KlmcError::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn logcosh_gradient_matches_finite_difference() {
        let u = LogCoshQuadratic::new(vec![0.5, 2.0, 1.0], 0.7).unwrap();
        let x = [0.3, -1.2, 2.5];
        let mut g = [0.0; 3];
        u.grad(&x, &mut g);
        for i in 0..3 {
            let eps = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (u.value(&xp) - u.value(&xm)) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-8, "{fd} vs {}", g[i]);
        }
        let p = u.profile();
        assert_eq!((p.alpha(), p.beta()), (0.5, 2.7));
    }

    #[test]
    fn collapse_modes_counts_multiplicity() {
        assert_eq!(collapse_modes(&[1.0, 2.0, 1.0, 1.0]), vec![(1.0, 3), (2.0, 1)]);
    }

    proptest! {
        #[test]
        fn norm_for_is_tight(gamma in 1e-3f64..1e3) {
            let n = norm_for(gamma).unwrap();
            let lhs = 4.0 * n.b() * n.b();
            prop_assert!((lhs - n.a()).abs() <= 4.0 * f64::EPSILON * n.a());
        }

        #[test]
        fn euclidean_equivalence(
            gamma in 0.05f64..20.0,
            x in prop::collection::vec(-10.0f64..10.0, 3),
            v in prop::collection::vec(-10.0f64..10.0, 3),
        ) {
            let n = norm_for(gamma).unwrap();
            let e = WeightedNorm::new(n.a(), 0.0).unwrap();
            let z = PhaseState::new(x, v).unwrap();
            let w = weighted_norm_sq(&n, &z);
            let base = weighted_norm_sq(&e, &z);
            prop_assert!(0.5 * base <= w * (1.0 + 1e-12) + 1e-300);
            prop_assert!(w <= 1.5 * base * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn positive_definite_when_b_sq_below_a(
            a in 0.01f64..10.0,
            t in 0.0f64..0.999,
            x in prop::collection::vec(-5.0f64..5.0, 2),
            v in prop::collection::vec(-5.0f64..5.0, 2),
        ) {
            // b² < a, but not necessarily 4b² ≤ a: build the form directly.
            let b = t * a.sqrt();
            let val: f64 = x.iter().zip(&v).map(|(&xi, &vi)| xi * xi + 2.0 * b * xi * vi + a * vi * vi).sum();
            let nonzero = x.iter().chain(&v).any(|c| *c != 0.0);
            prop_assume!(nonzero);
            prop_assert!(val > 0.0);
        }

        #[test]
        fn derive_is_pure(h in 1e-6f64..10.0, g in 1e-3f64..10.0, e in 1e-3f64..10.0) {
            let p = KlmcParams::new(h, g, e).unwrap();
            prop_assert_eq!(p.derive(), p.derive());
            prop_assert_eq!(p.r_of(1.3).to_bits(), p.r_of(1.3).to_bits());
        }
    }
}
