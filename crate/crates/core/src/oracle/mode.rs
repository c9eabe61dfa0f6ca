//! Per-mode linear system of the kernel on a quadratic target.

use serde::{Deserialize, Serialize};

use super::mat2::{self, Mat2};
use crate::error::Result;
use crate::integrator::noise_covariance;
use crate::model::{norm_for, KlmcParams, WeightedNorm};
use crate::numerics::exp_neg_remainder;
use crate::theory::contraction::ZetaTerms;

/// S(λ) together with the per-coordinate noise covariance Q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSystem {
    pub s: Mat2,
    pub q: Mat2,
    pub lambda: f64,
}

/// S(λ) = [[1 − ηλ(ζ+δ−1)/γ², (1−δ)/γ], [−ηλ(1−δ)/γ, δ]].
pub fn transition_matrix(params: &KlmcParams, lambda: f64) -> Mat2 {
    let d = params.derive();
    let (g, eta) = (params.gamma(), params.eta());
    [
        [
            1.0 - eta * lambda * exp_neg_remainder(d.zeta) / (g * g),
            d.one_minus_delta / g,
        ],
        [-eta * lambda * d.one_minus_delta / g, d.delta],
    ]
}

pub fn mode_system(params: &KlmcParams, lambda: f64) -> Result<ModeSystem> {
    Ok(ModeSystem {
        s: transition_matrix(params, lambda),
        q: noise_covariance(params)?.matrix(),
        lambda,
    })
}

/// Factor T with TᵀT = G = [[1, b], [b, a]].
pub fn norm_factor(norm: &WeightedNorm) -> Mat2 {
    let b = norm.b();
    [[1.0, b], [0.0, (norm.a() - b * b).sqrt()]]
}

/// Blocks of (1−c)G − SᵀGS from their closed forms, with the discrepancy
/// against direct assembly in the scalar case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockMatrices {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual_abs: f64,
    /// `residual_abs` over the largest entry of G or SᵀGS.
    pub residual_rel: f64,
}

pub fn block_matrices(params: &KlmcParams, lambda: f64, c: f64) -> BlockMatrices {
    let t = ZetaTerms::new(params.zeta());
    let (z, om, om2, g) = (t.zeta, t.om, t.om2, params.gamma());
    let r = params.r_of(lambda);
    let a = (-z * z - 3.0 * om * om) * r * r + 2.0 * z * r - c;
    // ζ − 3δ² + 3δ = ζ + 3δ(1−δ)
    let b = (z + 3.0 * t.delta * om) * r / g - c / g;
    let cb = -(4.0 * c - 3.0 * om2) / (g * g);
    let gram = norm_for(g).expect("gamma validated by params").gram();
    let s = transition_matrix(params, lambda);
    let sgs = mat2::mul(&mat2::mul(&mat2::transpose(&s), &gram), &s);
    let direct = mat2::sub(&mat2::scale(&gram, 1.0 - c), &sgs);
    let residual_abs = (direct[0][0] - a)
        .abs()
        .max((direct[0][1] - b).abs())
        .max((direct[1][0] - b).abs())
        .max((direct[1][1] - cb).abs());
    let scale = mat2::max_abs(&gram).max(mat2::max_abs(&sgs));
    BlockMatrices {
        a,
        b,
        c: cb,
        residual_abs,
        residual_rel: residual_abs / scale,
    }
}

/// Characteristic functions of A and AC − B² at scaled eigenvalue r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi {
    pub chi_a: f64,
    pub chi_acmb2: f64,
}

/// Coefficients of γ²χ_{AC−B²} = 3c² + B_c·c + C_c as a quadratic in c.
pub(crate) fn chi_quadratic(r: f64, zeta: f64) -> (f64, f64) {
    let t = ZetaTerms::new(zeta);
    let (z, om, om2) = (t.zeta, t.om, t.om2);
    let alpha_r = (-z * z - 3.0 * om * om) * r * r + 2.0 * z * r;
    let beta_r = (z + 3.0 * t.delta * om) * r;
    (
        2.0 * beta_r - 4.0 * alpha_r - 3.0 * om2,
        3.0 * alpha_r * om2 - beta_r * beta_r,
    )
}

pub fn chi_eval(r: f64, zeta: f64, gamma: f64, c: f64) -> Chi {
    let t = ZetaTerms::new(zeta);
    let (z, om) = (t.zeta, t.om);
    let (bc, cc) = chi_quadratic(r, zeta);
    Chi {
        chi_a: (-z * z - 3.0 * om * om) * r * r + 2.0 * z * r - c,
        chi_acmb2: (3.0 * c * c + bc * c + cc) / (gamma * gamma),
    }
}

/// Sharp squared one-step factor: λ_max of (TST⁻¹)ᵀ(TST⁻¹).
pub fn exact_contraction_factor(params: &KlmcParams, lambda: f64, norm: &WeightedNorm) -> f64 {
    let t = norm_factor(norm);
    let m = mat2::mul(&mat2::mul(&t, &transition_matrix(params, lambda)), &mat2::inverse(&t));
    mat2::eig_sym(&mat2::mul(&mat2::transpose(&m), &m)).1
}
