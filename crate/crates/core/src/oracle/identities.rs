//! Numeric checks of the polynomial and block identities behind the
//! contraction bound.
//!
//! Every residual is relative to the largest magnitude among the terms that
//! enter the identity, so catastrophic cancellation between large terms is
//! not misread as an identity failure.

use serde::{Deserialize, Serialize};

use super::mode::{block_matrices, chi_eval, chi_quadratic};
use crate::model::KlmcParams;
use crate::theory::contraction::{c_minus, poly_coeffs, r_lin, ZetaTerms};

/// Identities hold when every residual is at most this.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P5Coeffs {
    pub a5: f64,
    pub b5: f64,
    pub e5: f64,
}

/// Summands of a₅, b₅ and e₅.
fn p5_terms(zeta: f64) -> [[f64; 4]; 3] {
    let t = ZetaTerms::new(zeta);
    let (z, d, om) = (t.zeta, t.delta, t.om);
    let om2 = om * om;
    [
        // 3δ(2−δ)((1−δ)²+1) − 3 = −3(1−δ)⁴ since δ(2−δ) = 1 − (1−δ)².
        [-3.0 * om2 * om2, -z.powi(4) / 3.0, -2.0 * z * z * om2, 0.0],
        [-6.0 * d * om2 * om, (2.0 / 3.0) * z.powi(3), -2.0 * z * z * d * om, 2.0 * z * om2],
        [-3.0 * d * d * om2, -z * z / 3.0, 2.0 * z * d * om, 0.0],
    ]
}

pub fn p5_coeffs(zeta: f64) -> P5Coeffs {
    let [a, b, e] = p5_terms(zeta).map(|t| t.iter().sum::<f64>());
    P5Coeffs { a5: a, b5: b, e5: e }
}

/// p₄(r) = (−ζ² − 3(1−δ)²)r² + 2ζr.
pub fn p4(r: f64, zeta: f64) -> f64 {
    let t = ZetaTerms::new(zeta);
    (-zeta * zeta - 3.0 * t.om * t.om) * r * r + 2.0 * zeta * r
}

/// (a₆, b₆, e₆) of p₆(r) = a₆r² − b₆r + e₆.
pub fn p6_coeffs(zeta: f64) -> (f64, f64, f64) {
    let t = ZetaTerms::new(zeta);
    let (z, d, om) = (t.zeta, t.delta, t.om);
    (
        (4.0 / 3.0) * z.powi(3) + 4.0 * z * om * om,
        3.0 * om * om + z * z * (7.0 / 3.0 - d * d),
        z * t.om2,
    )
}

/// (a₇, b₇) of p₇(ζ)ζ² = a₇ζ⁴ + b₇ζ².
pub fn p7_coeffs(zeta: f64) -> (f64, f64) {
    let t = ZetaTerms::new(zeta);
    let (d, om) = (t.delta, t.om);
    (
        (2.0 / 9.0) * (1.0 + 3.0 * d) * om * (1.0 + d),
        2.0 * om.powi(3) * (1.0 + 2.0 * d),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub r: f64,
    pub zeta: f64,
    /// disc of c ↦ χ_{AC−B²} (scaled by 1/36) against p₂p₃.
    pub disc_chi: f64,
    /// Vertex −B_c/6 of χ_{AC−B²} against p₁.
    pub vertex_chi: f64,
    /// p₁² − p₂p₃ against its factored form.
    pub p1_sq_factored: f64,
    /// (p₁ − p₄)² − p₂p₃ against p₅r².
    pub p5: f64,
    /// b₅² − 4a₅e₅ against zero.
    pub disc_p5: f64,
    /// (p₁ − ζr)² − p₂p₃ against p₆r.
    pub p6: f64,
    /// p₆(r_lin)·a₆ against a₇ζ⁴ + b₇ζ².
    pub p7: f64,
    /// χ_{AC−B²} at c⁻ against zero.
    pub chi_root: f64,
    /// Block formulas against direct assembly (γ = η = 1, λ = r, c = ¼).
    pub blocks: f64,
    /// p₆(r_lin) ≥ 0, p₆'(r_lin) ≤ 0, a₇ > 0 and b₇ > 0.
    pub signs_ok: bool,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.disc_chi,
            self.vertex_chi,
            self.p1_sq_factored,
            self.p5,
            self.disc_p5,
            self.p6,
            self.p7,
            self.chi_root,
            self.blocks,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.signs_ok && self.max_residual() <= IDENTITY_TOL
    }
}

fn rel(lhs: f64, rhs: f64, scale: f64) -> f64 {
    let s = scale.abs().max(lhs.abs()).max(rhs.abs());
    if s == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / s
    }
}

pub fn identity_suite(r: f64, zeta: f64) -> IdentityReport {
    let pc = poly_coeffs(zeta);
    let (p1, p2, p3) = (pc.p1(r), pc.p2(r), pc.p3(r));
    let p2p3 = p2 * p3;

    let (bc, cc) = chi_quadratic(r, zeta);
    let disc_scale = (bc * bc).max((12.0 * cc).abs()) / 36.0;
    let disc_chi = rel((bc * bc - 12.0 * cc) / 36.0, p2p3, disc_scale);
    let vertex_chi = rel(-bc / 6.0, p1, 0.0);

    let direct = p1 * p1 - p2p3;
    let p1_sq_factored = rel(direct, pc.p1_sq_minus_p2p3(r), (p1 * p1).max(p2p3));

    let q = p1 - p4(r, zeta);
    let c5 = p5_coeffs(zeta);
    let p5_val = (c5.a5 * r * r + c5.b5 * r + c5.e5) * r * r;
    let p5 = rel(q * q - p2p3, p5_val, (q * q).max(p2p3));
    // b₅ and e₅ change sign in ζ, so the residual is measured against the
    // size of their summands.
    let [sa, sb, se] = p5_terms(zeta).map(|t| t.iter().map(|x| x.abs()).sum::<f64>());
    let disc_p5 = rel(c5.b5 * c5.b5, 4.0 * c5.a5 * c5.e5, (sb * sb).max(4.0 * sa * se));

    let (a6, b6, e6) = p6_coeffs(zeta);
    let q6 = p1 - zeta * r;
    let p6 = rel(q6 * q6 - p2p3, (a6 * r * r - b6 * r + e6) * r, (q6 * q6).max(p2p3));

    let t = ZetaTerms::new(zeta);
    let rl = r_lin(zeta);
    let z2 = zeta * zeta;
    let numerator_terms = [
        (4.0 / 9.0) * z2 * z2 * t.om * t.om,
        -(2.0 / 3.0) * z2 * t.om * b6,
        a6 * e6,
    ];
    let numerator: f64 = numerator_terms.iter().sum();
    let (a7, b7) = p7_coeffs(zeta);
    let p6_at_lin = a6 * rl * rl - b6 * rl + e6;
    let term_scale = numerator_terms.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let p7 = rel(numerator, a7 * z2 * z2 + b7 * z2, term_scale)
        .max(rel(p6_at_lin * a6, numerator, term_scale));

    let cm = c_minus(r, zeta);
    let chi = chi_eval(r, zeta, 1.0, cm);
    let chi_scale = [3.0 * cm * cm, (bc * cm).abs(), cc.abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let chi_root = rel(chi.chi_acmb2, 0.0, chi_scale);

    let unit = KlmcParams::new(zeta, 1.0, 1.0).expect("zeta > 0");
    let blocks = block_matrices(&unit, r, 0.25).residual_rel;

    let signs_ok = p6_at_lin >= -IDENTITY_TOL * term_scale / a6
        && 2.0 * a6 * rl - b6 <= 0.0
        && a7 > 0.0
        && b7 > 0.0;

    IdentityReport {
        r,
        zeta,
        disc_chi,
        vertex_chi,
        p1_sq_factored,
        p5,
        disc_p5,
        p6,
        p7,
        chi_root,
        blocks,
        signs_ok,
    }
}
