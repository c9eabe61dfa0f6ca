use serde::{Deserialize, Serialize};

use crate::error::{positive, KlmcError, Result};
use crate::model::{ConvexityProfile, KlmcParams};
use crate::numerics::{golden_section_min, one_minus_exp_neg};
use crate::theory::conditions::{check_condition_general, check_condition_linear};

/// Grid resolution of the spectrum minimisation before golden-section refinement.
pub const SPECTRUM_GRID: usize = 4096;

/// Coefficients of p₁, p₂, p₃ at a fixed ζ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyCoeffs {
    pub zeta: f64,
    pub a1: f64,
    pub b1: f64,
    pub e1: f64,
    pub b2: f64,
    pub e2: f64,
    pub b3: f64,
    pub e3: f64,
}

/// δ-dependent building blocks used by the polynomial families.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ZetaTerms {
    pub zeta: f64,
    pub delta: f64,
    /// 1 − δ
    pub om: f64,
    /// 1 − δ²
    pub om2: f64,
}

impl ZetaTerms {
    pub fn new(zeta: f64) -> Self {
        Self {
            zeta,
            delta: (-zeta).exp(),
            om: one_minus_exp_neg(zeta),
            om2: one_minus_exp_neg(2.0 * zeta),
        }
    }
}

pub fn poly_coeffs(zeta: f64) -> PolyCoeffs {
    let t = ZetaTerms::new(zeta);
    let (z, d, om, om2) = (t.zeta, t.delta, t.om, t.om2);
    PolyCoeffs {
        zeta,
        a1: (2.0 / 3.0) * z * z + 2.0 * om * om,
        b1: z - d * om,
        e1: 0.5 * om2,
        b2: -z * (1.0 + d) + om2,
        e2: 0.5 * (1.0 + d) * (1.0 + d),
        b3: -z * om - om * om,
        e3: 0.5 * om * om,
    }
}

impl PolyCoeffs {
    pub fn p1(&self, r: f64) -> f64 {
        (-self.a1 * r + self.b1) * r + self.e1
    }
    pub fn p2(&self, r: f64) -> f64 {
        (self.a1 * r + self.b2) * r + self.e2
    }
    pub fn p3(&self, r: f64) -> f64 {
        (self.a1 * r + self.b3) * r + self.e3
    }

    /// p₁² − p₂p₃ in its factored form r·(2ζ(1−δ²) − D·r), free of the
    /// cancellation the direct product suffers at small r.
    pub fn p1_sq_minus_p2p3(&self, r: f64) -> f64 {
        let t = ZetaTerms::new(self.zeta);
        (2.0 * t.zeta * t.om2 - r_max_denominator(&t) * r) * r
    }

    /// Left root of c ↦ χ_{AC−B²}: p₁ − √(p₂p₃).
    pub fn c_minus(&self, r: f64) -> f64 {
        let p1 = self.p1(r);
        let root = (self.p2(r) * self.p3(r)).sqrt();
        if p1 > 0.0 {
            // Rationalised: (p₁² − p₂p₃)/(p₁ + √(p₂p₃)).
            self.p1_sq_minus_p2p3(r) / (p1 + root)
        } else {
            p1 - root
        }
    }
}

pub fn p1(r: f64, zeta: f64) -> f64 {
    poly_coeffs(zeta).p1(r)
}
pub fn p2(r: f64, zeta: f64) -> f64 {
    poly_coeffs(zeta).p2(r)
}
pub fn p3(r: f64, zeta: f64) -> f64 {
    poly_coeffs(zeta).p3(r)
}

/// c⁻(r, ζ) = p₁(r) − √(p₂(r)p₃(r)).
pub fn c_minus(r: f64, zeta: f64) -> f64 {
    poly_coeffs(zeta).c_minus(r)
}

fn r_max_denominator(t: &ZetaTerms) -> f64 {
    let (z, d, om) = (t.zeta, t.delta, t.om);
    (4.0 / 3.0 - d * d) * z * z + 2.0 * d * om * z + 3.0 * om * om
}

/// Upper end of the interval (0, r_max) on which c⁻ > 0.
pub fn r_max(zeta: f64) -> f64 {
    let t = ZetaTerms::new(zeta);
    2.0 * t.zeta * t.om2 / r_max_denominator(&t)
}

/// Upper end of the interval (0, r_lin] on which c⁻(r, ζ) ≥ ζr.
pub fn r_lin(zeta: f64) -> f64 {
    let t = ZetaTerms::new(zeta);
    t.zeta * t.om / (2.0 * t.zeta * t.zeta + 6.0 * t.om * t.om)
}

/// Outcome of the contraction calculators for one (params, profile) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub condition_general_ok: bool,
    pub condition_linear_ok: bool,
    pub c_exact: Option<f64>,
    pub c_linear: Option<f64>,
    pub r_lo: f64,
    pub r_hi: f64,
    pub r_max: f64,
    pub r_lin: f64,
    pub argmin_r: Option<f64>,
    /// Machine-readable reason when `c_exact` is absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Minimum of c⁻(·, ζ) over [r_lo, r_hi]: dense grid, then golden-section
/// refinement around the best grid point. Endpoints are always candidates.
pub fn minimize_c_minus(zeta: f64, r_lo: f64, r_hi: f64) -> (f64, f64) {
    let coeffs = poly_coeffs(zeta);
    let f = |r: f64| coeffs.c_minus(r);
    let mut best = (r_lo, f(r_lo));
    let hi_val = f(r_hi);
    if hi_val < best.1 {
        best = (r_hi, hi_val);
    }
    if r_hi <= r_lo {
        return best;
    }
    let n = SPECTRUM_GRID;
    let step = (r_hi - r_lo) / (n - 1) as f64;
    let mut best_idx = 0usize;
    let mut grid_best = (r_lo, f64::INFINITY);
    for i in 0..n {
        let r = if i == n - 1 { r_hi } else { r_lo + step * i as f64 };
        let v = f(r);
        if v < grid_best.1 {
            grid_best = (r, v);
            best_idx = i;
        }
    }
    let lo = r_lo + step * best_idx.saturating_sub(1) as f64;
    let hi = (r_lo + step * (best_idx + 1) as f64).min(r_hi);
    let refined = golden_section_min(f, lo, hi, 1e-12, 200);
    for cand in [grid_best, refined] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// Exact contraction coefficient c = inf_{λ∈[α,β]} c⁻(R(λ), ζ), reported
/// only when the general condition holds.
pub fn contraction_exact(params: &KlmcParams, profile: &ConvexityProfile) -> ContractionReport {
    let zeta = params.zeta();
    let r_lo = params.r_of(profile.alpha());
    let r_hi = params.r_of(profile.beta());
    let general = check_condition_general(params, profile);
    let linear = check_condition_linear(params, profile);
    let mut report = ContractionReport {
        condition_general_ok: general,
        condition_linear_ok: linear,
        c_exact: None,
        c_linear: linear.then(|| linear_rate(params, profile)),
        r_lo,
        r_hi,
        r_max: r_max(zeta),
        r_lin: r_lin(zeta),
        argmin_r: None,
        reason: None,
    };
    if !general {
        report.reason = Some("condition_general_violated".into());
        return report;
    }
    let (argmin, c) = minimize_c_minus(zeta, r_lo, r_hi);
    report.c_exact = Some(c);
    report.argmin_r = Some(argmin);
    report
}

/// c̃ = hηα/γ without checking the linearization condition.
pub fn linear_rate(params: &KlmcParams, profile: &ConvexityProfile) -> f64 {
    params.h() * params.eta() * profile.alpha() / params.gamma()
}

/// c̃ = hηα/γ; requires the linearization condition.
pub fn contraction_linear(params: &KlmcParams, profile: &ConvexityProfile) -> Result<f64> {
    if !check_condition_linear(params, profile) {
        return Err(KlmcError::ConditionViolated(
            "linearization condition eta*(2h/(gamma*(1-delta)) + 6/gamma^2) < 1/beta fails".into(),
        ));
    }
    Ok(linear_rate(params, profile))
}

/// Checked variant of [`c_minus`] for callers with untrusted input.
pub fn c_minus_checked(r: f64, zeta: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(KlmcError::InvalidParameter {
            name: "r",
            value: r,
            reason: "must be finite and >= 0",
        });
    }
    Ok(c_minus(r, positive("zeta", zeta)?))
}
