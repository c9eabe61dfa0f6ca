//! Parameter-validity conditions, evaluated exactly as stated (never through
//! the simplified sufficient chains).

use crate::model::{ConvexityProfile, KlmcParams};
use crate::numerics::bisect;

/// Left-hand side of the general contraction condition:
/// η((2/3)·h/(γ(1−δ²)) + (3/2)/γ²).
pub fn general_condition_lhs(params: &KlmcParams) -> f64 {
    let d = params.derive();
    let (h, g, eta) = (params.h(), params.gamma(), params.eta());
    eta * ((2.0 / 3.0) * h / (g * d.one_minus_delta_sq) + 1.5 / (g * g))
}

/// Left-hand side of the linearization condition: η(2h/(γ(1−δ)) + 6/γ²).
pub fn linear_condition_lhs(params: &KlmcParams) -> f64 {
    let d = params.derive();
    let (h, g, eta) = (params.h(), params.gamma(), params.eta());
    eta * (2.0 * h / (g * d.one_minus_delta) + 6.0 / (g * g))
}

/// General contraction condition (non-strict): lhs ≤ 1/β.
pub fn check_condition_general(params: &KlmcParams, profile: &ConvexityProfile) -> bool {
    general_condition_lhs(params) <= 1.0 / profile.beta()
}

/// Linearization condition (strict): lhs < 1/β.
pub fn check_condition_linear(params: &KlmcParams, profile: &ConvexityProfile) -> bool {
    linear_condition_lhs(params) < 1.0 / profile.beta()
}

/// Which of the two conditions a step-size search refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    General,
    Linear,
}

/// Largest h for which `condition` holds at fixed (γ, η), or `None` when it
/// fails for every h > 0. Both left-hand sides are increasing in h.
pub fn max_step(
    condition: Condition,
    gamma: f64,
    eta: f64,
    profile: &ConvexityProfile,
) -> Option<f64> {
    let lhs = |h: f64| {
        let p = KlmcParams::new(h, gamma, eta).ok()?;
        Some(match condition {
            Condition::General => general_condition_lhs(&p),
            Condition::Linear => linear_condition_lhs(&p),
        })
    };
    let target = 1.0 / profile.beta();
    // h → 0 limit of the lhs.
    let floor = match condition {
        Condition::General => 1.5 * eta / (gamma * gamma) + (2.0 / 3.0) * eta / (2.0 * gamma * gamma),
        Condition::Linear => 2.0 * eta / (gamma * gamma) + 6.0 * eta / (gamma * gamma),
    };
    if floor >= target {
        return None;
    }
    let mut hi = 1.0 / gamma;
    while lhs(hi)? <= target {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Some(f64::INFINITY);
        }
    }
    let f = |h: f64| lhs(h).map_or(f64::NAN, |v| v - target);
    bisect(f, 0.0_f64.max(hi * 1e-300), hi, 1e-15 * hi)
}
