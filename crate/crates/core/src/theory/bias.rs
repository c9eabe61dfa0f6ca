//! Asymptotic-bias bounds, their regime simplifications and the phase
//! transition between the underdamped and overdamped regimes.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{KlmcError, Result};
use crate::model::{ConvexityProfile, KlmcParams};
use crate::numerics::{bisect, SERIES_SEAM};
use crate::theory::conditions::check_condition_linear;

/// Underdamped E_pos constant as originally stated.
pub const E_POS_UNDER_STATED: f64 = 4.0 / 15.0;

/// Sum Σ_{n≥start} coeff(n)·ζ^n where coeff carries the 1/n! factor.
fn series(zeta: f64, start: u32, coeff: impl Fn(u32) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut power = zeta.powi(start as i32);
    let mut inv_fact: f64 = (1..=start).fold(1.0, |a, k| a / k as f64);
    for n in start..start + 80 {
        let term = coeff(n) * inv_fact * power;
        sum += term;
        if n > start + 2 && term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        power *= zeta;
        inv_fact /= (n + 1) as f64;
    }
    sum
}

/// f_pos(ζ) = ζ² − 3 + e^{−2ζ}(3 + 6ζ + 5ζ² + 2ζ³).
///
/// The Taylor coefficients are (−2)^n Q(n) / (8 n!) with
/// Q(n) = 24 − 24n + 10n(n−1) − 2n(n−1)(n−2), vanishing for n < 5.
pub fn f_pos(zeta: f64) -> f64 {
    if zeta < SERIES_SEAM {
        series(zeta, 5, |n| {
            let n = n as f64;
            let q = 24.0 - 24.0 * n + 10.0 * n * (n - 1.0) - 2.0 * n * (n - 1.0) * (n - 2.0);
            (-2f64).powi(n as i32) * q / 8.0
        })
    } else {
        zeta * zeta - 3.0
            + (-2.0 * zeta).exp() * (3.0 + zeta * (6.0 + zeta * (5.0 + 2.0 * zeta)))
    }
}

/// f_mom(ζ) = 1 − e^{−2ζ}(1 + 2ζ + 2ζ²).
///
/// Taylor coefficients −(−2)^n (n−1)(n−2) / (2 n!), vanishing for n < 3.
pub fn f_mom(zeta: f64) -> f64 {
    if zeta < SERIES_SEAM {
        series(zeta, 3, |n| {
            let nf = n as f64;
            -(-2f64).powi(n as i32) * (nf - 1.0) * (nf - 2.0) / 2.0
        })
    } else {
        1.0 - (-2.0 * zeta).exp() * (1.0 + 2.0 * zeta * (1.0 + zeta))
    }
}

/// Derivatives of f_pos of order 1..=3.
pub fn f_pos_derivative(zeta: f64, order: u8) -> f64 {
    let e = (-2.0 * zeta).exp();
    match order {
        1 => 2.0 * zeta * f_mom(zeta),
        2 => 2.0 * f_mom(zeta) + 8.0 * zeta.powi(3) * e,
        3 => -16.0 * e * (zeta - 2.0) * zeta * zeta,
        _ => panic!("f_pos_derivative: order must be 1, 2 or 3"),
    }
}

/// d f_mom / dζ = 4 e^{−2ζ} ζ².
pub fn f_mom_derivative(zeta: f64) -> f64 {
    4.0 * (-2.0 * zeta).exp() * zeta * zeta
}

/// I_p(τ) = ∫₀^τ s^p e^{−2γs} ds by the integration-by-parts recursion.
pub fn moment_integral(p: u32, tau: f64, gamma: f64) -> f64 {
    let e = (-2.0 * gamma * tau).exp();
    let mut acc = (1.0 - e) / (2.0 * gamma);
    for k in 1..=p {
        acc = -tau.powi(k as i32) * e / (2.0 * gamma) + k as f64 / (2.0 * gamma) * acc;
    }
    acc
}

/// Root of (2ζ+1)(2ζ²+1) = e^{2ζ} on (0, ∞); the ζ where E_mom peaks.
pub fn critical_zeta() -> f64 {
    static ROOT: OnceLock<f64> = OnceLock::new();
    *ROOT.get_or_init(|| {
        let f = |z: f64| (2.0 * z + 1.0) * (2.0 * z * z + 1.0) - (2.0 * z).exp();
        let df = |z: f64| 2.0 * (2.0 * z * z + 1.0) + 4.0 * z * (2.0 * z + 1.0) - 2.0 * (2.0 * z).exp();
        // f > 0 on (0, 1], f(3) < 0.
        let mut z = bisect(f, 1.0, 3.0, 1e-6).expect("sign change on [1, 3]");
        for _ in 0..4 {
            let step = f(z) / df(z);
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        z
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Underdamped,
    Overdamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub e_pos: f64,
    pub e_mom: f64,
    /// Underdamped position bound with the printed constant 4/15.
    pub e_pos_under: f64,
    /// Same bound with √(4/15), the constant implied by f_pos ≤ (8/15)ζ⁵.
    pub e_pos_under_derived: f64,
    pub e_mom_under: f64,
    pub e_pos_over: f64,
    pub e_mom_over: f64,
    pub zeta_critical: f64,
    pub regime: Regime,
}

/// General bounds (E_pos, E_mom) for dimension d and condition number κ.
pub fn bias_terms(params: &KlmcParams, kappa: f64, d: usize) -> (f64, f64) {
    let zeta = params.zeta();
    let g = params.gamma();
    let scale = d as f64 * kappa * kappa * params.eta() / (g * g) / zeta;
    ((0.5 * scale * f_pos(zeta)).sqrt(), (4.0 * scale * f_mom(zeta)).sqrt())
}

/// All bounds without checking the linearization condition.
pub fn bias_report_unchecked(params: &KlmcParams, profile: &ConvexityProfile, d: usize) -> BiasReport {
    let (e_pos, e_mom) = bias_terms(params, profile.kappa(), d);
    let (h, g) = (params.h(), params.gamma());
    let base = (d as f64).sqrt() * profile.kappa() * params.eta().sqrt();
    let zc = critical_zeta();
    BiasReport {
        e_pos,
        e_mom,
        e_pos_under: E_POS_UNDER_STATED * base * g * h * h,
        e_pos_under_derived: E_POS_UNDER_STATED.sqrt() * base * g * h * h,
        e_mom_under: 4.0 / 3f64.sqrt() * base * h,
        e_pos_over: base * (h / g).sqrt() / 2f64.sqrt(),
        e_mom_over: 4.0 * base / (h.sqrt() * g.powf(1.5)),
        zeta_critical: zc,
        regime: if params.zeta() < zc {
            Regime::Underdamped
        } else {
            Regime::Overdamped
        },
    }
}

/// Bias bounds; requires the linearization condition and d ≥ 1.
pub fn bias_bounds(params: &KlmcParams, profile: &ConvexityProfile, d: usize) -> Result<BiasReport> {
    if d == 0 {
        return Err(KlmcError::InvalidParameter {
            name: "d",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    if !check_condition_linear(params, profile) {
        return Err(KlmcError::ConditionViolated(
            "bias bounds require eta*(2h/(gamma*(1-delta)) + 6/gamma^2) < 1/beta".into(),
        ));
    }
    Ok(bias_report_unchecked(params, profile, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // 50-digit direct evaluations.
    #[test]
    fn series_matches_high_precision() {
        assert!(rel(f_pos(1e-3), 5.3266712358738621673e-16) < 1e-12);
        assert!(rel(f_pos(1e-2), 5.267121595740600761e-11) < 1e-12);
        assert!(rel(f_pos(0.3), 0.00089691784271619866135) < 1e-12);
        assert!(rel(f_pos(0.49), 0.0083188522859550148496) < 1e-12);
        assert!(rel(f_pos(0.51), 0.0099256159617408331905) < 1e-12);
        assert!(rel(f_pos(2.0), 1.934097583325443195) < 1e-14);
        assert!(rel(f_mom(1e-3), 1.3313349324448252635e-9) < 1e-12);
        assert!(rel(f_mom(1e-2), 1.3134924482406743255e-6) < 1e-12);
        assert!(rel(f_mom(0.49), 0.076659634605786854855) < 1e-12);
        assert!(rel(f_mom(0.51), 0.084016732972346506706) < 1e-12);
        assert!(rel(f_mom(2.0), 0.76189669444645565618) < 1e-14);
    }

    #[test]
    fn seam_continuity() {
        let z = SERIES_SEAM;
        let below = z * (1.0 - 1e-15);
        let direct_pos = z * z - 3.0 + (-2.0 * z).exp() * (3.0 + 6.0 * z + 5.0 * z * z + 2.0 * z.powi(3));
        let direct_mom = 1.0 - (-2.0 * z).exp() * (1.0 + 2.0 * z + 2.0 * z * z);
        assert!(rel(f_pos(below), direct_pos) < 1e-11);
        assert!(rel(f_mom(below), direct_mom) < 1e-11);
    }

    #[test]
    fn bounds_on_f() {
        for i in 0..2000 {
            let zeta = 10f64.powf(-4.0 + 6.0 * i as f64 / 1999.0);
            let (fp, fm) = (f_pos(zeta), f_mom(zeta));
            assert!(fp > 0.0 && fp <= zeta * zeta, "zeta={zeta}");
            assert!(fm > 0.0 && fm <= 1.0);
            if zeta < 10.0 {
                assert!(fm < 1.0);
            }
            assert!(fm <= 4.0 / 3.0 * zeta.powi(3) * (1.0 + 1e-14));
            assert!(fp <= 8.0 / 15.0 * zeta.powi(5) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        for zeta in [0.3, 1.0, 1.7, 3.5] {
            let h = 1e-5;
            let fd1 = (f_pos(zeta + h) - f_pos(zeta - h)) / (2.0 * h);
            let fd2 = (f_pos(zeta + h) - 2.0 * f_pos(zeta) + f_pos(zeta - h)) / (h * h);
            let fd3 = (f_pos_derivative(zeta + h, 2) - f_pos_derivative(zeta - h, 2)) / (2.0 * h);
            let fm1 = (f_mom(zeta + h) - f_mom(zeta - h)) / (2.0 * h);
            assert!((fd1 - f_pos_derivative(zeta, 1)).abs() < 1e-8);
            assert!((fd2 - f_pos_derivative(zeta, 2)).abs() < 1e-4);
            assert!((fd3 - f_pos_derivative(zeta, 3)).abs() < 1e-8);
            assert!((fm1 - f_mom_derivative(zeta)).abs() < 1e-8);
        }
        assert!(f_pos_derivative(1e-8, 2).abs() < 1e-14);
    }

    #[test]
    fn moment_integral_matches_quadrature() {
        for (p, tau, gamma) in [(1u32, 0.7, 1.3), (2, 0.7, 1.3), (3, 2.0, 0.4), (4, 1.1, 3.0)] {
            let n = 20_000;
            let dx = tau / n as f64;
            let f = |s: f64| s.powi(p as i32) * (-2.0 * gamma * s).exp();
            let mut simpson = f(0.0) + f(tau);
            for i in 1..n {
                simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * dx);
            }
            simpson *= dx / 3.0;
            assert!(rel(moment_integral(p, tau, gamma), simpson) < 1e-10);
        }
    }

    #[test]
    fn critical_point() {
        let z = critical_zeta();
        assert!((z - 1.69).abs() < 5e-3);
        assert!((z - 1.691_817_141_426_590_7).abs() < 1e-12);
        let res = (2.0 * z + 1.0) * (2.0 * z * z + 1.0) - (2.0 * z).exp();
        assert!(res.abs() <= 1e-9);
    }

    #[test]
    fn e_mom_turns_at_critical_point() {
        let (gamma, eta) = (1.3, 0.4);
        let e_mom = |zeta: f64| {
            let p = KlmcParams::from_zeta(zeta, gamma, eta).unwrap();
            bias_terms(&p, 3.0, 10).1
        };
        let slope = |z: f64| (e_mom(z * (1.0 + 1e-6)) - e_mom(z * (1.0 - 1e-6))) / (2e-6 * z);
        let zc = critical_zeta();
        assert!(slope(zc * 0.98) > 0.0);
        assert!(slope(zc * 1.02) < 0.0);
    }

    #[test]
    fn requires_linear_condition() {
        let p = KlmcParams::new(5.0, 1.0, 1.0).unwrap();
        let prof = ConvexityProfile::new(1.0, 10.0).unwrap();
        assert!(matches!(bias_bounds(&p, &prof, 3), Err(KlmcError::ConditionViolated(_))));
        let p = KlmcParams::new(0.01, 10.0, 0.1).unwrap();
        assert!(bias_bounds(&p, &prof, 0).is_err());
        let rep = bias_bounds(&p, &prof, 5).unwrap();
        assert_eq!(rep.regime, Regime::Underdamped);
    }

    #[test]
    fn underdamped_momentum_bound() {
        let beta = 2.0;
        let prof = ConvexityProfile::new(0.25, beta).unwrap();
        let gamma = (27.0f64 / 2.0).sqrt();
        let p = KlmcParams::from_zeta(1e-3, gamma, 1.0 / (2.0 * beta)).unwrap();
        let r = bias_bounds(&p, &prof, 50).unwrap();
        assert!(r.e_mom <= r.e_mom_under * (1.0 + 1e-6));
        assert!(r.e_pos <= r.e_pos_under_derived);
        assert!(r.e_pos <= r.e_pos_over && r.e_mom <= r.e_mom_over);
    }
}
