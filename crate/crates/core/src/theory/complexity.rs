//! Step-size and iteration-count planner.

use serde::{Deserialize, Serialize};

use crate::error::{positive, KlmcError, Result};
use crate::model::{ConvexityProfile, KlmcParams};
use crate::theory::conditions::check_condition_linear;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPlan {
    pub epsilon: f64,
    pub h_star: f64,
    pub n_star: u64,
    /// Caller-supplied upper bound on W_{a,b}(μ, π_h).
    pub w0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub gamma: f64,
    pub eta: f64,
    pub h0: f64,
    /// Candidates for h: position-bias term, momentum-bias term, h₀.
    pub h_terms: [f64; 3],
    /// Candidates inside the max for n (before the log factor).
    pub n_terms: [f64; 3],
    pub log_factor: f64,
    /// The dimensionally odd h₀γ entry decides n.
    pub h0_gamma_term_active: bool,
}

/// Plan (h, n) so that W_{a,b}(μKⁿ, π) ≤ ε.
#[allow(clippy::too_many_arguments)]
pub fn complexity_plan(
    profile: &ConvexityProfile,
    d: usize,
    epsilon: f64,
    gamma: f64,
    eta: f64,
    h0: f64,
    w0: f64,
) -> Result<ComplexityPlan> {
    if d == 0 {
        return Err(KlmcError::InvalidParameter {
            name: "d",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    let epsilon = positive("epsilon", epsilon)?;
    let w0 = positive("w0", w0)?;
    let at_h0 = KlmcParams::new(h0, gamma, eta)?;
    // Both sides of the linearization condition are increasing in h, so
    // validity at h₀ covers every h ≤ h₀.
    if !check_condition_linear(&at_h0, profile) {
        return Err(KlmcError::ConditionViolated(format!(
            "linearization condition fails at h0 = {h0}; shrink h0 or increase gamma / decrease eta"
        )));
    }
    let (alpha, kappa) = (profile.alpha(), profile.kappa());
    let df = d as f64;
    let h_terms = [
        (1.25f64).sqrt() * epsilon.sqrt()
            / (df.powf(0.25) * kappa.sqrt() * eta.powf(0.25) * gamma.sqrt()),
        epsilon / (4.0 * 3f64.sqrt() * df.sqrt() * kappa * eta.sqrt()),
        h0,
    ];
    let h_star = if h_terms[2] <= h_terms[0].min(h_terms[1]) {
        h0
    } else {
        h_terms[0].min(h_terms[1])
    };
    let n_terms = [
        5f64.sqrt() * gamma.powf(1.5) * df.powf(0.25) * kappa.sqrt()
            / (eta.powf(0.75) * alpha * epsilon.sqrt()),
        8.0 * 3f64.sqrt() * gamma * df.sqrt() * kappa / (eta.sqrt() * alpha * epsilon),
        h0 * gamma,
    ];
    let n_max = n_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_factor = (3.0 * w0 / epsilon).ln();
    let n_real = n_max * log_factor;
    let n_star = if n_real.is_finite() && n_real > 1.0 {
        n_real.ceil() as u64
    } else {
        1
    };
    Ok(ComplexityPlan {
        epsilon,
        h_star,
        n_star,
        w0,
        alpha,
        beta: profile.beta(),
        d,
        gamma,
        eta,
        h0,
        h_terms,
        n_terms,
        log_factor,
        h0_gamma_term_active: n_terms[2] >= n_terms[0].max(n_terms[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::bias::bias_bounds;

    fn choice2(beta: f64) -> (f64, f64) {
        ((27.0f64 / 2.0).sqrt(), 1.0 / (2.0 * beta))
    }

    #[test]
    fn monotone_in_epsilon() {
        let prof = ConvexityProfile::new(0.1, 1.0).unwrap();
        let (g, eta) = choice2(1.0);
        let mut prev = complexity_plan(&prof, 100, 0.2, g, eta, 1.0, 10.0).unwrap();
        for k in 1..8 {
            let eps = 0.2 / 2f64.powi(k);
            let p = complexity_plan(&prof, 100, eps, g, eta, 1.0, 10.0).unwrap();
            assert!(p.n_star > prev.n_star);
            assert!(p.h_star <= prev.h_star);
            assert!(p.h_star <= 1.0);
            prev = p;
        }
    }

    #[test]
    fn rejects_bad_h0() {
        let prof = ConvexityProfile::new(0.1, 1.0).unwrap();
        let r = complexity_plan(&prof, 10, 0.1, 1.0, 1.0, 1.0, 1.0);
        assert!(matches!(r, Err(KlmcError::ConditionViolated(_))));
    }

    #[test]
    fn plug_back_bias() {
        for beta in [0.5, 1.0, 4.0] {
            let prof = ConvexityProfile::new(beta / 10.0, beta).unwrap();
            let (g, eta) = choice2(beta);
            for eps in [1e-3, 0.05, 0.3] {
                let p = complexity_plan(&prof, 100, eps, g, eta, 1.0, 5.0).unwrap();
                let params = KlmcParams::new(p.h_star, g, eta).unwrap();
                let b = bias_bounds(&params, &prof, 100).unwrap();
                assert!(b.e_pos + b.e_mom <= 2.0 * eps / 3.0 + 1e-9);
            }
        }
    }

    #[test]
    fn floor_of_one_iteration() {
        let prof = ConvexityProfile::new(0.1, 1.0).unwrap();
        let (g, eta) = choice2(1.0);
        let p = complexity_plan(&prof, 1, 0.3, g, eta, 1.0, 0.01).unwrap();
        assert_eq!(p.n_star, 1);
    }
}
