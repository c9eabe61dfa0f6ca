//! Gaussian laws on quadratic targets and their weighted W₂ distance.

use serde::{Deserialize, Serialize};

use super::lyapunov::lyapunov_stationary;
use super::mat2::{self, Mat2};
use super::mode::norm_factor;
use crate::error::{KlmcError, Result};
use crate::model::{norm_for, KlmcParams, WeightedNorm};

/// One Hessian eigenvalue with its multiplicity and the per-coordinate law
/// of (x_i, v_i).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMode {
    pub lambda: f64,
    pub multiplicity: usize,
    pub mean: [f64; 2],
    pub cov: Mat2,
}

/// Product Gaussian on phase space, block-diagonal over modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    modes: Vec<GaussianMode>,
}

impl GaussianLaw {
    pub fn new(modes: Vec<GaussianMode>) -> Result<Self> {
        for m in &modes {
            let c = &m.cov;
            let scale = mat2::max_abs(c).max(1.0);
            if (c[0][1] - c[1][0]).abs() > 1e-14 * scale {
                return Err(KlmcError::IncompatibleLaws("covariance is not symmetric"));
            }
            let lo = mat2::eig_sym(c).0;
            if lo < -1e-12 * scale || !lo.is_finite() {
                return Err(KlmcError::NotPsd(lo));
            }
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[GaussianMode] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.iter().map(|m| m.multiplicity).sum()
    }

    /// Target π: x ~ N(0, 1/λ), v ~ N(0, η) per coordinate.
    pub fn target(eta: f64, spectrum: &[(f64, usize)]) -> Result<Self> {
        Self::new(
            spectrum
                .iter()
                .map(|&(lambda, multiplicity)| GaussianMode {
                    lambda,
                    multiplicity,
                    mean: [0.0; 2],
                    cov: [[1.0 / lambda, 0.0], [0.0, eta]],
                })
                .collect(),
        )
    }

    /// Stationary law π_h of the kernel.
    pub fn stationary(params: &KlmcParams, spectrum: &[(f64, usize)]) -> Result<Self> {
        let modes = spectrum
            .iter()
            .map(|&(lambda, multiplicity)| {
                Ok(GaussianMode {
                    lambda,
                    multiplicity,
                    mean: [0.0; 2],
                    cov: lyapunov_stationary(params, lambda)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(modes)
    }
}

/// Squared W₂ between N(m₁, C₁) and N(m₂, C₂) on ℝ².
fn w2_sq_2d(m1: [f64; 2], c1: &Mat2, m2: [f64; 2], c2: &Mat2) -> f64 {
    let dm = [m1[0] - m2[0], m1[1] - m2[1]];
    // tr (C₂^{1/2}C₁C₂^{1/2})^{1/2}: that matrix has trace tr(C₁C₂) and
    // determinant det C₁ det C₂.
    let cross = (mat2::trace(&mat2::mul(c1, c2))
        + 2.0 * (mat2::det(c1).max(0.0) * mat2::det(c2).max(0.0)).sqrt())
    .max(0.0)
    .sqrt();
    let w = dm[0] * dm[0] + dm[1] * dm[1] + mat2::trace(c1) + mat2::trace(c2) - 2.0 * cross;
    w.max(0.0)
}

/// W_{a,b} between two laws sharing the same mode structure.
pub fn gaussian_w(norm: &WeightedNorm, law1: &GaussianLaw, law2: &GaussianLaw) -> Result<f64> {
    if law1.modes.len() != law2.modes.len() {
        return Err(KlmcError::IncompatibleLaws("different number of modes"));
    }
    let t = norm_factor(norm);
    let mut total = 0.0;
    for (a, b) in law1.modes.iter().zip(&law2.modes) {
        if a.multiplicity != b.multiplicity || a.lambda != b.lambda {
            return Err(KlmcError::IncompatibleLaws("mode spectra differ"));
        }
        let w = w2_sq_2d(
            mat2::apply(&t, a.mean),
            &mat2::congruence(&t, &a.cov),
            mat2::apply(&t, b.mean),
            &mat2::congruence(&t, &b.cov),
        );
        total += a.multiplicity as f64 * w;
    }
    Ok(total.sqrt())
}

/// Exact W_{a,b}(π_h, π) with a = 4/γ², b = 1/γ on a quadratic target.
pub fn exact_bias(params: &KlmcParams, spectrum: &[(f64, usize)]) -> Result<f64> {
    let norm = norm_for(params.gamma())?;
    gaussian_w(
        &norm,
        &GaussianLaw::stationary(params, spectrum)?,
        &GaussianLaw::target(params.eta(), spectrum)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(sigma: f64, d: usize) -> GaussianLaw {
        GaussianLaw::new(vec![GaussianMode {
            lambda: 1.0,
            multiplicity: d,
            mean: [0.0; 2],
            cov: [[sigma * sigma, 0.0], [0.0, sigma * sigma]],
        }])
        .unwrap()
    }

    #[test]
    fn isotropic_closed_form() {
        let norm = WeightedNorm::new(1.0, 0.0).unwrap();
        let w = gaussian_w(&norm, &iso(0.7, 5), &iso(1.9, 5)).unwrap();
        assert!((w - (10f64).sqrt() * 1.2).abs() < 1e-13);
        assert_eq!(gaussian_w(&norm, &iso(0.7, 5), &iso(0.7, 5)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_psd_and_mismatch() {
        let bad = GaussianMode {
            lambda: 1.0,
            multiplicity: 1,
            mean: [0.0; 2],
            cov: [[1.0, 2.0], [2.0, 1.0]],
        };
        assert!(matches!(GaussianLaw::new(vec![bad]), Err(KlmcError::NotPsd(_))));
        let norm = WeightedNorm::new(1.0, 0.0).unwrap();
        assert!(gaussian_w(&norm, &iso(1.0, 2), &iso(1.0, 3)).is_err());
    }

    #[test]
    fn bias_vanishes_with_step() {
        let spec = [(0.5, 3), (2.0, 4)];
        let mut prev = f64::INFINITY;
        for h in [0.3, 0.1, 0.03, 0.01] {
            let b = exact_bias(&KlmcParams::new(h, 3.0, 0.2).unwrap(), &spec).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-2);
    }
}
