//! Stationary covariance of the per-mode linear chain Z' = SZ + ξ.

use super::mat2::{self, Mat2};
use super::mode::{mode_system, ModeSystem};
use crate::error::{KlmcError, Result};
use crate::model::KlmcParams;

/// Solve the 3×3 system A u = rhs with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut u = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= a[row][k] * u[k];
        }
        u[row] = acc / a[row][row];
    }
    Some(u)
}

/// Σ = SΣSᵀ + Q for a stable S.
pub fn solve_discrete_lyapunov(s: &Mat2, q: &Mat2) -> Result<Mat2> {
    let rho = mat2::spectral_radius(s);
    if !(rho < 1.0) {
        return Err(KlmcError::Unstable(rho));
    }
    let [[s11, s12], [s21, s22]] = *s;
    // Unknowns (σ11, σ12, σ22); rows are the (1,1), (1,2), (2,2) entries
    // of Σ − SΣSᵀ.
    let m = [
        [1.0 - s11 * s11, -2.0 * s11 * s12, -s12 * s12],
        [-s11 * s21, 1.0 - (s11 * s22 + s12 * s21), -s12 * s22],
        [-s21 * s21, -2.0 * s21 * s22, 1.0 - s22 * s22],
    ];
    let u = solve3(m, [q[0][0], q[0][1], q[1][1]]).ok_or(KlmcError::Unstable(rho))?;
    Ok([[u[0], u[1]], [u[1], u[2]]])
}

/// max |Σ − SΣSᵀ − Q| over max |Σ|.
pub fn lyapunov_residual(sys: &ModeSystem, sigma: &Mat2) -> f64 {
    let r = mat2::sub(&mat2::sub(sigma, &mat2::congruence(&sys.s, sigma)), &sys.q);
    mat2::max_abs(&r) / mat2::max_abs(sigma)
}

/// Exact stationary covariance of mode λ under the kernel.
pub fn lyapunov_stationary(params: &KlmcParams, lambda: f64) -> Result<Mat2> {
    let sys = mode_system(params, lambda)?;
    solve_discrete_lyapunov(&sys.s, &sys.q)
}

/// Σ_{k+1} = SΣ_kSᵀ + Q from Σ₀ = 0; kept as an independent check.
pub fn lyapunov_fixed_point(sys: &ModeSystem, iterations: usize) -> Mat2 {
    let mut sigma = [[0.0; 2]; 2];
    for _ in 0..iterations {
        sigma = mat2::add(&mat2::congruence(&sys.s, &sigma), &sys.q);
    }
    sigma
}
