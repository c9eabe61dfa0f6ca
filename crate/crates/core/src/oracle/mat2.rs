//! Closed-form 2×2 linear algebra.

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn scale(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
    add(a, &scale(b, -1.0))
}

pub fn trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn apply(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// A·B·Aᵀ.
pub fn congruence(a: &Mat2, b: &Mat2) -> Mat2 {
    mul(&mul(a, b), &transpose(a))
}

pub fn max_abs(a: &Mat2) -> f64 {
    a.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

/// Inverse of a nonsingular matrix.
pub fn inverse(a: &Mat2) -> Mat2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

/// Eigenvalues (λ_min, λ_max) of a symmetric matrix.
pub fn eig_sym(a: &Mat2) -> (f64, f64) {
    let m = 0.5 * (a[0][0] + a[1][1]);
    let h = 0.5 * (a[0][0] - a[1][1]);
    let r = h.hypot(0.5 * (a[0][1] + a[1][0]));
    (m - r, m + r)
}

/// Spectral radius of a general real 2×2 matrix.
pub fn spectral_radius(a: &Mat2) -> f64 {
    let t = trace(a);
    let d = det(a);
    let disc = t * t / 4.0 - d;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (t / 2.0 + s).abs().max((t / 2.0 - s).abs())
    } else {
        d.sqrt()
    }
}

/// Square root of a symmetric PSD matrix: (M + √det·I)/√(tr + 2√det).
pub fn sqrt_psd(a: &Mat2) -> Mat2 {
    let s = det(a).max(0.0).sqrt();
    let t = (trace(a) + 2.0 * s).max(0.0).sqrt();
    if t == 0.0 {
        return [[0.0; 2]; 2];
    }
    [[(a[0][0] + s) / t, a[0][1] / t], [a[1][0] / t, (a[1][1] + s) / t]]
}

/// tr √M for PSD M, without forming the root.
pub fn trace_sqrt_psd(a: &Mat2) -> f64 {
    (trace(a) + 2.0 * det(a).max(0.0).sqrt()).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let a = [[2.0, 0.7], [0.7, 1.1]];
        let r = sqrt_psd(&a);
        let back = mul(&r, &r);
        assert!(max_abs(&sub(&back, &a)) < 1e-15);
        assert!((trace(&r) - trace_sqrt_psd(&a)).abs() < 1e-15);
    }

    #[test]
    fn eigen_and_radius() {
        let (lo, hi) = eig_sym(&[[2.0, 1.0], [1.0, 2.0]]);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
        // Rotation by 90° scaled by 0.5.
        assert!((spectral_radius(&[[0.0, -0.5], [0.5, 0.0]]) - 0.5).abs() < 1e-15);
        assert!((spectral_radius(&[[0.9, 0.0], [0.0, -0.95]]) - 0.95).abs() < 1e-15);
    }
}
