//! Acceptance criteria, one test each. Every test writes a single
//! `criterion NN: PASS|FAIL ...` line straight to stderr so the verdicts show
//! up even when output capture is on.

use std::io::Write;
use std::time::{Duration, Instant};

use klmc::oracle::exact_bias;
use klmc::theory::{
    bias_bounds, bias_report_unchecked, check_condition_linear, complexity_plan, critical_zeta,
    linear_rate, max_step, Condition,
};
use klmc::verify::{
    bias_sandwich, bias_slopes, constant_audit, contraction_sandwich, coupling_suite,
    identity_sweep, stationarity_suite,
};
use klmc::{ConvexityProfile, KlmcParams};

const SEED: u64 = 0x5EED;

fn report(n: u32, ok: bool, elapsed: Duration, limit: Duration, detail: String) {
    let fast = elapsed < limit;
    let verdict = if ok && fast { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr().lock(),
        "criterion {n:02}: {verdict} ({:.3?} / limit {:?}) {detail}",
        elapsed,
        limit
    );
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(fast, "criterion {n} exceeded its time budget: {elapsed:?} >= {limit:?}");
}

#[test]
fn criterion_01_critical_point() {
    let t = Instant::now();
    let z = critical_zeta();
    let el = t.elapsed();
    let residual = (2.0 * z + 1.0) * (2.0 * z * z + 1.0) - (2.0 * z).exp();
    let ok = (z - 1.69).abs() <= 5e-3 && residual.abs() <= 1e-9;
    report(1, ok, el, Duration::from_millis(1), format!("zeta*={z:.15} residual={residual:e}"));
}

#[test]
fn criterion_02_step_boundary() {
    let beta = 1.0;
    let prof = ConvexityProfile::new(0.2, beta).unwrap();
    let t = Instant::now();
    let h = max_step(Condition::General, 2.0, 1.0 / beta, &prof).unwrap_or(f64::NAN);
    let el = t.elapsed();
    let ok = (h - 1.87).abs() <= 1e-2;
    report(2, ok, el, Duration::from_millis(1), format!("h*={h:.12}"));
}

fn overdamped() -> (KlmcParams, ConvexityProfile, f64) {
    let (alpha, beta) = (0.1, 1.0);
    let h_lmc = 1.0 / (2.0 * beta);
    let gamma = 1e6;
    let params = KlmcParams::new(h_lmc * gamma, gamma, 1.0).unwrap();
    (params, ConvexityProfile::new(alpha, beta).unwrap(), h_lmc)
}

#[test]
fn criterion_03_overdamped_contraction() {
    let t = Instant::now();
    let (params, prof, h_lmc) = overdamped();
    let c = linear_rate(&params, &prof);
    let assumption = check_condition_linear(&params, &prof);
    let el = t.elapsed();
    let target = h_lmc * prof.alpha();
    let rel = (c - target).abs() / target;
    let ok = rel <= 1e-6 && assumption;
    report(
        3,
        ok,
        el,
        Duration::from_millis(1),
        format!("c_tilde={c} rel_err={rel:e} linear_condition_holds={assumption}"),
    );
}

#[test]
fn criterion_04_overdamped_bias() {
    let t = Instant::now();
    let (params, prof, h_lmc) = overdamped();
    let d = 100;
    // The linearization condition fails at this boundary point (see
    // criterion 3), so the bounds are evaluated without the check.
    let rep = bias_report_unchecked(&params, &prof, d);
    let el = t.elapsed();
    let limit = (d as f64).sqrt() * prof.kappa() * h_lmc.sqrt() / 2f64.sqrt();
    let rel = (rep.e_pos - limit).abs() / limit;
    let ok = rep.e_mom <= 1e-3 * rep.e_pos && rel <= 1e-3;
    report(
        4,
        ok,
        el,
        Duration::from_millis(1),
        format!("e_pos={} limit={limit} rel_err={rel:e} e_mom={:e}", rep.e_pos, rep.e_mom),
    );
}

#[test]
fn criterion_05_contraction_sandwich() {
    let t = Instant::now();
    let (_, out) = contraction_sandwich(1000, SEED);
    let el = t.elapsed();
    report(
        5,
        out.passed(),
        el,
        Duration::from_secs(10),
        format!("instances={} failures={} max(rho^2-(1-c))={:e}", out.checked, out.failures.len(), out.worst),
    );
}

#[test]
fn criterion_06_bias_sandwich() {
    let t = Instant::now();
    let (_, out) = bias_sandwich(1000, SEED);
    let el = t.elapsed();
    report(
        6,
        out.passed(),
        el,
        Duration::from_secs(10),
        format!("instances={} failures={} max(exact/bound)={:.4}", out.checked, out.failures.len(), out.worst),
    );
}

#[test]
fn criterion_07_identities() {
    let t = Instant::now();
    let out = identity_sweep(10_000, SEED);
    let el = t.elapsed();
    report(
        7,
        out.passed(),
        el,
        Duration::from_secs(5),
        format!("points={} failures={} max_residual={:e}", out.checked, out.failures.len(), out.worst),
    );
}

#[test]
fn criterion_08_coupling_decay() {
    let t = Instant::now();
    let out = coupling_suite(10_000, SEED).unwrap();
    let el = t.elapsed();
    report(
        8,
        out.passed(),
        el,
        Duration::from_secs(5),
        format!("ratios={} max(ratio-bound)={:e} {:?}", out.checked, out.worst, out.failures.first()),
    );
}

#[test]
fn criterion_09_stationarity() {
    let t = Instant::now();
    let out = stationarity_suite(1_000_000, SEED).unwrap();
    let el = t.elapsed();
    report(
        9,
        out.passed(),
        el,
        Duration::from_secs(30),
        format!("max |z|={:.2} {:?}", out.worst, out.failures),
    );
}

#[test]
fn criterion_10_figure_slopes() {
    let t = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for gamma in [0.2, 1.0, 5.0] {
        let s = bias_slopes(gamma, 0.5, 10.0, 100);
        ok &= (s.pos_small - 2.0).abs() <= 0.1
            && (s.pos_large - 0.5).abs() <= 0.1
            && (s.mom_small - 1.0).abs() <= 0.1;
        detail += &format!(
            "gamma={gamma}: pos {:.4}/{:.4} mom {:.4}; ",
            s.pos_small, s.pos_large, s.mom_small
        );
        // Sign change of dE_mom/dζ on a ζ grid.
        let zs = klmc::numerics::logspace(0.5, 5.0, 400);
        let e_mom = |z: f64| {
            let p = KlmcParams::from_zeta(z, gamma, 0.5).unwrap();
            klmc::theory::bias_terms(&p, 10.0, 100).1
        };
        let slopes: Vec<f64> = zs.windows(2).map(|w| e_mom(w[1]) - e_mom(w[0])).collect();
        let flip = slopes.windows(2).position(|s| s[0] > 0.0 && s[1] <= 0.0);
        match flip {
            Some(i) => {
                let (lo, hi) = (zs[i], zs[i + 2]);
                ok &= lo - 5e-3 <= 1.69 && 1.69 <= hi + 5e-3;
                detail += &format!("flip in [{lo:.4}, {hi:.4}]; ");
            }
            None => {
                ok = false;
                detail += "no sign change; ";
            }
        }
    }
    let el = t.elapsed();
    report(10, ok, el, Duration::from_secs(5), detail);
}

#[test]
fn criterion_11_planner() {
    let t = Instant::now();
    let (alpha, beta, d, eps) = (0.1, 1.0, 100usize, 0.05);
    let prof = ConvexityProfile::new(alpha, beta).unwrap();
    let spectrum = [(alpha, d / 2), (beta, d - d / 2)];
    let mut ok = true;
    let mut detail = String::new();
    let choices = [
        ("unit_mass", (27.0 * beta).sqrt(), 1.0, 0.5),
        ("half_inverse_beta", (13.5f64).sqrt(), 1.0 / (2.0 * beta), 1.0),
    ];
    for (name, gamma, eta, h0) in choices {
        let plan = complexity_plan(&prof, d, eps, gamma, eta, h0, 10.0).unwrap();
        let params = KlmcParams::new(plan.h_star, gamma, eta).unwrap();
        let b = bias_bounds(&params, &prof, d).unwrap();
        let exact = exact_bias(&params, &spectrum).unwrap();
        ok &= b.e_pos + b.e_mom <= 2.0 * eps / 3.0 && exact <= eps;
        detail += &format!(
            "{name}: h*={:.3e} n*={} bound={:.4e} exact={:.4e}; ",
            plan.h_star,
            plan.n_star,
            b.e_pos + b.e_mom,
            exact
        );
    }
    let el = t.elapsed();
    report(11, ok, el, Duration::from_secs(1), detail);
}

#[test]
fn criterion_12_constant_audit() {
    let t = Instant::now();
    let audit = constant_audit(10_000, SEED);
    let el = t.elapsed();
    report(
        12,
        audit.passed(),
        el,
        Duration::from_secs(5),
        format!(
            "4/15 dominates {}/{} (min ratio {:.4}), sqrt(4/15) dominates {}/{} (min ratio {:.4})",
            audit.stated_dominates,
            audit.instances,
            audit.stated_min_ratio,
            audit.derived_dominates,
            audit.instances,
            audit.derived_min_ratio
        ),
    );
}
