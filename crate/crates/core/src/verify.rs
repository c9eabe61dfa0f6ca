//! Seeded randomized sweeps that cross-check the calculators against the
//! oracles. Instance `i` of a sweep draws from stream `i`, so results do not
//! depend on scheduling and are merged in index order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::integrator::{coupling_decay, default_burn_in, run_chain, ChainOptions, Kernel, RngStream};
use crate::model::{norm_for, ConvexityProfile, IsotropicQuadratic, KlmcParams, LogCoshQuadratic, PhaseState};
use crate::numerics::{logspace, ls_slope};
use crate::oracle::{exact_bias, exact_contraction_factor, identity_suite, lyapunov_stationary};
use crate::theory::{
    bias_bounds, bias_report_unchecked, bias_terms, check_condition_general, check_condition_linear,
    contraction_exact, max_step, Condition,
};

/// Stream ids of the different suites live in disjoint ranges.
const SUITE_STRIDE: u64 = 1 << 40;

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// One random parameter set together with a Hessian eigenvalue in [α, β].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub h: f64,
    pub gamma: f64,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl Instance {
    pub fn params(&self) -> KlmcParams {
        KlmcParams::new(self.h, self.gamma, self.eta).expect("sampled params are valid")
    }

    pub fn profile(&self) -> ConvexityProfile {
        ConvexityProfile::new(self.alpha, self.beta).expect("sampled profile is valid")
    }
}

/// Draw parameters satisfying the general condition, or the linearization
/// condition when `linear` is set.
pub fn sample_instance(stream: &mut RngStream, linear: bool) -> Instance {
    let rng = stream.rng();
    let beta = log_uniform(rng, 0.1, 10.0);
    let alpha = beta / log_uniform(rng, 1.0, 100.0);
    let eta = log_uniform(rng, 0.1, 10.0);
    let margin = log_uniform(rng, 1.05, 50.0);
    let (floor, cond) = if linear {
        (8.0, Condition::Linear)
    } else {
        (1.5 + 1.0 / 3.0, Condition::General)
    };
    let gamma = (floor * eta * beta * margin).sqrt();
    let profile = ConvexityProfile::new(alpha, beta).expect("alpha <= beta");
    let h_max = max_step(cond, gamma, eta, &profile).expect("friction above the h -> 0 floor");
    let h = h_max * log_uniform(rng, 1e-3, 0.999);
    let lambda = match rng.random_range(0..8) {
        0 => alpha,
        1 => beta,
        _ => alpha + rng.random::<f64>() * (beta - alpha),
    };
    Instance {
        h,
        gamma,
        eta,
        alpha,
        beta,
        lambda,
    }
}

/// One CSV row of a verification sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub h: f64,
    pub gamma: f64,
    pub eta: f64,
    pub lambda_or_alpha: f64,
    pub beta: f64,
    pub c_exact: Option<f64>,
    pub rho_sq: Option<f64>,
    pub e_pos: Option<f64>,
    pub e_mom: Option<f64>,
    pub exact_bias: Option<f64>,
    /// Names of the checks that passed, joined by `|`; failed ones are
    /// prefixed with `!`.
    pub pass_flags: String,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        !self.pass_flags.contains('!')
    }
}

fn flags(checks: &[(&str, bool)]) -> String {
    checks
        .iter()
        .map(|(name, ok)| if *ok { name.to_string() } else { format!("!{name}") })
        .collect::<Vec<_>>()
        .join("|")
}

/// Summary of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub checked: usize,
    pub failures: Vec<String>,
    /// Suite-specific worst-case figure (largest residual, ratio, z-score...).
    pub worst: f64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn outcome(name: &str, rows: &[VerifyRow], worst: f64) -> SuiteOutcome {
    SuiteOutcome {
        name: name.into(),
        checked: rows.len(),
        failures: rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.passed())
            .map(|(i, r)| format!("instance {i}: {}", r.pass_flags))
            .collect(),
        worst,
    }
}

/// ρ² ≤ 1 − c_exact + 1e-10 at the sampled λ and at the minimizing λ, and
/// c̃ ≤ c_exact + 1e-10 whenever the linearization condition holds.
/// Even-indexed instances satisfy the general condition, odd ones the
/// linearization condition.
pub fn contraction_sandwich(instances: usize, seed: u64) -> (Vec<VerifyRow>, SuiteOutcome) {
    let rows: Vec<VerifyRow> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(seed, SUITE_STRIDE + i as u64);
            let inst = sample_instance(&mut stream, i % 2 == 1);
            let (params, profile) = (inst.params(), inst.profile());
            let rep = contraction_exact(&params, &profile);
            let norm = norm_for(inst.gamma).expect("gamma > 0");
            let c = rep.c_exact.unwrap_or(f64::NAN);
            let lambda_star = rep.argmin_r.unwrap_or(f64::NAN) * inst.gamma * inst.gamma / inst.eta;
            let rho_sq = exact_contraction_factor(&params, inst.lambda, &norm)
                .max(exact_contraction_factor(&params, lambda_star, &norm));
            let linear_ok = match rep.c_linear {
                Some(cl) if rep.condition_linear_ok => cl <= c + 1e-10,
                _ => true,
            };
            VerifyRow {
                h: inst.h,
                gamma: inst.gamma,
                eta: inst.eta,
                lambda_or_alpha: inst.lambda,
                beta: inst.beta,
                c_exact: rep.c_exact,
                rho_sq: Some(rho_sq),
                e_pos: None,
                e_mom: None,
                exact_bias: None,
                pass_flags: flags(&[
                    ("condition", rep.condition_general_ok),
                    ("c_in_unit", c > 0.0 && c < 1.0),
                    ("rho_sandwich", rho_sq <= 1.0 - c + 1e-10),
                    ("linear_below_exact", linear_ok),
                ]),
            }
        })
        .collect();
    let worst = rows
        .iter()
        .map(|r| r.rho_sq.unwrap_or(f64::NAN) - (1.0 - r.c_exact.unwrap_or(f64::NAN)))
        .fold(f64::NEG_INFINITY, f64::max);
    let out = outcome("contraction_sandwich", &rows, worst);
    (rows, out)
}

/// Spectrum for the bias sweep: α, a midpoint and β with multiplicities
/// summing to d.
fn bias_spectrum(stream: &mut RngStream, alpha: f64, beta: f64) -> Vec<(f64, usize)> {
    let rng = stream.rng();
    let d: usize = rng.random_range(1..=1000);
    let k1 = rng.random_range(0..=d);
    let k2 = rng.random_range(0..=d - k1);
    let k3 = d - k1 - k2;
    let mid = alpha + rng.random::<f64>() * (beta - alpha);
    let mut spec: Vec<(f64, usize)> = Vec::new();
    for (l, k) in [(alpha, k1), (mid, k2), (beta, k3)] {
        if k == 0 {
            continue;
        }
        match spec.iter_mut().find(|(m, _)| *m == l) {
            Some((_, kk)) => *kk += k,
            None => spec.push((l, k)),
        }
    }
    spec
}

/// exact_bias ≤ E_pos + E_mom on random admissible quadratic targets.
pub fn bias_sandwich(instances: usize, seed: u64) -> (Vec<VerifyRow>, SuiteOutcome) {
    let rows: Vec<VerifyRow> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(seed, 2 * SUITE_STRIDE + i as u64);
            let inst = sample_instance(&mut stream, true);
            let spec = bias_spectrum(&mut stream, inst.alpha, inst.beta);
            let d = spec.iter().map(|m| m.1).sum();
            let (params, profile) = (inst.params(), inst.profile());
            let (bound, exact) = match (bias_bounds(&params, &profile, d), exact_bias(&params, &spec)) {
                (Ok(b), Ok(e)) => (Some(b), Some(e)),
                (b, e) => (b.ok(), e.ok()),
            };
            let ok = match (&bound, exact) {
                (Some(b), Some(e)) => e <= b.e_pos + b.e_mom,
                _ => false,
            };
            VerifyRow {
                h: inst.h,
                gamma: inst.gamma,
                eta: inst.eta,
                lambda_or_alpha: inst.alpha,
                beta: inst.beta,
                c_exact: None,
                rho_sq: None,
                e_pos: bound.as_ref().map(|b| b.e_pos),
                e_mom: bound.as_ref().map(|b| b.e_mom),
                exact_bias: exact,
                pass_flags: flags(&[("linear_condition", bound.is_some()), ("bias_sandwich", ok)]),
            }
        })
        .collect();
    let worst = rows
        .iter()
        .map(|r| r.exact_bias.unwrap_or(f64::NAN) / (r.e_pos.unwrap_or(0.0) + r.e_mom.unwrap_or(0.0)))
        .fold(f64::NEG_INFINITY, f64::max);
    let out = outcome("bias_sandwich", &rows, worst);
    (rows, out)
}

/// Polynomial and block identities at random (r, ζ) ∈ (1e-3, 10)².
pub fn identity_sweep(points: usize, seed: u64) -> SuiteOutcome {
    let reports: Vec<_> = (0..points)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(seed, 3 * SUITE_STRIDE + i as u64);
            let rng = stream.rng();
            let r = log_uniform(rng, 1e-3, 10.0);
            let zeta = log_uniform(rng, 1e-3, 10.0);
            identity_suite(r, zeta)
        })
        .collect();
    SuiteOutcome {
        name: "identities".into(),
        checked: reports.len(),
        failures: reports
            .iter()
            .filter(|r| !r.passed())
            .map(|r| format!("r={:e} zeta={:e} max_residual={:e}", r.r, r.zeta, r.max_residual()))
            .collect(),
        worst: reports.iter().map(|r| r.max_residual()).fold(0.0, f64::max),
    }
}

/// Setup for the log-cosh coupling experiment: d = 10, spectrum log-spaced
/// in [0.01, 1], perturbation s = 0.02, γ = √(27/2), η = 1/(2β), h = 1.
/// A small s keeps the slow coordinate slow, so the coupled difference stays
/// far above rounding level over 10⁴ steps.
pub fn coupling_setup() -> (KlmcParams, LogCoshQuadratic, ConvexityProfile) {
    let pot = LogCoshQuadratic::new(logspace(0.01, 1.0, 10), 0.02).expect("valid spectrum");
    let profile = crate::model::Potential::profile(&pot);
    let params = KlmcParams::new(1.0, (13.5f64).sqrt(), 1.0 / (2.0 * profile.beta())).expect("valid");
    (params, pot, profile)
}

/// Every one-step ratio of the coupled distance stays below 1 − hηα/γ.
pub fn coupling_suite(steps: usize, seed: u64) -> Result<SuiteOutcome> {
    let (params, pot, profile) = coupling_setup();
    let mut failures = Vec::new();
    if !check_condition_linear(&params, &profile) {
        failures.push("linearization condition fails for the coupling setup".into());
    }
    let bound = 1.0 - crate::theory::linear_rate(&params, &profile);
    let kernel = Kernel::new(params, pot)?;
    let mut init = RngStream::new(seed, 4 * SUITE_STRIDE);
    let mut draw = |scale: f64| {
        let mut v = vec![0.0; 10];
        init.fill_normal(&mut v);
        v.iter().map(|x| x * scale).collect::<Vec<_>>()
    };
    let a = PhaseState::new(draw(5.0), draw(1.0))?;
    let b = PhaseState::new(draw(5.0), draw(1.0))?;
    let norm = norm_for(params.gamma())?;
    let mut stream = RngStream::new(seed, 4 * SUITE_STRIDE + 1);
    let dec = coupling_decay(&kernel, &a, &b, steps, &mut stream, &norm)?;
    let ratios = dec.ratios();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    for (k, r) in ratios.iter().enumerate() {
        if *r > bound + 1e-12 {
            failures.push(format!("step {k}: ratio {r} > {bound}"));
        }
    }
    if ratios.len() < steps {
        failures.push(format!("only {} ratios recorded", ratios.len()));
    }
    Ok(SuiteOutcome {
        name: "coupling_decay".into(),
        checked: ratios.len(),
        failures,
        worst: worst - bound,
    })
}

/// Long chain on an isotropic Gaussian: pooled E[x²], E[xv], E[v²] within
/// three batch-means standard errors of the Lyapunov covariance.
pub fn stationarity_suite(steps: usize, seed: u64) -> Result<SuiteOutcome> {
    let (lambda, d) = (1.0, 4);
    let params = KlmcParams::new(0.5, 2.0, 1.0)?;
    let kernel = Kernel::new(params, IsotropicQuadratic::new(d, lambda)?)?;
    let sigma = lyapunov_stationary(&params, lambda)?;
    let opts = ChainOptions {
        burn_in: default_burn_in(&params, lambda),
        thin: None,
        batches: 100,
    };
    let mut stream = RngStream::new(seed, 5 * SUITE_STRIDE);
    let res = run_chain(&kernel, &PhaseState::zeros(d), steps, &mut stream, &opts)?;
    let (mean, se) = res.moments.pooled_second_moments();
    let target = [sigma[0][0], sigma[0][1], sigma[1][1]];
    let names = ["xx", "xv", "vv"];
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..3 {
        let z = (mean[k] - target[k]).abs() / se[k];
        worst = worst.max(z);
        if !(z <= 3.0) {
            failures.push(format!("{}: empirical {} vs {} ({z:.2} se)", names[k], mean[k], target[k]));
        }
    }
    Ok(SuiteOutcome {
        name: "stationarity".into(),
        checked: 3,
        failures,
        worst,
    })
}

/// Which underdamped position-bias constant dominates the general bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantAudit {
    pub instances: usize,
    /// Instances with e_pos ≤ e_pos_under (constant 4/15).
    pub stated_dominates: usize,
    /// Instances with e_pos ≤ e_pos_under_derived (constant √(4/15)).
    pub derived_dominates: usize,
    /// Smallest e_pos_under / e_pos seen.
    pub stated_min_ratio: f64,
    pub derived_min_ratio: f64,
}

impl ConstantAudit {
    pub fn passed(&self) -> bool {
        self.stated_dominates == self.instances || self.derived_dominates == self.instances
    }
}

/// Linear-admissible instances with ζ log-uniform in [1e-4, 0.1].
pub fn constant_audit(instances: usize, seed: u64) -> ConstantAudit {
    let ratios: Vec<(f64, f64)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(seed, 6 * SUITE_STRIDE + i as u64);
            let inst = sample_instance(&mut stream, true);
            let zeta = log_uniform(stream.rng(), 1e-4, 0.1);
            let params = KlmcParams::from_zeta(zeta, inst.gamma, inst.eta).expect("valid");
            let profile = inst.profile();
            debug_assert!(check_condition_linear(&params, &profile));
            let d = stream.rng().random_range(1..=1000);
            let rep = bias_report_unchecked(&params, &profile, d);
            (rep.e_pos_under / rep.e_pos, rep.e_pos_under_derived / rep.e_pos)
        })
        .collect();
    ConstantAudit {
        instances,
        stated_dominates: ratios.iter().filter(|r| r.0 >= 1.0).count(),
        derived_dominates: ratios.iter().filter(|r| r.1 >= 1.0).count(),
        stated_min_ratio: ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        derived_min_ratio: ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
    }
}

/// Implication sweep: the linearization condition implies the general one.
pub fn implication_sweep(instances: usize, seed: u64) -> SuiteOutcome {
    let bad: Vec<String> = (0..instances)
        .into_par_iter()
        .filter_map(|i| {
            let mut stream = RngStream::new(seed, 7 * SUITE_STRIDE + i as u64);
            let rng = stream.rng();
            let params = KlmcParams::new(
                log_uniform(rng, 1e-3, 10.0),
                log_uniform(rng, 1e-2, 100.0),
                log_uniform(rng, 1e-2, 10.0),
            )
            .expect("valid");
            let beta = log_uniform(rng, 1e-2, 10.0);
            let profile = ConvexityProfile::new(beta / 10.0, beta).expect("valid");
            (check_condition_linear(&params, &profile) && !check_condition_general(&params, &profile))
                .then(|| format!("{params:?} beta={beta}"))
        })
        .collect();
    SuiteOutcome {
        name: "assumption_implication".into(),
        checked: instances,
        failures: bad,
        worst: 0.0,
    }
}

/// Fitted log-log slopes of the general bias terms against h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSlopes {
    pub pos_small: f64,
    pub pos_large: f64,
    pub mom_small: f64,
}

/// Slopes over ζ ∈ [1e-4, 1e-2] and ζ ∈ [1e2, 1e4] at fixed γ, η, κ, d.
pub fn bias_slopes(gamma: f64, eta: f64, kappa: f64, d: usize) -> BiasSlopes {
    let fit = |lo: f64, hi: f64, pick: fn((f64, f64)) -> f64| {
        let hs = logspace(lo / gamma, hi / gamma, 64);
        let (x, y): (Vec<f64>, Vec<f64>) = hs
            .iter()
            .map(|&h| {
                let p = KlmcParams::new(h, gamma, eta).expect("valid");
                (h.ln(), pick(bias_terms(&p, kappa, d)).ln())
            })
            .unzip();
        ls_slope(&x, &y)
    };
    BiasSlopes {
        pos_small: fit(1e-4, 1e-2, |t| t.0),
        pos_large: fit(1e2, 1e4, |t| t.0),
        mom_small: fit(1e-4, 1e-2, |t| t.1),
    }
}

/// Full verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub instances: usize,
    pub suites: Vec<SuiteOutcome>,
    pub constant_audit: ConstantAudit,
    pub passed: bool,
}

/// Sandwich sweeps of `instances`, identity and audit sweeps of
/// 10·`instances`, the coupling run and a 10⁶-step stationarity chain.
pub fn run_all(instances: usize, seed: u64) -> Result<(VerifyReport, Vec<VerifyRow>)> {
    let (mut rows, contraction) = contraction_sandwich(instances, seed);
    let (bias_rows, bias) = bias_sandwich(instances, seed);
    rows.extend(bias_rows);
    let suites = vec![
        contraction,
        bias,
        identity_sweep(10 * instances, seed),
        implication_sweep(10 * instances, seed),
        coupling_suite(10_000, seed)?,
        stationarity_suite(1_000_000, seed)?,
    ];
    let audit = constant_audit(10 * instances, seed);
    let passed = suites.iter().all(SuiteOutcome::passed) && audit.passed();
    Ok((
        VerifyReport {
            seed,
            instances,
            suites,
            constant_audit: audit,
            passed,
        },
        rows,
    ))
}
