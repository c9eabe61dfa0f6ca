use rayon::prelude::*;
use serde::Serialize;

use klmc::integrator::{run_chain, ChainOptions, Kernel, RngStream};
use klmc::numerics::logspace;
use klmc::oracle::{exact_bias, lyapunov_stationary};
use klmc::theory::{
    bias_bounds, bias_report_unchecked, bias_terms, c_minus, check_condition_linear, complexity_plan,
    contraction_exact, critical_zeta, linear_rate, r_lin, r_max, ComplexityPlan, ContractionReport,
};
use klmc::verify::run_all;
use klmc::{AnisotropicQuadratic, ConvexityProfile, KlmcParams, PhaseState};

use crate::output::{Cell, Sink, Table};
use crate::{BiasArgs, CliError, ContractArgs, LimitArgs, PlanArgs, SampleArgs, VerifyArgs};

const CURVE_POINTS: usize = 1024;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Serialize)]
struct CurveSummary {
    zeta: f64,
    r_max: f64,
    r_lin: f64,
    peak_r: f64,
    peak_c_minus: f64,
}

#[derive(Serialize)]
struct ContractOutput {
    curves: Vec<CurveSummary>,
    contraction: Option<ContractionReport>,
}

pub fn contract(a: &ContractArgs, sink: &Sink) -> Result<(), CliError> {
    let mut curves = Vec::new();
    for &zeta in &a.zetas {
        let rm = r_max(zeta);
        let mut t = Table::new(["r", "c_minus"]);
        let mut peak = (0.0, f64::NEG_INFINITY);
        for i in 1..=CURVE_POINTS {
            let r = 1.2 * rm * i as f64 / CURVE_POINTS as f64;
            let c = c_minus(r, zeta);
            if c > peak.1 {
                peak = (r, c);
            }
            t.push(vec![r.into(), c.into()]);
        }
        sink.table(&format!("contract_zeta_{zeta}"), &t)?;
        curves.push(CurveSummary {
            zeta,
            r_max: rm,
            r_lin: r_lin(zeta),
            peak_r: peak.0,
            peak_c_minus: peak.1,
        });
    }
    let contraction = match (a.h, a.gamma, a.eta, a.alpha, a.beta) {
        (Some(h), Some(g), Some(eta), Some(alpha), Some(beta)) => {
            let params = KlmcParams::new(h, g, eta)?;
            let profile = ConvexityProfile::new(alpha, beta)?;
            Some(contraction_exact(&params, &profile))
        }
        (None, None, None, None, None) => None,
        _ => return Err(usage("the contraction report needs all of --h --gamma --eta --alpha --beta")),
    };
    let violated = contraction.as_ref().is_some_and(|c| !c.condition_general_ok);
    sink.json("contract_report", &ContractOutput { curves, contraction })?;
    if violated {
        return Err(CliError::Condition("general condition fails; report written without c_exact".into()));
    }
    Ok(())
}

pub fn bias(a: &BiasArgs, sink: &Sink) -> Result<(), CliError> {
    if a.d == 0 || a.points < 2 {
        return Err(usage("--d must be >= 1 and --points >= 2"));
    }
    if a.kappa < 1.0 {
        return Err(usage("--kappa must be >= 1"));
    }
    let profile = ConvexityProfile::new(a.beta / a.kappa, a.beta)?;
    let zc = critical_zeta();
    let mut t = Table::new(["gamma", "h", "zeta", "e_pos", "e_mom", "crossing", "linear_condition_ok"]);
    for &g in &a.gammas {
        let mut zetas: Vec<(f64, bool)> = logspace(1e-4, 1e3, a.points).into_iter().map(|z| (z, false)).collect();
        let at = zetas.partition_point(|&(z, _)| z < zc);
        zetas.insert(at, (zc, true));
        for (zeta, crossing) in zetas {
            let params = KlmcParams::from_zeta(zeta, g, a.eta)?;
            let (ep, em) = bias_terms(&params, a.kappa, a.d);
            t.push(vec![
                g.into(),
                params.h().into(),
                zeta.into(),
                ep.into(),
                em.into(),
                crossing.into(),
                check_condition_linear(&params, &profile).into(),
            ]);
        }
    }
    sink.table("bias", &t)?;
    Ok(())
}

#[derive(Serialize)]
struct PlanCheck {
    e_pos: f64,
    e_mom: f64,
    bound: f64,
    budget: f64,
    ok: bool,
}

#[derive(Serialize)]
struct PlanOutput {
    plan: ComplexityPlan,
    check: PlanCheck,
}

fn make_plan(a: &PlanArgs) -> Result<(ComplexityPlan, PlanCheck, ConvexityProfile), CliError> {
    let profile = ConvexityProfile::new(a.alpha, a.beta)?;
    let gamma = a.gamma.unwrap_or((13.5f64).sqrt());
    let eta = a.eta.unwrap_or(1.0 / (2.0 * a.beta));
    let plan = complexity_plan(&profile, a.d, a.epsilon, gamma, eta, a.h0, a.w0)?;
    let params = KlmcParams::new(plan.h_star, gamma, eta)?;
    let b = bias_bounds(&params, &profile, a.d)?;
    let budget = 2.0 * a.epsilon / 3.0;
    let check = PlanCheck {
        e_pos: b.e_pos,
        e_mom: b.e_mom,
        bound: b.e_pos + b.e_mom,
        budget,
        ok: b.e_pos + b.e_mom <= budget,
    };
    Ok((plan, check, profile))
}

pub fn plan(a: &PlanArgs, sink: &Sink) -> Result<(), CliError> {
    let (plan, check, _) = make_plan(a)?;
    let ok = check.ok;
    sink.json("plan", &PlanOutput { plan, check })?;
    if !ok {
        return Err(CliError::Verification("planned bias bound exceeds 2ε/3".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct ChainSummary {
    chain: usize,
    pooled_mean: [f64; 3],
    pooled_se: [f64; 3],
}

#[derive(Serialize)]
struct SampleSummary {
    h: f64,
    steps: u64,
    gamma: f64,
    eta: f64,
    planned: bool,
    epsilon: f64,
    exact_bias: f64,
    exact_bias_ok: bool,
    /// Coordinate averages of E[x²], E[xv], E[v²] under π_h.
    stationary_pooled: [f64; 3],
    chains: Vec<ChainSummary>,
}

pub fn sample(a: &SampleArgs, seed: u64, sink: &Sink) -> Result<(), CliError> {
    let p = &a.plan;
    if p.d == 0 || a.chains == 0 {
        return Err(usage("--d and --chains must be >= 1"));
    }
    let gamma = p.gamma.unwrap_or((13.5f64).sqrt());
    let eta = p.eta.unwrap_or(1.0 / (2.0 * p.beta));
    let (h, steps, planned) = match (a.h, a.steps) {
        (Some(h), Some(n)) => (h, n, false),
        (h, n) => {
            let (plan, _, _) = make_plan(p)?;
            (h.unwrap_or(plan.h_star), n.unwrap_or(plan.n_star), h.is_none())
        }
    };
    if steps == 0 {
        return Err(usage("--steps must be >= 1"));
    }
    let params = KlmcParams::new(h, gamma, eta)?;
    let eigs = logspace(p.alpha, p.beta, p.d);
    let target = AnisotropicQuadratic::new(eigs.clone())?;
    let spectrum = klmc::model::collapse_modes(&eigs);
    let bias = exact_bias(&params, &spectrum)?;
    let mut stationary = [0.0; 3];
    for &(lambda, k) in &spectrum {
        let s = lyapunov_stationary(&params, lambda)?;
        let w = k as f64 / p.d as f64;
        stationary[0] += w * s[0][0];
        stationary[1] += w * s[0][1];
        stationary[2] += w * s[1][1];
    }
    let kernel = Kernel::new(params, target)?;
    let n = usize::try_from(steps).map_err(|_| usage("--steps too large"))?;
    let opts = ChainOptions {
        burn_in: 0,
        thin: Some(a.thin.unwrap_or((n / 1000).max(1))),
        ..ChainOptions::default()
    };
    let results: Vec<_> = (0..a.chains)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(seed, i as u64);
            run_chain(&kernel, &PhaseState::zeros(p.d), n, &mut stream, &opts)
        })
        .collect();
    let mut chains = Vec::with_capacity(a.chains);
    for (i, res) in results.into_iter().enumerate() {
        let res = res?;
        let mut cols = vec!["step".to_string()];
        cols.extend((0..p.d).map(|j| format!("x_{j}")));
        cols.extend((0..p.d).map(|j| format!("v_{j}")));
        let mut t = Table::new(cols);
        for row in &res.trajectory {
            let mut cells: Vec<Cell> = vec![(row.step as u64).into()];
            cells.extend(row.x.iter().chain(&row.v).map(|&x| Cell::from(x)));
            t.push(cells);
        }
        sink.table(&format!("trajectory_chain{i}"), &t)?;
        let (mean, se) = res.moments.pooled_second_moments();
        chains.push(ChainSummary {
            chain: i,
            pooled_mean: mean,
            pooled_se: se,
        });
    }
    let ok = !planned || bias <= p.epsilon;
    sink.json(
        "sample_summary",
        &SampleSummary {
            h,
            steps,
            gamma,
            eta,
            planned,
            epsilon: p.epsilon,
            exact_bias: bias,
            exact_bias_ok: ok,
            stationary_pooled: stationary,
            chains,
        },
    )?;
    if !ok {
        return Err(CliError::Verification(format!("exact bias {bias} exceeds epsilon {}", p.epsilon)));
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs, seed: u64, sink: &Sink) -> Result<(), CliError> {
    if a.instances == 0 {
        return Err(usage("--instances must be >= 1"));
    }
    let (report, rows) = run_all(a.instances, seed)?;
    sink.json("verify_report", &report)?;
    sink.records("verify_rows", &rows)?;
    for s in &report.suites {
        eprintln!(
            "{:<22} {:>6} checked  {:>4} failed  worst {:e}",
            s.name,
            s.checked,
            s.failures.len(),
            s.worst
        );
    }
    if !report.passed {
        return Err(CliError::Verification("see verify_report.json".into()));
    }
    Ok(())
}

pub fn limit(a: &LimitArgs, sink: &Sink) -> Result<(), CliError> {
    if a.d == 0 || a.points < 2 || a.gamma_max <= a.gamma_min {
        return Err(usage("need --d >= 1, --points >= 2 and --gamma-max > --gamma-min"));
    }
    let profile = ConvexityProfile::new(a.alpha, a.beta)?;
    let h_lmc = a.h_lmc.unwrap_or(1.0 / (2.0 * a.beta));
    let c_limit = h_lmc * a.alpha;
    let e_pos_limit = (a.d as f64).sqrt() * profile.kappa() * (h_lmc / 2.0).sqrt();
    let mut t = Table::new([
        "gamma",
        "h",
        "zeta",
        "c_tilde",
        "e_pos",
        "e_mom",
        "c_limit",
        "e_pos_limit",
        "linear_condition_ok",
    ]);
    for g in logspace(a.gamma_min, a.gamma_max, a.points) {
        let params = KlmcParams::new(h_lmc * g, g, 1.0)?;
        let rep = bias_report_unchecked(&params, &profile, a.d);
        t.push(vec![
            g.into(),
            params.h().into(),
            params.zeta().into(),
            linear_rate(&params, &profile).into(),
            rep.e_pos.into(),
            rep.e_mom.into(),
            c_limit.into(),
            e_pos_limit.into(),
            check_condition_linear(&params, &profile).into(),
        ]);
    }
    sink.table("limit", &t)?;
    Ok(())
}
