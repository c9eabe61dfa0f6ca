use serde::{Deserialize, Serialize};

use super::{Kernel, RngStream};
use crate::error::{KlmcError, Result};
use crate::model::{weighted_dist_sq, KlmcParams, PhaseState, Potential, WeightedNorm};
use crate::numerics::ls_slope;

/// Ten relaxation times of the linear contraction rate: 10·⌈γ/(hηα)⌉.
pub fn default_burn_in(params: &KlmcParams, alpha: f64) -> usize {
    let relax = params.gamma() / (params.h() * params.eta() * alpha);
    (10.0 * relax.ceil()).min(1e12) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOptions {
    pub burn_in: usize,
    /// Record every `thin`-th post-burn-in state.
    pub thin: Option<usize>,
    /// Number of batches for batch-means standard errors.
    pub batches: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            burn_in: 0,
            thin: None,
            batches: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// Running moments of the post-burn-in states.
///
/// Per-coordinate means and co-moments use Welford updates. The pooled
/// second moments (averaged over coordinates) are also tracked in batches so
/// that Monte Carlo standard errors account for autocorrelation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean_x: Vec<f64>,
    pub mean_v: Vec<f64>,
    m2_xx: Vec<f64>,
    m2_xv: Vec<f64>,
    m2_vv: Vec<f64>,
    batch_size: usize,
    batch_acc: [f64; 3],
    batch_fill: usize,
    batch_means: Vec<[f64; 3]>,
}

impl Moments {
    fn new(dim: usize, batch_size: usize) -> Self {
        Self {
            count: 0,
            mean_x: vec![0.0; dim],
            mean_v: vec![0.0; dim],
            m2_xx: vec![0.0; dim],
            m2_xv: vec![0.0; dim],
            m2_vv: vec![0.0; dim],
            batch_size: batch_size.max(1),
            batch_acc: [0.0; 3],
            batch_fill: 0,
            batch_means: Vec::new(),
        }
    }

    fn push(&mut self, s: &PhaseState) {
        self.count += 1;
        let n = self.count as f64;
        let dim = s.dim() as f64;
        let mut pooled = [0.0; 3];
        for i in 0..s.x.len() {
            let (x, v) = (s.x[i], s.v[i]);
            let dx = x - self.mean_x[i];
            let dv = v - self.mean_v[i];
            self.mean_x[i] += dx / n;
            self.mean_v[i] += dv / n;
            self.m2_xx[i] += dx * (x - self.mean_x[i]);
            self.m2_vv[i] += dv * (v - self.mean_v[i]);
            self.m2_xv[i] += dx * (v - self.mean_v[i]);
            pooled[0] += x * x;
            pooled[1] += x * v;
            pooled[2] += v * v;
        }
        for k in 0..3 {
            self.batch_acc[k] += pooled[k] / dim;
        }
        self.batch_fill += 1;
        if self.batch_fill == self.batch_size {
            let b = self.batch_size as f64;
            self.batch_means.push(self.batch_acc.map(|a| a / b));
            self.batch_acc = [0.0; 3];
            self.batch_fill = 0;
        }
    }

    fn is_finite(&self) -> bool {
        self.mean_x
            .iter()
            .chain(&self.mean_v)
            .chain(&self.m2_xx)
            .chain(&self.m2_xv)
            .chain(&self.m2_vv)
            .all(|a| a.is_finite())
    }

    /// Per-coordinate sample covariance [[xx, xv], [xv, vv]].
    pub fn covariance(&self, i: usize) -> [[f64; 2]; 2] {
        let n = (self.count.max(2) - 1) as f64;
        let xv = self.m2_xv[i] / n;
        [[self.m2_xx[i] / n, xv], [xv, self.m2_vv[i] / n]]
    }

    /// Raw second moments E[x²], E[xv], E[v²] averaged over coordinates,
    /// with batch-means standard errors.
    pub fn pooled_second_moments(&self) -> ([f64; 3], [f64; 3]) {
        let b = self.batch_means.len();
        let mut mean = [0.0; 3];
        let mut se = [f64::NAN; 3];
        if b == 0 {
            return (mean, se);
        }
        for m in &self.batch_means {
            for k in 0..3 {
                mean[k] += m[k] / b as f64;
            }
        }
        if b > 1 {
            for k in 0..3 {
                let var = self
                    .batch_means
                    .iter()
                    .map(|m| (m[k] - mean[k]).powi(2))
                    .sum::<f64>()
                    / (b - 1) as f64;
                se[k] = (var / b as f64).sqrt();
            }
        }
        (mean, se)
    }

    pub fn batches(&self) -> usize {
        self.batch_means.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    pub final_state: PhaseState,
    pub moments: Moments,
    pub trajectory: Vec<TrajectoryRow>,
}

/// Run `opts.burn_in` unrecorded steps, then `n_steps` recorded ones.
pub fn run_chain<P: Potential>(
    kernel: &Kernel<P>,
    init: &PhaseState,
    n_steps: usize,
    stream: &mut RngStream,
    opts: &ChainOptions,
) -> Result<ChainResult> {
    if n_steps == 0 {
        return Err(KlmcError::InvalidParameter {
            name: "n_steps",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    kernel.check_dim(init)?;
    let d = kernel.dim();
    let mut state = init.clone();
    let mut noise = vec![0.0; 2 * d];
    let mut grad = vec![0.0; d];
    for k in 0..opts.burn_in {
        stream.fill_normal(&mut noise);
        kernel.step_in_place(&mut state, &noise, &mut grad, k)?;
    }
    let batch_size = (n_steps / opts.batches.max(1)).max(1);
    let mut moments = Moments::new(d, batch_size);
    let mut trajectory = Vec::new();
    for k in 1..=n_steps {
        let global = opts.burn_in + k;
        stream.fill_normal(&mut noise);
        kernel.step_in_place(&mut state, &noise, &mut grad, global)?;
        moments.push(&state);
        if k % 1024 == 0 || k == n_steps {
            if !moments.is_finite() {
                return Err(KlmcError::MomentOverflow { step: global });
            }
        }
        if let Some(t) = opts.thin {
            if t > 0 && k % t == 0 {
                trajectory.push(TrajectoryRow {
                    step: k,
                    x: state.x.clone(),
                    v: state.v.clone(),
                });
            }
        }
    }
    Ok(ChainResult {
        final_state: state,
        moments,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    /// ‖Z_k − Z_k'‖²_{a,b} for k = 0..=n (shorter when truncated).
    pub series: Vec<f64>,
    /// Least-squares slope of log(series) against k.
    pub log_rate: Option<f64>,
    /// Set when the series dropped below 1e-300 and was cut.
    pub underflow: bool,
}

impl DecaySeries {
    /// Successive one-step ratios over the strictly positive prefix.
    pub fn ratios(&self) -> Vec<f64> {
        self.series
            .windows(2)
            .take_while(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Synchronously coupled pair; returns the squared weighted distance series.
pub fn coupling_decay<P: Potential>(
    kernel: &Kernel<P>,
    init1: &PhaseState,
    init2: &PhaseState,
    n_steps: usize,
    stream: &mut RngStream,
    norm: &WeightedNorm,
) -> Result<DecaySeries> {
    kernel.check_dim(init1)?;
    kernel.check_dim(init2)?;
    let d = kernel.dim();
    let (mut a, mut b) = (init1.clone(), init2.clone());
    let mut noise = vec![0.0; 2 * d];
    let mut grad = vec![0.0; d];
    let mut series = vec![weighted_dist_sq(norm, &a, &b)];
    let mut underflow = false;
    for k in 1..=n_steps {
        stream.fill_normal(&mut noise);
        kernel.step_in_place(&mut a, &noise, &mut grad, k)?;
        kernel.step_in_place(&mut b, &noise, &mut grad, k)?;
        let dist = weighted_dist_sq(norm, &a, &b);
        if series[k - 1] > 0.0 && dist < 1e-300 {
            underflow = true;
            break;
        }
        series.push(dist);
    }
    let (ks, logs): (Vec<f64>, Vec<f64>) = series
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(k, &s)| (k as f64, s.ln()))
        .unzip();
    let log_rate = (ks.len() >= 2).then(|| ls_slope(&ks, &logs));
    Ok(DecaySeries {
        series,
        log_rate,
        underflow,
    })
}
