//! Stochastic exponential Euler kernel, synchronous coupling and chain runners.

mod chain;
mod rng;

pub use chain::{
    coupling_decay, default_burn_in, run_chain, ChainOptions, ChainResult, DecaySeries, Moments,
    TrajectoryRow,
};
pub use rng::RngStream;

use serde::{Deserialize, Serialize};

use crate::error::{KlmcError, Result};
use crate::model::{KlmcParams, PhaseState, Potential};
use crate::numerics::{exp_neg_remainder, position_noise_factor};

/// Per-coordinate covariance of (ξ^X, ξ^V) and its Cholesky factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCovariance {
    pub sxx2: f64,
    pub sxv2: f64,
    pub svv2: f64,
    pub l11: f64,
    pub l21: f64,
    pub l22: f64,
}

impl NoiseCovariance {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.sxx2, self.sxv2], [self.sxv2, self.svv2]]
    }
}

pub fn noise_covariance(params: &KlmcParams) -> Result<NoiseCovariance> {
    let d = params.derive();
    let (g, eta) = (params.gamma(), params.eta());
    let sxx2 = 2.0 * eta / (g * g) * position_noise_factor(d.zeta);
    let sxv2 = eta / g * d.one_minus_delta * d.one_minus_delta;
    let svv2 = eta * d.one_minus_delta_sq;
    let degenerate = |reason| KlmcError::DegenerateStep {
        zeta: d.zeta,
        reason,
    };
    if !(sxx2 > 0.0 && sxx2.is_finite()) {
        return Err(degenerate("position noise variance underflows"));
    }
    if !(svv2 > 0.0 && svv2.is_finite()) {
        return Err(degenerate("momentum noise variance underflows"));
    }
    let l11 = sxx2.sqrt();
    let l21 = sxv2 / l11;
    let schur = svv2 - l21 * l21;
    if !(schur > 0.0 && schur.is_finite()) {
        return Err(degenerate("noise covariance is numerically singular"));
    }
    Ok(NoiseCovariance {
        sxx2,
        sxv2,
        svv2,
        l11,
        l21,
        l22: schur.sqrt(),
    })
}

/// Markov kernel of the exponential Euler scheme for a fixed potential.
#[derive(Debug, Clone)]
pub struct Kernel<P> {
    params: KlmcParams,
    potential: P,
    cov: NoiseCovariance,
    pub c_xv: f64,
    pub c_xg: f64,
    pub c_vv: f64,
    pub c_vg: f64,
}

impl<P: Potential> Kernel<P> {
    pub fn new(params: KlmcParams, potential: P) -> Result<Self> {
        let cov = noise_covariance(&params)?;
        let d = params.derive();
        let (g, eta) = (params.gamma(), params.eta());
        Ok(Self {
            params,
            potential,
            cov,
            c_xv: d.one_minus_delta / g,
            c_xg: eta * exp_neg_remainder(d.zeta) / (g * g),
            c_vv: d.delta,
            c_vg: eta * d.one_minus_delta / g,
        })
    }

    pub fn params(&self) -> &KlmcParams {
        &self.params
    }

    pub fn potential(&self) -> &P {
        &self.potential
    }

    pub fn cov(&self) -> &NoiseCovariance {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn check_dim(&self, state: &PhaseState) -> Result<()> {
        if state.dim() != self.dim() {
            return Err(KlmcError::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        Ok(())
    }

    fn check_noise(&self, noise: &[f64]) -> Result<()> {
        if noise.len() != 2 * self.dim() {
            return Err(KlmcError::DimensionMismatch {
                expected: 2 * self.dim(),
                got: noise.len(),
            });
        }
        Ok(())
    }

    /// One step in place. `noise` holds 2d standard normals (first d drive
    /// the first Cholesky column); `grad` is scratch of length d.
    pub fn step_in_place(
        &self,
        state: &mut PhaseState,
        noise: &[f64],
        grad: &mut [f64],
        step_index: usize,
    ) -> Result<()> {
        let d = self.dim();
        self.potential.grad(&state.x, grad);
        let (n1, n2) = noise.split_at(d);
        let c = &self.cov;
        for i in 0..d {
            let (x, v, g) = (state.x[i], state.v[i], grad[i]);
            state.x[i] = x + self.c_xv * v - self.c_xg * g + c.l11 * n1[i];
            state.v[i] = self.c_vv * v - self.c_vg * g + c.l21 * n1[i] + c.l22 * n2[i];
        }
        if !grad.iter().all(|g| g.is_finite()) || !state.is_finite() {
            return Err(KlmcError::PoisonedState { step: step_index });
        }
        Ok(())
    }

    pub fn step(&self, state: &PhaseState, noise: &[f64]) -> Result<PhaseState> {
        self.check_dim(state)?;
        self.check_noise(noise)?;
        let mut next = state.clone();
        let mut grad = vec![0.0; self.dim()];
        self.step_in_place(&mut next, noise, &mut grad, 0)?;
        Ok(next)
    }

    /// Advance both states with the same noise.
    pub fn coupled_step(
        &self,
        s1: &PhaseState,
        s2: &PhaseState,
        noise: &[f64],
    ) -> Result<(PhaseState, PhaseState)> {
        self.check_dim(s1)?;
        self.check_dim(s2)?;
        self.check_noise(noise)?;
        let mut grad = vec![0.0; self.dim()];
        let (mut a, mut b) = (s1.clone(), s2.clone());
        self.step_in_place(&mut a, noise, &mut grad, 0)?;
        self.step_in_place(&mut b, noise, &mut grad, 0)?;
        Ok((a, b))
    }
}
