//! Kinetic Langevin Monte Carlo under the stochastic exponential Euler
//! discretization: the sampler, closed-form contraction and bias
//! calculators, a complexity planner, and exact Gaussian oracles.

pub mod error;
pub mod integrator;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod theory;
pub mod verify;

pub use error::{KlmcError, Result};
pub use model::{
    norm_for, weighted_dist_sq, weighted_norm_sq, AnisotropicQuadratic, ConvexityProfile,
    IsotropicQuadratic, KlmcParams, LogCoshQuadratic, PhaseState, Potential, WeightedNorm,
};
