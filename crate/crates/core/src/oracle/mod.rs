//! Exact analytics on quadratic targets and numeric identity checks.

pub mod identities;
pub mod lyapunov;
pub mod mat2;
pub mod mode;
pub mod wasserstein;

pub use identities::{identity_suite, IdentityReport, IDENTITY_TOL};
pub use lyapunov::{lyapunov_fixed_point, lyapunov_residual, lyapunov_stationary};
pub use mat2::Mat2;
pub use mode::{
    block_matrices, chi_eval, exact_contraction_factor, mode_system, norm_factor,
    transition_matrix, BlockMatrices, Chi, ModeSystem,
};
pub use wasserstein::{exact_bias, gaussian_w, GaussianLaw, GaussianMode};
