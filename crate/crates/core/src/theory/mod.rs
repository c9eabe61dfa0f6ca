//! Closed-form calculators: validity conditions, contraction coefficients,
//! bias bounds and the complexity planner.

pub mod bias;
pub mod complexity;
pub mod conditions;
pub mod contraction;

pub use bias::{
    bias_bounds, bias_report_unchecked, bias_terms, critical_zeta, f_mom, f_pos, BiasReport, Regime,
};
pub use complexity::{complexity_plan, ComplexityPlan};
pub use conditions::{check_condition_general, check_condition_linear, max_step, Condition};
pub use contraction::{
    c_minus, contraction_exact, contraction_linear, linear_rate, p1, p2, p3, poly_coeffs, r_lin,
    r_max, ContractionReport, PolyCoeffs,
};
