//! Relaxation-scale limits: special functions, the limiting node sets,
//! the step kernels, initial-condition data and the limit distributions.

mod dist;
mod functions;
mod ic;
mod kernels;
mod nodes;

pub use dist::{default_xi, limit_cdf, limit_integrand_at, LimitResult, LimitSpec, ANNULUS, DERIVATIVE_STEP};
pub use functions::{
    a1, a2, b_diag, b_diag_integral, b_fn, h_cauchy, h_fn, h_minus, h_plus, h_polylog_integral, polylog, MAX_H_MODULUS,
    MAX_MODULUS,
};
pub use ic::{chi_flat, chi_stepflat, energy_flat, energy_stepflat, energy_uniform_step, ic_data, IcTable, LimitIc, LimitIcData};
pub use kernels::{build_kernels_limit, c_step_limit, PreparedCircle};
pub use nodes::{limiting_nodes, LimitNodeSet};
