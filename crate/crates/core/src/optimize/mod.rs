//! Numerical optimization of the leakage bounds.

mod bound;
mod capacity;
mod simplex;

pub use bound::{
    construction_bound, min_log_bound_over_s, plan_rates, BoundObjective, Construction, ExponentCurve, InputLaw,
    PlanOutcome, RatePlan, SearchMethod, BISECTION_MAX_STEPS, BISECTION_TOL, FALLBACK_GRID_POINTS, RATE_GRID_STEP,
};
pub use capacity::{secrecy_capacity, SecrecyCapacity, MAX_ALPHABET, SIMPLEX_GRID};
pub use simplex::{max_phi_on_kernel, max_phi_over_p, project_to_simplex, MaximizerConfig, MaximizerResult};
