//! Firing frequencies, the second vector field, inductive classification and
//! the critical inhibition curve.

pub mod classify;
pub mod critical;
pub mod empirical;
pub mod field;
pub mod frequencies;
pub mod stats;

pub use classify::{
    classify_inductive, is_trap, Budget, Classification, McOptions, Method, SubsetLattice, Verdict,
    ANALYTIC_TOLERANCE,
};
pub use critical::{
    check_balance, critical_w_i, linear_approx_w_i, pi_plus, simulate_lambda0, BalanceReport,
    CriticalEstimate, SimBudget,
};
pub use empirical::{observe, EmpiricalVerdict, HeuristicThresholds, Observation};
pub use field::{second_vector_field, VectorField};
pub use frequencies::{analytic_pi_inhibitory, estimate_frequencies, Frequencies, SiteRates};
pub use stats::{FiringStats, Reservoir, ZSample};
