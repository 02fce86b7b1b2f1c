//! Regret and reward accounting, the regret bound, and numerical checks.

mod bounds;
mod checks;
mod record;
mod verify;

pub use bounds::{
    instantaneous_regret, lifted_truth, multitask_norm, multitask_norm_quadratic, regret_bound,
    regret_bounds_uniform, BoundPair,
};
pub use checks::{
    compare_runners, corrupt_transform, equivalence_suite, identity_checks, identity_checks_with,
    inverse_oracle_check, random_identity_instance, trace_extremes_check, Equivalence, IdentityReport,
    InverseOracle, TraceReport, IDENTITY_TOL,
};
pub use record::{normalized_cumreward, run_experiment, run_random_policy, Row, RunRecord, CSV_HEADER};
pub use verify::{verify_suite, CheckResult, VerifyOptions, VerifyReport};
