//! Scenario-driven front end for `radreact-core`: JSON scenarios in, CSV
//! trajectories and JSON reports out.

pub mod compare;
pub mod interp;
pub mod poles;
pub mod run;
pub mod scenario;
pub mod table;

/// Exit status when the physics said no (runaway, causality violation).
pub const EXIT_VERDICT: i32 = 2;
/// Exit status for software failures and invalid input.
pub const EXIT_FAILURE: i32 = 1;

/// Environment variable giving the default output directory.
pub const OUT_DIR_ENV: &str = "RADREACT_OUT_DIR";

/// Exit status for an error: 2 when a physics verdict is anywhere in the
/// chain, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let verdict = err
        .chain()
        .filter_map(|e| e.downcast_ref::<radreact_core::Error>())
        .any(|e| e.is_physics_verdict());
    if verdict {
        EXIT_VERDICT
    } else {
        EXIT_FAILURE
    }
}
