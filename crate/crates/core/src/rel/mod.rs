//! Relativistic structured-charge dynamics in uniform external fields.
//!
//! Covariant form, metric (+,-,-,-):
//!   M a = (e/c) F u + tau_e g,  g = fdot - u (u . fdot) / c^2,
//! integrated in proper time; three-vector form with p = gamma v:
//!   M dp/dt = F + tau_e [gamma dF/dt - (gamma^3/c^2) vdot x (v x F)],
//!   F = e (E + v x B / c),
//! integrated in lab time. Gaussian units throughout.

mod covariant;
mod tensor;
mod threevector;

pub use covariant::{
    integrate_proper_time, lorentz_four_force, orthogonality_residual, project_g, reduce_order_relativistic, rel_accel,
    rel_fo_accel, Closure, FourState, RelModel, RelOptions, Worldline, WorldlinePoint, NORM_DRIFT_LIMIT,
};
pub use tensor::{cross, dot3, norm3, FieldTensor, Fields, FourVector, Mat4};
pub use threevector::{
    compare_worldlines, integrate_lab_time, ll_type_comparison, threevector_rhs, LabOptions, LabPoint, LabTrajectory,
    LlComparison, WorldlineComparison,
};
