//! Constants, unit scaling, particle parameters, force models and form factors.

pub mod constants;
pub mod force;
pub mod form_factor;
pub mod particle;
pub mod units;

pub use constants::Constants;
pub use force::{evaluate_force, ForceEval, ForceModel, ForceTable};
pub use form_factor::FormFactor;
pub use particle::{cutoff_limit, renormalize, tau_e, ParticleParams};
pub use units::{Dimension, Scaling};
