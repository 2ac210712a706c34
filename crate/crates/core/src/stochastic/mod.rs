//! Classical fluctuating forces and Langevin integration.
//!
//! The noise obeys the Ohmic fluctuation-dissipation relation
//! <F(t)F(t')> = 2 zeta k T delta(t - t'), or its exponentially correlated
//! regularization with the same integrated strength.

mod ensemble;
mod langevin;
mod noise;

pub use ensemble::{ensemble_mean, max_deviation, splitmix64, EnsembleConfig, EnsembleSummary};
pub use langevin::{
    equipartition_ratio, fluctuating_fo, free_fluctuating, langevin_oscillator, uniform_steps, LangevinOscillator,
    Scheme, StochasticTrajectory, EQUIPARTITION_LANES, MAX_PHASE_STEP,
};
pub use noise::{sample_noise, NoiseGenerator, NoiseKind, NoiseSpec};
