//! Deterministic one-dimensional nonrelativistic equations of motion.
//!
//! All models share the radiation time tau_e of the particle:
//!
//! * Newton:      M x'' = f
//! * ALD:         M x'' - M tau_e x''' = f                 (point charge)
//! * FO:          M x'' = f + tau_e f'                     (structured charge)
//! * FO sharp:    M x'' = (1 + tau_e/2 d/dt)^2 f
//! * Series(N):   M x'' + M sum_{n=3}^{N} (-1)^n tau_e^{n-2} x^(n) = f
//! * Oscillator:  M x'' + K tau_e x' + K x = f

mod ald;
mod integrate;
mod series;
mod sweep;

pub use ald::{ald_extended_rhs, ald_preacceleration, ald_runaway_free_accel, laguerre_rule};
pub use integrate::{
    integrate, integrate_runaway_free_ald, integrate_with, NrOptions, Trajectory, TrajectoryPoint,
    RUNAWAY_AMPLIFICATION,
};
pub use series::{fo_characteristic, series_characteristic, series_rhs, MAX_SERIES_ORDER};
pub use sweep::{ald_fo_deviation, ald_fo_scaling, fo_larmor_energy_ratio, ScalingFit};

use crate::error::{Error, Result};
use crate::phys::{ForceModel, ParticleParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Newton,
    Ald,
    Fo,
    FoSharp,
    /// Eq. of motion written as a power series in tau_e, truncated at x^(N).
    SeriesTruncated(usize),
    /// Harmonic binding with spring constant K (dyn/cm); damping K tau_e.
    Oscillator {
        spring_constant: f64,
    },
}

impl ModelKind {
    pub fn name(&self) -> String {
        match self {
            ModelKind::Newton => "newton".into(),
            ModelKind::Ald => "ald".into(),
            ModelKind::Fo => "fo".into(),
            ModelKind::FoSharp => "fo_sharp".into(),
            ModelKind::SeriesTruncated(n) => format!("series({n})"),
            ModelKind::Oscillator { .. } => "oscillator".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelNR {
    pub kind: ModelKind,
    pub particle: ParticleParams,
}

impl ModelNR {
    pub fn new(kind: ModelKind, particle: ParticleParams) -> Result<Self> {
        match kind {
            ModelKind::SeriesTruncated(n) if !(3..=MAX_SERIES_ORDER).contains(&n) => {
                return Err(Error::InvalidModel(format!(
                    "series truncation order must be in 3..={MAX_SERIES_ORDER}, got {n}"
                )))
            }
            ModelKind::Oscillator { spring_constant } if !(spring_constant > 0.0) => {
                return Err(Error::InvalidModel(format!(
                    "oscillator spring constant must be positive, got {spring_constant}"
                )))
            }
            ModelKind::Ald | ModelKind::SeriesTruncated(_) if particle.tau_e() <= 0.0 => {
                return Err(Error::InvalidModel(
                    "third-derivative models need a charged particle (tau_e > 0)".into(),
                ))
            }
            _ => {}
        }
        Ok(ModelNR { kind, particle })
    }

    /// Number of first-order state variables.
    pub fn state_dim(&self) -> usize {
        match self.kind {
            ModelKind::Ald => 3,
            ModelKind::SeriesTruncated(n) => n,
            _ => 2,
        }
    }

    /// Ohmic damping coefficient K tau_e of the oscillator (g/s); zero otherwise.
    pub fn damping(&self) -> f64 {
        match self.kind {
            ModelKind::Oscillator { spring_constant } => spring_constant * self.particle.tau_e(),
            _ => 0.0,
        }
    }
}

/// State of a one-dimensional trajectory. `a` is carried only by models whose
/// state includes the acceleration (ALD and the series form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateNR {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub a: Option<f64>,
}

impl StateNR {
    pub fn at_rest(t: f64) -> Self {
        StateNR {
            t,
            x: 0.0,
            v: 0.0,
            a: None,
        }
    }
}

/// Structured-charge acceleration (f + tau_e f') / M.
pub fn fo_accel(particle: &ParticleParams, force: &ForceModel, t: f64) -> Result<f64> {
    let e = force.evaluate(t)?;
    Ok((e.f + particle.tau_e() * e.df) / particle.mass())
}

/// Sharper-cutoff acceleration (f + tau_e f' + tau_e^2 f'' / 4) / M.
pub fn fo_sharp_accel(particle: &ParticleParams, force: &ForceModel, t: f64) -> Result<f64> {
    let e = force.evaluate(t)?;
    let tau = particle.tau_e();
    Ok((e.f + tau * e.df + 0.25 * tau * tau * e.d2f) / particle.mass())
}

/// Right-hand side (x', v') of the radiatively damped oscillator.
pub fn oscillator_rhs(
    particle: &ParticleParams,
    spring_constant: f64,
    drive: &ForceModel,
    t: f64,
    x: f64,
    v: f64,
) -> Result<(f64, f64)> {
    if !(spring_constant >= 0.0) {
        return Err(Error::Domain(format!(
            "spring constant must be non-negative, got {spring_constant}"
        )));
    }
    let f = drive.evaluate(t)?.f;
    let zeta = spring_constant * particle.tau_e();
    Ok((v, (f - zeta * v - spring_constant * x) / particle.mass()))
}

/// Radiated power tau_e f^2 / M of the structured charge, erg/s.
pub fn radiated_power_fo(particle: &ParticleParams, force: &ForceModel, t: f64) -> Result<f64> {
    let f = force.evaluate(t)?.f;
    Ok(particle.tau_e() * f * f / particle.mass())
}

/// Larmor power (2 e^2 / 3 c^3) a^2 = M tau_e a^2, erg/s.
pub fn larmor_power(particle: &ParticleParams, accel: f64) -> f64 {
    particle.mass() * particle.tau_e() * accel * accel
}

/// Replaces the third derivative of the point-charge equation by its
/// lowest-order value f'/M. The result is the structured-charge model: the
/// substitution changes the physical content of the equation, not just its
/// accuracy. Models without a third-derivative term are returned unchanged.
pub fn reduce_order(model: &ModelNR) -> ModelNR {
    match model.kind {
        ModelKind::Ald => ModelNR {
            kind: ModelKind::Fo,
            particle: model.particle,
        },
        _ => *model,
    }
}
