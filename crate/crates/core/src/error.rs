use thiserror::Error;

/// Errors raised by the physics modules.
///
/// Variants that are physics verdicts (runaway, causality) are kept separate
/// from software failures so callers can map them to distinct exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("negative bare mass ({bare_mass_g:e} g): causality violated, cutoff {cutoff_per_s:e} 1/s exceeds 1/tau_e = {limit_per_s:e} 1/s")]
    CausalityViolated {
        bare_mass_g: f64,
        cutoff_per_s: f64,
        limit_per_s: f64,
    },

    #[error("t = {t:e} s outside tabulated domain [{start:e}, {end:e}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("runaway detected at t = {t_s:e} s: |a| amplified by {amplification:e}, e-folding time {e_folding_s:e} s")]
    Runaway {
        t_s: f64,
        amplification: f64,
        e_folding_s: f64,
    },

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),

    #[error("four-velocity normalization drift {drift:e} exceeds {limit:e} at tau = {tau_s:e} s")]
    NormDrift { tau_s: f64, drift: f64, limit: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate polynomial: {0}")]
    Degenerate(String),

    #[error("invalid ensemble: {0}")]
    Ensemble(String),
}

impl Error {
    /// True for outcomes where the physics, not the software, said no.
    pub fn is_physics_verdict(&self) -> bool {
        matches!(self, Error::Runaway { .. } | Error::CausalityViolated { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
