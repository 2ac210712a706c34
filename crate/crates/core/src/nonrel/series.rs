use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::phys::{ForceModel, ParticleParams};

/// Largest truncation order accepted for the series form.
pub const MAX_SERIES_ORDER: usize = 30;

/// Highest derivative x^(N) from the truncated series equation
/// sum_{k=2}^{N} (-1)^k tau^{k-2} x^(k) = f/M.
pub(crate) fn series_top(tau: f64, f_over_m: f64, derivs: &[f64]) -> f64 {
    let n = derivs.len();
    let mut rest = f_over_m;
    let mut tau_pow = 1.0;
    for (k, d) in derivs.iter().enumerate().skip(2) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        rest -= sign * tau_pow * d;
        tau_pow *= tau;
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * rest / tau_pow
}

/// Derivatives (x', ..., x^(N)) of the extended state (x, ..., x^(N-1)) of the
/// series equation truncated at order N = `derivs.len()`.
///
/// Works in physical units; for electrons the high derivatives overflow
/// beyond N of about 12, which is why integration runs in scaled units.
pub fn series_rhs(particle: &ParticleParams, force: &ForceModel, t: f64, derivs: &[f64]) -> Result<Vec<f64>> {
    let n = derivs.len();
    if !(3..=MAX_SERIES_ORDER).contains(&n) {
        return Err(Error::InvalidModel(format!(
            "series truncation order must be in 3..={MAX_SERIES_ORDER}, got {n}"
        )));
    }
    let f = force.evaluate(t)?.f;
    let mut out = derivs[1..].to_vec();
    out.push(series_top(particle.tau_e(), f / particle.mass(), derivs));
    Ok(out)
}

/// Frequency-domain characteristic function of the truncated series,
/// sum_{k=2}^{N} (i z)^k with z = omega tau_e, for time dependence e^{-i omega t}.
/// The physical characteristic function is (M / tau_e^2) times this.
pub fn series_characteristic(order: usize, z: f64) -> Complex<f64> {
    let iz = Complex::new(0.0, z);
    let mut term = iz * iz;
    let mut sum = term;
    for _ in 3..=order {
        term *= iz;
        sum += term;
    }
    sum
}

/// Closed-form limit of [`series_characteristic`]: -z^2 / (1 - i z).
pub fn fo_characteristic(z: f64) -> Complex<f64> {
    Complex::new(-z * z, 0.0) / Complex::new(1.0, -z)
}
