use super::integrate::{integrate_runaway_free_ald, integrate_with, NrOptions, Trajectory};
use super::{ModelKind, ModelNR, StateNR};
use crate::error::{Error, Result};
use crate::phys::{ForceModel, ParticleParams};
use crate::stats::{power_law_exponent, trapezoid};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// omega tau_e values of the sweep
    pub omega_tau: Vec<f64>,
    /// measured quantity at each point
    pub values: Vec<f64>,
    pub exponent: f64,
}

fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

/// Max-norm deviation between the structured-charge trajectory and the
/// runaway-free point-charge trajectory under a sinusoidal drive, relative to
/// the max |x| of the structured-charge trajectory. Both start at rest.
pub fn ald_fo_deviation(
    particle: &ParticleParams,
    amplitude: f64,
    omega_tau: f64,
    periods: usize,
    tol: f64,
) -> Result<(Trajectory, Trajectory, f64)> {
    let omega = omega_tau / particle.tau_e();
    let t_end = periods as f64 * 2.0 * std::f64::consts::PI / omega;
    let opts = NrOptions {
        t_eval: Some(uniform_grid(t_end, 64 * periods)),
        ..NrOptions::with_tol(tol)
    };
    let drive = ForceModel::sin_drive(amplitude, omega);
    let fo = ModelNR::new(ModelKind::Fo, *particle)?;
    let start = StateNR::at_rest(0.0);
    let a = integrate_with(&fo, &drive, &start, t_end, &opts)?;
    let b = integrate_runaway_free_ald(particle, &drive, &start, t_end, &opts)?;
    let scale = a.points.iter().fold(0.0f64, |m, p| m.max(p.x.abs()));
    let dev = a
        .points
        .iter()
        .zip(&b.points)
        .fold(0.0f64, |m, (p, q)| m.max((p.x - q.x).abs()));
    Ok((a, b, dev / scale))
}

/// Fits the exponent of the ALD/FO trajectory deviation against omega tau_e.
pub fn ald_fo_scaling(particle: &ParticleParams, omega_taus: &[f64], tol: f64) -> Result<ScalingFit> {
    let values = omega_taus
        .iter()
        .map(|&z| ald_fo_deviation(particle, 1e-4, z, 2, tol).map(|r| r.2))
        .collect::<Result<Vec<_>>>()?;
    let exponent = power_law_exponent(omega_taus, &values)
        .ok_or_else(|| Error::Domain("deviation sweep produced non-positive values".into()))?;
    Ok(ScalingFit {
        omega_tau: omega_taus.to_vec(),
        values,
        exponent,
    })
}

/// |E_Larmor - E_FO| / E_FO for energies radiated over whole drive periods
/// along a structured-charge trajectory.
pub fn fo_larmor_energy_ratio(trajectory: &Trajectory) -> f64 {
    let t = trajectory.times();
    let p_fo: Vec<f64> = trajectory.points.iter().map(|p| p.p_fo).collect();
    let p_l: Vec<f64> = trajectory.points.iter().map(|p| p.p_larmor).collect();
    let e_fo = trapezoid(&t, &p_fo);
    let e_l = trapezoid(&t, &p_l);
    (e_l - e_fo).abs() / e_fo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::Constants;

    #[test]
    fn deviation_scales_quadratically() {
        let p = ParticleParams::electron(&Constants::GAUSSIAN);
        let fit = ald_fo_scaling(&p, &[1e-3, 1e-2, 1e-1], 1e-12).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn self_comparison_has_zero_deviation() {
        let p = ParticleParams::electron(&Constants::GAUSSIAN);
        let (a, _, _) = ald_fo_deviation(&p, 1e-4, 1e-2, 1, 1e-10).unwrap();
        let d = a
            .points
            .iter()
            .zip(&a.points)
            .fold(0.0f64, |m, (x, y)| m.max((x.x - y.x).abs()));
        assert_eq!(d, 0.0);
    }
}
