use super::constants::Constants;
use crate::error::{Error, Result};

/// Physical identity of the electron model.
///
/// `cutoff_omega` is `None` for an explicit point-electron request; the bare
/// mass is then undefined rather than computed from an infinite cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleParams {
    charge: f64,
    mass: f64,
    cutoff_omega: Option<f64>,
    bare_mass: Option<f64>,
    tau_e: f64,
    c: f64,
}

impl ParticleParams {
    pub fn new(charge_statc: f64, mass_g: f64, cutoff_omega_per_s: Option<f64>, consts: &Constants) -> Result<Self> {
        if !charge_statc.is_finite() {
            return Err(Error::Domain(format!("charge must be finite, got {charge_statc}")));
        }
        let tau = tau_e(charge_statc, mass_g, consts)?;
        let bare_mass = match cutoff_omega_per_s {
            Some(omega) => Some(renormalize(mass_g, omega, tau)?),
            None => None,
        };
        Ok(ParticleParams {
            charge: charge_statc,
            mass: mass_g,
            cutoff_omega: cutoff_omega_per_s,
            bare_mass,
            tau_e: tau,
            c: consts.c,
        })
    }

    /// Electron (charge -e) with the smallest causal size: cutoff at
    /// 1/tau_e, zero bare mass.
    pub fn electron(consts: &Constants) -> Self {
        let tau = tau_e(consts.e_charge, consts.m_electron, consts).expect("electron constants are positive");
        ParticleParams::new(-consts.e_charge, consts.m_electron, Some(1.0 / tau), consts)
            .expect("cutoff at the causal limit is admissible")
    }

    /// Electron charge and mass with no cutoff (point-electron request).
    pub fn point_electron(consts: &Constants) -> Self {
        ParticleParams::new(-consts.e_charge, consts.m_electron, None, consts).expect("electron constants are positive")
    }

    /// Same particle with a different charge (used to switch radiation off
    /// or to build scaled test particles).
    pub fn with_charge(&self, charge_statc: f64) -> Result<Self> {
        let consts = Constants {
            c: self.c,
            ..Constants::GAUSSIAN
        };
        let cutoff = self.cutoff_omega.filter(|_| charge_statc != 0.0);
        ParticleParams::new(charge_statc, self.mass, cutoff, &consts)
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    /// Renormalized (observed) mass M, g.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn cutoff_omega(&self) -> Option<f64> {
        self.cutoff_omega
    }

    pub fn bare_mass(&self) -> Option<f64> {
        self.bare_mass
    }

    pub fn is_point_limit(&self) -> bool {
        self.cutoff_omega.is_none()
    }

    /// Radiation time tau_e = (2/3) e^2 / (M c^3), s.
    pub fn tau_e(&self) -> f64 {
        self.tau_e
    }

    /// Speed of light the particle was built with, cm/s.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Largest cutoff consistent with a non-negative bare mass.
    pub fn cutoff_limit(&self) -> f64 {
        1.0 / self.tau_e
    }
}

/// Radiation time (2/3) q^2 / (M c^3).
pub fn tau_e(charge_statc: f64, mass_g: f64, consts: &Constants) -> Result<f64> {
    if !(mass_g.is_finite() && mass_g > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass_g}")));
    }
    Ok(2.0 / 3.0 * charge_statc * charge_statc / (mass_g * consts.c.powi(3)))
}

/// Cutoff bound 1/tau_e. Infinite for a neutral particle.
pub fn cutoff_limit(params: &ParticleParams) -> f64 {
    params.cutoff_limit()
}

/// Bare mass m = M (1 - tau_e Omega) from the observed mass and cutoff.
///
/// A cutoff above 1/tau_e would need a negative bare mass; that verdict is
/// returned as [`Error::CausalityViolated`]. Products within a few ulp of
/// tau_e Omega = 1 are treated as the boundary itself and give m = 0.
pub fn renormalize(mass_observed_g: f64, cutoff_omega_per_s: f64, tau_e_s: f64) -> Result<f64> {
    if !(mass_observed_g.is_finite() && mass_observed_g > 0.0) {
        return Err(Error::Domain(format!(
            "observed mass must be positive, got {mass_observed_g}"
        )));
    }
    if !(cutoff_omega_per_s.is_finite() && cutoff_omega_per_s >= 0.0) {
        return Err(Error::Domain(format!(
            "cutoff must be finite and non-negative, got {cutoff_omega_per_s}"
        )));
    }
    if !(tau_e_s.is_finite() && tau_e_s >= 0.0) {
        return Err(Error::Domain(format!("tau_e must be non-negative, got {tau_e_s}")));
    }
    let x = tau_e_s * cutoff_omega_per_s;
    if (x - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(0.0);
    }
    let bare = mass_observed_g * (1.0 - x);
    if bare < 0.0 {
        return Err(Error::CausalityViolated {
            bare_mass_g: bare,
            cutoff_per_s: cutoff_omega_per_s,
            limit_per_s: 1.0 / tau_e_s,
        });
    }
    Ok(bare)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: Constants = Constants::GAUSSIAN;

    #[test]
    fn electron_tau_matches_known_value() {
        let tau = tau_e(C.e_charge, C.m_electron, &C).unwrap();
        assert!((tau / 6.2664e-24 - 1.0).abs() < 1e-4, "{tau}");
    }

    #[test]
    fn tau_scaling_laws() {
        let t1 = tau_e(C.e_charge, C.m_electron, &C).unwrap();
        let t2 = tau_e(2.0 * C.e_charge, C.m_electron, &C).unwrap();
        assert!((t2 / t1 - 4.0).abs() < 1e-14);
        assert_eq!(tau_e(0.0, C.m_electron, &C).unwrap(), 0.0);
        assert!(tau_e(C.e_charge, 0.0, &C).is_err());
        assert!(tau_e(C.e_charge, -1.0, &C).is_err());
    }

    #[test]
    fn renormalize_examples() {
        let m = C.m_electron;
        let tau = tau_e(C.e_charge, m, &C).unwrap();
        assert_eq!(renormalize(m, 1.0 / tau, tau).unwrap(), 0.0);
        assert_eq!(renormalize(m, 0.0, tau).unwrap(), m);
        let half = renormalize(m, 0.5 / tau, tau).unwrap();
        assert!((half / m - 0.5).abs() < 1e-15);
    }

    #[test]
    fn renormalize_rejects_supercritical_cutoff() {
        let m = C.m_electron;
        let tau = tau_e(C.e_charge, m, &C).unwrap();
        match renormalize(m, 1.5 / tau, tau) {
            Err(e @ Error::CausalityViolated { .. }) => assert!(e.is_physics_verdict()),
            other => panic!("expected causality verdict, got {other:?}"),
        }
        assert!(ParticleParams::new(C.e_charge, m, Some(2.0 / tau), &C).is_err());
    }

    #[test]
    fn point_limit_has_no_bare_mass() {
        let p = ParticleParams::point_electron(&C);
        assert!(p.is_point_limit());
        assert!(p.bare_mass().is_none());
        let e = ParticleParams::electron(&C);
        assert_eq!(e.bare_mass(), Some(0.0));
    }

    #[test]
    fn cutoff_limit_is_reciprocal_tau() {
        let p = ParticleParams::electron(&C);
        assert!((p.cutoff_limit() * p.tau_e() - 1.0).abs() < 1e-15);
        let heavy = ParticleParams::new(C.e_charge, 0.5 * C.m_electron, None, &C).unwrap();
        // tau doubles when the mass halves, so the limit halves
        assert!((heavy.cutoff_limit() / p.cutoff_limit() - 0.5).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn renormalization_inverts(frac in 0.0f64..=1.0, mass_exp in -30.0f64..0.0) {
            let m_obs = 10f64.powf(mass_exp);
            let tau = tau_e(C.e_charge, m_obs, &C).unwrap();
            let omega = frac / tau;
            let bare = renormalize(m_obs, omega, tau).unwrap();
            prop_assert!(bare >= 0.0);
            let back = bare + tau * omega * m_obs;
            prop_assert!((back - m_obs).abs() <= 4.0 * f64::EPSILON * m_obs);
        }
    }
}
