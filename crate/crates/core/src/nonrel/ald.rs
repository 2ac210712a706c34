use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use super::StateNR;
use crate::error::{Error, Result};
use crate::phys::{ForceModel, ParticleParams};

/// First-order form of the point-charge equation:
/// x' = v, v' = a, a' = (a - f/M) / tau_e.
pub fn ald_extended_rhs(particle: &ParticleParams, force: &ForceModel, state: &StateNR) -> Result<(f64, f64, f64)> {
    let a = state
        .a
        .ok_or_else(|| Error::Domain("ALD state must carry the acceleration".into()))?;
    let tau = particle.tau_e();
    if tau <= 0.0 {
        return Err(Error::InvalidModel("ALD needs tau_e > 0".into()));
    }
    let f = force.evaluate(state.t)?.f;
    Ok((state.v, a, (a - f / particle.mass()) / tau))
}

/// Runaway-free acceleration of the point charge for a step force of size
/// `f0` switched on at t = 0: the particle starts accelerating before the
/// force arrives.
pub fn ald_preacceleration(particle: &ParticleParams, f0: f64, t: f64) -> f64 {
    let a_final = f0 / particle.mass();
    if t >= 0.0 {
        a_final
    } else {
        a_final * (t / particle.tau_e()).exp()
    }
}

const LAGUERRE_POINTS: usize = 48;

/// Gauss-Laguerre nodes and weights for integrals of e^{-s} g(s) on [0, inf),
/// from the eigen-decomposition of the Jacobi matrix.
pub fn laguerre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = (2 * k + 1) as f64;
        if k + 1 < n {
            jac[(k, k + 1)] = (k + 1) as f64;
            jac[(k + 1, k)] = (k + 1) as f64;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn cached_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| laguerre_rule(LAGUERRE_POINTS))
}

/// Acceleration on the runaway-free branch of the point-charge equation,
/// a(t) = (1/M) \int_0^inf e^{-s} f(t + tau_e s) ds.
///
/// Closed forms are used where they exist; other forces go through
/// Gauss-Laguerre quadrature, which needs f on [t, t + ~200 tau_e].
pub fn ald_runaway_free_accel(particle: &ParticleParams, force: &ForceModel, t: f64) -> Result<f64> {
    let m = particle.mass();
    let tau = particle.tau_e();
    match *force {
        ForceModel::Zero => Ok(0.0),
        ForceModel::Constant { amplitude } => Ok(amplitude / m),
        ForceModel::Step { amplitude, t_on } => Ok(ald_preacceleration(particle, amplitude, t - t_on)),
        ForceModel::SinDrive {
            amplitude,
            omega,
            phase,
        } => {
            let drive = Complex::from_polar(amplitude, omega * t + phase);
            Ok((drive / Complex::new(1.0, -omega * tau)).im / m)
        }
        ForceModel::GaussianPulse { .. } | ForceModel::Tabulated(_) => {
            let (nodes, weights) = cached_rule();
            let mut acc = 0.0;
            for (s, w) in nodes.iter().zip(weights) {
                acc += w * force.evaluate(t + tau * s)?.f;
            }
            Ok(acc / m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::Constants;

    fn electron() -> ParticleParams {
        ParticleParams::electron(&Constants::GAUSSIAN)
    }

    #[test]
    fn preacceleration_examples() {
        let p = electron();
        let f0 = 1e-3;
        let a = f0 / p.mass();
        assert!((ald_preacceleration(&p, f0, -1e-300) - a).abs() <= 1e-15 * a);
        let half = ald_preacceleration(&p, f0, -p.tau_e() * 2f64.ln());
        assert!((half / a - 0.5).abs() < 1e-14);
        assert_eq!(ald_preacceleration(&p, f0, -1e3 * p.tau_e()), 0.0);
        assert_eq!(ald_preacceleration(&p, f0, 5.0 * p.tau_e()), a);
    }

    #[test]
    fn preacceleration_satisfies_ald() {
        // a - tau a' = f/M on both sides of the step
        let p = electron();
        let f0 = 2e-4;
        let tau = p.tau_e();
        let h = 1e-6 * tau;
        for t in [-3.0 * tau, -0.5 * tau, 0.5 * tau, 2.0 * tau] {
            let a = ald_preacceleration(&p, f0, t);
            let da = (ald_preacceleration(&p, f0, t + h) - ald_preacceleration(&p, f0, t - h)) / (2.0 * h);
            let f = if t >= 0.0 { f0 } else { 0.0 };
            let resid = a - tau * da - f / p.mass();
            assert!(resid.abs() < 1e-8 * f0 / p.mass(), "t={t} resid={resid}");
        }
    }

    #[test]
    fn extended_rhs_requires_acceleration() {
        let p = electron();
        let s = StateNR::at_rest(0.0);
        assert!(ald_extended_rhs(&p, &ForceModel::Zero, &s).is_err());
        let s = StateNR { a: Some(2.0), ..s };
        let (dx, dv, da) = ald_extended_rhs(&p, &ForceModel::Zero, &s).unwrap();
        assert_eq!((dx, dv), (0.0, 2.0));
        assert!((da - 2.0 / p.tau_e()).abs() <= 1e-15 * da);
    }

    #[test]
    fn extended_rhs_constant_force_fixed_point() {
        let p = electron();
        let f0 = 3e-4;
        let s = StateNR {
            t: 0.0,
            x: 0.0,
            v: 0.0,
            a: Some(f0 / p.mass()),
        };
        let (_, _, da) = ald_extended_rhs(&p, &ForceModel::Constant { amplitude: f0 }, &s).unwrap();
        assert_eq!(da, 0.0);
    }

    #[test]
    fn laguerre_rule_integrates_polynomials() {
        let (x, w) = laguerre_rule(20);
        // \int e^{-s} s^k ds = k!
        let mut fact = 1.0;
        for k in 0..10 {
            if k > 0 {
                fact *= k as f64;
            }
            let q: f64 = x.iter().zip(&w).map(|(s, wi)| wi * s.powi(k)).sum();
            assert!((q / fact - 1.0).abs() < 1e-10, "k={k} q={q}");
        }
    }

    #[test]
    fn quadrature_agrees_with_closed_form_for_gaussian_pulse() {
        // brute-force oracle: composite Simpson on [0, 60] of e^{-s} f(t + tau s)
        let p = electron();
        let tau = p.tau_e();
        let pulse = ForceModel::GaussianPulse {
            amplitude: 1e-4,
            t0: 0.0,
            sigma: 3.0 * tau,
        };
        for t in [-6.0 * tau, -tau, 0.0, 2.0 * tau] {
            let n = 20000;
            let h = 60.0 / n as f64;
            let g = |s: f64| (-s).exp() * pulse.evaluate(t + tau * s).unwrap().f;
            let mut acc = g(0.0) + g(60.0);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            let oracle = acc * h / 3.0 / p.mass();
            let q = ald_runaway_free_accel(&p, &pulse, t).unwrap();
            assert!((q - oracle).abs() < 1e-8 * 1e-4 / p.mass(), "t={t}: {q} vs {oracle}");
        }
    }

    #[test]
    fn sinusoid_branch_solves_ald() {
        let p = electron();
        let tau = p.tau_e();
        let w = 0.7 / tau;
        let drive = ForceModel::SinDrive {
            amplitude: 1e-4,
            omega: w,
            phase: 0.2,
        };
        let h = 1e-5 / w;
        for i in 0..10 {
            let t = i as f64 * 0.61 / w;
            let a = ald_runaway_free_accel(&p, &drive, t).unwrap();
            let da = (ald_runaway_free_accel(&p, &drive, t + h).unwrap()
                - ald_runaway_free_accel(&p, &drive, t - h).unwrap())
                / (2.0 * h);
            let f = drive.evaluate(t).unwrap().f;
            let resid = a - tau * da - f / p.mass();
            assert!(resid.abs() < 1e-8 * 1e-4 / p.mass(), "resid {resid}");
        }
    }
}
