//! Susceptibilities and pole locations of the one-dimensional models.
//!
//! Time dependence is e^{-i omega t}, so d/dt -> -i omega and a causal
//! response has every pole in the lower half-plane. Frequencies are in units
//! of 1/tau_e and susceptibilities in units of tau_e^2/M.

mod poly;

pub use poly::{ComplexPoly, MAX_DEGREE};

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonrel::{ModelKind, ModelNR};
use crate::phys::ParticleParams;

type C = Complex<f64>;

pub const CONVENTION: &str = "exp(-i omega t)";
/// Root-matching tolerance in omega tau_e units.
pub const ROOT_TOL: f64 = 1e-9;
/// Imaginary parts below this fraction of |omega| count as on the real axis.
pub const REAL_AXIS_REL_TOL: f64 = 1e-12;
/// Roots closer than this (relative) are tested as a multiple root.
const MULTIPLICITY_PROBE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalTransfer {
    numerator: ComplexPoly,
    denominator: ComplexPoly,
}

impl RationalTransfer {
    pub fn new(numerator: ComplexPoly, denominator: ComplexPoly) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::Degenerate("zero denominator".into()));
        }
        if numerator.is_zero() {
            return Err(Error::Degenerate("zero numerator".into()));
        }
        if numerator.degree().unwrap_or(0) > 0 && denominator.degree().unwrap_or(0) > 0 {
            let nr = numerator.roots()?;
            let dr = denominator.roots()?;
            for a in &nr {
                if let Some(b) = dr.iter().find(|b| (*a - **b).norm() < ROOT_TOL) {
                    return Err(Error::Degenerate(format!(
                        "numerator and denominator share a root near {b}"
                    )));
                }
            }
        }
        Ok(RationalTransfer { numerator, denominator })
    }

    pub fn numerator(&self) -> &ComplexPoly {
        &self.numerator
    }

    pub fn denominator(&self) -> &ComplexPoly {
        &self.denominator
    }

    pub fn convention(&self) -> &'static str {
        CONVENTION
    }

    pub fn eval(&self, omega: C) -> C {
        self.numerator.eval(omega) / self.denominator.eval(omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Causal,
    NonCausal,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pole {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl Pole {
    pub fn value(&self) -> C {
        C::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleReport {
    pub convention: &'static str,
    pub units: &'static str,
    pub poles: Vec<Pole>,
    pub verdict: Verdict,
    pub offending_poles: Vec<Pole>,
}

fn rational(num: &[C], den: &[C]) -> Result<RationalTransfer> {
    RationalTransfer::new(ComplexPoly::new(num.to_vec())?, ComplexPoly::new(den.to_vec())?)
}

/// Susceptibility x(omega)/f(omega) of `model` in internal units.
pub fn susceptibility_of(model: &ModelNR) -> Result<RationalTransfer> {
    let p = &model.particle;
    let tau = p.tau_e();
    if !(tau > 0.0) {
        return Err(Error::InvalidModel(
            "susceptibility needs tau_e > 0 to fix the frequency unit".into(),
        ));
    }
    let c = |re: f64, im: f64| C::new(re, im);
    let one = [c(1.0, 0.0)];
    let free = [c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
    match model.kind {
        ModelKind::Newton => rational(&one, &free),
        ModelKind::Ald => rational(&one, &[c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0), c(0.0, -1.0)]),
        ModelKind::Fo => rational(&[c(1.0, 0.0), c(0.0, -1.0)], &free),
        ModelKind::FoSharp => rational(&[c(1.0, 0.0), c(0.0, -1.0), c(-0.25, 0.0)], &free),
        ModelKind::SeriesTruncated(n) => {
            if !(3..=MAX_DEGREE.min(crate::nonrel::MAX_SERIES_ORDER)).contains(&n) {
                return Err(Error::InvalidModel(format!("series order {n} out of range")));
            }
            // sum_{k=2}^{N} (i omega)^k
            let den: Vec<C> = (0..=n)
                .map(|k| if k < 2 { c(0.0, 0.0) } else { c(0.0, 1.0).powu(k as u32) })
                .collect();
            rational(&one, &den)
        }
        ModelKind::Oscillator { spring_constant } => {
            if !(spring_constant > 0.0) {
                return Err(Error::InvalidModel("oscillator needs K > 0".into()));
            }
            let k = spring_constant * tau * tau / p.mass();
            rational(&one, &[c(k, 0.0), c(0.0, -k), c(-1.0, 0.0)])
        }
    }
}

fn on_axis_tol(z: C) -> f64 {
    REAL_AXIS_REL_TOL * z.norm()
}

fn nth_derivative(p: &ComplexPoly, n: usize) -> ComplexPoly {
    (0..n).fold(p.clone(), |q, _| q.derivative())
}

/// Newton on p^{(k-1)}, whose root is simple where p has a k-fold root.
fn polish_multiple(p: &ComplexPoly, k: usize, mut z: C) -> C {
    let q = nth_derivative(p, k - 1);
    let dq = q.derivative();
    let mut res = q.eval(z).norm();
    for _ in 0..50 {
        let d = dq.eval(z);
        if d.norm() == 0.0 || res == 0.0 {
            break;
        }
        let cand = z - q.eval(z) / d;
        let r = q.eval(cand).norm();
        if !(r < res) {
            break;
        }
        z = cand;
        res = r;
    }
    z
}

fn is_multiple_root(p: &ComplexPoly, k: usize, z: C) -> bool {
    // p, p', ..., p^{(k-1)} must all vanish relative to their rounding scale
    let mut q = p.clone();
    for _ in 0..k {
        if q.eval(z).norm() > 1e-7 * q.eval_scale(z) {
            return false;
        }
        q = q.derivative();
    }
    true
}

fn cluster(p: &ComplexPoly, roots: Vec<C>) -> Vec<Pole> {
    let mut groups: Vec<Vec<C>> = Vec::new();
    'next: for r in roots {
        for g in groups.iter_mut() {
            let centre = g[0];
            let tol = ROOT_TOL.max(MULTIPLICITY_PROBE * centre.norm().max(r.norm()));
            if (centre - r).norm() <= tol {
                g.push(r);
                continue 'next;
            }
        }
        groups.push(vec![r]);
    }
    let mut poles = Vec::new();
    for g in groups {
        let k = g.len();
        let mean = g.iter().sum::<C>() / k as f64;
        let exact = g.iter().all(|z| *z == g[0]);
        if k == 1 || exact {
            poles.push(Pole {
                re: g[0].re,
                im: g[0].im,
                multiplicity: k,
            });
            continue;
        }
        let z = polish_multiple(p, k, mean);
        let tight = g.iter().all(|r| (r - mean).norm() <= ROOT_TOL.max(1e-9 * mean.norm()));
        if tight || is_multiple_root(p, k, z) {
            poles.push(Pole {
                re: z.re,
                im: z.im,
                multiplicity: k,
            });
        } else {
            poles.extend(g.iter().map(|r| Pole {
                re: r.re,
                im: r.im,
                multiplicity: 1,
            }));
        }
    }
    poles.sort_by(|a, b| b.im.total_cmp(&a.im).then(a.re.total_cmp(&b.re)));
    poles
}

/// Poles of `rt` with multiplicities and the half-plane verdict.
pub fn find_poles(rt: &RationalTransfer) -> Result<PoleReport> {
    let den = rt.denominator();
    if den.degree().unwrap_or(0) == 0 {
        return Err(Error::Degenerate("denominator has no roots".into()));
    }
    let poles = cluster(den, den.roots()?);
    let offending: Vec<Pole> = poles
        .iter()
        .copied()
        .filter(|p| p.im > on_axis_tol(p.value()))
        .collect();
    let marginal = poles.iter().any(|p| p.im.abs() <= on_axis_tol(p.value()));
    let verdict = if !offending.is_empty() {
        Verdict::NonCausal
    } else if marginal {
        Verdict::Marginal
    } else {
        Verdict::Causal
    };
    Ok(PoleReport {
        convention: CONVENTION,
        units: "1/tau_e",
        poles,
        verdict,
        offending_poles: offending,
    })
}

/// Pole report for a model, the composition of [`susceptibility_of`] and [`find_poles`].
pub fn model_poles(model: &ModelNR) -> Result<PoleReport> {
    find_poles(&susceptibility_of(model)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveRealReport {
    /// Re mu(omega) from the damping coefficient, g/s.
    pub re_mu: f64,
    /// Extremes of Re mu recovered from the susceptibility on sampled real omega.
    pub sampled_min: f64,
    pub sampled_max: f64,
    pub positive: bool,
    pub verdict: Verdict,
}

/// Checks that the Ohmic memory kernel of the damped oscillator,
/// mu(omega) = zeta = K tau_e, has positive real part on the real axis.
///
/// Re mu is recovered from alpha^{-1} = K - M omega^2 - i omega mu(omega) on a
/// logarithmic grid and compared with K tau_e. K = 0 gives the degenerate
/// Marginal report.
pub fn ohmic_positive_real_part(spring_constant: f64, particle: &ParticleParams) -> Result<PositiveRealReport> {
    if !(spring_constant >= 0.0) || !spring_constant.is_finite() {
        return Err(Error::Domain(format!(
            "spring constant must be >= 0, got {spring_constant}"
        )));
    }
    let tau = particle.tau_e();
    let zeta = spring_constant * tau;
    if spring_constant == 0.0 {
        return Ok(PositiveRealReport {
            re_mu: 0.0,
            sampled_min: 0.0,
            sampled_max: 0.0,
            positive: false,
            verdict: Verdict::Marginal,
        });
    }
    let model = ModelNR::new(ModelKind::Oscillator { spring_constant }, *particle)?;
    let rt = susceptibility_of(&model)?;
    let m = particle.mass();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=200 {
        let w_hat = 10f64.powf(-12.0 + 14.0 * i as f64 / 200.0);
        for s in [1.0, -1.0] {
            let w = C::new(s * w_hat, 0.0);
            // internal alpha -> physical: alpha_phys = alpha tau^2 / M, omega = w/tau
            let inv = 1.0 / rt.eval(w) * (m / (tau * tau));
            let omega = w / tau;
            let mu = (C::new(spring_constant, 0.0) - omega * omega * m - inv) / (C::new(0.0, 1.0) * omega);
            lo = lo.min(mu.re);
            hi = hi.max(mu.re);
        }
    }
    let positive = lo > 0.0;
    Ok(PositiveRealReport {
        re_mu: zeta,
        sampled_min: lo,
        sampled_max: hi,
        positive,
        verdict: if positive { Verdict::Causal } else { Verdict::Marginal },
    })
}

pub fn verify_positive_real_part(model: &ModelNR) -> Result<PositiveRealReport> {
    match model.kind {
        ModelKind::Oscillator { spring_constant } => ohmic_positive_real_part(spring_constant, &model.particle),
        _ => Err(Error::InvalidModel(format!(
            "positive-real check needs the oscillator, got {}",
            model.kind.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::Constants;
    use proptest::prelude::*;

    fn model(kind: ModelKind) -> ModelNR {
        ModelNR::new(kind, ParticleParams::electron(&Constants::GAUSSIAN)).unwrap()
    }

    fn oscillator(w0_tau: f64) -> ModelNR {
        let p = ParticleParams::electron(&Constants::GAUSSIAN);
        let w0 = w0_tau / p.tau_e();
        model(ModelKind::Oscillator {
            spring_constant: p.mass() * w0 * w0,
        })
    }

    #[test]
    fn ald_pole_is_plus_i() {
        let r = model_poles(&model(ModelKind::Ald)).unwrap();
        assert_eq!(r.verdict, Verdict::NonCausal);
        assert_eq!(r.offending_poles.len(), 1);
        let p = r.offending_poles[0];
        assert!((p.value() - C::new(0.0, 1.0)).norm() < 1e-9);
        assert!(r
            .poles
            .iter()
            .any(|p| p.value() == C::new(0.0, 0.0) && p.multiplicity == 2));
    }

    #[test]
    fn free_particles_are_marginal() {
        for kind in [ModelKind::Newton, ModelKind::Fo, ModelKind::FoSharp] {
            let r = model_poles(&model(kind)).unwrap();
            assert_eq!(r.verdict, Verdict::Marginal, "{kind:?}");
            assert_eq!(
                r.poles,
                vec![Pole {
                    re: 0.0,
                    im: 0.0,
                    multiplicity: 2
                }]
            );
        }
    }

    #[test]
    fn oscillator_poles_follow_quadratic_formula() {
        for w0_tau in [1e-7, 1e-3, 0.5, 1.9] {
            let r = model_poles(&oscillator(w0_tau)).unwrap();
            assert_eq!(r.verdict, Verdict::Causal, "{w0_tau}");
            // K - M w^2 - i w K tau = 0 in units M = tau = 1
            let k = w0_tau * w0_tau;
            let disc = (C::new(4.0 * k - k * k * 1.0, 0.0)).sqrt();
            let expect = [(-C::new(0.0, k) + disc) / 2.0, (-C::new(0.0, k) - disc) / 2.0];
            for e in expect {
                let hit = r.poles.iter().any(|p| (p.value() - e).norm() < 1e-9 * e.norm());
                assert!(hit, "{w0_tau}: {e} not in {:?}", r.poles);
            }
            let damping = r.poles[0].im;
            assert!((damping / (-k / 2.0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn critically_damped_oscillator_has_double_pole() {
        let r = model_poles(&oscillator(2.0)).unwrap();
        assert_eq!(r.poles.len(), 1);
        assert_eq!(r.poles[0].multiplicity, 2);
        assert!((r.poles[0].value() - C::new(0.0, -2.0)).norm() < 1e-7);
        assert_eq!(r.verdict, Verdict::Causal);
    }

    #[test]
    fn series_truncations_are_surveyed() {
        // roots of sum_{k=2}^N (i w)^k: w = 0 twice and w = -i z with z^{N-1} = 1, z != 1
        for n in 3..=30 {
            let r = model_poles(&model(ModelKind::SeriesTruncated(n))).unwrap();
            let count: usize = r.poles.iter().map(|p| p.multiplicity).sum();
            assert_eq!(count, n);
            for k in 1..n - 1 {
                let z = C::from_polar(1.0, std::f64::consts::TAU * k as f64 / (n - 1) as f64);
                let w = C::new(0.0, -1.0) * z;
                assert!(r.poles.iter().any(|p| (p.value() - w).norm() < 1e-9), "N={n} k={k}");
            }
            let upper = (1..n - 1)
                .filter(|&k| (std::f64::consts::TAU * k as f64 / (n - 1) as f64).cos() < -1e-12)
                .count();
            assert_eq!(r.offending_poles.len(), upper, "N={n}");
            let verdict = if upper > 0 {
                Verdict::NonCausal
            } else {
                Verdict::Marginal
            };
            assert_eq!(r.verdict, verdict, "N={n}");
        }
    }

    #[test]
    fn residual_audit() {
        let kinds = [
            ModelKind::Newton,
            ModelKind::Ald,
            ModelKind::Fo,
            ModelKind::FoSharp,
            ModelKind::SeriesTruncated(7),
            ModelKind::SeriesTruncated(30),
        ];
        let mut models: Vec<ModelNR> = kinds.into_iter().map(model).collect();
        models.push(oscillator(1e-7));
        models.push(oscillator(0.3));
        for m in &models {
            let rt = susceptibility_of(m).unwrap();
            let den = rt.denominator();
            for p in model_poles(m).unwrap().poles {
                let res = den.eval(p.value()).norm();
                assert!(res < 1e-8 * den.max_coefficient(), "{m:?}: {res}");
            }
        }
    }

    #[test]
    fn common_roots_rejected() {
        let num = ComplexPoly::from_real(&[-1.0, 1.0]).unwrap();
        let den = ComplexPoly::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(RationalTransfer::new(num, den), Err(Error::Degenerate(_))));
        let zero = ComplexPoly::new(vec![]).unwrap();
        let one = ComplexPoly::from_real(&[1.0]).unwrap();
        assert!(RationalTransfer::new(one.clone(), zero).is_err());
        assert!(matches!(
            find_poles(&RationalTransfer::new(one.clone(), one).unwrap()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn susceptibility_matches_operator_form() {
        // direct evaluation of the model operators at sample frequencies
        let w = C::new(0.37, 0.0);
        let i = C::new(0.0, 1.0);
        let cases: Vec<(ModelKind, C)> = vec![
            (ModelKind::Newton, 1.0 / (-w * w)),
            (ModelKind::Ald, 1.0 / (-w * w * (1.0 + i * w))),
            (ModelKind::Fo, (1.0 - i * w) / (-w * w)),
            (ModelKind::FoSharp, (1.0 - i * w / 2.0).powu(2) / (-w * w)),
        ];
        for (kind, expect) in cases {
            let got = susceptibility_of(&model(kind)).unwrap().eval(w);
            assert!((got - expect).norm() < 1e-14 * expect.norm(), "{kind:?}");
        }
    }

    #[test]
    fn positive_real_part() {
        let p = ParticleParams::electron(&Constants::GAUSSIAN);
        let m = oscillator(1e-3);
        let r = verify_positive_real_part(&m).unwrap();
        let k = match m.kind {
            ModelKind::Oscillator { spring_constant } => spring_constant,
            _ => unreachable!(),
        };
        assert!(r.positive);
        assert_eq!(r.verdict, Verdict::Causal);
        assert!((r.re_mu - k * p.tau_e()).abs() <= 1e-15 * r.re_mu);
        assert!((r.sampled_min / r.re_mu - 1.0).abs() < 1e-6);
        assert!((r.sampled_max / r.re_mu - 1.0).abs() < 1e-6);
        let doubled = ohmic_positive_real_part(2.0 * k, &p).unwrap();
        assert!((doubled.re_mu / r.re_mu - 2.0).abs() < 1e-15);
        let zero = ohmic_positive_real_part(0.0, &p).unwrap();
        assert_eq!((zero.positive, zero.verdict), (false, Verdict::Marginal));
        assert!(verify_positive_real_part(&model(ModelKind::Fo)).is_err());
    }

    fn all_kinds() -> impl Strategy<Value = ModelKind> {
        prop_oneof![
            Just(ModelKind::Newton),
            Just(ModelKind::Ald),
            Just(ModelKind::Fo),
            Just(ModelKind::FoSharp),
            (3usize..=30).prop_map(ModelKind::SeriesTruncated),
            (-8.0f64..0.0).prop_map(|l| {
                let p = ParticleParams::electron(&Constants::GAUSSIAN);
                let w0 = 10f64.powf(l) / p.tau_e();
                ModelKind::Oscillator {
                    spring_constant: p.mass() * w0 * w0,
                }
            }),
        ]
    }

    proptest! {
        #[test]
        fn reality_symmetry(kind in all_kinds(), re in -3.0f64..3.0, im in -3.0f64..0.5) {
            let rt = susceptibility_of(&model(kind)).unwrap();
            let w = C::new(re, im);
            let a = rt.eval(w);
            let b = rt.eval(-w.conj());
            prop_assume!(a.norm().is_finite() && a.norm() > 0.0);
            prop_assert!((b - a.conj()).norm() <= 1e-12 * a.norm());
        }
    }
}
