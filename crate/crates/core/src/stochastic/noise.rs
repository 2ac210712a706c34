use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phys::Constants;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NoiseKind {
    /// <F(t)F(t')> = 2 zeta k T delta(t - t')
    WhiteFdt { temperature: f64, damping: f64 },
    /// <F(t)F(t')> = (k T zeta / tau_c) exp(-|t - t'| / tau_c); `tau_c = None`
    /// selects the bath time hbar / (2 pi k T).
    ExpCorrelated {
        temperature: f64,
        damping: f64,
        tau_c: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn white(temperature: f64, damping: f64, seed: u64) -> Result<Self> {
        let s = NoiseSpec {
            kind: NoiseKind::WhiteFdt { temperature, damping },
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn exp_correlated(temperature: f64, damping: f64, tau_c: Option<f64>, seed: u64) -> Result<Self> {
        let s = NoiseSpec {
            kind: NoiseKind::ExpCorrelated {
                temperature,
                damping,
                tau_c,
            },
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        NoiseSpec { seed, ..*self }
    }

    pub fn temperature(&self) -> f64 {
        match self.kind {
            NoiseKind::WhiteFdt { temperature, .. } | NoiseKind::ExpCorrelated { temperature, .. } => temperature,
        }
    }

    pub fn damping(&self) -> f64 {
        match self.kind {
            NoiseKind::WhiteFdt { damping, .. } | NoiseKind::ExpCorrelated { damping, .. } => damping,
        }
    }

    pub fn is_white(&self) -> bool {
        matches!(self.kind, NoiseKind::WhiteFdt { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.temperature();
        let z = self.damping();
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("temperature must be >= 0, got {t}")));
        }
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("damping must be >= 0, got {z}")));
        }
        if let NoiseKind::ExpCorrelated { tau_c: Some(tc), .. } = self.kind {
            if !(tc > 0.0 && tc.is_finite()) {
                return Err(Error::Domain(format!("correlation time must be > 0, got {tc}")));
            }
        }
        Ok(())
    }

    /// Correlation time of the exponential process; `None` for white noise
    /// and for the default at T = 0, where the noise vanishes.
    pub fn tau_c(&self, consts: &Constants) -> Result<Option<f64>> {
        match self.kind {
            NoiseKind::WhiteFdt { .. } => Ok(None),
            NoiseKind::ExpCorrelated { tau_c: Some(tc), .. } => Ok(Some(tc)),
            NoiseKind::ExpCorrelated { temperature: 0.0, .. } => Ok(None),
            NoiseKind::ExpCorrelated { temperature, .. } => consts.bath_correlation_time(temperature).map(Some),
        }
    }

    /// Stationary variance of the exponential process, dyn^2.
    pub fn stationary_variance(&self, consts: &Constants) -> Result<Option<f64>> {
        let kt = consts.k_b * self.temperature();
        Ok(self.tau_c(consts)?.map(|tc| kt * self.damping() / tc))
    }
}

/// Sequential force samples F_0, F_1, ... at spacing `dt`.
///
/// White noise: independent N(0, 2 zeta k T / dt). Exponential: exact
/// Gauss-Markov update F_{n+1} = rho F_n + sqrt(var (1 - rho^2)) xi with
/// rho = exp(-dt / tau_c), F_0 drawn from the stationary law.
/// At T = 0 every sample is exactly zero and no random numbers are drawn.
#[derive(Debug, Clone)]
pub struct NoiseGenerator {
    rng: ChaCha8Rng,
    mode: Mode,
    current: f64,
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Silent,
    White { sd: f64 },
    Markov { rho: f64, innov_sd: f64 },
}

impl NoiseGenerator {
    pub fn new(spec: &NoiseSpec, consts: &Constants, dt: f64) -> Result<Self> {
        spec.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let kt = consts.k_b * spec.temperature();
        let strength = kt * spec.damping();
        let (mode, current) = if strength == 0.0 {
            (Mode::Silent, 0.0)
        } else {
            match spec.kind {
                NoiseKind::WhiteFdt { .. } => (
                    Mode::White {
                        sd: (2.0 * strength / dt).sqrt(),
                    },
                    0.0,
                ),
                NoiseKind::ExpCorrelated { .. } => {
                    let var = spec.stationary_variance(consts)?.unwrap_or(0.0);
                    let tc = spec.tau_c(consts)?.unwrap_or(f64::INFINITY);
                    let rho = (-dt / tc).exp();
                    // 1 - rho^2 without cancellation for dt << tau_c
                    let one_minus = -(-2.0 * dt / tc).exp_m1();
                    let f0 = var.sqrt() * draw(&mut rng);
                    (
                        Mode::Markov {
                            rho,
                            innov_sd: (var * one_minus).sqrt(),
                        },
                        f0,
                    )
                }
            }
        };
        let mut g = NoiseGenerator { rng, mode, current };
        if let Mode::White { .. } = g.mode {
            g.current = g.fresh();
        }
        Ok(g)
    }

    fn fresh(&mut self) -> f64 {
        match self.mode {
            Mode::Silent => 0.0,
            Mode::White { sd } => sd * draw(&mut self.rng),
            Mode::Markov { rho, innov_sd } => rho * self.current + innov_sd * draw(&mut self.rng),
        }
    }

    /// The sample at the current grid point.
    #[inline]
    pub fn current(&self) -> f64 {
        self.current
    }

    /// Moves to the next grid point and returns its sample.
    #[inline]
    pub fn advance(&mut self) -> f64 {
        self.current = self.fresh();
        self.current
    }
}

#[inline]
fn draw(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `n_steps` consecutive samples of the fluctuating force, dyn.
pub fn sample_noise(spec: &NoiseSpec, consts: &Constants, dt: f64, n_steps: usize) -> Result<Vec<f64>> {
    let mut g = NoiseGenerator::new(spec, consts, dt)?;
    let mut out = Vec::with_capacity(n_steps);
    if n_steps > 0 {
        out.push(g.current());
    }
    for _ in 1..n_steps {
        out.push(g.advance());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::fit_line;

    const C: Constants = Constants::GAUSSIAN;

    fn mean_sd(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn zero_temperature_is_silent() {
        for spec in [
            NoiseSpec::white(0.0, 1e-3, 1).unwrap(),
            NoiseSpec::exp_correlated(0.0, 1e-3, None, 1).unwrap(),
            NoiseSpec::exp_correlated(0.0, 1e-3, Some(1e-15), 1).unwrap(),
        ] {
            assert!(sample_noise(&spec, &C, 1e-16, 1000).unwrap().iter().all(|&f| f == 0.0));
        }
    }

    #[test]
    fn default_correlation_time_at_room_temperature() {
        let spec = NoiseSpec::exp_correlated(300.0, 1.0, None, 0).unwrap();
        let tc = spec.tau_c(&C).unwrap().unwrap();
        let quoted = 1.1e-12 / 300.0;
        assert!((tc / quoted - 1.0).abs() < 0.15, "{tc}");
        let exact = C.hbar / (2.0 * std::f64::consts::PI * C.k_b * 300.0);
        assert_eq!(tc, exact);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(NoiseSpec::white(-1.0, 1.0, 0).is_err());
        assert!(NoiseSpec::white(1.0, f64::NAN, 0).is_err());
        assert!(NoiseSpec::exp_correlated(1.0, 1.0, Some(0.0), 0).is_err());
        let s = NoiseSpec::white(1.0, 1.0, 0).unwrap();
        assert!(sample_noise(&s, &C, 0.0, 10).is_err());
    }

    #[test]
    fn seed_determinism() {
        let s = NoiseSpec::exp_correlated(300.0, 1e-10, None, 42).unwrap();
        let a = sample_noise(&s, &C, 1e-16, 5000).unwrap();
        let b = sample_noise(&s, &C, 1e-16, 5000).unwrap();
        assert_eq!(a, b);
        let c = sample_noise(&s.with_seed(43), &C, 1e-16, 5000).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn white_noise_moments() {
        let (t, z, dt) = (300.0, 2e-10, 1e-17);
        let n = 200_000;
        for seed in 0..5 {
            let x = sample_noise(&NoiseSpec::white(t, z, seed).unwrap(), &C, dt, n).unwrap();
            let sd = (2.0 * z * C.k_b * t / dt).sqrt();
            let (m, s) = mean_sd(&x);
            assert!(m.abs() < 4.0 * sd / (n as f64).sqrt());
            assert!((s / sd - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn exp_correlated_autocorrelation_rate() {
        let tc = 1e-15;
        let dt = tc / 10.0;
        let n = 1_000_000;
        let spec = NoiseSpec::exp_correlated(300.0, 1e-10, Some(tc), 7).unwrap();
        let x = sample_noise(&spec, &C, dt, n).unwrap();
        let (m, s) = mean_sd(&x);
        let var = spec.stationary_variance(&C).unwrap().unwrap();
        assert!((s * s / var - 1.0).abs() < 0.05);
        // the effective sample count is reduced by the correlation length
        let n_eff = n as f64 * dt / (2.0 * tc);
        assert!(m.abs() < 4.0 * var.sqrt() / n_eff.sqrt());
        let lags: Vec<usize> = (1..=15).collect();
        let logs: Vec<f64> = lags
            .iter()
            .map(|&k| {
                let c = x.windows(k + 1).map(|w| (w[0] - m) * (w[k] - m)).sum::<f64>() / (n - k) as f64;
                (c / (s * s)).ln()
            })
            .collect();
        let ts: Vec<f64> = lags.iter().map(|&k| k as f64 * dt).collect();
        let rate = -fit_line(&ts, &logs).unwrap().slope;
        assert!((rate * tc - 1.0).abs() < 0.05, "rate {}", rate * tc);
    }

    #[test]
    fn exp_correlated_matches_white_strength() {
        // integral of the covariance is k T zeta = half the white-noise strength 2 zeta k T
        let spec = NoiseSpec::exp_correlated(10.0, 3.0, Some(2e-15), 0).unwrap();
        let var = spec.stationary_variance(&C).unwrap().unwrap();
        let integral = 2.0 * var * 2e-15;
        assert!((integral / (2.0 * 3.0 * C.k_b * 10.0) - 1.0).abs() < 1e-15);
    }
}
