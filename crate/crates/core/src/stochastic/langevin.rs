use super::ensemble::splitmix64;
use super::noise::{NoiseGenerator, NoiseSpec};
use crate::error::{Error, Result};
use crate::nonrel::StateNR;
use crate::phys::{Constants, ForceModel, ParticleParams};

/// Largest admitted omega_0 dt for the oscillator.
pub const MAX_PHASE_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Heun,
    /// White noise only.
    EulerMaruyama,
}

/// Sampled path on a uniform grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StochasticTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl StochasticTrajectory {
    fn with_capacity(n: usize) -> Self {
        StochasticTrajectory {
            t: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, x: f64, v: f64) {
        self.t.push(t);
        self.x.push(x);
        self.v.push(v);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Uniform grid covering [t0, t_end] with step no larger than `dt`.
pub fn uniform_steps(t0: f64, t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    let span = t_end - t0;
    if !(span >= 0.0 && span.is_finite()) {
        return Err(Error::Domain(format!("invalid time span [{t0}, {t_end}]")));
    }
    if span == 0.0 {
        return Ok((0, dt));
    }
    let n = (span / dt * (1.0 - 1e-12)).ceil().max(1.0);
    if n > 1e12 {
        return Err(Error::Domain(format!("{n} steps requested")));
    }
    Ok((n as usize, span / n))
}

fn check_scheme(scheme: Scheme, spec: &NoiseSpec) -> Result<()> {
    if scheme == Scheme::EulerMaruyama && !spec.is_white() {
        return Err(Error::Domain("Euler-Maruyama is only offered for white noise".into()));
    }
    Ok(())
}

/// Damped oscillator M x'' + zeta x' + K x = F(t) with zeta = K tau_e.
#[derive(Debug, Clone)]
pub struct LangevinOscillator {
    particle: ParticleParams,
    spring: f64,
    spec: NoiseSpec,
}

impl LangevinOscillator {
    /// Fails unless the noise damping equals K tau_e to 1e-12 relative.
    pub fn new(particle: &ParticleParams, spring_constant: f64, spec: &NoiseSpec) -> Result<Self> {
        spec.validate()?;
        if !(spring_constant > 0.0 && spring_constant.is_finite()) {
            return Err(Error::Domain(format!(
                "spring constant must be > 0, got {spring_constant}"
            )));
        }
        let zeta = spring_constant * particle.tau_e();
        if (spec.damping() - zeta).abs() > 1e-12 * zeta {
            return Err(Error::Domain(format!(
                "noise damping {} differs from K tau_e = {zeta}",
                spec.damping()
            )));
        }
        Ok(LangevinOscillator {
            particle: *particle,
            spring: spring_constant,
            spec: *spec,
        })
    }

    pub fn omega0(&self) -> f64 {
        (self.spring / self.particle.mass()).sqrt()
    }

    pub fn damping(&self) -> f64 {
        self.spring * self.particle.tau_e()
    }

    /// Advances `n_steps` of size `dt` from `initial`, calling `observe(t, x, v)`
    /// at the initial point and after every step.
    pub fn stream<O: FnMut(f64, f64, f64)>(
        &self,
        consts: &Constants,
        initial: &StateNR,
        n_steps: usize,
        dt: f64,
        scheme: Scheme,
        mut observe: O,
    ) -> Result<()> {
        check_scheme(scheme, &self.spec)?;
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
        }
        if self.omega0() * dt > MAX_PHASE_STEP {
            return Err(Error::Domain(format!(
                "omega0 dt = {} exceeds the stability bound {MAX_PHASE_STEP}",
                self.omega0() * dt
            )));
        }
        let mut noise = NoiseGenerator::new(&self.spec, consts, dt)?;
        let white = self.spec.is_white();
        let m = self.particle.mass();
        let (k, z) = (self.spring / m, self.damping() / m);
        let accel = |x: f64, v: f64, f: f64| f / m - k * x - z * v;
        let (mut x, mut v) = (initial.x, initial.v);
        observe(initial.t, x, v);
        for n in 1..=n_steps {
            let f0 = noise.current();
            let f1 = noise.advance();
            let a0 = accel(x, v, f0);
            match scheme {
                Scheme::EulerMaruyama => {
                    x += dt * v;
                    v += dt * a0;
                }
                Scheme::Heun => {
                    let xp = x + dt * v;
                    let vp = v + dt * a0;
                    let a1 = accel(xp, vp, if white { f0 } else { f1 });
                    x += 0.5 * dt * (v + vp);
                    v += 0.5 * dt * (a0 + a1);
                }
            }
            observe(initial.t + n as f64 * dt, x, v);
        }
        Ok(())
    }
}

/// Recorded Langevin-oscillator path from `initial.t` to `t_end`.
pub fn langevin_oscillator(
    particle: &ParticleParams,
    spring_constant: f64,
    spec: &NoiseSpec,
    consts: &Constants,
    initial: &StateNR,
    t_end: f64,
    dt: f64,
) -> Result<StochasticTrajectory> {
    let osc = LangevinOscillator::new(particle, spring_constant, spec)?;
    let (n, h) = uniform_steps(initial.t, t_end, dt)?;
    let mut out = StochasticTrajectory::with_capacity(n + 1);
    osc.stream(consts, initial, n, h, Scheme::Heun, |t, x, v| out.push(t, x, v))?;
    Ok(out)
}

/// Paths advanced in lockstep by [`equipartition_ratio`].
pub const EQUIPARTITION_LANES: usize = 4;

/// Time average of K x^2 / k T over [`EQUIPARTITION_LANES`] independent
/// white-noise paths, each started from rest and run for `burn_in_steps`
/// before `n_steps` of averaging. Lane seeds are `seed ^ splitmix64(lane)`.
#[allow(clippy::too_many_arguments)]
pub fn equipartition_ratio(
    particle: &ParticleParams,
    spring_constant: f64,
    temperature: f64,
    consts: &Constants,
    seed: u64,
    dt: f64,
    burn_in_steps: usize,
    n_steps: usize,
) -> Result<f64> {
    const L: usize = EQUIPARTITION_LANES;
    if !(temperature > 0.0) {
        return Err(Error::Domain("equipartition needs T > 0".into()));
    }
    if n_steps == 0 {
        return Err(Error::Domain("equipartition needs n_steps > 0".into()));
    }
    let spec = NoiseSpec::white(temperature, spring_constant * particle.tau_e(), seed)?;
    let osc = LangevinOscillator::new(particle, spring_constant, &spec)?;
    if !(dt > 0.0) || osc.omega0() * dt > MAX_PHASE_STEP {
        return Err(Error::Domain(format!(
            "omega0 dt = {} outside (0, {MAX_PHASE_STEP}]",
            osc.omega0() * dt
        )));
    }
    let mut gens = Vec::with_capacity(L);
    for lane in 0..L {
        gens.push(NoiseGenerator::new(
            &spec.with_seed(seed ^ splitmix64(lane as u64)),
            consts,
            dt,
        )?);
    }
    let m = particle.mass();
    let (k, z) = (spring_constant / m, osc.damping() / m);
    let mut x = [0.0; L];
    let mut v = [0.0; L];
    let mut acc = [0.0; L];
    for n in 0..burn_in_steps + n_steps {
        let keep = n >= burn_in_steps;
        for l in 0..L {
            let f = gens[l].current() / m;
            gens[l].advance();
            (x[l], v[l]) = heun_white(k, z, dt, x[l], v[l], f);
            if keep {
                acc[l] += x[l] * x[l];
            }
        }
    }
    let mean = acc.iter().sum::<f64>() / (L * n_steps) as f64;
    Ok(spring_constant * mean / (consts.k_b * temperature))
}

/// One Heun step of x'' = f - k x - z v with f held over the step.
#[inline(always)]
fn heun_white(k: f64, z: f64, dt: f64, x: f64, v: f64, f: f64) -> (f64, f64) {
    let a0 = f - k * x - z * v;
    let xp = x + dt * v;
    let vp = v + dt * a0;
    let a1 = f - k * xp - z * vp;
    (x + 0.5 * dt * (v + vp), v + 0.5 * dt * (a0 + a1))
}

/// M x'' = f(t) + tau_e f'(t) + F(t) + tau_e F'(t) on a uniform grid.
///
/// The deterministic part uses the trapezoid (Heun) rule. The noise impulse
/// over a step is F_n dt for white noise, whose tau_e F' term has no pathwise
/// meaning and is dropped; for the exponential process it is
/// (F_n + F_{n+1}) dt / 2 + tau_e (F_{n+1} - F_n), the last term exact.
pub fn fluctuating_fo(
    particle: &ParticleParams,
    drive: &ForceModel,
    spec: &NoiseSpec,
    consts: &Constants,
    initial: &StateNR,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<StochasticTrajectory> {
    check_scheme(scheme, spec)?;
    drive.validate()?;
    let (n, h) = uniform_steps(initial.t, t_end, dt)?;
    let mut noise = NoiseGenerator::new(spec, consts, h)?;
    let white = spec.is_white();
    let (m, tau) = (particle.mass(), particle.tau_e());
    let det = |t: f64| -> Result<f64> {
        let e = drive.evaluate(t)?;
        Ok((e.f + tau * e.df) / m)
    };
    let mut out = StochasticTrajectory::with_capacity(n + 1);
    let (mut x, mut v) = (initial.x, initial.v);
    let mut t = initial.t;
    let mut a0 = det(t)?;
    out.push(t, x, v);
    for i in 1..=n {
        let t1 = if i == n { t_end } else { initial.t + i as f64 * h };
        let a1 = det(t1)?;
        let f0 = noise.current();
        let f1 = noise.advance();
        let (dv, v_pred);
        match scheme {
            Scheme::EulerMaruyama => {
                dv = h * (a0 + f0 / m);
                x += h * v;
                v += dv;
            }
            Scheme::Heun => {
                let kick = if white {
                    h * f0 / m
                } else {
                    0.5 * h * (f0 + f1) / m + tau * (f1 - f0) / m
                };
                dv = 0.5 * h * (a0 + a1) + kick;
                v_pred = v + dv;
                x += 0.5 * h * (v + v_pred);
                v = v_pred;
            }
        }
        t = t1;
        a0 = a1;
        out.push(t, x, v);
    }
    Ok(out)
}

/// Force-free case of [`fluctuating_fo`].
pub fn free_fluctuating(
    particle: &ParticleParams,
    spec: &NoiseSpec,
    consts: &Constants,
    initial: &StateNR,
    t_end: f64,
    dt: f64,
) -> Result<StochasticTrajectory> {
    fluctuating_fo(
        particle,
        &ForceModel::Zero,
        spec,
        consts,
        initial,
        t_end,
        dt,
        Scheme::Heun,
    )
}
