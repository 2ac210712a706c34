use super::ald::ald_runaway_free_accel;
use super::series::series_top;
use super::{ModelKind, ModelNR, StateNR};
use crate::error::{Error, Result};
use crate::ode::{self, Method, OdeSystem, Options, Stats};
use crate::phys::{Dimension, ForceEval, ForceModel, ParticleParams, Scaling};
use crate::stats::fit_line;

/// Growth of |a| over its reference value that counts as a runaway.
pub const RUNAWAY_AMPLIFICATION: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct NrOptions {
    /// Relative and absolute tolerance in internal units.
    pub tol: f64,
    /// Physical output times; `None` records every accepted step.
    pub t_eval: Option<Vec<f64>>,
    /// Physical fixed step; disables error control.
    pub fixed_step: Option<f64>,
    pub method: Method,
    pub runaway_guard: bool,
}

impl NrOptions {
    pub fn with_tol(tol: f64) -> Self {
        NrOptions {
            tol,
            t_eval: None,
            fixed_step: None,
            method: Method::Dopri5,
            runaway_guard: true,
        }
    }
}

/// One output row: (t, x, v, a, f, P_FO, P_Larmor) in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub a: f64,
    pub f: f64,
    pub p_fo: f64,
    pub p_larmor: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub model: String,
    pub points: Vec<TrajectoryPoint>,
    pub stats: Stats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn velocities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.v).collect()
    }

    pub fn accelerations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.a).collect()
    }

    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }
}

#[derive(Debug, Clone, Copy)]
enum Dynamics {
    Model(ModelKind),
    RunawayFreeAld,
}

struct NrSystem<'a> {
    dynamics: Dynamics,
    particle: ParticleParams,
    force: &'a ForceModel,
    scale: Scaling,
    /// tau_e in internal time units
    tau: f64,
    /// spring constant in internal units
    spring: f64,
}

impl NrSystem<'_> {
    fn force_hat(&self, t_hat: f64) -> Result<ForceEval> {
        let s = &self.scale;
        let e = self.force.evaluate(s.to_physical(t_hat, Dimension::TIME))?;
        Ok(ForceEval {
            f: s.to_internal(e.f, Dimension::FORCE),
            df: s.to_internal(e.df, Dimension::FORCE_RATE),
            d2f: s.to_internal(e.d2f, Dimension::FORCE_ACCEL),
        })
    }

    /// Internal acceleration for the models where it is not a state variable.
    fn algebraic_accel(&self, t_hat: f64, y: &[f64]) -> Result<f64> {
        let tau = self.tau;
        Ok(match self.dynamics {
            Dynamics::Model(kind) => {
                let e = self.force_hat(t_hat)?;
                match kind {
                    ModelKind::Newton => e.f,
                    ModelKind::Fo => e.f + tau * e.df,
                    ModelKind::FoSharp => e.f + tau * e.df + 0.25 * tau * tau * e.d2f,
                    ModelKind::Oscillator { .. } => e.f - self.spring * tau * y[1] - self.spring * y[0],
                    ModelKind::Ald | ModelKind::SeriesTruncated(_) => y[2],
                }
            }
            Dynamics::RunawayFreeAld => {
                let t = self.scale.to_physical(t_hat, Dimension::TIME);
                let a = ald_runaway_free_accel(&self.particle, self.force, t)?;
                self.scale.to_internal(a, Dimension::ACCELERATION)
            }
        })
    }
}

impl OdeSystem for NrSystem<'_> {
    fn dim(&self) -> usize {
        match self.dynamics {
            Dynamics::Model(ModelKind::Ald) => 3,
            Dynamics::Model(ModelKind::SeriesTruncated(n)) => n,
            _ => 2,
        }
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        match self.dynamics {
            Dynamics::Model(ModelKind::Ald) => {
                let f = self.force_hat(t)?.f;
                dy[0] = y[1];
                dy[1] = y[2];
                dy[2] = (y[2] - f) / self.tau;
            }
            Dynamics::Model(ModelKind::SeriesTruncated(n)) => {
                let f = self.force_hat(t)?.f;
                dy[..n - 1].copy_from_slice(&y[1..n]);
                dy[n - 1] = series_top(self.tau, f, y);
            }
            _ => {
                dy[0] = y[1];
                dy[1] = self.algebraic_accel(t, y)?;
            }
        }
        Ok(())
    }
}

fn choose_scaling(particle: &ParticleParams, force: &ForceModel, initial: &StateNR, span: f64) -> Result<Scaling> {
    let tau = particle.tau_e();
    let time = if tau > 0.0 {
        tau
    } else if span > 0.0 {
        span
    } else {
        1.0
    };
    let m = particle.mass();
    let length = if force.scale() > 0.0 {
        force.scale() * time * time / m
    } else if initial.x != 0.0 {
        initial.x.abs()
    } else if initial.v != 0.0 {
        initial.v.abs() * time
    } else if let Some(a) = initial.a.filter(|a| *a != 0.0) {
        a.abs() * time * time
    } else {
        particle.c() * time
    };
    Scaling::new(time, m, length)
}

struct RunawayGuard {
    enabled: bool,
    reference: f64,
    history: Vec<(f64, f64)>,
}

impl RunawayGuard {
    fn check(&mut self, t_hat: f64, a_hat: f64, f_hat: f64, scale: &Scaling) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        self.reference = self.reference.max(f_hat.abs());
        let mag = a_hat.abs();
        if mag > 0.0 {
            self.history.push((t_hat, mag.ln()));
        }
        let amplification = mag / self.reference;
        if amplification <= RUNAWAY_AMPLIFICATION {
            return Ok(());
        }
        let cut = (self.reference * 1e3).ln();
        let mut tail: Vec<(f64, f64)> = self.history.iter().copied().filter(|p| p.1 >= cut).collect();
        if tail.len() < 3 {
            let half = self.history.len() / 2;
            tail = self.history[half..].to_vec();
        }
        let (ts, ls): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
        let e_folding_hat = fit_line(&ts, &ls).map(|f| 1.0 / f.slope).unwrap_or(f64::NAN);
        Err(Error::Runaway {
            t_s: scale.to_physical(t_hat, Dimension::TIME),
            amplification,
            e_folding_s: scale.to_physical(e_folding_hat, Dimension::TIME),
        })
    }
}

fn run(
    dynamics: Dynamics,
    particle: &ParticleParams,
    force: &ForceModel,
    initial: &StateNR,
    t_end: f64,
    opts: &NrOptions,
    name: String,
) -> Result<Trajectory> {
    force.validate()?;
    if !(opts.tol > 0.0) && opts.fixed_step.is_none() {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let t0 = initial.t;
    if !(t_end.is_finite() && t0.is_finite() && t_end >= t0) {
        return Err(Error::Domain(format!("invalid time span [{t0}, {t_end}]")));
    }
    let scale = choose_scaling(particle, force, initial, t_end - t0)?;
    let spring = match dynamics {
        Dynamics::Model(ModelKind::Oscillator { spring_constant }) => {
            scale.to_internal(spring_constant, Dimension::STIFFNESS)
        }
        _ => 0.0,
    };
    let sys = NrSystem {
        dynamics,
        particle: *particle,
        force,
        scale,
        tau: scale.to_internal(particle.tau_e(), Dimension::TIME),
        spring,
    };

    let to_t = |t: f64| scale.to_internal(t, Dimension::TIME);
    let mut y0 = vec![
        scale.to_internal(initial.x, Dimension::LENGTH),
        scale.to_internal(initial.v, Dimension::VELOCITY),
    ];
    match dynamics {
        Dynamics::Model(ModelKind::Ald) => {
            let a = match initial.a {
                Some(a) => a,
                None => ald_runaway_free_accel(particle, force, t0)?,
            };
            y0.push(scale.to_internal(a, Dimension::ACCELERATION));
        }
        Dynamics::Model(ModelKind::SeriesTruncated(n)) => {
            // non-runaway values: x^(k) = d^{k-2}/dt^{k-2} (f + tau f')/M
            let e = force.evaluate(t0)?;
            let (m, tau) = (particle.mass(), particle.tau_e());
            let a = initial.a.unwrap_or((e.f + tau * e.df) / m);
            let higher = [a, (e.df + tau * e.d2f) / m, e.d2f / m];
            for k in 2..n {
                let val = higher.get(k - 2).copied().unwrap_or(0.0);
                y0.push(scale.to_internal(val, Dimension::position_derivative(k as i32)));
            }
        }
        _ => {}
    }

    let mut t_eval_phys = opts.t_eval.clone();
    if let Some(te) = t_eval_phys.as_mut() {
        te.sort_by(f64::total_cmp);
    }
    let t_end_hat = to_t(t_end);
    let t0_hat = to_t(t0);
    let ode_opts = Options {
        method: opts.method,
        rtol: opts.tol,
        atol: opts.tol,
        fixed_step: opts.fixed_step.map(to_t),
        breakpoints: force.breakpoints().into_iter().map(to_t).collect(),
        t_eval: t_eval_phys
            .as_ref()
            .map(|te| te.iter().map(|&t| to_t(t).clamp(t0_hat, t_end_hat)).collect()),
        ..Options::default()
    };

    let has_state_accel = matches!(
        dynamics,
        Dynamics::Model(ModelKind::Ald) | Dynamics::Model(ModelKind::SeriesTruncated(_))
    );
    let f0_hat = sys.force_hat(t0_hat)?.f;
    let mut guard = RunawayGuard {
        enabled: opts.runaway_guard && has_state_accel,
        reference: y0
            .get(2)
            .map_or(0.0, |a: &f64| a.abs())
            .max(f0_hat.abs())
            .max(f64::MIN_POSITIVE),
        history: Vec::new(),
    };
    if has_state_accel && guard.enabled && y0[2] != 0.0 {
        guard.history.push((t0_hat, y0[2].abs().ln()));
    }

    let sol = ode::solve(&sys, t0_hat, t_end_hat, &y0, &ode_opts, |t, y| {
        if guard.enabled {
            let f = sys.force_hat(t)?.f;
            guard.check(t, y[2], f, &scale)?;
        }
        Ok(())
    })?;

    let mut points = Vec::with_capacity(sol.t.len());
    for (i, (&t_hat, y)) in sol.t.iter().zip(&sol.y).enumerate() {
        let t = match &t_eval_phys {
            Some(te) => te[i],
            None if i == 0 => t0,
            None if t_hat == t_end_hat => t_end,
            None => scale.to_physical(t_hat, Dimension::TIME),
        };
        let a_hat = sys.algebraic_accel(t_hat, y)?;
        let a = scale.to_physical(a_hat, Dimension::ACCELERATION);
        let f = force.evaluate(t)?.f;
        points.push(TrajectoryPoint {
            t,
            x: scale.to_physical(y[0], Dimension::LENGTH),
            v: scale.to_physical(y[1], Dimension::VELOCITY),
            a,
            f,
            p_fo: particle.tau_e() * f * f / particle.mass(),
            p_larmor: particle.mass() * particle.tau_e() * a * a,
        });
    }
    Ok(Trajectory {
        model: name,
        points,
        stats: sol.stats,
    })
}

/// Integrates `model` under `force` from `initial` to `t_end` with an
/// adaptive Dormand-Prince 5(4) method.
///
/// For the ALD model a missing initial acceleration is taken from the
/// runaway-free branch. Models carrying the acceleration in their state are
/// watched by a runaway guard: growth of |a| beyond [`RUNAWAY_AMPLIFICATION`]
/// times its reference aborts with [`Error::Runaway`] and an e-folding estimate.
pub fn integrate(model: &ModelNR, force: &ForceModel, initial: &StateNR, t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_with(model, force, initial, t_end, &NrOptions::with_tol(tol))
}

pub fn integrate_with(
    model: &ModelNR,
    force: &ForceModel,
    initial: &StateNR,
    t_end: f64,
    opts: &NrOptions,
) -> Result<Trajectory> {
    run(
        Dynamics::Model(model.kind),
        &model.particle,
        force,
        initial,
        t_end,
        opts,
        model.kind.name(),
    )
}

/// Trajectory of the point charge on its runaway-free branch, integrating
/// x'' = a(t) with the acceleration from [`ald_runaway_free_accel`].
pub fn integrate_runaway_free_ald(
    particle: &ParticleParams,
    force: &ForceModel,
    initial: &StateNR,
    t_end: f64,
    opts: &NrOptions,
) -> Result<Trajectory> {
    run(
        Dynamics::RunawayFreeAld,
        particle,
        force,
        initial,
        t_end,
        opts,
        "ald_runaway_free".into(),
    )
}
