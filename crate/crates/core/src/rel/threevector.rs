use serde::Serialize;

use super::covariant::{integrate_proper_time, Closure, FourState, RelModel, RelOptions, RelScale, Worldline};
use super::tensor::{cross, dot3, norm3, FieldTensor, Fields};
use crate::error::{Error, Result};
use crate::ode::{self, OdeSystem, Options, Stats};
use crate::phys::ParticleParams;

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale3(s: f64, a: [f64; 3]) -> [f64; 3] {
    a.map(|x| s * x)
}

/// d(gamma v)/dt with E entering as e E / M (acceleration units) and B as
/// e B / (M c) (frequency units); `ea_dot`, `wb_dot` are their time rates.
fn eq_three_vector(
    c: f64,
    tau: f64,
    ea: [f64; 3],
    wb: [f64; 3],
    ea_dot: [f64; 3],
    wb_dot: [f64; 3],
    v: [f64; 3],
) -> [f64; 3] {
    let c2 = c * c;
    let gamma = 1.0 / (1.0 - dot3(v, v) / c2).sqrt();
    let fl = add(ea, cross(v, wb));
    let vdot0 = scale3(1.0 / gamma, add(fl, scale3(-dot3(v, fl) / c2, v)));
    let fl_dot = add(add(ea_dot, cross(vdot0, wb)), cross(v, wb_dot));
    let tail = cross(vdot0, cross(v, fl));
    let g3 = gamma * gamma * gamma / c2;
    std::array::from_fn(|i| fl[i] + tau * (gamma * fl_dot[i] - g3 * tail[i]))
}

/// d(gamma v)/dt in cm/s^2 for lab velocity `v`, with `rate` the time
/// derivative of the fields at the particle.
///
/// The acceleration inside the radiation term is closed at zeroth order,
/// vdot = (F - v (v.F)/c^2) / (gamma M), and dF/dt is the total derivative
/// along the trajectory.
pub fn threevector_rhs(
    particle: &ParticleParams,
    fields: &FieldTensor,
    rate: &FieldTensor,
    v: [f64; 3],
) -> Result<[f64; 3]> {
    let c = particle.c();
    if !(norm3(v) < c) {
        return Err(Error::Domain(format!("|v|/c = {} is not below 1", norm3(v) / c)));
    }
    let qe = particle.charge() / particle.mass();
    let qb = qe / c;
    Ok(eq_three_vector(
        c,
        particle.tau_e(),
        scale3(qe, fields.e),
        scale3(qb, fields.b),
        scale3(qe, rate.e),
        scale3(qb, rate.b),
        v,
    ))
}

#[derive(Debug, Clone)]
pub struct LabOptions {
    pub tol: f64,
    pub t_eval: Option<Vec<f64>>,
    pub radiation_reaction: bool,
}

impl LabOptions {
    pub fn with_tol(tol: f64) -> Self {
        LabOptions {
            tol,
            t_eval: None,
            radiation_reaction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabPoint {
    pub t: f64,
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub gamma: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LabTrajectory {
    pub points: Vec<LabPoint>,
    pub stats: Stats,
}

struct LabSystem<'a> {
    fields: &'a Fields,
    scale: RelScale,
}

impl OdeSystem for LabSystem<'_> {
    fn dim(&self) -> usize {
        6
    }

    // state (x / cT, gamma v / c), time in units of T
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let s = &self.scale;
        let p = [y[3], y[4], y[5]];
        let gamma = (1.0 + dot3(p, p)).sqrt();
        let v = scale3(1.0 / gamma, p);
        let t_phys = t * s.time;
        let f = self.fields.at(t_phys).scaled(s.field);
        let r = self.fields.rate(t_phys).scaled(s.field * s.time);
        let dp = eq_three_vector(1.0, s.kappa, f.e, f.b, r.e, r.b, v);
        dy[..3].copy_from_slice(&v);
        dy[3..].copy_from_slice(&dp);
        Ok(())
    }
}

/// Integrates the three-vector equation in lab time with adaptive
/// Dormand-Prince 5(4), in the momentum variable gamma v so |v| < c holds.
pub fn integrate_lab_time(
    particle: &ParticleParams,
    fields: &Fields,
    position: [f64; 3],
    velocity: [f64; 3],
    t0: f64,
    t_end: f64,
    opts: &LabOptions,
) -> Result<LabTrajectory> {
    fields.validate()?;
    let c = particle.c();
    if !(norm3(velocity) < c) {
        return Err(Error::Domain(format!("|v|/c = {} is not below 1", norm3(velocity) / c)));
    }
    if !(t_end >= t0 && t_end.is_finite() && t0.is_finite()) {
        return Err(Error::Domain(format!("invalid time span [{t0}, {t_end}]")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let mut scale = RelScale::new(particle, fields);
    if !opts.radiation_reaction {
        scale.kappa = 0.0;
    }
    let l = scale.length();
    let gamma0 = 1.0 / (1.0 - dot3(velocity, velocity) / (c * c)).sqrt();
    let y0: Vec<f64> = position
        .iter()
        .map(|x| x / l)
        .chain(velocity.iter().map(|v| gamma0 * v / c))
        .collect();
    let mut t_eval = opts.t_eval.clone();
    if let Some(te) = t_eval.as_mut() {
        te.sort_by(f64::total_cmp);
    }
    let (a, b) = (t0 / scale.time, t_end / scale.time);
    let ode_opts = Options {
        rtol: opts.tol,
        atol: opts.tol,
        t_eval: t_eval
            .as_ref()
            .map(|te| te.iter().map(|t| (t / scale.time).clamp(a, b)).collect()),
        ..Options::default()
    };
    let sys = LabSystem { fields, scale };
    let sol = ode::solve(&sys, a, b, &y0, &ode_opts, |_, _| Ok(()))?;
    let points = sol
        .t
        .iter()
        .zip(&sol.y)
        .enumerate()
        .map(|(i, (&th, y))| {
            let p = [y[3], y[4], y[5]];
            let gamma = (1.0 + dot3(p, p)).sqrt();
            let t = match &t_eval {
                Some(te) => te[i],
                None if i == 0 => t0,
                None if th == b => t_end,
                None => th * scale.time,
            };
            LabPoint {
                t,
                x: [y[0] * l, y[1] * l, y[2] * l],
                v: scale3(c / gamma, p),
                gamma,
            }
        })
        .collect();
    Ok(LabTrajectory {
        points,
        stats: sol.stats,
    })
}

/// Max spatial separation of two sampled paths, with the arc length of the
/// first as the normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorldlineComparison {
    pub max_position_deviation_cm: f64,
    pub path_length_cm: f64,
    /// max deviation / path length
    pub normalized: f64,
}

impl WorldlineComparison {
    pub fn between(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::Domain(format!(
                "cannot compare paths of {} and {} samples",
                a.len(),
                b.len()
            )));
        }
        let dev = a
            .iter()
            .zip(b)
            .map(|(p, q)| norm3([p[0] - q[0], p[1] - q[1], p[2] - q[2]]))
            .fold(0.0f64, f64::max);
        let path: f64 = a
            .windows(2)
            .map(|w| norm3([w[1][0] - w[0][0], w[1][1] - w[0][1], w[1][2] - w[0][2]]))
            .sum();
        Ok(WorldlineComparison {
            max_position_deviation_cm: dev,
            path_length_cm: path,
            normalized: if path > 0.0 { dev / path } else { dev },
        })
    }
}

/// Compares two proper-time worldlines sampled at the same proper times.
pub fn compare_worldlines(a: &Worldline, b: &Worldline) -> Result<WorldlineComparison> {
    if a.points.iter().zip(&b.points).any(|(p, q)| p.tau != q.tau) {
        return Err(Error::Domain("worldlines are sampled at different proper times".into()));
    }
    let xa: Vec<[f64; 3]> = a.points.iter().map(|p| p.x).collect();
    let xb: Vec<[f64; 3]> = b.points.iter().map(|p| p.x).collect();
    WorldlineComparison::between(&xa, &xb)
}

/// LL-type comparison model against both covariant closures. Reported only;
/// no verdict is attached.
#[derive(Debug, Clone, Serialize)]
pub struct LlComparison {
    pub label: &'static str,
    pub versus_zeroth_order: WorldlineComparison,
    pub versus_self_consistent: WorldlineComparison,
}

pub fn ll_type_comparison(
    particle: &ParticleParams,
    fields: &Fields,
    initial: &FourState,
    tau_end: f64,
    tol: f64,
    samples: usize,
) -> Result<LlComparison> {
    let n = samples.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|i| initial.tau + (tau_end - initial.tau) * i as f64 / (n - 1) as f64)
        .collect();
    let run = |model: RelModel| {
        let opts = RelOptions {
            model,
            tau_eval: Some(grid.clone()),
            ..RelOptions::with_tol(tol)
        };
        integrate_proper_time(particle, fields, initial, tau_end, &opts)
    };
    let ll = run(RelModel::LlType)?;
    let zeroth = run(RelModel::Covariant(Closure::ZerothOrder))?;
    let full = run(RelModel::Covariant(Closure::SelfConsistent))?;
    Ok(LlComparison {
        label: RelModel::LlType.label(),
        versus_zeroth_order: compare_worldlines(&ll, &zeroth)?,
        versus_self_consistent: compare_worldlines(&ll, &full)?,
    })
}
