use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use super::tensor::{mat_vec, FieldTensor, Fields, FourVector, Mat4};
use crate::error::{Error, Result};
use crate::ode::{self, OdeSystem, Options, Stats};
use crate::phys::ParticleParams;

/// Relative four-velocity normalization drift that aborts an integration.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// How the derivative of f^mu inside the radiation term obtains a^mu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Closure {
    /// a_0 = f / M.
    #[default]
    ZerothOrder,
    /// a solved from the full linear relation; differs from the zeroth-order
    /// closure at O(tau_e^2).
    SelfConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RelModel {
    Covariant(Closure),
    /// Field-only radiation term: F F u and (F u)^2 u written out explicitly.
    LlType,
}

impl RelModel {
    pub fn label(&self) -> &'static str {
        match self {
            RelModel::Covariant(Closure::ZerothOrder) => "covariant",
            RelModel::Covariant(Closure::SelfConsistent) => "covariant-self-consistent",
            RelModel::LlType => "LL-type (external reference)",
        }
    }
}

/// The comparison model obtained by iterating the zeroth-order acceleration
/// into the radiation term.
pub fn reduce_order_relativistic(_model: RelModel) -> RelModel {
    RelModel::LlType
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourState {
    /// proper time, s
    pub tau: f64,
    /// (ct, x, y, z), cm
    pub x: FourVector,
    /// cm/s
    pub u: FourVector,
}

impl FourState {
    pub fn new(t: f64, position: [f64; 3], velocity: [f64; 3], c: f64) -> Result<Self> {
        Ok(FourState {
            tau: 0.0,
            x: FourVector::new(c * t, position[0], position[1], position[2]),
            u: FourVector::from_velocity(velocity, c)?,
        })
    }
}

fn scaled_mixed(f: &FieldTensor, s: f64) -> Mat4 {
    f.scaled(s).mixed()
}

/// Four-acceleration for mixed tensors already multiplied by e/(M c), so that
/// a_0 = fm u. `c2` is c^2 and `tau` the radiation time in the same units.
pub(crate) fn accel_scaled(
    fm: &Mat4,
    dfm: &Mat4,
    u: &FourVector,
    c2: f64,
    tau: f64,
    model: RelModel,
) -> Result<FourVector> {
    let a0 = mat_vec(fm, u);
    let du = mat_vec(dfm, u);
    Ok(match model {
        RelModel::Covariant(Closure::ZerothOrder) => {
            let fdot = du + mat_vec(fm, &a0);
            a0 + tau * project(&fdot, u, c2)
        }
        RelModel::Covariant(Closure::SelfConsistent) => {
            // (I - tau P fm) a = a0 + tau P (dfm u), P w = w - u (u.w)/c^2
            let ul = u.lower();
            let p = Matrix4::from_fn(|i, j| if i == j { 1.0 } else { 0.0 } - u.0[i] * ul[j] / c2);
            let f = Matrix4::from_fn(|i, j| fm[i][j]);
            let lhs = Matrix4::identity() - tau * p * f;
            let rhs = Vector4::from(a0.0) + tau * p * Vector4::from(du.0);
            let a = lhs
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Degenerate("self-consistent closure is singular".into()))?;
            FourVector([a[0], a[1], a[2], a[3]])
        }
        RelModel::LlType => {
            let ffu = mat_vec(fm, &a0);
            a0 + tau * (du + ffu + (a0.norm2() / c2) * *u)
        }
    })
}

fn project(w: &FourVector, u: &FourVector, c2: f64) -> FourVector {
    *w - (u.dot(w) / c2) * *u
}

/// f^mu = (e/c) F^mu_kappa u^kappa, dyn.
pub fn lorentz_four_force(particle: &ParticleParams, f: &FieldTensor, u: &FourVector) -> FourVector {
    mat_vec(&scaled_mixed(f, particle.charge() / particle.c()), u)
}

/// g^mu = fdot^mu - u^mu (u . fdot) / c^2, orthogonal to an on-shell u.
pub fn project_g(fdot: &FourVector, u: &FourVector, c: f64) -> FourVector {
    project(fdot, u, c * c)
}

/// a^mu = f^mu / M + (tau_e / M) g^mu with fdot = (e/c)(dF/dtau u + F a).
///
/// `df_dtau` is the derivative of the field along the worldline.
pub fn rel_fo_accel(
    particle: &ParticleParams,
    f: &FieldTensor,
    df_dtau: &FieldTensor,
    u: &FourVector,
    closure: Closure,
) -> Result<FourVector> {
    rel_accel(particle, f, df_dtau, u, RelModel::Covariant(closure))
}

pub fn rel_accel(
    particle: &ParticleParams,
    f: &FieldTensor,
    df_dtau: &FieldTensor,
    u: &FourVector,
    model: RelModel,
) -> Result<FourVector> {
    let s = particle.charge() / (particle.mass() * particle.c());
    let c = particle.c();
    accel_scaled(
        &scaled_mixed(f, s),
        &scaled_mixed(df_dtau, s),
        u,
        c * c,
        particle.tau_e(),
        model,
    )
}

/// |a . u| / (|a| |u|) with Euclidean component norms.
pub fn orthogonality_residual(a: &FourVector, u: &FourVector) -> f64 {
    let scale = a.euclidean() * u.euclidean();
    if scale == 0.0 {
        0.0
    } else {
        a.dot(u).abs() / scale
    }
}

#[derive(Debug, Clone)]
pub struct RelOptions {
    pub tol: f64,
    pub model: RelModel,
    /// Proper times to report; `None` reports every accepted step.
    pub tau_eval: Option<Vec<f64>>,
    pub drift_limit: f64,
    pub max_steps: usize,
    /// `false` drops the tau_e term, leaving the Lorentz-force motion.
    pub radiation_reaction: bool,
}

impl RelOptions {
    pub fn with_tol(tol: f64) -> Self {
        RelOptions {
            tol,
            model: RelModel::Covariant(Closure::ZerothOrder),
            tau_eval: None,
            drift_limit: NORM_DRIFT_LIMIT,
            max_steps: 10_000_000,
            radiation_reaction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorldlinePoint {
    pub tau: f64,
    pub t: f64,
    pub x: [f64; 3],
    /// spatial four-velocity gamma v, cm/s
    pub u: [f64; 3],
    pub gamma: f64,
    /// |u.u / c^2 - 1|
    pub norm_drift: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Worldline {
    pub label: String,
    pub points: Vec<WorldlinePoint>,
    pub stats: Stats,
    /// Largest orthogonality residual of a^mu at the reported points.
    pub max_orthogonality: f64,
}

impl Worldline {
    pub fn max_norm_drift(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.norm_drift))
    }

    /// Spatial arc length of the polyline through the reported points.
    pub fn path_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                let d: [f64; 3] = std::array::from_fn(|i| w[1].x[i] - w[0].x[i]);
                super::tensor::norm3(d)
            })
            .sum()
    }
}

/// Internal units: time T, length c T, velocities over c, fields as
/// e T F / (M c).
#[derive(Debug, Clone, Copy)]
pub(crate) struct RelScale {
    pub time: f64,
    pub c: f64,
    pub field: f64,
    pub kappa: f64,
}

impl RelScale {
    pub fn new(particle: &ParticleParams, fields: &Fields) -> Self {
        let (q, m, c, tau) = (particle.charge(), particle.mass(), particle.c(), particle.tau_e());
        let rate = (q.abs() * fields.magnitude() / (m * c)).max(fields.frequency());
        let time = if rate > 0.0 {
            1.0 / rate
        } else if tau > 0.0 {
            tau
        } else {
            1.0
        };
        RelScale {
            time,
            c,
            field: q * time / (m * c),
            kappa: tau / time,
        }
    }

    pub fn length(&self) -> f64 {
        self.c * self.time
    }
}

struct ProperTimeSystem<'a> {
    fields: &'a Fields,
    scale: RelScale,
    model: RelModel,
}

impl ProperTimeSystem<'_> {
    fn accel(&self, y: &[f64]) -> Result<FourVector> {
        let s = &self.scale;
        let t = y[0] * s.time;
        let u = FourVector([y[4], y[5], y[6], y[7]]);
        let fm = scaled_mixed(&self.fields.at(t), s.field);
        // d/dtau_hat = gamma T d/dt for uniform fields
        let dfm = scaled_mixed(&self.fields.rate(t), s.field * s.time * u.0[0]);
        accel_scaled(&fm, &dfm, &u, 1.0, s.kappa, self.model)
    }
}

impl OdeSystem for ProperTimeSystem<'_> {
    fn dim(&self) -> usize {
        8
    }

    fn rhs(&self, _tau: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[..4].copy_from_slice(&y[4..]);
        dy[4..].copy_from_slice(&self.accel(y)?.0);
        Ok(())
    }
}

/// Integrates the covariant equation in proper time with adaptive
/// Dormand-Prince 5(4).
///
/// After each accepted step the normalization drift |u.u/c^2 - 1| is measured
/// and the run aborts with [`Error::NormDrift`] above `opts.drift_limit`; u is
/// never renormalized. Lab time comes from the x^0 component.
pub fn integrate_proper_time(
    particle: &ParticleParams,
    fields: &Fields,
    initial: &FourState,
    tau_end: f64,
    opts: &RelOptions,
) -> Result<Worldline> {
    fields.validate()?;
    let c = particle.c();
    let shell = initial.u.norm2() / (c * c) - 1.0;
    if !(shell.abs() <= 1e-9) || initial.u.0[0] <= 0.0 {
        return Err(Error::Domain(format!(
            "initial four-velocity is off shell or past-pointing (u.u/c^2 - 1 = {shell:e})"
        )));
    }
    if !(tau_end >= initial.tau && tau_end.is_finite()) {
        return Err(Error::Domain(format!(
            "invalid proper-time span [{}, {tau_end}]",
            initial.tau
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let mut scale = RelScale::new(particle, fields);
    if !opts.radiation_reaction {
        scale.kappa = 0.0;
    }
    let sys = ProperTimeSystem {
        fields,
        scale,
        model: opts.model,
    };
    let l = scale.length();
    let y0: Vec<f64> = initial
        .x
        .0
        .iter()
        .map(|x| x / l)
        .chain(initial.u.0.iter().map(|u| u / c))
        .collect();
    let mut tau_eval = opts.tau_eval.clone();
    if let Some(te) = tau_eval.as_mut() {
        te.sort_by(f64::total_cmp);
    }
    let (tau0_hat, tau1_hat) = (initial.tau / scale.time, tau_end / scale.time);
    let ode_opts = Options {
        rtol: opts.tol,
        atol: opts.tol,
        max_steps: opts.max_steps,
        t_eval: tau_eval
            .as_ref()
            .map(|te| te.iter().map(|t| (t / scale.time).clamp(tau0_hat, tau1_hat)).collect()),
        ..Options::default()
    };
    let limit = opts.drift_limit;
    let sol = ode::solve(&sys, tau0_hat, tau1_hat, &y0, &ode_opts, |tau, y| {
        let u = FourVector([y[4], y[5], y[6], y[7]]);
        let drift = (u.norm2() - 1.0).abs();
        if drift > limit {
            return Err(Error::NormDrift {
                tau_s: tau * scale.time,
                drift,
                limit,
            });
        }
        Ok(())
    })?;

    let mut points = Vec::with_capacity(sol.t.len());
    let mut max_orth = 0.0f64;
    for (i, (&tau_hat, y)) in sol.t.iter().zip(&sol.y).enumerate() {
        let u = FourVector([y[4], y[5], y[6], y[7]]);
        max_orth = max_orth.max(orthogonality_residual(&sys.accel(y)?, &u));
        let tau = match &tau_eval {
            Some(te) => te[i],
            None if i == 0 => initial.tau,
            None if tau_hat == tau1_hat => tau_end,
            None => tau_hat * scale.time,
        };
        points.push(WorldlinePoint {
            tau,
            t: y[0] * scale.time,
            x: [y[1] * l, y[2] * l, y[3] * l],
            u: [y[5] * c, y[6] * c, y[7] * c],
            gamma: y[4],
            norm_drift: (u.norm2() - 1.0).abs(),
        });
    }
    Ok(Worldline {
        label: opts.model.label().into(),
        points,
        stats: sol.stats,
        max_orthogonality: max_orth,
    })
}
