//! JSON scenario files. Every physical quantity carries its unit in the key
//! name; unknown keys are rejected so a misspelled unit cannot be ignored.

use std::f64::consts::TAU;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use radreact_core::nonrel::{ModelKind, ModelNR, StateNR};
use radreact_core::phys::{Constants, ForceModel, ForceTable, ParticleParams};
use radreact_core::rel::{Closure, FieldTensor, Fields, RelModel};
use radreact_core::stochastic::{EnsembleConfig, NoiseSpec, Scheme};
use serde::Deserialize;
use sha2::{Digest, Sha256};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub model: Option<String>,
    /// Models tabulated by a pole survey.
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default)]
    pub particle: ParticleSpec,
    #[serde(default)]
    pub force: Option<ForceSpec>,
    #[serde(default)]
    pub fields: Option<FieldsSpec>,
    #[serde(default)]
    pub spring_constant_dyn_per_cm: Option<f64>,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub noise: Option<NoiseBlock>,
    #[serde(default)]
    pub ensemble: Option<EnsembleBlock>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    #[default]
    Trajectory,
    Poles,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    /// "electron" (cutoff at 1/tau_e) or "point_electron" (no cutoff).
    pub preset: Option<String>,
    pub charge_statc: Option<f64>,
    pub mass_g: Option<f64>,
    pub cutoff_omega_per_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceSpec {
    Zero,
    Constant {
        amplitude_dyn: f64,
    },
    Step {
        amplitude_dyn: f64,
        t_on_s: f64,
    },
    Sin {
        amplitude_dyn: f64,
        #[serde(default)]
        omega_per_s: Option<f64>,
        /// omega in units of 1/tau_e
        #[serde(default)]
        omega_tau_e: Option<f64>,
        #[serde(default)]
        phase_rad: f64,
    },
    Gaussian {
        amplitude_dyn: f64,
        t0_s: f64,
        sigma_s: f64,
    },
    Tabulated {
        start_s: f64,
        spacing_s: f64,
        values_dyn: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldsSpec {
    Static {
        #[serde(default)]
        e_statvolt_per_cm: [f64; 3],
        #[serde(default)]
        b_gauss: [f64; 3],
    },
    /// Amplitudes times cos(omega t + phase).
    Harmonic {
        #[serde(default)]
        e_statvolt_per_cm: [f64; 3],
        #[serde(default)]
        b_gauss: [f64; 3],
        omega_per_s: f64,
        #[serde(default)]
        phase_rad: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Scalar(f64),
    Vector([f64; 3]),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub t_s: f64,
    pub x_cm: Option<Coord>,
    pub v_cm_per_s: Option<Coord>,
    /// Third-derivative models only; defaults to the runaway-free value.
    pub a_cm_per_s2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKindSpec {
    White,
    ExpCorrelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSpec {
    #[default]
    Heun,
    EulerMaruyama,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub kind: NoiseKindSpec,
    pub temperature_k: f64,
    /// Required except for the oscillator, where it defaults to K tau_e.
    pub damping_g_per_s: Option<f64>,
    pub tau_c_s: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: SchemeSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub members: usize,
    /// Defaults to the noise seed.
    pub base_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureSpec {
    #[default]
    ZerothOrder,
    SelfConsistent,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Stochastic step.
    pub dt_s: Option<f64>,
    pub t_span_s: Option<[f64; 2]>,
    /// Proper-time span for covariant models, starting at 0.
    pub tau_span_s: Option<[f64; 2]>,
    /// Span in drive periods, for sinusoidal forces.
    pub periods: Option<f64>,
    /// Uniform output points over the span; all accepted steps when absent.
    pub samples: Option<usize>,
    pub samples_per_period: Option<usize>,
    #[serde(default = "default_true")]
    pub runaway_guard: bool,
    /// Integrate ALD (primary or comparison target) on its runaway-free branch.
    #[serde(default)]
    pub runaway_free: bool,
    #[serde(default = "default_true")]
    pub radiation_reaction: bool,
    #[serde(default)]
    pub closure: ClosureSpec,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            tol: default_tol(),
            dt_s: None,
            t_span_s: None,
            tau_span_s: None,
            periods: None,
            samples: None,
            samples_per_period: None,
            runaway_guard: true,
            runaway_free: false,
            radiation_reaction: true,
            closure: ClosureSpec::default(),
        }
    }
}

fn default_tol() -> f64 {
    1e-10
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Drive frequencies in units of 1/tau_e; replaces the force frequency.
    pub omega_tau_e: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_report")]
    pub report: String,
    /// Other models rerun on the same scenario and compared by position.
    #[serde(default)]
    pub compare_with: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            trajectory: default_trajectory(),
            report: default_report(),
            compare_with: Vec::new(),
        }
    }
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}

fn default_report() -> String {
    "report.json".into()
}

/// Parsed model selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSel {
    Newton,
    Ald,
    Fo,
    FoSharp,
    Series(usize),
    Oscillator,
    FreeFluctuating,
    RelCovariant,
    RelThreeVector,
    LlType,
}

impl ModelSel {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(n) = s.strip_prefix("series(").and_then(|r| r.strip_suffix(')')) {
            let n: usize = n.trim().parse().with_context(|| format!("bad series order in {s:?}"))?;
            return Ok(ModelSel::Series(n));
        }
        Ok(match s {
            "newton" => ModelSel::Newton,
            "ald" => ModelSel::Ald,
            "fo" => ModelSel::Fo,
            "fo_sharp" => ModelSel::FoSharp,
            "oscillator" => ModelSel::Oscillator,
            "free_fluctuating" => ModelSel::FreeFluctuating,
            "rel_fo_covariant" => ModelSel::RelCovariant,
            "rel_fo_3vector" => ModelSel::RelThreeVector,
            "ll_type" => ModelSel::LlType,
            _ => bail!(
                "unknown model {s:?} (expected newton, ald, fo, fo_sharp, series(N), oscillator, \
                 free_fluctuating, rel_fo_covariant, rel_fo_3vector or ll_type)"
            ),
        })
    }

    pub fn label(&self) -> String {
        match self {
            ModelSel::Newton => "newton".into(),
            ModelSel::Ald => "ald".into(),
            ModelSel::Fo => "fo".into(),
            ModelSel::FoSharp => "fo_sharp".into(),
            ModelSel::Series(n) => format!("series({n})"),
            ModelSel::Oscillator => "oscillator".into(),
            ModelSel::FreeFluctuating => "free_fluctuating".into(),
            ModelSel::RelCovariant => "rel_fo_covariant".into(),
            ModelSel::RelThreeVector => "rel_fo_3vector".into(),
            ModelSel::LlType => "ll_type".into(),
        }
    }

    pub fn is_relativistic(&self) -> bool {
        matches!(
            self,
            ModelSel::RelCovariant | ModelSel::RelThreeVector | ModelSel::LlType
        )
    }

    pub fn accepts_noise(&self) -> bool {
        matches!(self, ModelSel::Fo | ModelSel::Oscillator | ModelSel::FreeFluctuating)
    }

    /// Nonrelativistic model kind, for selectors that have one.
    pub fn kind(&self, spring_constant: Option<f64>) -> Result<Option<ModelKind>> {
        Ok(Some(match self {
            ModelSel::Newton => ModelKind::Newton,
            ModelSel::Ald => ModelKind::Ald,
            ModelSel::Fo | ModelSel::FreeFluctuating => ModelKind::Fo,
            ModelSel::FoSharp => ModelKind::FoSharp,
            ModelSel::Series(n) => ModelKind::SeriesTruncated(*n),
            ModelSel::Oscillator => ModelKind::Oscillator {
                spring_constant: spring_constant.context("the oscillator needs spring_constant_dyn_per_cm")?,
            },
            _ => return Ok(None),
        }))
    }
}

/// Right-hand side of the run: a 1-D force or an electromagnetic field.
#[derive(Debug, Clone)]
pub enum Drive {
    Force(ForceModel),
    Fields(Fields),
}

#[derive(Debug, Clone, Copy)]
pub struct NoisePlan {
    pub spec: NoiseSpec,
    pub scheme: Scheme,
}

/// Initial condition resolved to the model's dimensionality.
#[derive(Debug, Clone, Copy)]
pub enum Initial {
    Line(StateNR),
    Space { t: f64, x: [f64; 3], v: [f64; 3] },
}

/// A validated trajectory run, ready to execute.
#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub model: ModelSel,
    pub particle: ParticleParams,
    pub spring_constant: Option<f64>,
    pub drive: Drive,
    pub initial: Initial,
    pub noise: Option<NoisePlan>,
    pub ensemble: Option<EnsembleConfig>,
    pub tol: f64,
    pub dt: Option<f64>,
    /// Lab-time span, or proper-time span for covariant models.
    pub span: (f64, f64),
    pub samples: Option<usize>,
    pub runaway_guard: bool,
    pub runaway_free: bool,
    pub radiation_reaction: bool,
    pub rel_model: RelModel,
    /// One entry per sweep member; `None` for an unswept run.
    pub sweep: Vec<Option<f64>>,
    pub periods: Option<f64>,
    pub samples_per_period: usize,
}

impl Plan {
    /// The plan with the drive frequency set to `omega_tau_e` / tau_e, span
    /// and output grid rescaled to whole periods.
    pub fn member(&self, omega_tau_e: Option<f64>) -> Result<Plan> {
        let Some(z) = omega_tau_e else {
            return Ok(self.clone());
        };
        let omega = z / self.particle.tau_e();
        let mut p = self.clone();
        match &mut p.drive {
            Drive::Force(ForceModel::SinDrive { omega: w, .. }) => *w = omega,
            _ => bail!("a frequency sweep needs a sinusoidal force"),
        }
        let periods = self.periods.context("a frequency sweep needs integrator.periods")?;
        p.span = (self.span.0, self.span.0 + periods * TAU / omega);
        p.samples = Some((periods * self.samples_per_period as f64).ceil() as usize);
        p.sweep = vec![Some(z)];
        Ok(p)
    }

    pub fn nr_model(&self) -> Result<ModelNR> {
        let kind = self
            .model
            .kind(self.spring_constant)?
            .with_context(|| format!("{} has no nonrelativistic form", self.model.label()))?;
        Ok(ModelNR::new(kind, self.particle)?)
    }

    pub fn force(&self) -> Result<&ForceModel> {
        match &self.drive {
            Drive::Force(f) => Ok(f),
            Drive::Fields(_) => bail!("{} needs a force block", self.model.label()),
        }
    }

    pub fn fields(&self) -> Result<&Fields> {
        match &self.drive {
            Drive::Fields(f) => Ok(f),
            Drive::Force(_) => bail!("{} needs a fields block", self.model.label()),
        }
    }

    /// Uniform output grid over the span, when requested.
    pub fn grid(&self) -> Option<Vec<f64>> {
        let n = self.samples?.max(1);
        let (a, b) = self.span;
        Some((0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect())
    }
}

/// Scenario file contents plus the hash of its exact bytes.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Loaded> {
        let bytes = std::fs::read(path).with_context(|| format!("reading scenario {}", path.display()))?;
        let scenario = Scenario::from_slice(&bytes).with_context(|| format!("in scenario {}", path.display()))?;
        Ok(Loaded {
            scenario,
            sha256: sha256_hex(&bytes),
        })
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let s: Scenario = serde_json::from_slice(bytes).context("malformed scenario")?;
        ensure!(
            s.version == SCENARIO_VERSION,
            "unsupported scenario version {} (expected {SCENARIO_VERSION})",
            s.version
        );
        ensure!(!s.name.trim().is_empty(), "scenario name is empty");
        Ok(s)
    }

    pub fn particle(&self, consts: &Constants) -> Result<ParticleParams> {
        let p = &self.particle;
        let explicit = p.charge_statc.is_some() || p.mass_g.is_some() || p.cutoff_omega_per_s.is_some();
        match (p.preset.as_deref(), explicit) {
            (Some(_), true) => bail!("particle: give either a preset or explicit charge_statc/mass_g, not both"),
            (Some("electron") | None, false) => Ok(ParticleParams::electron(consts)),
            (Some("point_electron"), false) => Ok(ParticleParams::point_electron(consts)),
            (Some(other), false) => bail!("unknown particle preset {other:?}"),
            (None, true) => {
                let q = p.charge_statc.context("particle: charge_statc missing")?;
                let m = p.mass_g.context("particle: mass_g missing")?;
                // a cutoff above 1/tau_e is a causality verdict from the constructor
                Ok(ParticleParams::new(q, m, p.cutoff_omega_per_s, consts)?)
            }
        }
    }

    fn force_model(&self, particle: &ParticleParams) -> Result<ForceModel> {
        let f = match self.force.as_ref().context("missing force block")? {
            ForceSpec::Zero => ForceModel::Zero,
            ForceSpec::Constant { amplitude_dyn } => ForceModel::Constant {
                amplitude: *amplitude_dyn,
            },
            ForceSpec::Step { amplitude_dyn, t_on_s } => ForceModel::Step {
                amplitude: *amplitude_dyn,
                t_on: *t_on_s,
            },
            ForceSpec::Sin {
                amplitude_dyn,
                omega_per_s,
                omega_tau_e,
                phase_rad,
            } => {
                let omega = match (omega_per_s, omega_tau_e, &self.sweep) {
                    (Some(w), None, _) => *w,
                    (None, Some(z), _) => z / particle.tau_e(),
                    // filled in per sweep member
                    (None, None, Some(_)) => 1.0,
                    _ => bail!("sin force: give exactly one of omega_per_s, omega_tau_e"),
                };
                ensure!(omega > 0.0, "sin force: frequency must be positive");
                ForceModel::SinDrive {
                    amplitude: *amplitude_dyn,
                    omega,
                    phase: *phase_rad,
                }
            }
            ForceSpec::Gaussian {
                amplitude_dyn,
                t0_s,
                sigma_s,
            } => ForceModel::GaussianPulse {
                amplitude: *amplitude_dyn,
                t0: *t0_s,
                sigma: *sigma_s,
            },
            ForceSpec::Tabulated {
                start_s,
                spacing_s,
                values_dyn,
            } => ForceModel::Tabulated(ForceTable::new(*start_s, *spacing_s, values_dyn.clone())?),
        };
        f.validate()?;
        Ok(f)
    }

    fn field_model(&self) -> Result<Fields> {
        let f = match self.fields.as_ref().context("missing fields block")? {
            FieldsSpec::Static {
                e_statvolt_per_cm,
                b_gauss,
            } => Fields::uniform(*e_statvolt_per_cm, *b_gauss),
            FieldsSpec::Harmonic {
                e_statvolt_per_cm,
                b_gauss,
                omega_per_s,
                phase_rad,
            } => Fields::Harmonic {
                amplitude: FieldTensor::new(*e_statvolt_per_cm, *b_gauss),
                omega: *omega_per_s,
                phase: *phase_rad,
            },
        };
        f.validate()?;
        Ok(f)
    }

    /// Checks every statically checkable invariant and resolves the run.
    pub fn plan(&self, consts: &Constants, seed_override: Option<u64>) -> Result<Plan> {
        ensure!(
            self.analysis == Analysis::Trajectory,
            "a pole survey has no trajectory plan"
        );
        let model = ModelSel::parse(self.model.as_deref().context("missing model")?)?;
        self.plan_for(model, consts, seed_override)
    }

    pub fn plan_for(&self, model: ModelSel, consts: &Constants, seed_override: Option<u64>) -> Result<Plan> {
        let particle = self.particle(consts)?;
        let rel = model.is_relativistic();

        let drive = match (&self.force, &self.fields, rel) {
            (Some(_), Some(_), _) => bail!("give exactly one of force / fields"),
            (None, Some(_), true) => Drive::Fields(self.field_model()?),
            (Some(_), None, false) => Drive::Force(self.force_model(&particle)?),
            (None, None, false) if model == ModelSel::FreeFluctuating => Drive::Force(ForceModel::Zero),
            (_, _, true) => bail!("{} is three-dimensional and needs a fields block", model.label()),
            (_, _, false) => bail!("{} is one-dimensional and needs a force block", model.label()),
        };
        if model == ModelSel::FreeFluctuating {
            ensure!(
                matches!(drive, Drive::Force(ForceModel::Zero)),
                "free_fluctuating runs take no external force"
            );
        }
        if model == ModelSel::Oscillator {
            let k = self
                .spring_constant_dyn_per_cm
                .context("the oscillator needs spring_constant_dyn_per_cm")?;
            ensure!(k > 0.0 && k.is_finite(), "spring constant must be positive, got {k}");
        } else {
            ensure!(
                self.spring_constant_dyn_per_cm.is_none(),
                "spring_constant_dyn_per_cm only applies to the oscillator"
            );
        }
        if let Some(kind) = model.kind(self.spring_constant_dyn_per_cm)? {
            ModelNR::new(kind, particle)?;
        }

        let init = &self.initial;
        let initial = if rel {
            let vec = |c: Option<Coord>, what: &str| match c {
                None => Ok([0.0; 3]),
                Some(Coord::Vector(v)) => Ok(v),
                Some(Coord::Scalar(_)) => bail!("initial.{what} must be a 3-vector for {}", model.label()),
            };
            ensure!(
                init.a_cm_per_s2.is_none(),
                "initial.a_cm_per_s2 only applies to third-derivative models"
            );
            let v = vec(init.v_cm_per_s, "v_cm_per_s")?;
            let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            ensure!(speed < particle.c(), "initial speed {speed:e} cm/s is not below c");
            Initial::Space {
                t: init.t_s,
                x: vec(init.x_cm, "x_cm")?,
                v,
            }
        } else {
            let scalar = |c: Option<Coord>, what: &str| match c {
                None => Ok(0.0),
                Some(Coord::Scalar(v)) => Ok(v),
                Some(Coord::Vector(_)) => bail!("initial.{what} must be a number for {}", model.label()),
            };
            if init.a_cm_per_s2.is_some() {
                ensure!(
                    matches!(model, ModelSel::Ald | ModelSel::Series(_)) && !self.integrator.runaway_free,
                    "initial.a_cm_per_s2 only applies to forward ald and series models"
                );
            }
            Initial::Line(StateNR {
                t: init.t_s,
                x: scalar(init.x_cm, "x_cm")?,
                v: scalar(init.v_cm_per_s, "v_cm_per_s")?,
                a: init.a_cm_per_s2,
            })
        };

        let it = &self.integrator;
        ensure!(
            it.tol > 0.0 && it.tol < 1.0,
            "integrator.tol must be in (0, 1), got {}",
            it.tol
        );

        let noise = match &self.noise {
            None => None,
            Some(n) => {
                ensure!(
                    model.accepts_noise(),
                    "noise is only permitted for fo, oscillator and free_fluctuating runs, not {}",
                    model.label()
                );
                let damping = match (n.damping_g_per_s, model) {
                    (Some(z), ModelSel::Oscillator) => {
                        let expect = self.spring_constant_dyn_per_cm.unwrap_or(0.0) * particle.tau_e();
                        ensure!(
                            (z - expect).abs() <= 1e-12 * expect,
                            "oscillator noise damping must equal K tau_e = {expect:e} g/s, got {z:e}"
                        );
                        z
                    }
                    (Some(z), _) => z,
                    (None, ModelSel::Oscillator) => self.spring_constant_dyn_per_cm.unwrap_or(0.0) * particle.tau_e(),
                    (None, _) => bail!("noise.damping_g_per_s is required for {}", model.label()),
                };
                let seed = seed_override.unwrap_or(n.seed);
                let spec = match n.kind {
                    NoiseKindSpec::White => {
                        ensure!(
                            n.tau_c_s.is_none(),
                            "noise.tau_c_s only applies to exp_correlated noise"
                        );
                        NoiseSpec::white(n.temperature_k, damping, seed)?
                    }
                    NoiseKindSpec::ExpCorrelated => {
                        NoiseSpec::exp_correlated(n.temperature_k, damping, n.tau_c_s, seed)?
                    }
                };
                let scheme = match n.scheme {
                    SchemeSpec::Heun => Scheme::Heun,
                    SchemeSpec::EulerMaruyama => {
                        ensure!(spec.is_white(), "euler_maruyama is reserved for white noise");
                        ensure!(model != ModelSel::Oscillator, "the oscillator is integrated with heun");
                        Scheme::EulerMaruyama
                    }
                };
                ensure!(
                    it.dt_s.is_some_and(|d| d > 0.0),
                    "noisy runs need a positive integrator.dt_s"
                );
                Some(NoisePlan { spec, scheme })
            }
        };
        if model == ModelSel::FreeFluctuating {
            ensure!(noise.is_some(), "free_fluctuating needs a noise block");
        }
        let ensemble = match &self.ensemble {
            None => None,
            Some(e) => {
                let n = noise.as_ref().context("an ensemble needs a noise block")?;
                let base = seed_override.or(e.base_seed).unwrap_or(n.spec.seed);
                Some(EnsembleConfig::new(e.members, base)?)
            }
        };

        let sweep = match &self.sweep {
            None => vec![None],
            Some(s) => {
                ensure!(!s.omega_tau_e.is_empty(), "sweep.omega_tau_e is empty");
                ensure!(
                    s.omega_tau_e.iter().all(|z| *z > 0.0 && z.is_finite()),
                    "sweep frequencies must be positive"
                );
                ensure!(
                    matches!(
                        self.force,
                        Some(ForceSpec::Sin {
                            omega_per_s: None,
                            omega_tau_e: None,
                            ..
                        })
                    ),
                    "a sweep needs a sin force without its own frequency"
                );
                ensure!(noise.is_none(), "sweeps are deterministic");
                s.omega_tau_e.iter().map(|&z| Some(z)).collect()
            }
        };

        let span = if model == ModelSel::RelCovariant || model == ModelSel::LlType {
            ensure!(it.t_span_s.is_none(), "covariant models take tau_span_s, not t_span_s");
            let [a, b] = it.tau_span_s.context("covariant models need integrator.tau_span_s")?;
            ensure!(a == 0.0, "proper time starts at 0, got tau_span_s[0] = {a}");
            (a, b)
        } else {
            ensure!(it.tau_span_s.is_none(), "tau_span_s only applies to covariant models");
            match (it.t_span_s, it.periods) {
                (Some(_), Some(_)) => bail!("give either t_span_s or periods"),
                (Some([a, b]), None) => {
                    ensure!(a == init.t_s, "t_span_s must start at initial.t_s");
                    (a, b)
                }
                (None, Some(p)) => {
                    ensure!(p > 0.0, "periods must be positive");
                    let omega = match &drive {
                        Drive::Force(ForceModel::SinDrive { omega, .. }) => *omega,
                        Drive::Fields(Fields::Harmonic { omega, .. }) => *omega,
                        _ => bail!("integrator.periods needs a periodic drive"),
                    };
                    (init.t_s, init.t_s + p * TAU / omega)
                }
                (None, None) => bail!("missing integrator.t_span_s"),
            }
        };
        ensure!(
            span.1 > span.0 && span.1.is_finite(),
            "empty or invalid span [{}, {}]",
            span.0,
            span.1
        );
        if it.samples.is_some() {
            ensure!(
                it.samples_per_period.is_none(),
                "give either samples or samples_per_period"
            );
        }

        Ok(Plan {
            name: self.name.clone(),
            model,
            particle,
            spring_constant: self.spring_constant_dyn_per_cm,
            drive,
            initial,
            noise,
            ensemble,
            tol: it.tol,
            dt: it.dt_s,
            span,
            samples: it.samples,
            runaway_guard: it.runaway_guard,
            // also read by ald comparison targets of other models
            runaway_free: it.runaway_free && model == ModelSel::Ald,
            radiation_reaction: it.radiation_reaction,
            rel_model: match model {
                ModelSel::LlType => RelModel::LlType,
                _ => RelModel::Covariant(match it.closure {
                    ClosureSpec::ZerothOrder => Closure::ZerothOrder,
                    ClosureSpec::SelfConsistent => Closure::SelfConsistent,
                }),
            },
            sweep,
            periods: it.periods,
            samples_per_period: it.samples_per_period.unwrap_or(64),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: Constants = Constants::GAUSSIAN;

    fn parse(json: &str) -> Result<Scenario> {
        Scenario::from_slice(json.as_bytes())
    }

    fn base(extra: &str) -> String {
        format!(r#"{{"version": 1, "name": "t", {extra}}}"#)
    }

    #[test]
    fn model_selectors_round_trip() {
        for s in [
            "newton",
            "ald",
            "fo",
            "fo_sharp",
            "series(7)",
            "oscillator",
            "free_fluctuating",
            "rel_fo_covariant",
            "rel_fo_3vector",
            "ll_type",
        ] {
            assert_eq!(ModelSel::parse(s).unwrap().label(), s);
        }
        assert!(ModelSel::parse("series(x)").is_err());
        assert!(ModelSel::parse("lorentz").is_err());
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(parse(&base(
            r#""model": "fo", "force": {"type": "constant", "amplitude": 1.0}"#
        ))
        .is_err());
        assert!(parse(&base(r#""model": "fo", "omega": 3"#)).is_err());
        assert!(parse(r#"{"version": 2, "name": "t"}"#).is_err());
    }

    #[test]
    fn force_and_fields_must_match_dimension() {
        let both = base(
            r#""model": "fo", "force": {"type": "zero"}, "fields": {"type": "static"},
               "integrator": {"t_span_s": [0, 1e-20]}"#,
        );
        assert!(parse(&both).unwrap().plan(&C, None).is_err());
        let fields_for_nr =
            base(r#""model": "fo", "fields": {"type": "static"}, "integrator": {"t_span_s": [0, 1e-20]}"#);
        assert!(parse(&fields_for_nr).unwrap().plan(&C, None).is_err());
        let force_for_rel =
            base(r#""model": "rel_fo_3vector", "force": {"type": "zero"}, "integrator": {"t_span_s": [0, 1e-20]}"#);
        assert!(parse(&force_for_rel).unwrap().plan(&C, None).is_err());
    }

    #[test]
    fn noise_only_for_permitted_models() {
        let noisy = |model: &str| {
            base(&format!(
                r#""model": "{model}", "force": {{"type": "zero"}},
                   "noise": {{"kind": "white", "temperature_k": 300, "damping_g_per_s": 1e-20}},
                   "integrator": {{"t_span_s": [0, 1e-20], "dt_s": 1e-22}}"#
            ))
        };
        assert!(parse(&noisy("fo")).unwrap().plan(&C, None).is_ok());
        assert!(parse(&noisy("ald")).unwrap().plan(&C, None).is_err());
        assert!(parse(&noisy("newton")).unwrap().plan(&C, None).is_err());
    }

    #[test]
    fn oscillator_coupling_is_checked_at_parse_time() {
        let osc = |damping: &str| {
            base(&format!(
                r#""model": "oscillator", "force": {{"type": "zero"}}, "spring_constant_dyn_per_cm": 1e10,
                   "noise": {{"kind": "white", "temperature_k": 300 {damping}}},
                   "integrator": {{"t_span_s": [0, 1e-12], "dt_s": 1e-16}}"#
            ))
        };
        let p = parse(&osc("")).unwrap().plan(&C, None).unwrap();
        let tau = p.particle.tau_e();
        assert_eq!(p.noise.unwrap().spec.damping(), 1e10 * tau);
        assert!(parse(&osc(r#", "damping_g_per_s": 1.0"#))
            .unwrap()
            .plan(&C, None)
            .is_err());
    }

    #[test]
    fn supercritical_cutoff_is_a_causality_verdict() {
        let s = base(
            r#""model": "fo", "force": {"type": "zero"}, "integrator": {"t_span_s": [0, 1e-20]},
               "particle": {"charge_statc": 4.8e-10, "mass_g": 9.1e-28, "cutoff_omega_per_s": 1e24}"#,
        );
        let err = parse(&s).unwrap().plan(&C, None).unwrap_err();
        let core = err.downcast_ref::<radreact_core::Error>().expect("core error");
        assert!(core.is_physics_verdict());
    }

    #[test]
    fn sweep_members_rescale_span() {
        let s = base(
            r#""model": "fo", "force": {"type": "sin", "amplitude_dyn": 1e-4},
               "sweep": {"omega_tau_e": [0.01, 0.1]}, "integrator": {"periods": 2, "samples_per_period": 32}"#,
        );
        let plan = parse(&s).unwrap().plan(&C, None).unwrap();
        assert_eq!(plan.sweep.len(), 2);
        let m = plan.member(Some(0.1)).unwrap();
        let tau = plan.particle.tau_e();
        assert!((m.span.1 - 2.0 * TAU * tau / 0.1).abs() < 1e-12 * m.span.1);
        assert_eq!(m.samples, Some(64));
    }

    #[test]
    fn seed_override_reaches_noise_and_ensemble() {
        let s = base(
            r#""model": "fo", "force": {"type": "zero"},
               "noise": {"kind": "white", "temperature_k": 300, "damping_g_per_s": 1e-20, "seed": 5},
               "ensemble": {"members": 4}, "integrator": {"t_span_s": [0, 1e-20], "dt_s": 1e-22}"#,
        );
        let sc = parse(&s).unwrap();
        let p = sc.plan(&C, None).unwrap();
        assert_eq!(p.noise.unwrap().spec.seed, 5);
        assert_eq!(p.ensemble.unwrap().base_seed(), 5);
        let q = sc.plan(&C, Some(9)).unwrap();
        assert_eq!(q.noise.unwrap().spec.seed, 9);
        assert_eq!(q.ensemble.unwrap().base_seed(), 9);
    }
}
