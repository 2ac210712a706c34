//! Executes a scenario and writes its artifacts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use radreact_core::causality::{model_poles, Verdict};
use radreact_core::nonrel::{fo_larmor_energy_ratio, integrate_runaway_free_ald, integrate_with, NrOptions};
use radreact_core::phys::Constants;
use radreact_core::rel::{integrate_lab_time, integrate_proper_time, FourState, LabOptions, RelOptions};
use radreact_core::stochastic::{ensemble_mean, fluctuating_fo, free_fluctuating, langevin_oscillator};
use radreact_core::Error as CoreError;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::compare::{max_position_deviation, ComparisonReport, Member, Run};
use crate::poles::{self, PoleTable};
use crate::scenario::{Analysis, Initial, ModelSel, Plan, Scenario};
use crate::table::Table;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub strict_causal: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Runaway,
    NonCausal,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryEntry {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_tau_e: Option<f64>,
    pub rows: usize,
    pub diagnostics: Map<String, Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub model: String,
    pub scenario_sha256: String,
    pub tau_e_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Value>,
    pub trajectories: Vec<TrajectoryEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<ComparisonReport>,
}

/// What a finished run produced. `verdict` is set when the physics said no;
/// the artifacts are still written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report_path: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub verdict: Option<String>,
}

/// A table plus the scalar diagnostics of the run that made it.
struct Produced {
    table: Table,
    diagnostics: Map<String, Value>,
}

fn diag(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn execute(plan: &Plan, consts: &Constants) -> Result<Produced> {
    let p = &plan.particle;
    let (t0, t1) = plan.span;
    match plan.model {
        ModelSel::RelCovariant | ModelSel::LlType => {
            let Initial::Space { t, x, v } = plan.initial else {
                bail!("relativistic run without a 3-D state")
            };
            let init = FourState::new(t, x, v, p.c())?;
            let opts = RelOptions {
                model: plan.rel_model,
                tau_eval: plan.grid(),
                radiation_reaction: plan.radiation_reaction,
                ..RelOptions::with_tol(plan.tol)
            };
            let wl = integrate_proper_time(p, plan.fields()?, &init, t1, &opts)?;
            let mut table = Table::new(&[
                ("tau", "s"),
                ("t", "s"),
                ("x", "cm"),
                ("y", "cm"),
                ("z", "cm"),
                ("ux", "cm/s"),
                ("uy", "cm/s"),
                ("uz", "cm/s"),
                ("gamma", "1"),
                ("norm_drift", "1"),
            ]);
            for q in &wl.points {
                table.push_row(vec![
                    q.tau,
                    q.t,
                    q.x[0],
                    q.x[1],
                    q.x[2],
                    q.u[0],
                    q.u[1],
                    q.u[2],
                    q.gamma,
                    q.norm_drift,
                ]);
            }
            table.push_meta("kind", "worldline");
            table.push_meta("closure", wl.label.as_str());
            Ok(Produced {
                table,
                diagnostics: diag(&[
                    ("accepted_steps", json!(wl.stats.accepted)),
                    ("max_norm_drift", json!(wl.max_norm_drift())),
                    ("max_orthogonality", json!(wl.max_orthogonality)),
                    ("path_length_cm", json!(wl.path_length())),
                ]),
            })
        }
        ModelSel::RelThreeVector => {
            let Initial::Space { x, v, .. } = plan.initial else {
                bail!("relativistic run without a 3-D state")
            };
            let opts = LabOptions {
                t_eval: plan.grid(),
                radiation_reaction: plan.radiation_reaction,
                ..LabOptions::with_tol(plan.tol)
            };
            let tr = integrate_lab_time(p, plan.fields()?, x, v, t0, t1, &opts)?;
            let mut table = Table::new(&[
                ("t", "s"),
                ("x", "cm"),
                ("y", "cm"),
                ("z", "cm"),
                ("vx", "cm/s"),
                ("vy", "cm/s"),
                ("vz", "cm/s"),
                ("gamma", "1"),
            ]);
            for q in &tr.points {
                table.push_row(vec![q.t, q.x[0], q.x[1], q.x[2], q.v[0], q.v[1], q.v[2], q.gamma]);
            }
            table.push_meta("kind", "lab");
            Ok(Produced {
                table,
                diagnostics: diag(&[("accepted_steps", json!(tr.stats.accepted))]),
            })
        }
        _ if plan.noise.is_some() => stochastic(plan, consts),
        _ => {
            let Initial::Line(init) = plan.initial else {
                bail!("one-dimensional run without a 1-D state")
            };
            let force = plan.force()?;
            let opts = NrOptions {
                t_eval: plan.grid(),
                runaway_guard: plan.runaway_guard,
                ..NrOptions::with_tol(plan.tol)
            };
            let tr = if plan.runaway_free {
                integrate_runaway_free_ald(p, force, &init, t1, &opts)?
            } else {
                integrate_with(&plan.nr_model()?, force, &init, t1, &opts)?
            };
            let mut table = Table::new(&[
                ("t", "s"),
                ("x", "cm"),
                ("v", "cm/s"),
                ("a", "cm/s^2"),
                ("f", "dyn"),
                ("p_fo", "erg/s"),
                ("p_larmor", "erg/s"),
            ]);
            for q in &tr.points {
                table.push_row(vec![q.t, q.x, q.v, q.a, q.f, q.p_fo, q.p_larmor]);
            }
            table.push_meta("kind", "deterministic");
            let mut d = diag(&[
                ("accepted_steps", json!(tr.stats.accepted)),
                ("rejected_steps", json!(tr.stats.rejected)),
            ]);
            if plan.periods.is_some() && plan.samples.is_some() {
                d.insert("fo_larmor_energy_ratio".into(), json!(fo_larmor_energy_ratio(&tr)));
            }
            Ok(Produced { table, diagnostics: d })
        }
    }
}

fn stochastic(plan: &Plan, consts: &Constants) -> Result<Produced> {
    let Initial::Line(init) = plan.initial else {
        bail!("one-dimensional run without a 1-D state")
    };
    let noise = plan.noise.context("stochastic run without noise")?;
    let dt = plan.dt.context("stochastic run without dt_s")?;
    let p = &plan.particle;
    let t_end = plan.span.1;
    let member = |seed: u64| {
        let spec = noise.spec.with_seed(seed);
        match plan.model {
            ModelSel::Oscillator => {
                langevin_oscillator(p, plan.spring_constant.unwrap_or(0.0), &spec, consts, &init, t_end, dt)
            }
            ModelSel::FreeFluctuating => free_fluctuating(p, &spec, consts, &init, t_end, dt),
            _ => {
                let force = match &plan.drive {
                    crate::scenario::Drive::Force(f) => f,
                    crate::scenario::Drive::Fields(_) => unreachable!("validated as one-dimensional"),
                };
                fluctuating_fo(p, force, &spec, consts, &init, t_end, dt, noise.scheme)
            }
        }
    };
    match plan.ensemble {
        Some(cfg) => {
            let s = ensemble_mean(&cfg, member)?;
            let mut table = Table::new(&[
                ("t", "s"),
                ("mean_x", "cm"),
                ("mean_v", "cm/s"),
                ("stderr_x", "cm"),
                ("stderr_v", "cm/s"),
            ]);
            for i in 0..s.t.len() {
                table.push_row(vec![s.t[i], s.mean_x[i], s.mean_v[i], s.stderr_x[i], s.stderr_v[i]]);
            }
            table.push_meta("kind", "ensemble");
            table.push_meta("members", cfg.n_members());
            table.push_meta("base_seed", cfg.base_seed());
            Ok(Produced {
                table,
                diagnostics: diag(&[
                    ("members", json!(cfg.n_members())),
                    ("base_seed", json!(cfg.base_seed())),
                ]),
            })
        }
        None => {
            let tr = member(noise.spec.seed)?;
            let mut table = Table::new(&[("t", "s"), ("x", "cm"), ("v", "cm/s")]);
            for i in 0..tr.t.len() {
                table.push_row(vec![tr.t[i], tr.x[i], tr.v[i]]);
            }
            table.push_meta("kind", "stochastic");
            table.push_meta("seed", noise.spec.seed);
            Ok(Produced {
                table,
                diagnostics: diag(&[("seed", json!(noise.spec.seed)), ("steps", json!(tr.t.len() - 1))]),
            })
        }
    }
}

fn member_file(base: &str, index: usize, count: usize, suffix: &str) -> String {
    let (stem, ext) = match base.rsplit_once('.') {
        Some((s, e)) => (s, format!(".{e}")),
        None => (base, String::new()),
    };
    let idx = if count > 1 { format!("_{index}") } else { String::new() };
    format!("{stem}{suffix}{idx}{ext}")
}

fn file_tag(model: &ModelSel) -> String {
    model
        .label()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Runs every sweep member of `plan` and returns the tables, or the runaway
/// that stopped it.
type Members = Vec<(Option<f64>, Produced)>;

fn execute_all(plan: &Plan, consts: &Constants) -> Result<std::result::Result<Members, Value>> {
    let mut out = Vec::new();
    for &z in &plan.sweep {
        let member = plan.member(z)?;
        match execute(&member, consts) {
            Ok(p) => out.push((z, p)),
            Err(e) => match e.downcast_ref::<CoreError>() {
                Some(&CoreError::Runaway {
                    t_s,
                    amplification,
                    e_folding_s,
                }) => {
                    return Ok(Err(json!({
                        "kind": "runaway",
                        "omega_tau_e": z,
                        "t_s": t_s,
                        "amplification": amplification,
                        "e_folding_s": e_folding_s,
                        "e_folding_over_tau_e": e_folding_s / plan.particle.tau_e(),
                    })))
                }
                _ => return Err(e).with_context(|| format!("integrating {}", plan.model.label())),
            },
        }
    }
    Ok(Ok(out))
}

fn survey_models(scenario: &Scenario) -> Result<Vec<ModelSel>> {
    if scenario.models.is_empty() {
        bail!("a pole survey needs a models list");
    }
    scenario.models.iter().map(|m| ModelSel::parse(m)).collect()
}

fn run_survey(scenario: &Scenario, sha: &str, opts: &RunOptions, consts: &Constants) -> Result<RunOutcome> {
    let particle = scenario.particle(consts)?;
    let table: PoleTable = poles::survey(
        &survey_models(scenario)?,
        &particle,
        scenario.spring_constant_dyn_per_cm,
    )?;
    let path = opts.out_dir.join(&scenario.outputs.report);
    let mut v: Value = serde_json::from_str(&table.to_json()?)?;
    v["name"] = json!(scenario.name);
    v["scenario_sha256"] = json!(sha);
    std::fs::write(&path, serde_json::to_string_pretty(&v)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    let verdict = (opts.strict_causal && table.any_noncausal()).then(|| {
        let names: Vec<&str> = table
            .entries
            .iter()
            .filter(|e| e.verdict == Verdict::NonCausal)
            .map(|e| e.model.as_str())
            .collect();
        format!("non-causal models in survey: {}", names.join(", "))
    });
    Ok(RunOutcome {
        report_path: path.clone(),
        artifacts: vec![path],
        verdict,
    })
}

pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let consts = Constants::GAUSSIAN;
    let loaded = Scenario::load(path)?;
    let sc = &loaded.scenario;
    std::fs::create_dir_all(&opts.out_dir).with_context(|| format!("creating {}", opts.out_dir.display()))?;
    if sc.analysis == Analysis::Poles {
        return run_survey(sc, &loaded.sha256, opts, &consts);
    }
    let plan = sc.plan(&consts, opts.seed)?;
    let report_path = opts.out_dir.join(&sc.outputs.report);
    let mut report = RunReport {
        name: plan.name.clone(),
        model: plan.model.label(),
        scenario_sha256: loaded.sha256.clone(),
        tau_e_s: plan.particle.tau_e(),
        seed: plan.noise.map(|n| plan.ensemble.map_or(n.spec.seed, |e| e.base_seed())),
        status: Status::Ok,
        verdict: None,
        trajectories: Vec::new(),
        comparisons: Vec::new(),
    };

    if opts.strict_causal && !plan.model.is_relativistic() && plan.particle.tau_e() > 0.0 {
        let pr = model_poles(&plan.nr_model()?)?;
        if pr.verdict == Verdict::NonCausal {
            report.status = Status::NonCausal;
            report.verdict = Some(json!({ "kind": "non_causal", "poles": pr }));
            write_json(&report_path, &report)?;
            return Ok(RunOutcome {
                report_path: report_path.clone(),
                artifacts: vec![report_path],
                verdict: Some(format!("{} is non-causal (upper half-plane poles)", plan.model.label())),
            });
        }
    }

    let mut artifacts = Vec::new();
    let produced = match execute_all(&plan, &consts)? {
        Ok(p) => p,
        Err(v) => {
            let msg = format!(
                "runaway detected: e-folding time {:.6e} s = {:.6} tau_e",
                v["e_folding_s"].as_f64().unwrap_or(f64::NAN),
                v["e_folding_over_tau_e"].as_f64().unwrap_or(f64::NAN)
            );
            report.status = Status::Runaway;
            report.verdict = Some(v);
            write_json(&report_path, &report)?;
            return Ok(RunOutcome {
                report_path: report_path.clone(),
                artifacts: vec![report_path],
                verdict: Some(msg),
            });
        }
    };

    let count = produced.len();
    let stamp = |t: &mut Table, model: &ModelSel, z: Option<f64>| {
        let mut meta = vec![
            ("scenario".to_string(), plan.name.clone()),
            ("scenario_sha256".to_string(), loaded.sha256.clone()),
            ("model".to_string(), model.label()),
            ("tau_e_s".to_string(), format!("{:.16e}", plan.particle.tau_e())),
            ("seed".to_string(), report.seed.map_or("none".into(), |s| s.to_string())),
        ];
        if let Some(z) = z {
            meta.push(("omega_tau_e".to_string(), format!("{z:.16e}")));
        }
        meta.append(&mut t.meta);
        t.meta = meta;
    };
    let mut members_a = Vec::new();
    for (i, (z, mut p)) in produced.into_iter().enumerate() {
        stamp(&mut p.table, &plan.model, z);
        let file = member_file(&sc.outputs.trajectory, i, count, "");
        let path = opts.out_dir.join(&file);
        p.table.write(&path)?;
        artifacts.push(path);
        report.trajectories.push(TrajectoryEntry {
            file,
            omega_tau_e: z,
            rows: p.table.rows.len(),
            diagnostics: p.diagnostics,
        });
        members_a.push(Member {
            omega_tau_e: z,
            table: p.table,
        });
    }

    let run_a = Run::from_tables(&plan.model.label(), members_a);
    for other in &sc.outputs.compare_with {
        let model = ModelSel::parse(other)?;
        let mut other_plan = sc.plan_for(model, &consts, opts.seed)?;
        // the reference shares the output grid of the primary run
        other_plan.samples = plan.samples;
        let produced = match execute_all(&other_plan, &consts)? {
            Ok(p) => p,
            Err(v) => bail!("comparison target {other} ran away: {v}"),
        };
        let mut members_b = Vec::new();
        for (i, (z, mut p)) in produced.into_iter().enumerate() {
            stamp(&mut p.table, &model, z);
            let path = opts.out_dir.join(member_file(
                &sc.outputs.trajectory,
                i,
                count,
                &format!("_{}", file_tag(&model)),
            ));
            p.table.write(&path)?;
            artifacts.push(path);
            members_b.push(Member {
                omega_tau_e: z,
                table: p.table,
            });
        }
        let run_b = Run::from_tables(&model.label(), members_b);
        report.comparisons.push(max_position_deviation(
            &run_a,
            &run_b,
            crate::compare::Metric::MaxPositionDeviation.default_tolerance(),
        )?);
    }

    write_json(&report_path, &report)?;
    artifacts.push(report_path.clone());
    Ok(RunOutcome {
        report_path,
        artifacts,
        verdict: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_file_names() {
        assert_eq!(member_file("trajectory.csv", 0, 1, ""), "trajectory.csv");
        assert_eq!(member_file("trajectory.csv", 2, 3, ""), "trajectory_2.csv");
        assert_eq!(member_file("out", 1, 2, "_ald"), "out_ald_1");
        assert_eq!(file_tag(&ModelSel::Series(4)), "series4");
    }
}
