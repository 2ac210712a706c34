//! Comparisons between stored runs.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use radreact_core::stats::{power_law_exponent, trapezoid};
use serde::Serialize;
use serde_json::Value;

use crate::interp::{hermite, spline};
use crate::table::Table;

/// Expected exponent of the structured-charge vs point-charge deviation in
/// omega tau_e, and the accepted spread.
pub const SCALING_EXPONENT: f64 = 2.0;
pub const SCALING_EXPONENT_TOL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MaxPositionDeviation,
    PowerRatioSeries,
    PoleTables,
}

impl Metric {
    pub fn default_tolerance(&self) -> f64 {
        match self {
            Metric::MaxPositionDeviation => 1e-8,
            Metric::PowerRatioSeries => 1e-3,
            Metric::PoleTables => 1e-9,
        }
    }
}

impl FromStr for Metric {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "max_position_deviation" => Metric::MaxPositionDeviation,
            "power_ratio_series" => Metric::PowerRatioSeries,
            "pole_tables" => Metric::PoleTables,
            _ => bail!("unknown metric {s:?} (expected max_position_deviation, power_ratio_series or pole_tables)"),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_tau_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// in `units`
    pub value: f64,
    pub units: &'static str,
    pub normalized: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_pointwise: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub variable: &'static str,
    pub exponent: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub run_a: String,
    pub run_b: String,
    pub metric: Metric,
    pub normalization: &'static str,
    pub resampled: bool,
    pub entries: Vec<ComparisonEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentFit>,
    pub tolerance: f64,
    /// Decided by the exponent fit when there is one, otherwise by every
    /// normalized value against `tolerance`.
    pub pass: bool,
}

/// One stored trajectory of a run, tagged with its sweep frequency.
#[derive(Debug, Clone)]
pub struct Member {
    pub omega_tau_e: Option<f64>,
    pub table: Table,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub id: String,
    pub members: Vec<Member>,
}

impl Run {
    pub fn from_tables(id: &str, members: Vec<Member>) -> Self {
        Run {
            id: id.to_string(),
            members,
        }
    }
}

fn report_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("report.json")
    } else {
        path.to_path_buf()
    }
}

/// Loads a run from a run directory, its report.json, or a single CSV.
pub fn load_run(path: &Path) -> Result<Run> {
    let id = path.display().to_string();
    let file = report_path(path);
    if file.extension().is_some_and(|e| e == "csv") {
        let table = Table::read(&file)?;
        let omega_tau_e = table.meta("omega_tau_e").and_then(|s| s.parse().ok());
        return Ok(Run::from_tables(&id, vec![Member { omega_tau_e, table }]));
    }
    let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
    let dir = file.parent().unwrap_or(Path::new("."));
    let list = v["trajectories"]
        .as_array()
        .with_context(|| format!("{} lists no trajectories", file.display()))?;
    ensure!(!list.is_empty(), "{} lists no trajectories", file.display());
    let members = list
        .iter()
        .map(|t| {
            let name = t["file"].as_str().context("trajectory entry without a file")?;
            Ok(Member {
                omega_tau_e: t["omega_tau_e"].as_f64(),
                table: Table::read(&dir.join(name))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Run::from_tables(&id, members))
}

/// Sample times, positions and velocities of any trajectory table.
struct Path3 {
    t: Vec<f64>,
    x: [Vec<f64>; 3],
    v: [Vec<f64>; 3],
}

fn col(t: &Table, name: &str) -> Result<Vec<f64>> {
    t.column(name)
        .with_context(|| format!("trajectory has no {name:?} column"))
}

fn path_of(table: &Table) -> Result<Path3> {
    let t = col(table, "t")?;
    let zeros = vec![0.0; t.len()];
    let (x, v) = if table.has_column("y") {
        let x = [col(table, "x")?, col(table, "y")?, col(table, "z")?];
        let v = if table.has_column("vx") {
            [col(table, "vx")?, col(table, "vy")?, col(table, "vz")?]
        } else {
            let g = col(table, "gamma")?;
            let u = [col(table, "ux")?, col(table, "uy")?, col(table, "uz")?];
            u.map(|c| c.iter().zip(&g).map(|(a, b)| a / b).collect())
        };
        (x, v)
    } else if table.has_column("mean_x") {
        (
            [col(table, "mean_x")?, zeros.clone(), zeros.clone()],
            [col(table, "mean_v")?, zeros.clone(), zeros],
        )
    } else {
        (
            [col(table, "x")?, zeros.clone(), zeros.clone()],
            [col(table, "v")?, zeros.clone(), zeros],
        )
    };
    Ok(Path3 { t, x, v })
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn pair<'a>(a: &'a Run, b: &'a Run) -> Result<Vec<(&'a Member, &'a Member)>> {
    ensure!(
        a.members.len() == b.members.len(),
        "incompatible runs: {} has {} trajectories, {} has {}",
        a.id,
        a.members.len(),
        b.id,
        b.members.len()
    );
    for (p, q) in a.members.iter().zip(&b.members) {
        ensure!(
            p.omega_tau_e == q.omega_tau_e,
            "incompatible runs: sweep frequencies {:?} vs {:?}",
            p.omega_tau_e,
            q.omega_tau_e
        );
    }
    Ok(a.members.iter().zip(&b.members).collect())
}

fn fit(entries: &[ComparisonEntry]) -> Option<ExponentFit> {
    let z: Vec<f64> = entries.iter().map(|e| e.omega_tau_e).collect::<Option<_>>()?;
    if z.len() < 2 {
        return None;
    }
    let y: Vec<f64> = entries.iter().map(|e| e.normalized).collect();
    let exponent = power_law_exponent(&z, &y).unwrap_or(f64::NAN);
    Some(ExponentFit {
        variable: "omega_tau_e",
        exponent,
        expected: SCALING_EXPONENT,
        tolerance: SCALING_EXPONENT_TOL,
        pass: (exponent - SCALING_EXPONENT).abs() <= SCALING_EXPONENT_TOL,
    })
}

fn finish(
    a: &Run,
    b: &Run,
    metric: Metric,
    normalization: &'static str,
    resampled: bool,
    entries: Vec<ComparisonEntry>,
    tolerance: f64,
) -> ComparisonReport {
    let exponent = if metric == Metric::MaxPositionDeviation {
        fit(&entries)
    } else {
        None
    };
    let pass = match &exponent {
        Some(f) => f.pass,
        None => entries.iter().all(|e| e.normalized <= tolerance),
    };
    ComparisonReport {
        run_a: a.id.clone(),
        run_b: b.id.clone(),
        metric,
        normalization,
        resampled,
        entries,
        exponent,
        tolerance,
        pass,
    }
}

/// Max |x_a - x_b| over the grid of `a`, with `b` resampled by cubic Hermite
/// interpolation when the grids differ.
pub fn max_position_deviation(a: &Run, b: &Run, tolerance: f64) -> Result<ComparisonReport> {
    let mut resampled = false;
    let mut entries = Vec::new();
    for (p, q) in pair(a, b)? {
        let pa = path_of(&p.table)?;
        let pb = path_of(&q.table)?;
        let xb: Vec<Vec<f64>> = if same_grid(&pa.t, &pb.t) {
            pb.x.to_vec()
        } else {
            resampled = true;
            (0..3)
                .map(|k| hermite(&pb.t, &pb.x[k], &pb.v[k], &pa.t))
                .collect::<Result<_>>()
                .context("incompatible runs")?
        };
        let norm = |f: &dyn Fn(usize) -> f64| (0..3).map(|k| f(k).powi(2)).sum::<f64>().sqrt();
        let (dev, scale) = (0..pa.t.len()).fold((0.0f64, 0.0f64), |(d, s), i| {
            (d.max(norm(&|k| pa.x[k][i] - xb[k][i])), s.max(norm(&|k| pa.x[k][i])))
        });
        entries.push(ComparisonEntry {
            omega_tau_e: p.omega_tau_e,
            model: None,
            value: dev,
            units: "cm",
            normalized: if scale > 0.0 { dev / scale } else { dev },
            max_pointwise: None,
        });
    }
    Ok(finish(
        a,
        b,
        Metric::MaxPositionDeviation,
        "max |x_a| over the grid of run a",
        resampled,
        entries,
        tolerance,
    ))
}

/// Radiated energy from the structured-charge power column of `a` against
/// the Larmor power column of `b`, over the grid of `a`.
pub fn power_ratio_series(a: &Run, b: &Run, tolerance: f64) -> Result<ComparisonReport> {
    let mut resampled = false;
    let mut entries = Vec::new();
    for (p, q) in pair(a, b)? {
        let t = col(&p.table, "t")?;
        let p_fo = col(&p.table, "p_fo")?;
        let tb = col(&q.table, "t")?;
        let mut p_l = col(&q.table, "p_larmor")?;
        if !same_grid(&t, &tb) {
            resampled = true;
            p_l = spline(&tb, &p_l, &t).context("incompatible runs")?;
        }
        let e_fo = trapezoid(&t, &p_fo);
        let e_l = trapezoid(&t, &p_l);
        let peak = p_l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pointwise = p_fo.iter().zip(&p_l).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / peak;
        entries.push(ComparisonEntry {
            omega_tau_e: p.omega_tau_e,
            model: None,
            value: (e_fo - e_l).abs(),
            units: "erg",
            normalized: (e_fo - e_l).abs() / e_l.abs(),
            max_pointwise: Some(pointwise),
        });
    }
    Ok(finish(
        a,
        b,
        Metric::PowerRatioSeries,
        "Larmor energy of run b; max_pointwise is relative to peak Larmor power",
        resampled,
        entries,
        tolerance,
    ))
}

fn pole_list(v: &Value) -> Vec<(f64, f64, u64)> {
    v.as_array()
        .map(|a| {
            a.iter()
                .map(|p| {
                    (
                        p["re"].as_f64().unwrap_or(f64::NAN),
                        p["im"].as_f64().unwrap_or(f64::NAN),
                        p["multiplicity"].as_u64().unwrap_or(0),
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Largest pole displacement between matching models of two pole tables,
/// relative to max(1, |pole|). Differing verdicts or pole counts fail.
pub fn pole_tables(path_a: &Path, path_b: &Path, tolerance: f64) -> Result<ComparisonReport> {
    let read = |p: &Path| -> Result<Value> {
        let file = if p.is_dir() {
            p.join("poles.json")
        } else {
            p.to_path_buf()
        };
        let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))
    };
    let (va, vb) = (read(path_a)?, read(path_b)?);
    ensure!(
        va["convention"] == vb["convention"],
        "incompatible runs: pole tables use different conventions"
    );
    let ea = va["entries"].as_array().context("pole table without entries")?;
    let eb = vb["entries"].as_array().context("pole table without entries")?;
    let mut entries = Vec::new();
    let mut consistent = true;
    for x in ea {
        let name = x["model"].as_str().context("pole entry without a model")?;
        let Some(y) = eb.iter().find(|y| y["model"] == x["model"]) else {
            continue;
        };
        let (pa, pb) = (pole_list(&x["poles"]), pole_list(&y["poles"]));
        consistent &= x["verdict"] == y["verdict"] && pa.len() == pb.len();
        let mut worst = 0.0f64;
        for (p, q) in pa.iter().zip(&pb) {
            consistent &= p.2 == q.2;
            let d = (p.0 - q.0).hypot(p.1 - q.1) / p.0.hypot(p.1).max(1.0);
            worst = worst.max(d);
        }
        entries.push(ComparisonEntry {
            omega_tau_e: None,
            model: Some(name.to_string()),
            value: worst,
            units: "1/tau_e",
            normalized: if consistent { worst } else { f64::INFINITY },
            max_pointwise: None,
        });
    }
    ensure!(
        !entries.is_empty(),
        "incompatible runs: no model appears in both pole tables"
    );
    let a = Run::from_tables(&path_a.display().to_string(), Vec::new());
    let b = Run::from_tables(&path_b.display().to_string(), Vec::new());
    Ok(finish(
        &a,
        &b,
        Metric::PoleTables,
        "max(1, |pole|)",
        false,
        entries,
        tolerance,
    ))
}

pub fn compare(path_a: &Path, path_b: &Path, metric: Metric, tolerance: Option<f64>) -> Result<ComparisonReport> {
    let tol = tolerance.unwrap_or_else(|| metric.default_tolerance());
    match metric {
        Metric::PoleTables => pole_tables(path_a, path_b, tol),
        Metric::MaxPositionDeviation => max_position_deviation(&load_run(path_a)?, &load_run(path_b)?, tol),
        Metric::PowerRatioSeries => power_ratio_series(&load_run(path_a)?, &load_run(path_b)?, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(omega: f64, shift: f64, n: usize) -> Table {
        let mut t = Table::new(&[("t", "s"), ("x", "cm"), ("v", "cm/s")]);
        for i in 0..=n {
            let s = 10.0 * i as f64 / n as f64;
            t.push_row(vec![s, (omega * s).sin() + shift, omega * (omega * s).cos()]);
        }
        t
    }

    fn run(tables: Vec<(Option<f64>, Table)>) -> Run {
        Run::from_tables(
            "r",
            tables
                .into_iter()
                .map(|(omega_tau_e, table)| Member { omega_tau_e, table })
                .collect(),
        )
    }

    #[test]
    fn self_comparison_is_zero() {
        let a = run(vec![(None, line(1.0, 0.0, 100))]);
        let r = max_position_deviation(&a, &a, 1e-12).unwrap();
        assert_eq!(r.entries[0].value, 0.0);
        assert!(r.pass && !r.resampled);
    }

    #[test]
    fn resampling_onto_a_coarser_grid_is_accurate() {
        let a = run(vec![(None, line(1.0, 0.0, 50))]);
        let b = run(vec![(None, line(1.0, 0.0, 400))]);
        let r = max_position_deviation(&a, &b, 1e-6).unwrap();
        assert!(r.resampled);
        assert!(r.entries[0].normalized < 1e-6, "{}", r.entries[0].normalized);
    }

    #[test]
    fn exponent_fit_over_sweep_members() {
        let zs = [1e-3, 1e-2, 1e-1];
        let a = run(zs.iter().map(|&z| (Some(z), line(1.0, 0.0, 100))).collect());
        let b = run(zs.iter().map(|&z| (Some(z), line(1.0, z * z, 100))).collect());
        let r = max_position_deviation(&a, &b, 0.0).unwrap();
        let fit = r.exponent.unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-3, "{}", fit.exponent);
        assert!(r.pass);
    }

    #[test]
    fn mismatched_runs_are_incompatible() {
        let a = run(vec![(Some(0.1), line(1.0, 0.0, 10))]);
        let b = run(vec![(Some(0.2), line(1.0, 0.0, 10))]);
        assert!(max_position_deviation(&a, &b, 1.0).is_err());
        let c = run(vec![(None, line(1.0, 0.0, 10)), (None, line(1.0, 0.0, 10))]);
        assert!(max_position_deviation(&a, &c, 1.0).is_err());
        let mut short = line(1.0, 0.0, 10);
        short.rows.truncate(5);
        let d = run(vec![(Some(0.1), short)]);
        assert!(max_position_deviation(&a, &d, 1.0).is_err());
    }

    #[test]
    fn metric_names() {
        for m in ["max_position_deviation", "power_ratio_series", "pole_tables"] {
            assert!(m.parse::<Metric>().is_ok());
        }
        assert!("rms".parse::<Metric>().is_err());
    }
}
