//! Pole tables for the nonrelativistic models.

use anyhow::{bail, Result};
use radreact_core::causality::{model_poles, verify_positive_real_part, Pole, PositiveRealReport, Verdict, CONVENTION};
use radreact_core::nonrel::{ModelKind, ModelNR};
use radreact_core::phys::ParticleParams;
use serde::Serialize;
use serde_json::Value;

use crate::scenario::ModelSel;

#[derive(Debug, Clone, Serialize)]
pub struct PoleEntry {
    pub model: String,
    pub verdict: Verdict,
    pub poles: Vec<Pole>,
    pub offending_poles: Vec<Pole>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega0_tau_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_real_part: Option<PositiveRealReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoleTable {
    pub convention: &'static str,
    /// poles are omega tau_e
    pub units: &'static str,
    pub tau_e_s: f64,
    pub entries: Vec<PoleEntry>,
}

impl PoleTable {
    pub fn any_noncausal(&self) -> bool {
        self.entries.iter().any(|e| e.verdict == Verdict::NonCausal)
    }

    /// Pretty JSON with every float rounded to 12 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        round_floats(&mut v);
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            if let Some(m) = serde_json::Number::from_f64(r) {
                *n = m;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn entry(model: &ModelNR) -> Result<PoleEntry> {
    let report = model_poles(model)?;
    let (omega0_tau_e, positive_real_part) = match model.kind {
        ModelKind::Oscillator { spring_constant } => {
            let p = &model.particle;
            let w0 = (spring_constant / p.mass()).sqrt();
            (Some(w0 * p.tau_e()), Some(verify_positive_real_part(model)?))
        }
        _ => (None, None),
    };
    Ok(PoleEntry {
        model: model.kind.name(),
        verdict: report.verdict,
        poles: report.poles,
        offending_poles: report.offending_poles,
        omega0_tau_e,
        positive_real_part,
    })
}

/// Pole table for each selector in `models`.
pub fn survey(models: &[ModelSel], particle: &ParticleParams, spring_constant: Option<f64>) -> Result<PoleTable> {
    let mut entries = Vec::with_capacity(models.len());
    for m in models {
        if m.is_relativistic() {
            bail!("{} has no pole analysis", m.label());
        }
        let Some(kind) = m.kind(spring_constant)? else {
            bail!("{} has no pole analysis", m.label());
        };
        entries.push(entry(&ModelNR::new(kind, *particle)?)?);
    }
    Ok(PoleTable {
        convention: CONVENTION,
        units: "1/tau_e",
        tau_e_s: particle.tau_e(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use radreact_core::phys::Constants;

    #[test]
    fn survey_flags_ald_and_rounds_output() {
        let p = ParticleParams::electron(&Constants::GAUSSIAN);
        let models = [ModelSel::Ald, ModelSel::Fo, ModelSel::Newton];
        let table = survey(&models, &p, None).unwrap();
        assert!(table.any_noncausal());
        let ald = &table.entries[0];
        assert_eq!(ald.verdict, Verdict::NonCausal);
        assert_eq!(ald.offending_poles.len(), 1);
        assert!((ald.offending_poles[0].im - 1.0).abs() < 1e-9);
        assert!(table.entries[1].offending_poles.is_empty());
        let json = table.to_json().unwrap();
        // tau_e printed with 12 significant digits
        let v: Value = serde_json::from_str(&json).unwrap();
        let tau = v["tau_e_s"].as_f64().unwrap();
        assert_eq!(format!("{tau:.11e}").parse::<f64>().unwrap(), tau);
    }

    #[test]
    fn relativistic_models_have_no_table() {
        let p = ParticleParams::electron(&Constants::GAUSSIAN);
        assert!(survey(&[ModelSel::RelCovariant], &p, None).is_err());
        assert!(survey(&[ModelSel::Oscillator], &p, None).is_err());
    }
}
