//! JSON report bundles: merged sub-reports plus run metadata and flags.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// A discrepancy or caveat raised during a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub code: &'static str,
    pub message: String,
}

impl Flag {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Flag { code, message: message.into() }
    }
}

/// Flags attached to any run at level ℓ.
pub fn level_flags(ell: u32) -> Vec<Flag> {
    let mut out = Vec::new();
    if ell == 3 {
        out.push(Flag::new(
            "potts-q-level-3",
            "q = d^4 = (7+3√5)/2 ≈ 6.854 at level 3; the quoted value 5.6 is not reproduced",
        ));
    }
    out
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Section {
    pub name: String,
    pub data: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(flatten)]
    pub meta: RunMeta,
    pub sections: Vec<Section>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<Flag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ReportBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    /// The bundle without timing, for determinism comparisons.
    pub fn without_timing(&self) -> ReportBundle {
        ReportBundle { timing: None, ..self.clone() }
    }

    pub fn add_flags(&mut self, flags: impl IntoIterator<Item = Flag>) {
        for f in flags {
            if !self.flags.contains(&f) {
                self.flags.push(f);
            }
        }
    }

    /// Stamps the start time and elapsed seconds.
    pub fn stamp(&mut self, started: SystemTime) {
        let now = SystemTime::now();
        self.timing = Some(Timing {
            started_unix_s: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_clock_s: now.duration_since(started).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        });
    }
}

/// Merges named sub-reports into one bundle. Null sections are dropped.
pub fn report_bundle(command: &str, results: Vec<(String, Value)>, meta: RunMeta, flags: Vec<Flag>) -> Result<ReportBundle> {
    let sections: Vec<Section> =
        results.into_iter().filter(|(_, v)| !v.is_null()).map(|(name, data)| Section { name, data }).collect();
    if sections.is_empty() {
        return Err(Error::ConfigInvalid("report bundle needs at least one result".into()));
    }
    let mut b = ReportBundle {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        meta,
        sections,
        flags: Vec::new(),
        timing: None,
    };
    b.add_flags(flags);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn test_optional_fields_omitted() {
        let b = report_bundle("x", vec![("a".into(), json!({"k": 1}))], RunMeta::default(), vec![]).unwrap();
        let v: Value = serde_json::from_str(&b.to_json()).unwrap();
        for key in ["seed", "backend", "flags", "timing", "tolerance"] {
            assert!(v.get(key).is_none(), "{key}");
        }
        assert!(report_bundle("x", vec![("a".into(), Value::Null)], RunMeta::default(), vec![]).is_err());
    }

    #[test]
    fn test_deterministic_modulo_timing() {
        let make = || {
            let meta = RunMeta { seed: Some(7), ..Default::default() };
            let mut b = report_bundle("gas", vec![("r".into(), json!([1, 2]))], meta, level_flags(3)).unwrap();
            b.stamp(SystemTime::now());
            b
        };
        assert_eq!(make().without_timing().to_json(), make().without_timing().to_json());
        assert_eq!(make().flags[0].code, "potts-q-level-3");
        assert!(level_flags(2).is_empty());
    }
}
