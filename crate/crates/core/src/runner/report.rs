use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Summary statistics of a residual sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

impl Stats {
    /// Nearest-rank quantiles; `None` for an empty sample.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
            sorted[rank - 1]
        };
        Some(Self {
            count: sorted.len(),
            max: *sorted.last().unwrap(),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p50: q(0.5),
            p90: q(0.9),
            p99: q(0.99),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// The probe could not run to completion.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPoint {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub value: f64,
    pub note: String,
}

/// File produced by a probe, written by [`emit`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Export {
    pub file: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub status: Status,
    pub error: Option<String>,
    /// Named residual statistics, in a fixed order per probe kind.
    pub stats: Vec<(String, Stats)>,
    pub tolerances: Vec<(String, f64)>,
    pub witnesses: Vec<WitnessPoint>,
    pub details: serde_json::Value,
    pub files: Vec<String>,
    #[serde(skip)]
    pub exports: Vec<Export>,
}

/// Wall-clock data, the only part of a report that varies between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub probe_wall_time_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub library_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub probes: Vec<ProbeReport>,
    pub timing: Timing,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &ProbeReport> {
        self.probes.iter().filter(|p| p.status != Status::Pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its timing block, for reproducibility checks.
    pub fn content_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}  seed={}  config={}", self.name, self.seed, &self.config_hash[..12.min(self.config_hash.len())])
            .unwrap();
        writeln!(out, "{:<32} {:<18} {:<6} {:>12}  tolerance", "probe", "kind", "status", "max").unwrap();
        for p in &self.probes {
            let max = p
                .stats
                .first()
                .map(|(_, s)| format!("{:.3e}", s.max))
                .unwrap_or_else(|| "-".into());
            let tol = p
                .tolerances
                .first()
                .map(|(k, v)| format!("{k}={v:e}"))
                .unwrap_or_default();
            let status = match p.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            writeln!(out, "{:<32} {:<18} {:<6} {:>12}  {}", p.name, p.kind, status, max, tol).unwrap();
            if let Some(e) = &p.error {
                writeln!(out, "    {e}").unwrap();
            }
        }
        let failed = self.failures().count();
        writeln!(out, "{} of {} probes passed", self.probes.len() - failed, self.probes.len()).unwrap();
        out
    }
}

/// Writes `report.json`, `summary.txt` and every exported file into `dir`.
pub fn emit(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("report.json");
    std::fs::write(&path, report.to_json() + "\n")?;
    written.push(path);
    let path = dir.join("summary.txt");
    std::fs::write(&path, report.summary())?;
    written.push(path);
    for p in &report.probes {
        for e in &p.exports {
            let path = dir.join(&e.file);
            std::fs::write(&path, &e.content)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = Stats::from_values(&v).unwrap();
        assert_eq!((s.max, s.p50, s.p90, s.p99), (100.0, 50.0, 90.0, 99.0));
        assert_eq!(s.mean, 50.5);
        assert!(Stats::from_values(&[]).is_none());
    }
}
