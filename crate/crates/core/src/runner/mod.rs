//! Declarative experiments: TOML in, JSON/CSV reports out.

mod config;
mod probes;
mod report;
mod suites;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

pub use config::{
    load_experiment, parse_experiment, sha256_hex, Bounds, ConformalFieldArgs,
    ConformalMapArgs, ConservationArgs, EssentialArgs, ExperimentSpec, GeodesicArgs, Grid, HomogeneityArgs, LemmaArgs,
    NullGeodesicsArgs, OutputSpec, ProbeKind, ProbeSpec, SprayRelationArgs, WeylArgs,
};
pub use probes::grid_points;
pub use report::{emit, Export, ProbeReport, Report, Stats, Status, Timing, WitnessPoint};
pub use suites::{suite, SUITES};

use crate::error::Result;

fn run_one(spec: &ExperimentSpec, index: usize) -> (ProbeReport, f64) {
    let start = Instant::now();
    let report = catch_unwind(AssertUnwindSafe(|| probes::run_probe(spec, index))).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "probe panicked".into());
        let probe = &spec.probes[index];
        ProbeReport {
            name: probe.name.clone(),
            kind: probe.kind.name().into(),
            seed: spec.probe_seed(index),
            status: Status::Error,
            error: Some(format!("panic: {msg}")),
            stats: Vec::new(),
            tolerances: Vec::new(),
            witnesses: Vec::new(),
            details: serde_json::Value::Null,
            files: Vec::new(),
            exports: Vec::new(),
        }
    });
    (report, start.elapsed().as_secs_f64() * 1e3)
}

/// Runs every probe in declared order; a failing probe does not stop the
/// others. `jobs` bounds the worker threads, `None` uses all cores.
pub fn run(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<Report> {
    let started_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| crate::error::Error::Io(format!("thread pool: {e}")))?;
    let results: Vec<(ProbeReport, f64)> =
        pool.install(|| (0..spec.probes.len()).into_par_iter().map(|i| run_one(spec, i)).collect());
    let (probes, times): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(Report {
        name: spec.name.clone(),
        library_version: crate::VERSION.to_string(),
        config_hash: spec.config_hash.clone(),
        seed: spec.seed,
        passed: probes.iter().all(|p| p.status == Status::Pass),
        probes,
        timing: Timing {
            started_unix_ms,
            probe_wall_time_ms: times,
        },
    })
}
