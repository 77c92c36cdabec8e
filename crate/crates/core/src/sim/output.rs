use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::compare::{compare_now, ComparisonRow};
use super::scenario::Scenario;
use super::svg::Snapshot;
use super::world::{Simulation, StepMetrics};
use super::SimError;
use crate::cbba::CbbaMessage;
use crate::exec::Execution;
use crate::oracle::OracleLimits;

#[derive(Serialize)]
struct MetricsRecord {
    t: u64,
    total_utility: f64,
    coverage_main: f64,
    coverage_optional: f64,
    mean_load: f64,
    conflicts: usize,
}

#[derive(Serialize)]
struct ComparisonRecord {
    t: u64,
    dec_utility: f64,
    central_p1: f64,
    central_p2: f64,
    ratio_p1: f64,
    ratio_p2: f64,
    cov_dec: f64,
    cov_central: f64,
    load_dec: f64,
    load_central: f64,
}

pub fn write_metrics_csv<W: Write>(out: W, metrics: &[StepMetrics]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for m in metrics {
        w.serialize(MetricsRecord {
            t: m.t,
            total_utility: m.total_utility,
            coverage_main: m.coverage_main,
            coverage_optional: m.coverage_optional,
            mean_load: m.mean_load,
            conflicts: m.conflicts,
        })?;
    }
    if metrics.is_empty() {
        w.write_record(["t", "total_utility", "coverage_main", "coverage_optional", "mean_load", "conflicts"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(ComparisonRecord {
            t: r.t,
            dec_utility: r.dec_utility,
            central_p1: r.central_p1,
            central_p2: r.central_p2,
            ratio_p1: r.ratio_p1,
            ratio_p2: r.ratio_p2,
            cov_dec: r.cov_dec,
            cov_central: r.cov_central,
            load_dec: r.load_dec,
            load_central: r.load_central,
        })?;
    }
    if rows.is_empty() {
        w.write_record([
            "t",
            "dec_utility",
            "central_p1",
            "central_p2",
            "ratio_p1",
            "ratio_p2",
            "cov_dec",
            "cov_central",
            "load_dec",
            "load_central",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON message per line.
pub fn write_trace<W: Write>(mut out: W, trace: &[CbbaMessage]) -> Result<(), SimError> {
    for msg in trace {
        serde_json::to_writer(&mut out, msg)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Compare with the centralized optima every this many steps; 0 never.
    pub compare_every: u64,
    /// Write an SVG every this many steps; 0 never.
    pub snapshot_every: u64,
    pub trace: bool,
    pub limits: OracleLimits,
    pub exec: Execution,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            compare_every: 10,
            snapshot_every: 0,
            trace: false,
            limits: OracleLimits::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub metrics: Vec<StepMetrics>,
    pub comparison: Vec<ComparisonRow>,
    pub files: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>, SimError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs `scenario` to the end and writes `metrics.csv`, plus
/// `comparison.csv`, `trace.jsonl` and `snapshot_<t>.svg` as requested.
pub fn run_to_dir(scenario: Scenario, options: &RunOptions) -> Result<RunSummary, SimError> {
    std::fs::create_dir_all(&options.out_dir)?;
    let mut sim = Simulation::new(scenario, options.exec)?;
    let steps = sim.scenario().steps;
    let mut metrics = Vec::new();
    let mut comparison = Vec::new();
    let mut files = Vec::new();
    let trace_path = options.out_dir.join("trace.jsonl");
    let mut trace = if options.trace {
        Some(create(&trace_path)?)
    } else {
        None
    };
    for t in 0..steps {
        let (m, sent) = sim.step()?;
        metrics.push(m);
        if let Some(w) = trace.as_mut() {
            write_trace(&mut *w, &sent)?;
        }
        if options.compare_every > 0 && t % options.compare_every == 0 {
            comparison.push(compare_now(&sim, options.limits, options.exec)?);
        }
        if options.snapshot_every > 0 && t % options.snapshot_every == 0 {
            let path = options.out_dir.join(format!("snapshot_{t}.svg"));
            Snapshot::from_simulation(&sim).write(&path)?;
            files.push(path);
        }
    }
    let metrics_path = options.out_dir.join("metrics.csv");
    write_metrics_csv(create(&metrics_path)?, &metrics)?;
    files.push(metrics_path);
    if options.compare_every > 0 {
        let path = options.out_dir.join("comparison.csv");
        write_comparison_csv(create(&path)?, &comparison)?;
        files.push(path);
    }
    if let Some(mut w) = trace {
        w.flush()?;
        files.push(trace_path);
    }
    Ok(RunSummary {
        steps,
        metrics,
        comparison,
        files,
    })
}
