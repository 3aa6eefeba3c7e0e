//! Corpus benchmark: raise → verify → optimize → metrics for every `.qasm`
//! file in a directory.
//!
//! Files are processed in parallel but reported in filename order, and
//! wall-clock timings are only included on request, so the JSON output of
//! two runs over the same corpus is byte-identical.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::{compute_metrics, ratio, CircuitMetrics};
use crate::optimize::{run_pipeline, OptOptions};
use crate::verify::{has_errors, verify_module};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default)]
pub struct BenchOptions {
    pub pipeline: Vec<String>,
    pub opt: OptOptions,
    /// Record per-stage wall-clock times (makes the report non-deterministic).
    pub timing: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct StageTimes {
    pub parse_ms: f64,
    pub raise_ms: f64,
    pub verify_ms: f64,
    pub optimize_ms: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchEntry {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub before: Option<CircuitMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub after: Option<CircuitMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<StageTimes>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchAggregate {
    pub files: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub total_gates_before: usize,
    pub total_gates_after: usize,
    /// Mean of the per-file ratios over successful files (0 when none).
    pub mean_ratio: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchReport {
    pub schema: u32,
    pub pipeline: Vec<String>,
    pub files: Vec<BenchEntry>,
    pub aggregate: BenchAggregate,
}

/// `.qasm` files directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "qasm"))
        .collect();
    v.sort();
    Ok(v)
}

pub fn bench_dir(dir: &Path, opts: &BenchOptions) -> std::io::Result<BenchReport> {
    let files = corpus_files(dir)?;
    let inputs: Vec<(String, Result<String, String>)> = files
        .iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (name, std::fs::read_to_string(p).map_err(|e| e.to_string()))
        })
        .collect();
    Ok(bench_sources(&inputs, opts))
}

/// Benchmarks in-memory sources; `Err` entries are recorded as failures.
pub fn bench_sources(inputs: &[(String, Result<String, String>)], opts: &BenchOptions) -> BenchReport {
    let entries: Vec<BenchEntry> = inputs
        .par_iter()
        .map(|(name, src)| match src {
            Ok(src) => bench_one(name, src, opts),
            Err(e) => failed(name, format!("read: {e}")),
        })
        .collect();
    let ok: Vec<&BenchEntry> = entries.iter().filter(|e| e.error.is_none()).collect();
    let gates = |f: fn(&BenchEntry) -> Option<&CircuitMetrics>| ok.iter().filter_map(|e| f(e)).map(|m| m.gate_count).sum();
    let aggregate = BenchAggregate {
        files: entries.len(),
        succeeded: ok.len(),
        failed: entries.len() - ok.len(),
        total_gates_before: gates(|e| e.before.as_ref()),
        total_gates_after: gates(|e| e.after.as_ref()),
        mean_ratio: if ok.is_empty() {
            0.0
        } else {
            ok.iter().filter_map(|e| e.ratio).sum::<f64>() / ok.len() as f64
        },
    };
    BenchReport {
        schema: SCHEMA_VERSION,
        pipeline: opts.pipeline.clone(),
        files: entries,
        aggregate,
    }
}

fn failed(name: &str, error: String) -> BenchEntry {
    BenchEntry {
        file: name.to_string(),
        error: Some(error),
        before: None,
        after: None,
        ratio: None,
        timing: None,
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn bench_one(name: &str, src: &str, opts: &BenchOptions) -> BenchEntry {
    let t = Instant::now();
    let prog = match crate::parse_qasm(src) {
        Ok(p) => p,
        Err(e) => return failed(name, format!("parse: {e}")),
    };
    let parse_ms = ms(t);
    let t = Instant::now();
    let module = match crate::raise(&prog) {
        Ok(m) => m,
        Err(e) => return failed(name, format!("raise: {e}")),
    };
    let raise_ms = ms(t);
    let t = Instant::now();
    match verify_module(&module) {
        Ok(d) if has_errors(&d) => return failed(name, format!("verify: {} error(s)", d.iter().filter(|x| x.is_error()).count())),
        Err(e) => return failed(name, format!("verify: {e}")),
        Ok(_) => {}
    }
    let verify_ms = ms(t);
    let t = Instant::now();
    let optimized = match run_pipeline(&module, &opts.pipeline, opts.opt) {
        Ok((m, _)) => m,
        Err(e) => return failed(name, format!("optimize: {e}")),
    };
    let optimize_ms = ms(t);
    let (before, after) = match (compute_metrics(&module), compute_metrics(&optimized)) {
        (Ok(b), Ok(a)) => (b, a),
        (Err(e), _) | (_, Err(e)) => return failed(name, format!("metrics: {e}")),
    };
    BenchEntry {
        file: name.to_string(),
        error: None,
        ratio: Some(ratio(before.gate_count, after.gate_count)),
        before: Some(before),
        after: Some(after),
        timing: opts.timing.then_some(StageTimes {
            parse_ms,
            raise_ms,
            verify_ms,
            optimize_ms,
        }),
    }
}

impl BenchReport {
    /// Fixed-width text table, one row per file plus a summary line.
    pub fn table(&self) -> String {
        let mut s = format!("{:<32} {:>8} {:>8} {:>8} {:>7} {:>7}\n", "file", "before", "after", "ratio", "depth0", "depth1");
        for e in &self.files {
            match (&e.error, &e.before, &e.after, e.ratio) {
                (None, Some(b), Some(a), Some(r)) => s.push_str(&format!(
                    "{:<32} {:>8} {:>8} {:>8.3} {:>7} {:>7}\n",
                    e.file, b.gate_count, a.gate_count, r, b.depth, a.depth
                )),
                (err, ..) => s.push_str(&format!("{:<32} error: {}\n", e.file, err.as_deref().unwrap_or("?"))),
            }
        }
        let a = &self.aggregate;
        s.push_str(&format!(
            "{} file(s), {} failed; gates {} -> {}; mean ratio {:.3}\n",
            a.files, a.failed, a.total_gates_before, a.total_gates_after, a.mean_ratio
        ));
        s
    }
}
