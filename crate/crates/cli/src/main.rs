//! `qssa` — command-line driver.
//!
//! Exit codes: 0 on success, 1 when the input is rejected (parse errors,
//! verifier errors, inequivalent programs, failed round trips), 2 on usage
//! errors such as unknown flags, unknown pass names or unreadable files.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use qssa::bench::{bench_dir, BenchOptions};
use qssa::ir::{parse_ir_with_locations, print_ir_with_lines};
use qssa::metrics::{compute_metrics, compute_qasm_metrics, optimization_ratio, CircuitMetrics};
use qssa::optimize::{parse_pipeline, run_pipeline, OptOptions, DEFAULT_PIPELINE};
use qssa::sim::{self, Distribution, SimError};
use qssa::verify::{has_errors, verify_module, Diagnostic};
use qssa::{lower, parse_qasm, print_ir, print_qasm, raise, Module, QasmProgram};

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "qssa", version, about = "SSA compiler toolkit for hybrid quantum-classical programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the primary output to this file instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    /// Machine-readable output (`"schema": 1`).
    #[arg(long, global = true)]
    json: bool,
    /// Comma-separated pass list: inline, unroll, peephole, gvn, dce.
    #[arg(short = 'p', long, global = true)]
    pipeline: Option<String>,
    /// Reserved: every computation is deterministic, the seed is ignored.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Allow DCE to delete measurements whose results are unused.
    #[arg(long, global = true)]
    aggressive_dce: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse a .qasm or .qssa file and print it back in canonical form.
    Parse { input: PathBuf },
    /// Raise OpenQASM to the SSA IR.
    Raise { input: PathBuf },
    /// Type and single-use verification.
    Verify { input: PathBuf },
    /// Run an optimization pipeline.
    Opt {
        input: PathBuf,
        /// Emit per-pass reports (to stderr).
        #[arg(long, value_enum)]
        report: Option<ReportFormat>,
    },
    /// Lower the IR back to OpenQASM.
    Lower { input: PathBuf },
    /// Exact measurement-outcome distribution.
    Sim { input: PathBuf },
    /// Check two programs for equivalence.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        /// Compare outcome distributions even for measurement-free programs.
        #[arg(long)]
        dist: bool,
        /// Tolerance: max-norm for unitaries, total variation for distributions.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Gate count, depth and histogram.
    Stats { input: PathBuf },
    /// Benchmark every .qasm file in a directory.
    Bench {
        dir: PathBuf,
        /// Include wall-clock stage timings (non-deterministic).
        #[arg(long)]
        timing: bool,
    },
    /// QASM → IR → optimize → QASM, checking every step.
    Roundtrip {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

/// Bad invocation: exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Input rejected: exit code 1, message already printed.
#[derive(Debug)]
struct Rejected;

impl fmt::Display for Rejected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("rejected")
    }
}

impl std::error::Error for Rejected {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Rejected>() => ExitCode::from(1),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("qssa: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("qssa: {e:#}");
            ExitCode::from(1)
        }
    }
}

enum Input {
    Qasm(QasmProgram),
    Ir(Module),
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn is_qasm(path: &Path, text: &str) -> bool {
    match path.extension().and_then(|e| e.to_str()) {
        Some("qasm") => true,
        Some("qssa") | Some("mlir") => false,
        _ => text.trim_start().starts_with("OPENQASM"),
    }
}

fn load(path: &Path) -> Result<Input> {
    let text = read(path)?;
    let name = path.display();
    if is_qasm(path, &text) {
        parse_qasm(&text).map(Input::Qasm).map_err(|e| {
            eprintln!("{name}:{e}");
            Rejected.into()
        })
    } else {
        parse_ir_with_locations(&text).map(|(m, _)| Input::Ir(m)).map_err(|e| {
            eprintln!("{name}:{e}");
            Rejected.into()
        })
    }
}

fn load_module(path: &Path) -> Result<Module> {
    match load(path)? {
        Input::Ir(m) => Ok(m),
        Input::Qasm(p) => raise(&p).map_err(|e| {
            eprintln!("{}: {e}", path.display());
            Rejected.into()
        }),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json(cli: &Cli, mut v: Json) -> Result<()> {
    if let Json::Object(m) = &mut v {
        m.insert("schema".into(), json!(SCHEMA));
    }
    emit(cli, &format!("{}\n", serde_json::to_string_pretty(&v)?))
}

fn pipeline(cli: &Cli) -> Result<Vec<String>> {
    match &cli.pipeline {
        Some(spec) => parse_pipeline(spec).map_err(|e| usage(e.to_string())),
        None => Ok(DEFAULT_PIPELINE.iter().map(|s| s.to_string()).collect()),
    }
}

fn opt_options(cli: &Cli) -> OptOptions {
    OptOptions {
        aggressive_dce: cli.aggressive_dce,
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Parse { input } => match load(input)? {
            Input::Qasm(p) if cli.json => emit_json(cli, json!({ "program": p })),
            Input::Qasm(p) => emit(cli, &print_qasm(&p)),
            Input::Ir(m) if cli.json => emit_json(
                cli,
                json!({
                    "functions": m.functions.iter().map(|f| json!({
                        "name": f.name,
                        "ops": f.body.op_count(),
                    })).collect::<Vec<_>>(),
                }),
            ),
            Input::Ir(m) => emit(cli, &print_ir(&m)),
        },
        Cmd::Raise { input } => {
            let m = load_module(input)?;
            emit(cli, &print_ir(&m))
        }
        Cmd::Verify { input } => verify_cmd(cli, input),
        Cmd::Opt { input, report } => {
            let passes = pipeline(cli)?;
            let m = load_module(input)?;
            let (out, reports) = run_pipeline(&m, &passes, opt_options(cli)).map_err(|e| usage(e.to_string()))?;
            match report {
                Some(ReportFormat::Json) => eprintln!(
                    "{}",
                    serde_json::to_string_pretty(&json!({ "schema": SCHEMA, "passes": reports }))?
                ),
                Some(ReportFormat::Text) => {
                    for r in &reports {
                        eprintln!("{:<10} {:>5} rewrites  {:>6} -> {:<6} ops", r.pass, r.rewrites, r.ops_before, r.ops_after);
                    }
                }
                None => {}
            }
            emit(cli, &print_ir(&out))
        }
        Cmd::Lower { input } => {
            let m = load_module(input)?;
            match lower(&m) {
                Ok(p) => emit(cli, &print_qasm(&p)),
                Err(e) => {
                    eprintln!("{}: {e}", input.display());
                    Err(Rejected.into())
                }
            }
        }
        Cmd::Sim { input } => {
            let d = match load(input)? {
                Input::Qasm(p) => sim::run_qasm_distribution(&p),
                Input::Ir(m) => sim::run_distribution(&m),
            }
            .map_err(|e| sim_failure(input, e))?;
            if cli.json {
                emit_json(cli, json!({ "distribution": d.outcomes }))
            } else {
                emit(cli, &d.to_lines())
            }
        }
        Cmd::Equiv { a, b, dist, tol } => equiv_cmd(cli, a, b, *dist, *tol),
        Cmd::Stats { input } => {
            let m = match load(input)? {
                Input::Qasm(p) => compute_qasm_metrics(&p),
                Input::Ir(m) => compute_metrics(&m).map_err(|e| {
                    eprintln!("{}: {e}", input.display());
                    anyhow::Error::from(Rejected)
                })?,
            };
            if cli.json {
                emit_json(cli, json!({ "metrics": m }))
            } else {
                emit(cli, &metrics_text(&m))
            }
        }
        Cmd::Bench { dir, timing } => {
            if !dir.is_dir() {
                return Err(usage(format!("{} is not a directory", dir.display())));
            }
            let opts = BenchOptions {
                pipeline: pipeline(cli)?,
                opt: opt_options(cli),
                timing: *timing,
            };
            let report = bench_dir(dir, &opts).with_context(|| format!("reading {}", dir.display()))?;
            if cli.json {
                emit(cli, &format!("{}\n", serde_json::to_string_pretty(&report)?))
            } else {
                emit(cli, &report.table())
            }
        }
        Cmd::Roundtrip { input, tol } => roundtrip_cmd(cli, input, *tol),
    }
}

fn sim_failure(path: &Path, e: SimError) -> anyhow::Error {
    eprintln!("{}: {e}", path.display());
    Rejected.into()
}

fn metrics_text(m: &CircuitMetrics) -> String {
    let mut s = format!("gate_count {}\ndepth {}\n", m.gate_count, m.depth);
    for (k, v) in &m.histogram {
        s.push_str(&format!("  {k} {v}\n"));
    }
    s
}

fn verify_cmd(cli: &Cli, input: &Path) -> Result<()> {
    let m = load_module(input)?;
    let diags = match verify_module(&m) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{}: {e}", input.display());
            return Err(Rejected.into());
        }
    };
    // Report lines of the file itself when it was IR, else of the printed IR.
    let text = read(input)?;
    let lines: std::collections::BTreeMap<_, _> = if is_qasm(input, &text) {
        print_ir_with_lines(&m).1
    } else {
        parse_ir_with_locations(&text)
            .map(|(_, src)| src.into_iter().map(|(k, (line, _))| (k, line)).collect())
            .unwrap_or_default()
    };
    let file = input.display().to_string();
    if cli.json {
        let items: Vec<Json> = diags.iter().map(|d| diag_json(d, &lines)).collect();
        emit_json(cli, json!({ "file": file, "ok": !has_errors(&diags), "diagnostics": items }))?;
    } else {
        let mut text = String::new();
        for d in &diags {
            text.push_str(&d.render(&file, &lines));
            text.push('\n');
        }
        if !has_errors(&diags) {
            text.push_str(&format!("{file}: ok\n"));
        }
        emit(cli, &text)?;
    }
    if has_errors(&diags) {
        Err(Rejected.into())
    } else {
        Ok(())
    }
}

fn diag_json(d: &Diagnostic, lines: &std::collections::BTreeMap<qssa::ir::OpLoc, usize>) -> Json {
    json!({
        "kind": d.kind,
        "severity": d.severity,
        "value": d.value.map(|v| v.to_string()),
        "lines": d.sites.iter().map(|s| lines.get(s).copied()).collect::<Vec<_>>(),
        "message": d.message,
    })
}

enum Semantics {
    Unitary(qssa::linalg::CMatrix),
    Dist(Distribution),
}

fn semantics(input: &Input, force_dist: bool) -> Result<Semantics, SimError> {
    if !force_dist {
        let u = match input {
            Input::Qasm(p) => sim::qasm_circuit_unitary(p),
            Input::Ir(m) => sim::circuit_unitary(m),
        };
        match u {
            Ok(u) => return Ok(Semantics::Unitary(u)),
            Err(SimError::HasMeasurement) => {}
            Err(e) => return Err(e),
        }
    }
    match input {
        Input::Qasm(p) => sim::run_qasm_distribution(p),
        Input::Ir(m) => sim::run_distribution(m),
    }
    .map(Semantics::Dist)
}

fn equiv_cmd(cli: &Cli, a: &Path, b: &Path, dist: bool, tol: f64) -> Result<()> {
    let (ia, ib) = (load(a)?, load(b)?);
    let mut force = dist;
    let (sa, sb) = loop {
        let sa = semantics(&ia, force).map_err(|e| sim_failure(a, e))?;
        let sb = semantics(&ib, force).map_err(|e| sim_failure(b, e))?;
        match (&sa, &sb) {
            (Semantics::Unitary(_), Semantics::Dist(_)) | (Semantics::Dist(_), Semantics::Unitary(_)) if !force => force = true,
            _ => break (sa, sb),
        }
    };
    let (mode, measure, equal) = match (sa, sb) {
        (Semantics::Unitary(x), Semantics::Unitary(y)) => {
            let eq = sim::equiv_up_to_global_phase(&x, &y, tol).unwrap_or(false);
            let diff = qssa::linalg::phase_between(&x, &y)
                .filter(|_| x.dim() == y.dim())
                .map(|ph| x.scale(ph).max_abs_diff(&y));
            ("unitary", diff, eq)
        }
        (Semantics::Dist(x), Semantics::Dist(y)) => {
            let tv = x.tv_distance(&y);
            ("distribution", Some(tv), tv <= tol)
        }
        _ => unreachable!("both sides use the same semantics"),
    };
    if cli.json {
        emit_json(cli, json!({ "equivalent": equal, "mode": mode, "distance": measure, "tolerance": tol }))?;
    } else {
        let d = measure.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "n/a".into());
        emit(cli, &format!("{} ({mode}, distance {d}, tolerance {tol:e})\n", if equal { "equivalent" } else { "NOT equivalent" }))?;
    }
    if equal {
        Ok(())
    } else {
        Err(Rejected.into())
    }
}

fn roundtrip_cmd(cli: &Cli, input: &Path, tol: f64) -> Result<()> {
    let text = read(input)?;
    let prog = match parse_qasm(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}:{e}", input.display());
            return Err(Rejected.into());
        }
    };
    let passes = pipeline(cli)?;
    let mut checks: Vec<(&str, Result<String, String>)> = Vec::new();
    let printed = print_qasm(&prog);
    checks.push((
        "qasm parse∘print",
        match parse_qasm(&printed) {
            Ok(p) if p == prog => Ok("exact".into()),
            Ok(_) => Err("reparsed program differs".into()),
            Err(e) => Err(e.to_string()),
        },
    ));
    let raised = raise(&prog).map_err(|e| e.to_string());
    let mut lowered_prog = None;
    let mut gate_counts = None;
    match &raised {
        Err(e) => checks.push(("raise", Err(e.clone()))),
        Ok(m) => {
            let ir = print_ir(m);
            checks.push((
                "ir parse∘print",
                match qssa::parse_ir(&ir) {
                    Ok(m2) if &m2 == m => Ok("exact".into()),
                    Ok(_) => Err("reparsed module differs".into()),
                    Err(e) => Err(e.to_string()),
                },
            ));
            checks.push((
                "verify",
                match verify_module(m) {
                    Ok(d) if !has_errors(&d) => Ok("clean".into()),
                    Ok(d) => Err(format!("{} error(s)", d.iter().filter(|x| x.is_error()).count())),
                    Err(e) => Err(e.to_string()),
                },
            ));
            match run_pipeline(m, &passes, opt_options(cli)) {
                Err(e) => return Err(usage(e.to_string())),
                Ok((o, _)) => {
                    if let (Ok(b), Ok(a)) = (compute_metrics(m), compute_metrics(&o)) {
                        gate_counts = Some((b, a));
                    }
                    match lower(&o) {
                        Ok(l) => {
                            checks.push(("lower", Ok(format!("{} statement(s)", l.statements.len()))));
                            lowered_prog = Some(l);
                        }
                        Err(e) => checks.push(("lower", Err(e.to_string()))),
                    }
                }
            }
        }
    }
    if let Some(l) = &lowered_prog {
        let reparsed = parse_qasm(&print_qasm(l));
        checks.push((
            "lowered output re-parses",
            reparsed.as_ref().map(|_| "ok".into()).map_err(|e| e.to_string()),
        ));
        checks.push((
            "semantics",
            match (sim::run_qasm_distribution(&prog), sim::run_qasm_distribution(l)) {
                (Ok(x), Ok(y)) => {
                    let tv = x.tv_distance(&y);
                    if tv <= tol {
                        Ok(format!("TV {tv:.3e}"))
                    } else {
                        Err(format!("TV {tv:.3e} exceeds {tol:e}"))
                    }
                }
                (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
            },
        ));
    }
    let ok = checks.iter().all(|(_, r)| r.is_ok());
    if cli.json {
        let items: Vec<Json> = checks
            .iter()
            .map(|(name, r)| match r {
                Ok(d) => json!({ "check": name, "ok": true, "detail": d }),
                Err(d) => json!({ "check": name, "ok": false, "detail": d }),
            })
            .collect();
        let mut v = json!({ "file": input.display().to_string(), "ok": ok, "checks": items });
        if let Some((b, a)) = &gate_counts {
            v["gates_before"] = json!(b.gate_count);
            v["gates_after"] = json!(a.gate_count);
            v["ratio"] = json!(optimization_ratio(b, a));
        }
        emit_json(cli, v)?;
    } else {
        let mut s = String::new();
        for (name, r) in &checks {
            match r {
                Ok(d) => s.push_str(&format!("ok   {name}: {d}\n")),
                Err(d) => s.push_str(&format!("FAIL {name}: {d}\n")),
            }
        }
        if let Some((b, a)) = &gate_counts {
            s.push_str(&format!(
                "gates {} -> {} (ratio {:.3})\n",
                b.gate_count,
                a.gate_count,
                optimization_ratio(b, a)
            ));
        }
        emit(cli, &s)?;
    }
    if ok {
        Ok(())
    } else {
        Err(Rejected.into())
    }
}
