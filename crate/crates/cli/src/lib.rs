//! Driver behind the `blackboard` binary: parse a program, validate the
//! selected analyses, solve, and write the results.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use blackboard::trace::write_trace;
use blackboard::{RegistryError, SchedulerPolicy, SolverConfig};
use blackboard_analyses::{ConfigError, Configuration};
use blackboard_ir::parse_program;
use blackboard_oracle::naive_solve;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_CONFIGURATION: i32 = 1;
pub const EXIT_PARSE_ERROR: i32 = 2;
pub const EXIT_ORACLE_MISMATCH: i32 = 3;
pub const EXIT_FATAL: i32 = 4;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub program_path: PathBuf,
    pub analyses: Vec<String>,
    pub scheduler: SchedulerPolicy,
    pub workers: usize,
    pub check_monotonicity: bool,
    pub oracle_compare: bool,
    /// Results go to standard output when absent.
    pub output_path: Option<PathBuf>,
    pub trace_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(program_path: impl Into<PathBuf>, analyses: &[&str]) -> Self {
        Self {
            program_path: program_path.into(),
            analyses: analyses.iter().map(|s| s.to_string()).collect(),
            scheduler: SchedulerPolicy::Fifo,
            workers: 1,
            check_monotonicity: false,
            oracle_compare: false,
            output_path: None,
            trace_path: None,
        }
    }
}

/// Name of the scheduling constraint a registry error violates.
pub fn constraint_name(e: &RegistryError) -> &'static str {
    match e {
        RegistryError::ConflictingDerivers { .. } => "ConflictingDerivers",
        RegistryError::DirectionMismatch { .. } => "DirectionMismatch",
        RegistryError::SuppressedCycle { .. } => "SuppressedCycle",
        RegistryError::UnknownKind(_) => "UnknownKind",
        RegistryError::NothingDerived(_) => "NothingDerived",
        RegistryError::DuplicateAnalysis(_) => "DuplicateAnalysis",
        RegistryError::UnderivedTrigger { .. } => "UnderivedTrigger",
    }
}

/// Runs one configuration. Results go to the output path (or `stdout`);
/// diagnostics and the timing summary go to `stderr`. Returns the exit code.
pub fn run(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match run_inner(config, stdout, stderr) {
        Ok(code) => code,
        Err((code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

type Failure = (i32, String);

fn fatal(e: impl std::fmt::Display) -> Failure {
    (EXIT_FATAL, e.to_string())
}

fn run_inner(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let started = Instant::now();
    let path = config.program_path.display();
    let text = fs::read_to_string(&config.program_path).map_err(|e| fatal(format!("cannot read {path}: {e}")))?;
    let program = parse_program(&text).map_err(|e| (EXIT_PARSE_ERROR, format!("{path}: {e}")))?;
    let program = Arc::new(program);
    let parsed = started.elapsed();

    let analyses: Vec<&str> = config
        .analyses
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect();
    let configuration = Configuration::new(program.clone(), &analyses).map_err(|e| {
        let msg = match &e {
            ConfigError::Registry(r) => format!("invalid configuration ({}): {r}", constraint_name(r)),
            other => format!("invalid configuration: {other}"),
        };
        (EXIT_INVALID_CONFIGURATION, msg)
    })?;

    let mut solver = SolverConfig::default()
        .with_policy(config.scheduler)
        .with_workers(config.workers.max(1));
    if config.check_monotonicity {
        solver = solver.checked();
    }
    if config.trace_path.is_some() {
        solver = solver.traced();
    }
    let store = configuration.solve(&solver).map_err(fatal)?;
    let document = store.report();
    let json = document.to_json();
    match &config.output_path {
        Some(out) => fs::write(out, &json).map_err(|e| fatal(format!("cannot write {}: {e}", out.display())))?,
        None => stdout.write_all(json.as_bytes()).map_err(fatal)?,
    }
    if let Some(trace) = &config.trace_path {
        let file = fs::File::create(trace).map_err(|e| fatal(format!("cannot write {}: {e}", trace.display())))?;
        write_trace(store.trace(), std::io::BufWriter::new(file)).map_err(fatal)?;
    }

    let _ = writeln!(stderr, "parsed {} classes, {} methods in {:.3} ms", program.classes().len(), program.method_count(), parsed.as_secs_f64() * 1e3);
    let _ = writeln!(stderr, "scheduler {}, {} worker(s), analyses {}", config.scheduler, config.workers, analyses.join(","));
    let _ = writeln!(stderr, "{}", store.stats());
    let _ = writeln!(stderr, "{} properties", store.len());

    if config.oracle_compare {
        let t = Instant::now();
        let oracle = naive_solve(&program, &analyses).map_err(fatal)?;
        let diff = document.diff(&oracle.report());
        let _ = writeln!(stderr, "oracle compared in {:.3} ms", t.elapsed().as_secs_f64() * 1e3);
        if !diff.is_empty() {
            let _ = writeln!(stderr, "oracle mismatch on {} properties (solver vs oracle):", diff.len());
            for line in &diff {
                let _ = writeln!(stderr, "  {line}");
            }
            return Ok(EXIT_ORACLE_MISMATCH);
        }
        let _ = writeln!(stderr, "oracle agrees");
    }
    Ok(EXIT_OK)
}
