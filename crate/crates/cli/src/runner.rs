//! Parallel Monte-Carlo execution and the top-level command.

use std::io::{self, Write};

use dasense_core::engine::{run_single, ProtocolConfig, RunContext, Trace};
use rayon::prelude::*;

use crate::args::{Format, Invocation};
use crate::error::CliError;
use crate::export::{self, SweepPoint};

/// Runs every repetition on the rayon pool. Results are collected in run
/// order, so the trace equals the sequential one.
pub fn run_parallel(config: &ProtocolConfig) -> Result<Trace, CliError> {
    config.validate().map_err(CliError::Config)?;
    let per_run: Vec<_> =
        (0..config.runs).into_par_iter().map(|run| run_single(config, run)).collect::<Result<_, _>>()?;
    Ok(Trace { config: config.clone(), runs: per_run.into_iter().flatten().collect() })
}

pub fn run_with_threads(config: &ProtocolConfig, threads: Option<usize>) -> Result<Trace, CliError> {
    match threads {
        None => run_parallel(config),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| run_parallel(config))
        }
    }
}

/// True when every run hit at least one CRA failure.
pub fn all_runs_overloaded(trace: &Trace) -> bool {
    !trace.runs.is_empty() && trace.runs.iter().all(|r| r.flags.cra_failures > 0)
}

pub fn write_summary<W: Write>(trace: &Trace, point: Option<SweepPoint>, mut w: W) -> io::Result<()> {
    if let Some(p) = point {
        writeln!(w, "# {} = {}", p.axis.name(), p.value)?;
    }
    writeln!(
        w,
        "{:<10} {:>5} {:>6} {:>9} {:>9} {:>8} {:>8} {:>7} {:>9} {:>13}",
        "protocol", "round", "runs", "requested", "realized", "md", "fa", "cra_ok", "acquired", "mse"
    )?;
    for a in trace.aggregates() {
        writeln!(
            w,
            "{:<10} {:>5} {:>6} {:>9.2} {:>9.2} {:>8.2} {:>8.2} {:>7.3} {:>9.2} {:>13.6e}",
            a.protocol.name(),
            a.round,
            a.count,
            a.mean_requested,
            a.mean_realized,
            a.mean_md,
            a.mean_fa,
            a.cra_success_rate,
            a.mean_acquired,
            a.mean_sq_error
        )?;
    }
    Ok(())
}

/// Process exit status of a completed invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some sweep point had a CRA failure in every run.
    Overloaded,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Overloaded => 3,
        }
    }
}

pub fn execute(inv: &Invocation) -> Result<Status, CliError> {
    if let Some(path) = &inv.dump_scene {
        let ctx = RunContext::new(&inv.config, 0)?;
        export::write_scene(&ctx.scene, path)?;
    }
    let points: Vec<(Option<SweepPoint>, ProtocolConfig)> = match &inv.sweep {
        Some(s) => {
            s.points(&inv.config).into_iter().map(|(value, c)| (Some(SweepPoint { axis: s.axis, value }), c)).collect()
        }
        None => vec![(None, inv.config.clone())],
    };
    let mut status = Status::Ok;
    for (point, config) in points {
        let trace = run_with_threads(&config, inv.threads)?;
        if all_runs_overloaded(&trace) {
            status = Status::Overloaded;
        }
        match (&inv.out, point) {
            (Some(out), Some(p)) => {
                let path = export::sweep_path(out, p.axis, p.value, inv.format);
                export::export_trace(&trace, inv.format, &path, point)?;
            }
            (Some(out), None) => export::export_trace(&trace, inv.format, out, None)?,
            (None, _) => {
                let stdout = io::stdout().lock();
                let res = match inv.format {
                    Format::Csv => export::write_csv(&trace, stdout),
                    Format::Json => export::write_json(&trace, point, stdout),
                };
                res.map_err(|e| CliError::io("<stdout>", e))?;
            }
        }
        if !inv.quiet {
            write_summary(&trace, point, io::stderr().lock()).map_err(|e| CliError::io("<stderr>", e))?;
        }
    }
    Ok(status)
}
