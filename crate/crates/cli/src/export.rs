//! Trace and scene files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dasense_core::engine::{Protocol, ProtocolConfig, RoundAggregate, RunFlags, Trace};
use dasense_core::scene::Scene;
use serde::{Deserialize, Serialize};

use crate::args::{render_args, Format};
use crate::error::CliError;
use crate::preset::Axis;

pub const CSV_HEADER: &str = "run,round,protocol,requested,realized,md,fa,cra_success,acquired_total,sq_error";

/// `printf("%.12g")`.
pub fn format_g12(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    } else {
        trim_fraction(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(trace: &Trace, mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for (run, r) in trace.records() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            run.run,
            r.round,
            run.protocol.name(),
            r.requested,
            r.realized,
            r.md,
            r.fa,
            r.cra_success,
            r.acquired_total,
            format_g12(r.sq_error),
        )?;
    }
    w.flush()
}

pub fn csv_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_csv(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: Axis,
    pub value: f64,
}

#[derive(Serialize)]
struct JsonRecord {
    run: usize,
    round: usize,
    protocol: Protocol,
    requested: usize,
    realized: usize,
    md: usize,
    fa: usize,
    cra_success: bool,
    acquired_total: usize,
    sq_error: f64,
}

#[derive(Serialize)]
struct JsonRun {
    run: usize,
    protocol: Protocol,
    scene_seed: u64,
    flags: RunFlags,
}

#[derive(Serialize)]
struct JsonTrace<'a> {
    config: &'a ProtocolConfig,
    command: String,
    sweep_point: Option<SweepPoint>,
    records: Vec<JsonRecord>,
    runs: Vec<JsonRun>,
    aggregates: Vec<RoundAggregate>,
}

/// Resolved config plus the flags that reproduce it.
#[derive(Serialize)]
struct ConfigFile<'a> {
    config: &'a ProtocolConfig,
    command: String,
    sweep_point: Option<SweepPoint>,
}

fn command_line(config: &ProtocolConfig) -> String {
    std::iter::once("dasense".to_string()).chain(render_args(config)).collect::<Vec<_>>().join(" ")
}

pub fn write_json<W: Write>(trace: &Trace, sweep_point: Option<SweepPoint>, mut w: W) -> io::Result<()> {
    let doc = JsonTrace {
        config: &trace.config,
        command: command_line(&trace.config),
        sweep_point,
        records: trace
            .records()
            .map(|(run, r)| JsonRecord {
                run: run.run,
                round: r.round,
                protocol: run.protocol,
                requested: r.requested,
                realized: r.realized,
                md: r.md,
                fa: r.fa,
                cra_success: r.cra_success,
                acquired_total: r.acquired_total,
                sq_error: r.sq_error,
            })
            .collect(),
        runs: trace
            .runs
            .iter()
            .map(|r| JsonRun { run: r.run, protocol: r.protocol, scene_seed: r.scene_seed, flags: r.flags })
            .collect(),
        aggregates: trace.aggregates(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()
}

/// Path of the config written next to a CSV trace.
pub fn config_sidecar(path: &Path) -> PathBuf {
    path.with_extension("config.json")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Writes `trace` to `path`. CSV traces get a `.config.json` sidecar so every
/// file can be regenerated.
pub fn export_trace(
    trace: &Trace,
    format: Format,
    path: &Path,
    sweep_point: Option<SweepPoint>,
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            write_csv(trace, create(path)?).map_err(|e| CliError::io(path, e))?;
            let side = config_sidecar(path);
            let doc = ConfigFile { config: &trace.config, command: command_line(&trace.config), sweep_point };
            let mut w = create(&side)?;
            serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::from).map_err(|e| CliError::io(&side, e))?;
            writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&side, e))
        }
        Format::Json => write_json(trace, sweep_point, create(path)?).map_err(|e| CliError::io(path, e)),
    }
}

/// `stem_<axis><value>.<ext>` next to `out`.
pub fn sweep_path(out: &Path, axis: Axis, value: f64, format: Format) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or(format.extension());
    out.with_file_name(format!("{stem}_{}{value}.{ext}", axis.name()))
}

/// Discrete description of a scene; the basis and field are rebuilt on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SceneFile {
    pub K: usize,
    pub M: usize,
    pub S: usize,
    pub seed: u64,
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
    pub basis_rows: Vec<usize>,
}

impl From<&Scene> for SceneFile {
    fn from(s: &Scene) -> Self {
        SceneFile {
            K: s.num_nodes,
            M: s.basis_dim,
            S: s.sparsity,
            seed: s.seed,
            support: s.support.clone(),
            signs: s.signs.clone(),
            basis_rows: s.basis_rows.clone(),
        }
    }
}

impl SceneFile {
    pub fn to_scene(&self) -> Result<Scene, CliError> {
        if self.support.len() != self.S {
            return Err(CliError::Usage(format!(
                "scene lists {} support entries for S = {}",
                self.support.len(),
                self.S
            )));
        }
        Ok(Scene::from_parts(
            self.K,
            self.M,
            self.seed,
            self.basis_rows.clone(),
            self.support.clone(),
            self.signs.clone(),
        )?)
    }
}

pub fn write_scene(scene: &Scene, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &SceneFile::from(scene))
        .map_err(io::Error::from)
        .map_err(|e| CliError::io(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_scene(path: &Path) -> Result<Scene, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let file: SceneFile = serde_json::from_reader(io::BufReader::new(f))?;
    file.to_scene()
}
