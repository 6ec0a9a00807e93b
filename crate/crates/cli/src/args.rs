//! Command-line flags and their resolution into a run plan.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use dasense_core::downlink::{Mode, ThresholdPolicy};
use dasense_core::engine::{Experiment, Protocol, ProtocolConfig};
use dasense_core::selection::Selector;

use crate::error::CliError;
use crate::preset::{base_config, preset, Axis, PresetName, Sweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn parse_selector(s: &str) -> Result<Selector, String> {
    Selector::from_name(s).ok_or_else(|| format!("unknown selector '{s}' (random, magnitude, corrnorm, oracle)"))
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    Protocol::from_name(s).ok_or_else(|| format!("unknown protocol '{s}' (das, das_ideal, rrs, oracle)"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::from_name(s).ok_or_else(|| format!("unknown mode '{s}' (waveform, gaussian)"))
}

fn parse_threshold(s: &str) -> Result<ThresholdPolicy, String> {
    ThresholdPolicy::from_name(s).ok_or_else(|| format!("unknown threshold policy '{s}' (scaled, map)"))
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    Experiment::from_name(s).ok_or_else(|| format!("unknown experiment '{s}' (sensing, downlink)"))
}

fn parse_gamma_u(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > -1.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("gamma-u must lie in the open interval (-1, 1), got {x}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a positive finite number, got {x}"))
    }
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a nonnegative finite number, got {x}"))
    }
}

fn parse_db(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite dB value, got {x}"))
    }
}

/// Simulate data-aided sensing over compressive random access.
///
/// A preset fixes every parameter of a published experiment; any explicit
/// flag overrides it. Overriding the preset's swept parameter turns the sweep
/// into a single point.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "dasense", version)]
pub struct Cli {
    #[arg(long, value_enum)]
    pub preset: Option<PresetName>,

    /// Number of nodes K.
    #[arg(long)]
    pub k: Option<usize>,
    /// Basis dimension M.
    #[arg(long)]
    pub m: Option<usize>,
    /// Sparsity S.
    #[arg(long)]
    pub s: Option<usize>,
    /// Nodes requested per round N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Signature length L.
    #[arg(long)]
    pub l: Option<usize>,
    /// Rounds after round 0.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Monte-Carlo repetitions.
    #[arg(long)]
    pub runs: Option<usize>,

    /// Scaled decision parameter, inside (-1, 1).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_gamma_u)]
    pub gamma_u: Option<f64>,
    /// Power-feasibility ratio in dB.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "omega", value_parser = parse_db)]
    pub omega_db: Option<f64>,
    /// Power-feasibility ratio, linear.
    #[arg(long, value_parser = parse_nonnegative)]
    pub omega: Option<f64>,
    /// AP transmit SNR in dB.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "snr", value_parser = parse_db)]
    pub snr_db: Option<f64>,
    /// AP transmit SNR, linear.
    #[arg(long, value_parser = parse_positive)]
    pub snr: Option<f64>,
    /// Receiver noise power N0.
    #[arg(long, value_parser = parse_positive)]
    pub noise_floor: Option<f64>,

    /// random, magnitude, corrnorm or oracle.
    #[arg(long, value_parser = parse_selector)]
    pub selector: Option<Selector>,
    /// Comma-separated list of das, das_ideal, rrs, oracle.
    #[arg(long, value_delimiter = ',', value_parser = parse_protocol)]
    pub protocol: Option<Vec<Protocol>>,
    /// waveform or gaussian.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// scaled or map.
    #[arg(long, value_parser = parse_threshold)]
    pub threshold: Option<ThresholdPolicy>,
    /// sensing or downlink.
    #[arg(long, value_parser = parse_experiment)]
    pub experiment: Option<Experiment>,
    /// Root seed; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use one scene for all runs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pin_scene: Option<bool>,

    /// Lasso weight as a fraction of the smallest weight giving a zero solution.
    #[arg(long, value_parser = parse_positive)]
    pub lambda_scale: Option<f64>,
    /// Stop once a full sweep moves no coefficient more than this.
    #[arg(long, value_parser = parse_positive)]
    pub tol: Option<f64>,
    /// Sweep limit per lasso solve.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Visit lasso coordinates in shuffled order.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub randomized_cd: Option<bool>,
    /// Debias support cutoff relative to the largest coefficient.
    #[arg(long, value_parser = parse_nonnegative)]
    pub support_threshold: Option<f64>,

    /// Output file; sweeps write `<stem>_<axis><value>.<ext>`. Standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the first run's scene as JSON.
    #[arg(long)]
    pub dump_scene: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Do not print the summary table.
    #[arg(long)]
    pub quiet: bool,
}

/// Fully resolved work order.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub preset: Option<PresetName>,
    pub config: ProtocolConfig,
    pub sweep: Option<Sweep>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub dump_scene: Option<PathBuf>,
    pub threads: Option<usize>,
    pub quiet: bool,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Cli {
    fn overrides(&self, axis: Axis) -> bool {
        match axis {
            Axis::N => self.n.is_some(),
            Axis::GammaU => self.gamma_u.is_some(),
            Axis::S => self.s.is_some(),
            Axis::K => self.k.is_some(),
        }
    }

    pub fn resolve(&self) -> Result<Invocation, CliError> {
        let (mut c, mut sweep) = match self.preset {
            Some(name) => {
                let p = preset(name);
                (p.config, p.sweep)
            }
            None => (base_config(), None),
        };
        if sweep.as_ref().is_some_and(|s| self.overrides(s.axis)) {
            sweep = None;
        }

        macro_rules! set {
            ($field:expr, $target:expr) => {
                if let Some(v) = $field.clone() {
                    $target = v;
                }
            };
        }
        set!(self.k, c.num_nodes);
        set!(self.m, c.basis_dim);
        set!(self.s, c.sparsity);
        set!(self.n, c.link.requested);
        set!(self.l, c.link.signature_len);
        set!(self.rounds, c.rounds);
        set!(self.runs, c.runs);
        set!(self.gamma_u, c.link.scaled_decision);
        set!(self.omega, c.link.omega);
        set!(self.omega_db.map(db_to_linear), c.link.omega);
        set!(self.snr, c.link.ap_snr);
        set!(self.snr_db.map(db_to_linear), c.link.ap_snr);
        set!(self.noise_floor, c.link.noise_floor);
        set!(self.selector, c.selector);
        set!(self.protocol, c.protocols);
        set!(self.mode, c.mode);
        set!(self.threshold, c.link.threshold);
        set!(self.experiment, c.experiment);
        set!(self.seed, c.seed);
        set!(self.pin_scene, c.pin_scene);
        set!(self.lambda_scale, c.solver.lambda_scale);
        set!(self.tol, c.solver.tol);
        set!(self.max_iter, c.solver.max_iter);
        set!(self.randomized_cd, c.solver.randomized);
        set!(self.support_threshold, c.solver.support_rel_threshold);

        match &sweep {
            Some(s) => {
                for (_, point) in s.points(&c) {
                    point.validate().map_err(CliError::Config)?;
                }
            }
            None => c.validate().map_err(CliError::Config)?,
        }
        if sweep.is_some() && self.out.is_none() {
            return Err(CliError::Usage(format!(
                "preset {} sweeps {}; pass --out to name the per-point files",
                self.preset.map_or("", PresetName::name),
                sweep.as_ref().map_or("", |s| s.axis.name()),
            )));
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        Ok(Invocation {
            preset: self.preset,
            config: c,
            sweep,
            out: self.out.clone(),
            format: self.format,
            dump_scene: self.dump_scene.clone(),
            threads: self.threads,
            quiet: self.quiet,
        })
    }
}

/// Parses `argv` (program name first) and resolves it.
pub fn parse_args<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    cli.resolve()
}

/// Flags that reproduce `config` exactly when parsed without a preset.
/// Floats use the shortest representation that round-trips.
pub fn render_args(config: &ProtocolConfig) -> Vec<String> {
    let protocols: Vec<&str> = config.protocols.iter().map(|p| p.name()).collect();
    let link = &config.link;
    let s = &config.solver;
    let pairs: Vec<(&str, String)> = vec![
        ("--k", config.num_nodes.to_string()),
        ("--m", config.basis_dim.to_string()),
        ("--s", config.sparsity.to_string()),
        ("--n", link.requested.to_string()),
        ("--l", link.signature_len.to_string()),
        ("--rounds", config.rounds.to_string()),
        ("--runs", config.runs.to_string()),
        ("--gamma-u", link.scaled_decision.to_string()),
        ("--omega", link.omega.to_string()),
        ("--snr", link.ap_snr.to_string()),
        ("--noise-floor", link.noise_floor.to_string()),
        ("--selector", config.selector.name().to_string()),
        ("--protocol", protocols.join(",")),
        ("--mode", config.mode.name().to_string()),
        ("--threshold", link.threshold.name().to_string()),
        ("--experiment", config.experiment.name().to_string()),
        ("--seed", config.seed.to_string()),
        ("--pin-scene", config.pin_scene.to_string()),
        ("--lambda-scale", s.lambda_scale.to_string()),
        ("--tol", s.tol.to_string()),
        ("--max-iter", s.max_iter.to_string()),
        ("--randomized-cd", s.randomized.to_string()),
        ("--support-threshold", s.support_rel_threshold.to_string()),
    ];
    pairs.into_iter().flat_map(|(k, v)| [k.to_string(), v]).collect()
}
