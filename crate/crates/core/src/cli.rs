//! Command-line front end: TOML experiment configuration, sweep
//! execution, and reproducible CSV / JSON-lines artifacts.
//!
//! Every output file is self-describing: `#`-prefixed header lines echo
//! the tool version, the resolved configuration, and the master seed,
//! so the file alone suffices to rerun the experiment.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::channel::{cir_to_frequency, MeasuredCir, OfdmParams};
use crate::error::{Error, Result};
use crate::receiver::{ReceiverConfig, Scheme};
use crate::sim::{ber_sweep, energy_contribution_table, SimConfig, SimRecord};

pub const CSV_COLUMNS: &str = "scheme,snr_db,sigma_u,relay_count,outer_iters,decode_iters,\
refinement,cer_db,frames,bits,bit_errors,frame_errors,ber,fer,wall_time_s";

#[derive(Debug, Parser)]
#[command(
    name = "pncrelay",
    version,
    about = "Relay-side iterative receiver simulator for network-coded underwater acoustic OFDM"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte-Carlo BER sweep over the configured grid.
    BerSweep(BerSweepArgs),
    /// Estimate the banded channel energy-contribution table.
    EnergyTable(EnergyTableArgs),
    /// Convert a measured time-varying CIR file to a frequency-domain
    /// coupling matrix.
    CirConvert(CirConvertArgs),
}

#[derive(Debug, Args)]
pub struct BerSweepArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the configured master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the configured frames per grid point.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Worker thread count (defaults to all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_parser = ["csv", "jsonl"], default_value = "csv")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct EnergyTableArgs {
    /// Velocity deviations sigma_u in m/s (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5, 1.0, 1.5])]
    pub sigma_u: Vec<f64>,
    /// Band depths D (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0usize, 1, 2])]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = 5000)]
    pub realizations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CirConvertArgs {
    /// Measured CIR input file (binary, see README for the layout).
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV of coupling-matrix entries (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Configuration file
// ---------------------------------------------------------------------------

/// On-disk experiment configuration. Unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub master_seed: u64,
    pub frames_per_point: usize,
    pub snr_grid_db: Vec<f64>,
    pub sigma_u_grid: Vec<f64>,
    pub relay_counts: Vec<usize>,
    pub cer_db: Option<f64>,
    pub code_seed: u64,
    pub interleaver_seed: u64,
    pub ofdm: OfdmSection,
    pub receiver: ReceiverSection,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            master_seed: d.master_seed,
            frames_per_point: d.frames_per_point,
            snr_grid_db: d.snr_grid_db,
            sigma_u_grid: d.sigma_u_grid,
            relay_counts: d.relay_counts,
            cer_db: None,
            code_seed: d.code_seed,
            interleaver_seed: d.interleaver_seed,
            ofdm: OfdmSection::default(),
            receiver: ReceiverSection::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmSection {
    pub carrier_freq_hz: f64,
    pub sample_rate_hz: f64,
    pub fft_size: usize,
    pub cp_duration_s: f64,
    pub num_subcarriers: usize,
}

impl Default for OfdmSection {
    fn default() -> Self {
        let d = OfdmParams::default_sim();
        Self {
            carrier_freq_hz: d.carrier_freq_hz,
            sample_rate_hz: d.sample_rate_hz,
            fft_size: d.fft_size,
            cp_duration_s: d.cp_duration_s,
            num_subcarriers: d.num_subcarriers,
        }
    }
}

impl OfdmSection {
    fn to_params(&self) -> Result<OfdmParams> {
        OfdmParams::new(
            self.carrier_freq_hz,
            self.fft_size as f64 / self.sample_rate_hz,
            self.cp_duration_s,
            self.sample_rate_hz,
            self.fft_size,
            self.num_subcarriers,
            1,
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverSection {
    /// "aca-fgd", "sm-lmmse", or "fixed-d".
    pub scheme: String,
    /// Constant depth used when `scheme = "fixed-d"`.
    pub fixed_depth: usize,
    pub outer_iterations: usize,
    pub decode_iterations: usize,
    pub refinement: bool,
    pub eta: f64,
    pub reward: f64,
    pub penalty: f64,
    pub early_exit: bool,
    pub sweeps: usize,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        let d = ReceiverConfig::default();
        Self {
            scheme: "aca-fgd".into(),
            fixed_depth: 1,
            outer_iterations: d.outer_iterations,
            decode_iterations: d.decode_iterations,
            refinement: d.refinement_enabled,
            eta: d.eta,
            reward: d.reward,
            penalty: d.penalty,
            early_exit: d.early_exit_on_zero_syndrome,
            sweeps: d.sweeps,
        }
    }
}

impl ReceiverSection {
    fn to_config(&self) -> Result<ReceiverConfig> {
        let scheme = match self.scheme.as_str() {
            "aca-fgd" => Scheme::AcaFgd,
            "sm-lmmse" => Scheme::SmLmmse,
            "fixed-d" => Scheme::FixedD(self.fixed_depth),
            other => {
                return Err(Error::InvalidParam {
                    name: "receiver.scheme",
                    reason: format!(
                        "expected \"aca-fgd\", \"sm-lmmse\", or \"fixed-d\", got \"{other}\""
                    ),
                })
            }
        };
        let cfg = ReceiverConfig {
            scheme,
            outer_iterations: self.outer_iterations,
            decode_iterations: self.decode_iterations,
            refinement_enabled: self.refinement,
            eta: self.eta,
            reward: self.reward,
            penalty: self.penalty,
            early_exit_on_zero_syndrome: self.early_exit,
            sweeps: self.sweeps,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A fully-resolved experiment: simulation config plus output options.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub sim: SimConfig,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

/// Parses and validates a TOML configuration file.
pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)?;
    let file: ConfigFile = toml::from_str(&text).map_err(|e| Error::Format {
        format: "toml",
        reason: e.to_string(),
    })?;
    resolve_config(&file)
}

/// Resolves a parsed config file into a validated [`SimConfig`].
pub fn resolve_config(file: &ConfigFile) -> Result<SimConfig> {
    let sim = SimConfig {
        ofdm: file.ofdm.to_params()?,
        receiver: file.receiver.to_config()?,
        snr_grid_db: file.snr_grid_db.clone(),
        sigma_u_grid: file.sigma_u_grid.clone(),
        relay_counts: file.relay_counts.clone(),
        cer_db: file.cer_db,
        frames_per_point: file.frames_per_point,
        master_seed: file.master_seed,
        code_seed: file.code_seed,
        interleaver_seed: file.interleaver_seed,
    };
    sim.validate()?;
    Ok(sim)
}

fn configure_workers(workers: Option<usize>) -> Result<()> {
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidParam {
                name: "workers",
                reason: "must be at least 1".into(),
            });
        }
        // ignore the error if a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    Ok(())
}

fn config_header(sim: &SimConfig) -> String {
    let r = &sim.receiver;
    format!(
        "# pncrelay v{}\n\
         # master_seed={} frames_per_point={} code_seed={} interleaver_seed={}\n\
         # snr_grid_db={:?} sigma_u_grid={:?} relay_counts={:?} cer_db={:?}\n\
         # scheme={} outer_iterations={} decode_iterations={} refinement={} eta={} \
         reward={} penalty={} early_exit={} sweeps={}\n\
         # ofdm: fc={} fs={} fft={} cp={} n={}",
        env!("CARGO_PKG_VERSION"),
        sim.master_seed,
        sim.frames_per_point,
        sim.code_seed,
        sim.interleaver_seed,
        sim.snr_grid_db,
        sim.sigma_u_grid,
        sim.relay_counts,
        sim.cer_db,
        r.scheme.label(),
        r.outer_iterations,
        r.decode_iterations,
        r.refinement_enabled,
        r.eta,
        r.reward,
        r.penalty,
        r.early_exit_on_zero_syndrome,
        r.sweeps,
        sim.ofdm.carrier_freq_hz,
        sim.ofdm.sample_rate_hz,
        sim.ofdm.fft_size,
        sim.ofdm.cp_duration_s,
        sim.ofdm.num_subcarriers,
    )
}

/// Formats one record as a CSV data row in the documented column order.
pub fn record_to_csv(r: &SimRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
        r.scheme,
        r.snr_db,
        r.sigma_u,
        r.relay_count,
        r.outer_iters,
        r.decode_iters,
        r.refinement,
        r.cer_db.map_or("perfect".into(), |v| v.to_string()),
        r.frames,
        r.bits,
        r.bit_errors,
        r.frame_errors,
        r.ber,
        r.fer,
        r.wall_time_s,
    )
}

fn open_sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Runs the `ber-sweep` subcommand; returns the process exit code
/// (nonzero if any grid point failed).
pub fn run_ber_sweep(args: &BerSweepArgs) -> Result<i32> {
    let mut sim = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        sim.master_seed = seed;
    }
    if let Some(frames) = args.frames {
        sim.frames_per_point = frames;
        sim.validate()?;
    }
    configure_workers(args.workers)?;
    let format = match args.format.as_str() {
        "jsonl" => OutputFormat::JsonLines,
        _ => OutputFormat::Csv,
    };
    let mut sink = open_sink(&args.out)?;
    writeln!(sink, "{}", config_header(&sim))?;
    if format == OutputFormat::Csv {
        writeln!(sink, "# {CSV_COLUMNS}")?;
    }
    let mut write_err: Option<std::io::Error> = None;
    let result = ber_sweep(&sim, |rec| {
        let line = match format {
            OutputFormat::Csv => record_to_csv(rec),
            OutputFormat::JsonLines => serde_json::to_string(rec).expect("record serializes"),
        };
        if let Err(e) = writeln!(sink, "{line}") {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    sink.flush()?;
    for f in &result.failures {
        eprintln!("failed: {f}");
    }
    Ok(if result.failures.is_empty() { 0 } else { 1 })
}

/// Runs the `energy-table` subcommand.
pub fn run_energy_table(args: &EnergyTableArgs) -> Result<i32> {
    configure_workers(args.workers)?;
    let ofdm = OfdmParams::default_sim();
    let table = energy_contribution_table(
        &ofdm,
        &args.sigma_u,
        &args.depths,
        args.realizations,
        args.seed,
    )?;
    let mut sink = open_sink(&args.out)?;
    writeln!(
        sink,
        "# pncrelay v{} energy-table realizations={} seed={}",
        env!("CARGO_PKG_VERSION"),
        args.realizations,
        args.seed
    )?;
    let depth_cols: Vec<String> = args.depths.iter().map(|d| format!("d{d}_pct")).collect();
    writeln!(sink, "# sigma_u,{}", depth_cols.join(","))?;
    for (sigma_u, row) in args.sigma_u.iter().zip(&table) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
        writeln!(sink, "{sigma_u},{}", cells.join(","))?;
    }
    sink.flush()?;
    Ok(0)
}

/// Runs the `cir-convert` subcommand: reads a measured CIR file and
/// writes the active-subcarrier coupling matrix as CSV triplets.
pub fn run_cir_convert(args: &CirConvertArgs) -> Result<i32> {
    let mut file = fs::File::open(&args.input)?;
    let cir = MeasuredCir::read_from(&mut file)?;
    let ofdm = OfdmParams::default_sim();
    let h = cir_to_frequency(&cir, &ofdm)?;
    let mut sink = open_sink(&args.out)?;
    writeln!(
        sink,
        "# pncrelay v{} cir-convert input={}",
        env!("CARGO_PKG_VERSION"),
        args.input.display()
    )?;
    writeln!(sink, "# row,col,re,im")?;
    let n = h.size();
    for r in 0..n {
        for c in 0..n {
            let v = h.get(r, c);
            writeln!(sink, "{r},{c},{},{}", v.re, v.im)?;
        }
    }
    sink.flush()?;
    Ok(0)
}

/// CLI entry point used by the binary.
pub fn run(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::BerSweep(args) => run_ber_sweep(args),
        Command::EnergyTable(args) => run_energy_table(args),
        Command::CirConvert(args) => run_cir_convert(args),
    }
}
