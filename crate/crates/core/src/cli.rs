//! Command-line front end.
//!
//! Every subcommand builds an effective configuration from an optional JSON
//! file (`--config`) overridden by flags, runs one experiment or diagnostic
//! and writes plain CSV/JSON output that embeds that configuration.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::anneal::{ta_run, TaRunConfig, PRNG_NAME};
use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolutionConfig};
use crate::landscape::{
    basin_curves_along_d, energy_vs_f_scatter, write_basins_csv, write_envelope_csv, write_scatter_csv,
    TIE_BREAK_RULE,
};
use crate::schedule::{Profile, Schedule, TemperatureMapping};
use crate::spectrum::{
    adiabatic_error_bound, fit_diabatic_slope, gap_scan, landau_zener, write_slices_csv, DEFAULT_LEVELS,
    DEFAULT_SAMPLES,
};
use crate::spin1::{exact_ground_state, ChainInstance};
use crate::sweep::{
    run_sweep_with_store, sector_summary, write_summary_csv, GridRange, StoreOptions, SweepConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "spinone", version, about = "Spin-1 quantum annealing versus trit annealing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Converged quantum annealing run for one instance.
    #[command(allow_negative_numbers = true)]
    Aqa(RunArgs),
    /// Trit annealing restarts for one instance.
    #[command(allow_negative_numbers = true)]
    Ta(RunArgs),
    /// Grid comparison of both annealers over (J, D).
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Energy against the fraction of non-zero trits for every configuration.
    #[command(allow_negative_numbers = true)]
    Landscape(RunArgs),
    /// Instantaneous spectrum, minimum gap and diabatic estimates.
    #[command(allow_negative_numbers = true)]
    Spectrum(RunArgs),
    /// Basin count and largest basin along a cut in D.
    #[command(allow_negative_numbers = true)]
    Basins(BasinArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON configuration file; a sidecar's embedded "config" is accepted too.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; JSON results go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    #[arg(long = "J")]
    pub j: Option<f64>,
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub profile: Option<Profile>,
    #[arg(long = "T")]
    pub t_total: Option<f64>,
    #[arg(long = "S")]
    pub sweeps: Option<usize>,
    #[arg(long = "R")]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub mapping: Option<TemperatureMapping>,
    /// Spectrum sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Spectrum levels kept per sample.
    #[arg(long)]
    pub levels: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct BasinArgs {
    #[arg(long = "J")]
    pub j: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "D-min")]
    pub d_min: Option<f64>,
    #[arg(long = "D-max")]
    pub d_max: Option<f64>,
    #[arg(long = "D-step")]
    pub d_step: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SweepArgs {
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Comma-separated driver scales.
    #[arg(long, value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    /// Comma-separated profiles.
    #[arg(long, value_delimiter = ',')]
    pub profile: Option<Vec<Profile>>,
    #[arg(long = "T")]
    pub t_total: Option<f64>,
    #[arg(long = "S")]
    pub sweeps: Option<usize>,
    #[arg(long = "R")]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub mapping: Option<TemperatureMapping>,
    /// Grid spacing applied to both J and D.
    #[arg(long)]
    pub step: Option<f64>,
    /// Keep records already present in the output.
    #[arg(long)]
    pub resume: bool,
    /// Stop after this many new records.
    #[arg(long)]
    pub max_new: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Effective configuration of the single-instance subcommands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(rename = "J")]
    pub j: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub c: f64,
    pub profile: Profile,
    #[serde(rename = "T_total")]
    pub t_total: f64,
    #[serde(rename = "S")]
    pub sweeps: usize,
    #[serde(rename = "R")]
    pub restarts: usize,
    pub seed: u64,
    pub energy_tol: f64,
    pub temperature_mapping: TemperatureMapping,
    pub evolution: EvolutionConfig,
    pub samples: usize,
    pub levels: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            j: None,
            d: None,
            h: 0.2,
            n: 5,
            c: 20.0,
            profile: Profile::Log,
            t_total: 1000.0,
            sweeps: 1000,
            restarts: 20,
            seed: 0,
            energy_tol: 1e-6,
            temperature_mapping: TemperatureMapping::default(),
            evolution: EvolutionConfig::default(),
            samples: DEFAULT_SAMPLES,
            levels: DEFAULT_LEVELS,
        }
    }
}

impl RunConfig {
    fn apply(&mut self, a: &RunArgs) {
        macro_rules! set {
            ($($field:ident <- $arg:ident),*) => { $(if let Some(v) = a.$arg { self.$field = v; })* };
        }
        if a.j.is_some() {
            self.j = a.j;
        }
        if a.d.is_some() {
            self.d = a.d;
        }
        set!(h <- h, n <- n, c <- c, profile <- profile, t_total <- t_total, sweeps <- sweeps,
             restarts <- restarts, seed <- seed, temperature_mapping <- mapping, samples <- samples,
             levels <- levels);
        if let Some(dt) = a.dt {
            self.evolution.dt = dt;
        }
    }

    fn instance(&self) -> Result<ChainInstance> {
        let j = self.j.ok_or_else(|| Error::invalid("--J is required"))?;
        let d = self.d.ok_or_else(|| Error::invalid("--D is required"))?;
        ChainInstance::new(self.n, j, self.h, d)
    }

    fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.profile, self.c, self.t_total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasinConfig {
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D_range")]
    pub d_range: GridRange,
}

impl Default for BasinConfig {
    fn default() -> Self {
        BasinConfig { j: None, h: 0.2, n: 5, d_range: GridRange::new(-5.0, 5.0, 0.5) }
    }
}

/// Reads a JSON configuration, unwrapping a sidecar's `"config"` member.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let mut value: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Domain(_) | Error::Convergence { .. } | Error::DiagnosticUnavailable(_) => EXIT_NUMERICAL,
        Error::ResourceLimit(_) => EXIT_RESOURCE,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_IO,
    }
}

fn emit_json(out: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn csv_target(out: Option<&Path>, default: &str) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(default))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_sidecar(csv: &Path, value: &Value) -> Result<()> {
    fs::write(csv.with_extension("json"), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn csv_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg: RunConfig = load_config(args.common.config.as_deref())?;
    cfg.apply(args);
    Ok(cfg)
}

fn cmd_aqa(args: &RunArgs) -> Result<()> {
    let cfg = run_config(args)?;
    let inst = cfg.instance()?;
    let sched = cfg.schedule()?;
    let start = Instant::now();
    let evo = evolve(&inst, &sched, &cfg.evolution)?;
    emit_json(
        args.common.out.as_deref(),
        &json!({
            "config": cfg,
            "p_aqa": evo.fidelity,
            "dt_used": evo.dt_used,
            "steps_used": evo.steps_used,
            "halvings": evo.halvings,
            "ground_energy": evo.ground.energy,
            "degenerate": evo.ground.is_degenerate(),
            "norm": evo.state.norm(),
            "runtime_seconds": start.elapsed().as_secs_f64(),
        }),
    )
}

fn cmd_ta(args: &RunArgs) -> Result<()> {
    let cfg = run_config(args)?;
    let inst = cfg.instance()?;
    let ta_cfg = TaRunConfig {
        sweeps: cfg.sweeps,
        restarts: cfg.restarts,
        seed: cfg.seed,
        energy_tol: cfg.energy_tol,
        schedule: cfg.schedule()?,
        mapping: cfg.temperature_mapping,
        t_floor: None,
    };
    let res = ta_run(&inst, &ta_cfg)?;
    emit_json(
        args.common.out.as_deref(),
        &json!({
            "config": cfg,
            "p_ta": res.success_probability,
            "successes": res.successes,
            "final_energies": res.final_energies,
            "ground_energy": res.ground_energy,
            "seed": cfg.seed,
            "prng": PRNG_NAME,
        }),
    )
}

fn cmd_landscape(args: &RunArgs) -> Result<()> {
    let cfg = run_config(args)?;
    let inst = cfg.instance()?;
    let scatter = energy_vs_f_scatter(&inst)?;
    let ground = exact_ground_state(&inst)?;
    let path = csv_target(args.common.out.as_deref(), "landscape.csv");
    write_scatter_csv(csv_file(&path)?, &scatter.points)?;
    let envelope = with_suffix(&path, "_envelope.csv");
    write_envelope_csv(csv_file(&envelope)?, &scatter.envelope)?;
    write_sidecar(
        &path,
        &json!({
            "config": cfg,
            "configurations": scatter.points.len(),
            "local_minima": scatter.minima.len(),
            "ground_energy": ground.energy,
            "envelope_file": envelope.file_name().map(|s| s.to_string_lossy()),
            "tie_break": TIE_BREAK_RULE,
        }),
    )
}

fn cmd_spectrum(args: &RunArgs) -> Result<()> {
    let cfg = run_config(args)?;
    let inst = cfg.instance()?;
    let sched = cfg.schedule()?;
    let scan = gap_scan(&inst, &sched, cfg.samples, cfg.levels)?;
    let path = csv_target(args.common.out.as_deref(), "spectrum.csv");
    write_slices_csv(csv_file(&path)?, &scan.slices)?;
    let bound = adiabatic_error_bound(&scan.slices, &sched);
    let alpha = fit_diabatic_slope(&scan);
    let lz = alpha.as_ref().ok().map(|&a| landau_zener(scan.min_gap, a)).transpose();
    write_sidecar(
        &path,
        &json!({
            "config": cfg,
            "min_gap": scan.min_gap,
            "t_at_min": scan.t_at_min,
            "g_at_min": sched.g(scan.t_at_min)?,
            "adiabatic_bound": bound.as_ref().ok(),
            "adiabatic_bound_note": bound.as_ref().err().map(|e| e.to_string()),
            "diabatic_slope": alpha.as_ref().ok(),
            "landau_zener": lz.ok().flatten(),
            "diabatic_slope_note": alpha.as_ref().err().map(|e| e.to_string()),
        }),
    )
}

fn cmd_basins(args: &BasinArgs) -> Result<()> {
    let mut cfg: BasinConfig = load_config(args.common.config.as_deref())?;
    if args.j.is_some() {
        cfg.j = args.j;
    }
    if let Some(h) = args.h {
        cfg.h = h;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(v) = args.d_min {
        cfg.d_range.min = v;
    }
    if let Some(v) = args.d_max {
        cfg.d_range.max = v;
    }
    if let Some(v) = args.d_step {
        cfg.d_range.step = v;
    }
    let j = cfg.j.ok_or_else(|| Error::invalid("--J is required"))?;
    cfg.d_range.validate()?;
    let base = ChainInstance::new(cfg.n, j, cfg.h, 0.0)?;
    let rows = basin_curves_along_d(&base, j, &cfg.d_range.values())?;
    let path = csv_target(args.common.out.as_deref(), "basins.csv");
    write_basins_csv(csv_file(&path)?, &rows)?;
    write_sidecar(&path, &json!({ "config": cfg, "rows": rows.len(), "tie_break": TIE_BREAK_RULE }))
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut cfg: SweepConfig = load_config(args.common.config.as_deref())?;
    macro_rules! set {
        ($($field:ident <- $arg:ident),*) => { $(if let Some(v) = args.$arg.clone() { cfg.$field = v; })* };
    }
    set!(h <- h, n <- n, c_list <- c, profiles <- profile, t_total <- t_total, sweeps <- sweeps,
         restarts <- restarts, base_seed <- seed, worker_count <- workers, temperature_mapping <- mapping);
    if let Some(step) = args.step {
        cfg.j_range.step = step;
        cfg.d_range.step = step;
    }
    let path = csv_target(args.common.out.as_deref(), "sweep.csv");
    let opts = StoreOptions { resume: args.resume, max_new: args.max_new };
    let outcome = run_sweep_with_store(&cfg, &path, &opts)?;
    eprintln!(
        "{} records ({} computed, {} reused){}",
        outcome.records.len(),
        outcome.computed,
        outcome.reused,
        if outcome.complete { "" } else { ", incomplete" }
    );
    if !outcome.records.is_empty() {
        let summary = sector_summary(&outcome.records)?;
        write_summary_csv(csv_file(&with_suffix(&path, "_summary.csv"))?, &summary)?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Aqa(a) => cmd_aqa(a),
        Command::Ta(a) => cmd_ta(a),
        Command::Landscape(a) => cmd_landscape(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Basins(a) => cmd_basins(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

fn error_payload(err: &Error) -> Value {
    match err {
        Error::Convergence { halvings, dt, previous, last } => json!({
            "error": err.to_string(),
            "halvings": halvings,
            "dt": dt,
            "previous_fidelity": previous,
            "last_fidelity": last,
        }),
        _ => json!({ "error": err.to_string() }),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let code = exit_code(&err);
            let _ = writeln!(std::io::stderr(), "{}", error_payload(&err));
            code
        }
    }
}
