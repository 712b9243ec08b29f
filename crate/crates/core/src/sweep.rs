//! `(J, D)` grid comparison of quantum annealing against trit annealing.
//!
//! Each grid tuple `(J, D, c, profile)` runs one converged evolution and one
//! batch of annealing restarts on the same schedule. Tuples are independent,
//! so they are spread over a worker pool and appended to a CSV store as they
//! finish; the store is rewritten in canonical order at the end. A rerun
//! against an existing store only computes the missing tuples.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{ta_run, TaRunConfig, PRNG_NAME};
use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolutionConfig};
use crate::schedule::{Profile, Schedule, TemperatureMapping};
use crate::spin1::ChainInstance;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SPINONE_WORKERS";
pub const HIGH_FIDELITY: f64 = 0.9;
pub const CSV_HEADER: &str = "J,D,c,profile,p_aqa,p_ta,diff,hi_fid,dt_used,seed,degenerate";

/// Inclusive `min..=max` grid sampled every `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        GridRange { min, max, step }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(Error::invalid("grid bounds must be finite"));
        }
        if self.max < self.min {
            return Err(Error::invalid("grid max is below min"));
        }
        if !(self.step > 0.0) && self.max > self.min {
            return Err(Error::invalid("grid step must be positive"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        if self.max == self.min {
            return 1;
        }
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value at index `i`, snapped to 1e-9 so that round grid values print cleanly.
    pub fn value(&self, i: usize) -> f64 {
        let v = self.min + i as f64 * self.step;
        let snapped = (v * 1e9).round() / 1e9;
        if snapped == 0.0 {
            0.0
        } else {
            snapped
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    fn index_of(&self, v: f64) -> Option<usize> {
        let i = if self.step > 0.0 { ((v - self.min) / self.step).round() } else { 0.0 };
        if i < 0.0 || i as usize >= self.len() {
            return None;
        }
        let i = i as usize;
        ((self.value(i) - v).abs() <= 1e-6).then_some(i)
    }
}

fn default_range() -> GridRange {
    GridRange::new(-5.0, 5.0, 0.2)
}

fn default_c_list() -> Vec<f64> {
    vec![1.0, 5.0, 10.0, 20.0]
}

fn default_profiles() -> Vec<Profile> {
    Profile::ALL.to_vec()
}

fn default_energy_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    #[serde(rename = "J_range")]
    pub j_range: GridRange,
    #[serde(rename = "D_range")]
    pub d_range: GridRange,
    pub c_list: Vec<f64>,
    pub profiles: Vec<Profile>,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T_total")]
    pub t_total: f64,
    #[serde(rename = "S")]
    pub sweeps: usize,
    #[serde(rename = "R")]
    pub restarts: usize,
    pub base_seed: u64,
    /// Zero selects the environment default.
    pub worker_count: usize,
    pub evolution: EvolutionConfig,
    pub energy_tol: f64,
    pub temperature_mapping: TemperatureMapping,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            j_range: default_range(),
            d_range: default_range(),
            c_list: default_c_list(),
            profiles: default_profiles(),
            h: 0.2,
            n: 5,
            t_total: 1000.0,
            sweeps: 1000,
            restarts: 20,
            base_seed: 0,
            worker_count: 0,
            evolution: EvolutionConfig::default(),
            energy_tol: default_energy_tol(),
            temperature_mapping: TemperatureMapping::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.j_range.validate()?;
        self.d_range.validate()?;
        if self.c_list.is_empty() || self.c_list.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("c_list must hold positive values"));
        }
        if self.profiles.is_empty() {
            return Err(Error::invalid("at least one profile is required"));
        }
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::invalid("S and R must be at least 1"));
        }
        ChainInstance::new(self.n, 0.0, self.h, 0.0)?.dim()?;
        Schedule::new(Profile::Log, 1.0, self.t_total)?;
        self.evolution.validate()
    }

    pub fn grid_points(&self) -> usize {
        self.j_range.len() * self.d_range.len()
    }

    pub fn record_count(&self) -> usize {
        self.grid_points() * self.c_list.len() * self.profiles.len()
    }

    fn tasks(&self) -> Vec<TaskKey> {
        let mut out = Vec::with_capacity(self.record_count());
        for j in 0..self.j_range.len() {
            for d in 0..self.d_range.len() {
                for c in 0..self.c_list.len() {
                    for &profile in &self.profiles {
                        out.push(TaskKey { j, d, c, profile });
                    }
                }
            }
        }
        out
    }

    fn key_of(&self, r: &SweepRecord) -> Option<TaskKey> {
        let c = self.c_list.iter().position(|&c| (c - r.c).abs() <= 1e-9)?;
        self.profiles.contains(&r.profile).then_some(())?;
        Some(TaskKey {
            j: self.j_range.index_of(r.j)?,
            d: self.d_range.index_of(r.d)?,
            c,
            profile: r.profile,
        })
    }

    /// Stable per-record seed from the base seed and the tuple coordinates.
    pub fn record_seed(&self, j_idx: usize, d_idx: usize, c: f64, profile: Profile) -> u64 {
        [j_idx as u64, d_idx as u64, c.to_bits(), profile as u64]
            .iter()
            .fold(splitmix64(self.base_seed), |acc, &x| splitmix64(acc ^ splitmix64(x)))
    }

    fn workers(&self) -> usize {
        if self.worker_count > 0 {
            return self.worker_count;
        }
        default_workers()
    }
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct TaskKey {
    j: usize,
    d: usize,
    c: usize,
    profile: Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub c: f64,
    pub profile: Profile,
    pub p_aqa: f64,
    pub p_ta: f64,
    pub diff: f64,
    pub hi_fid: bool,
    pub dt_used: f64,
    pub seed: u64,
    pub degenerate: bool,
    /// Set when the tuple failed; probabilities are then NaN.
    #[serde(skip)]
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn is_error(&self) -> bool {
        self.error.is_some() || self.p_aqa.is_nan() || self.p_ta.is_nan()
    }
}

fn run_point(cfg: &SweepConfig, key: TaskKey) -> SweepRecord {
    let j = cfg.j_range.value(key.j);
    let d = cfg.d_range.value(key.d);
    let c = cfg.c_list[key.c];
    let seed = cfg.record_seed(key.j, key.d, c, key.profile);
    let failed = |msg: String, dt: f64| SweepRecord {
        j,
        d,
        c,
        profile: key.profile,
        p_aqa: f64::NAN,
        p_ta: f64::NAN,
        diff: f64::NAN,
        hi_fid: false,
        dt_used: dt,
        seed,
        degenerate: false,
        error: Some(msg),
    };
    let compute = || -> Result<SweepRecord> {
        let inst = ChainInstance::new(cfg.n, j, cfg.h, d)?;
        let sched = Schedule::new(key.profile, c, cfg.t_total)?;
        let evo = evolve(&inst, &sched, &cfg.evolution)?;
        let ta_cfg = TaRunConfig {
            sweeps: cfg.sweeps,
            restarts: cfg.restarts,
            seed,
            energy_tol: cfg.energy_tol,
            schedule: sched,
            mapping: cfg.temperature_mapping,
            t_floor: None,
        };
        let ta = ta_run(&inst, &ta_cfg)?;
        Ok(SweepRecord {
            j,
            d,
            c,
            profile: key.profile,
            p_aqa: evo.fidelity,
            p_ta: ta.success_probability,
            diff: evo.fidelity - ta.success_probability,
            hi_fid: evo.fidelity > HIGH_FIDELITY,
            dt_used: evo.dt_used,
            seed,
            degenerate: evo.ground.is_degenerate(),
            error: None,
        })
    };
    match catch_unwind(AssertUnwindSafe(compute)) {
        Ok(Ok(rec)) => rec,
        Ok(Err(e)) => {
            log::warn!("J={j} D={d} c={c} {}: {e}", key.profile);
            failed(e.to_string(), f64::NAN)
        }
        Err(_) => failed("worker panicked".into(), f64::NAN),
    }
}

fn pool(cfg: &SweepConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers())
        .build()
        .map_err(|e| Error::ResourceLimit(format!("cannot start worker pool: {e}")))
}

/// Runs every tuple in memory and returns records in canonical order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let tasks = cfg.tasks();
    Ok(pool(cfg)?.install(|| tasks.par_iter().map(|&k| run_point(cfg, k)).collect()))
}

#[derive(Clone, Debug, Default)]
pub struct StoreOptions {
    /// Keep records already present in the store.
    pub resume: bool,
    /// Stop after computing this many new records.
    pub max_new: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub computed: usize,
    pub reused: usize,
    pub complete: bool,
}

/// Sidecar path for a CSV output: same stem, `.json` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Reads whatever well-formed records a (possibly truncated) store holds.
pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(BufReader::new(File::open(path)?));
    Ok(reader.deserialize::<SweepRecord>().filter_map(|r| r.ok()).collect())
}

fn record_line(rec: &SweepRecord) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.serialize(rec)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes records with the header, atomically replacing `path`.
pub fn write_records(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut f = File::create(&tmp)?;
        writeln!(f, "{CSV_HEADER}")?;
        for rec in records {
            f.write_all(&record_line(rec)?)?;
        }
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize)]
struct ErrorEntry<'a> {
    #[serde(rename = "J")]
    j: f64,
    #[serde(rename = "D")]
    d: f64,
    c: f64,
    profile: Profile,
    message: &'a str,
}

/// Metadata written next to the CSV store.
pub fn sweep_metadata(cfg: &SweepConfig, outcome: &SweepOutcome) -> serde_json::Value {
    let errors: Vec<ErrorEntry> = outcome
        .records
        .iter()
        .filter_map(|r| {
            r.error.as_deref().map(|m| ErrorEntry { j: r.j, d: r.d, c: r.c, profile: r.profile, message: m })
        })
        .collect();
    serde_json::json!({
        "config": cfg,
        "code_version": env!("CARGO_PKG_VERSION"),
        "prng": PRNG_NAME,
        "seed_derivation": "splitmix64 fold of (base_seed, J index, D index, c bits, profile)",
        "t_floor_convention": "quantum: window [t_floor, t_floor + T] with the schedule t_floor and g at sub-step midpoints; classical: sweep midpoints with t_floor = T/(2S)",
        "temperature_mapping": cfg.temperature_mapping.name(),
        "records": outcome.records.len(),
        "expected_records": cfg.record_count(),
        "complete": outcome.complete,
        "errors": errors,
    })
}

/// Runs the sweep against a CSV store at `path`, appending each record as it
/// completes. With `resume`, records already in the store are kept and only
/// missing tuples are computed. The store is rewritten in canonical order and
/// the JSON sidecar refreshed before returning.
pub fn run_sweep_with_store(cfg: &SweepConfig, path: &Path, opts: &StoreOptions) -> Result<SweepOutcome> {
    cfg.validate()?;
    let mut have: BTreeMap<TaskKey, SweepRecord> = BTreeMap::new();
    if opts.resume && path.exists() {
        for rec in read_records(path)? {
            if let Some(key) = cfg.key_of(&rec) {
                have.entry(key).or_insert(rec);
            }
        }
    }
    let reused = have.len();
    // normalise the store (drops a torn final line) before appending
    write_records(path, &have.values().cloned().collect::<Vec<_>>())?;

    let present: HashSet<TaskKey> = have.keys().copied().collect();
    let mut todo: Vec<TaskKey> = cfg.tasks().into_iter().filter(|k| !present.contains(k)).collect();
    if let Some(limit) = opts.max_new {
        todo.truncate(limit);
    }
    log::info!("sweep: {} stored, {} to compute", reused, todo.len());

    let sink = Mutex::new(OpenOptions::new().append(true).open(path)?);
    let done = AtomicUsize::new(0);
    let total = todo.len();
    let fresh: Vec<(TaskKey, SweepRecord)> = pool(cfg)?.install(|| {
        todo.par_iter()
            .map(|&key| {
                let rec = run_point(cfg, key);
                let line = record_line(&rec)?;
                {
                    let mut f = sink.lock().expect("store lock poisoned");
                    f.write_all(&line)?;
                    f.flush()?;
                }
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n % 50 == 0 || n == total {
                    log::info!("sweep: {n}/{total}");
                }
                Ok((key, rec))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let computed = fresh.len();
    have.extend(fresh);

    let records: Vec<SweepRecord> = have.into_values().collect();
    write_records(path, &records)?;
    let outcome = SweepOutcome {
        complete: records.len() == cfg.record_count(),
        records,
        computed,
        reused,
    };
    let meta = sweep_metadata(cfg, &outcome);
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(outcome)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SectorStats {
    pub points: usize,
    /// Fraction of points with `diff > 0`.
    pub frac_positive: f64,
    pub mean_diff: f64,
}

impl SectorStats {
    fn from_diffs(diffs: &[f64]) -> Self {
        if diffs.is_empty() {
            return SectorStats::default();
        }
        let n = diffs.len() as f64;
        SectorStats {
            points: diffs.len(),
            frac_positive: diffs.iter().filter(|&&d| d > 0.0).count() as f64 / n,
            mean_diff: diffs.iter().sum::<f64>() / n,
        }
    }
}

/// Per-`(c, profile)` comparison split by the sign of `D`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorSummary {
    pub c: f64,
    pub profile: Profile,
    pub points: usize,
    pub easy_plane: SectorStats,
    pub easy_axis: SectorStats,
    pub boundary: SectorStats,
    pub high_fidelity: usize,
    pub errors: usize,
}

pub fn sector_summary(records: &[SweepRecord]) -> Result<Vec<SectorSummary>> {
    if records.is_empty() {
        return Err(Error::invalid("no records to summarise"));
    }
    let mut groups: BTreeMap<(u64, Profile), Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.c.to_bits(), r.profile)).or_default().push(r);
    }
    let mut out: Vec<SectorSummary> = groups
        .into_iter()
        .map(|((c, profile), rows)| {
            let ok: Vec<&&SweepRecord> = rows.iter().filter(|r| !r.is_error()).collect();
            let diffs = |pred: &dyn Fn(f64) -> bool| -> Vec<f64> {
                ok.iter().filter(|r| pred(r.d)).map(|r| r.diff).collect()
            };
            SectorSummary {
                c: f64::from_bits(c),
                profile,
                points: rows.len(),
                easy_plane: SectorStats::from_diffs(&diffs(&|d| d > 0.0)),
                easy_axis: SectorStats::from_diffs(&diffs(&|d| d < 0.0)),
                boundary: SectorStats::from_diffs(&diffs(&|d| d == 0.0)),
                high_fidelity: ok.iter().filter(|r| r.hi_fid).count(),
                errors: rows.len() - ok.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.profile.cmp(&b.profile)));
    Ok(out)
}

#[derive(Serialize)]
struct SummaryRow {
    c: f64,
    profile: Profile,
    points: usize,
    frac_pos_d_pos: f64,
    frac_pos_d_neg: f64,
    frac_pos_d_zero: f64,
    mean_diff_d_pos: f64,
    mean_diff_d_neg: f64,
    mean_diff_d_zero: f64,
    hi_fid: usize,
    errors: usize,
}

pub fn write_summary_csv<W: Write>(writer: W, rows: &[SectorSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in rows {
        w.serialize(SummaryRow {
            c: s.c,
            profile: s.profile,
            points: s.points,
            frac_pos_d_pos: s.easy_plane.frac_positive,
            frac_pos_d_neg: s.easy_axis.frac_positive,
            frac_pos_d_zero: s.boundary.frac_positive,
            mean_diff_d_pos: s.easy_plane.mean_diff,
            mean_diff_d_neg: s.easy_axis.mean_diff,
            mean_diff_d_zero: s.boundary.mean_diff,
            hi_fid: s.high_fidelity,
            errors: s.errors,
        })?;
    }
    w.flush()?;
    Ok(())
}
