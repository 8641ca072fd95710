//! Command-line configuration, orchestration and artifact export.
//!
//! A run is described by an [`ExperimentSpec`], built from an optional JSON
//! file with flat keys and overridden by flags. Every JSON artifact carries
//! a `schema_version`; no artifact contains timestamps or host details, so
//! identical specs give byte-identical files.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_statistic, CheckSummary, ScalingFit, Statistic, ThroughputReport};
use crate::deployment::{deploy, Model, ScalingConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::experiment::{run_sweep, run_trials, TrialBatch};
use crate::regions::{build_avoidance_regions, build_preservation_regions};
use crate::routing::{write_loads_csv, write_routes_jsonl};
use crate::seed::trial_seed;
use crate::sim::{simulate, write_trace_csv, SimOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BOUND_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

const DEFAULT_N: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Deploy,
    Simulate,
    Sweep,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Emit {
    Json,
    Csv,
    Pbm,
    SlotTrace,
}

impl std::str::FromStr for Emit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Emit::Json),
            "csv" => Ok(Emit::Csv),
            "pbm" => Ok(Emit::Pbm),
            "slot-trace" | "slot_trace" | "trace" => Ok(Emit::SlotTrace),
            other => Err(Error::InvalidConfig(format!(
                "emit entries must be json, csv, pbm or slot-trace, got {other:?}"
            ))),
        }
    }
}

fn parse_emit(list: &str) -> Result<BTreeSet<Emit>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn parse_densities(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("density {s:?} is not a number")))
        })
        .collect()
}

/// Keys accepted in a JSON configuration file. All are optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(alias = "P")]
    pub p: Option<f64>,
    #[serde(alias = "N0")]
    pub n0: Option<f64>,
    pub delta_loss: Option<f64>,
    #[serde(alias = "delta_P")]
    pub delta_p: Option<f64>,
    pub delta_a: Option<f64>,
    pub delta_t: Option<f64>,
    pub epsilon: Option<f64>,
    pub model: Option<String>,
    pub command: Option<Command>,
    pub densities: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub emit: Option<Vec<String>>,
    pub frames: Option<usize>,
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Command-line flags; each one overrides the matching configuration key.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "hetnet", version, about = "Simulate co-existing primary and secondary wireless networks")]
pub struct CliArgs {
    /// JSON configuration file with flat keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// Primary density.
    #[arg(long)]
    pub n: Option<f64>,
    /// Secondary exponent, m = n^beta.
    #[arg(long)]
    pub beta: Option<f64>,
    /// BS exponent, l = n^gamma.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// adhoc or infrastructure.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated primary densities for a sweep.
    #[arg(long, value_name = "LIST")]
    pub densities: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of json,csv,pbm,slot-trace.
    #[arg(long, value_name = "LIST")]
    pub emit: Option<String>,
    /// Frames per simulated trial.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Worker threads (overrides HETNET_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
}

/// A validated description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub config: ScalingConfig,
    pub command: Command,
    pub densities: Option<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
    /// Where artifacts go; left out of them so runs into different
    /// directories compare equal.
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub emit: BTreeSet<Emit>,
    pub frames: usize,
    /// Not part of the artifacts; results do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    /// Merges file values and flags, fills defaults and validates.
    pub fn resolve(args: &CliArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let model: Model = args
            .model
            .clone()
            .or(file.model.clone())
            .map_or(Ok(Model::AdHoc), |s| s.parse())?;
        let n = args.n.or(file.n).unwrap_or(DEFAULT_N);
        let mut cfg = ScalingConfig::new(n, model);
        cfg.beta = args.beta.or(file.beta).unwrap_or(cfg.beta);
        cfg.gamma = args.gamma.or(file.gamma).unwrap_or(cfg.gamma);
        cfg.alpha = file.alpha.unwrap_or(cfg.alpha);
        cfg.p = file.p.unwrap_or(cfg.p);
        cfg.n0 = file.n0.unwrap_or(cfg.n0);
        cfg.delta_loss = file.delta_loss.unwrap_or(cfg.delta_loss);
        cfg.delta_a = file.delta_a.unwrap_or(cfg.delta_a);
        cfg.delta_t = file.delta_t.unwrap_or(cfg.delta_t);
        cfg.epsilon = file.epsilon.unwrap_or(cfg.epsilon);
        cfg.delta_p = file.delta_p.unwrap_or_else(|| cfg.default_delta_p());
        cfg.validate()?;

        let emit = match (&args.emit, &file.emit) {
            (Some(s), _) => parse_emit(s)?,
            (None, Some(v)) => v.iter().map(|s| s.parse()).collect::<Result<_>>()?,
            (None, None) => BTreeSet::from([Emit::Json]),
        };
        let densities = match (&args.densities, file.densities) {
            (Some(s), _) => Some(parse_densities(s)?),
            (None, d) => d,
        };
        let command = args.command.or(file.command).unwrap_or(Command::Simulate);
        let default_trials = if command == Command::Sweep { 5 } else { 1 };
        let spec = ExperimentSpec {
            config: cfg,
            command,
            densities,
            trials: args.trials.or(file.trials).unwrap_or(default_trials),
            seed: args.seed.or(file.seed).unwrap_or(0),
            output_dir: args
                .out
                .clone()
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from("hetnet-out")),
            emit,
            frames: args.frames.or(file.frames).unwrap_or(SimOptions::default().frames),
            threads: args.threads.or(file.threads),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.frames == 0 {
            return Err(Error::InvalidConfig("frames must be at least 1".into()));
        }
        if self.command == Command::Sweep {
            let d = self.densities.as_ref().ok_or_else(|| {
                Error::InvalidConfig("sweep needs densities (--densities)".into())
            })?;
            if d.len() < 3 {
                return Err(Error::InvalidConfig(format!(
                    "sweep needs at least 3 densities, got {}",
                    d.len()
                )));
            }
            if self.trials < 5 {
                return Err(Error::InvalidConfig(format!(
                    "sweep needs at least 5 trials per density, got {}",
                    self.trials
                )));
            }
            if let Some(bad) = d.iter().find(|&&n| !(n >= 3.0 && n.is_finite())) {
                return Err(Error::InvalidConfig(format!(
                    "sweep densities must be at least 3, got {bad}"
                )));
            }
        }
        Ok(())
    }

    fn sim_options(&self) -> SimOptions {
        SimOptions {
            frames: self.frames,
            trace: false,
        }
    }

    fn wants(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}

/// Result of [`run`]: process exit status and the files written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Writer {
            dir,
            written: Vec::new(),
        })
    }

    fn with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
    {
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        self.with(name, |w| {
            serde_json::to_writer_pretty(
                &mut *w,
                &Versioned {
                    schema_version: SCHEMA_VERSION,
                    body,
                },
            )?;
            writeln!(w).map_err(|e| Error::io(name, e))
        })
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    density_index: usize,
    n: f64,
    m: f64,
    l: usize,
    trial: usize,
    seed: u64,
    t_p: f64,
    s_p: f64,
    t_alone: f64,
    s_alone: f64,
    t_s: f64,
    s_s: f64,
    outage_fraction: Option<f64>,
    loaded_pass_fraction: Option<f64>,
    max_cluster_size: usize,
}

fn sweep_rows(batches: &[TrialBatch]) -> Vec<SweepRow> {
    batches
        .iter()
        .flat_map(|b| {
            b.reports.iter().enumerate().map(move |(t, r)| SweepRow {
                density_index: b.density_index,
                n: r.n,
                m: r.m,
                l: r.l,
                trial: t,
                seed: r.seed,
                t_p: r.t_p,
                s_p: r.s_p,
                t_alone: r.t_alone,
                s_alone: r.s_alone,
                t_s: r.t_s,
                s_s: r.s_s,
                outage_fraction: r.outage_fraction,
                loaded_pass_fraction: r.loaded_pass_fraction,
                max_cluster_size: r.max_cluster_size,
            })
        })
        .collect()
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))
}

/// Plain-text table of pooled checks.
pub fn format_checks(checks: &[CheckSummary]) -> String {
    let mut s = format!(
        "{:<34} {:<12} {:>8} {:>8} {:>13} {:>13}  {}\n",
        "check", "kind", "rate", "needed", "worst", "bound", "result"
    );
    for c in checks {
        s.push_str(&format!(
            "{:<34} {:<12} {:>8.4} {:>8.2} {:>13.5e} {:>13.5e}  {}\n",
            c.name,
            format!("{:?}", c.kind),
            c.pass_rate,
            c.required,
            c.worst_observed,
            c.bound,
            if c.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    spec: &'a ExperimentSpec,
    fits: Vec<ScalingFit>,
    skipped: Vec<String>,
}

#[derive(Serialize)]
struct BatchDoc<'a> {
    spec: &'a ExperimentSpec,
    #[serde(flatten)]
    batch: &'a TrialBatch,
}

#[derive(Serialize)]
struct VerifyDoc<'a> {
    spec: &'a ExperimentSpec,
    n_hat_c: usize,
    pass: bool,
    checks: &'a [CheckSummary],
}

fn statistics_for(model: Model) -> &'static [Statistic] {
    match model {
        Model::AdHoc => &[
            Statistic::SAloneSqrtLogN,
            Statistic::Sp,
            Statistic::SsSqrtLogM,
            Statistic::Outage,
            Statistic::MaxCluster,
        ],
        Model::Infrastructure => &[
            Statistic::SAloneVsL,
            Statistic::Sp,
            Statistic::SsSqrtLogM,
            Statistic::Outage,
            Statistic::MaxCluster,
        ],
    }
}

fn run_deploy(spec: &ExperimentSpec, w: &mut Writer) -> Result<String> {
    let inst = deploy(&spec.config, spec.seed)?;
    if spec.wants(Emit::Json) {
        w.with("instance.json", |f| {
            f.write_all(inst.to_json()?.as_bytes())
                .and_then(|_| writeln!(f))
                .map_err(|e| Error::io("instance.json", e))
        })?;
    }
    if spec.wants(Emit::Csv) {
        w.with("primary_nodes.csv", |f| inst.primary_nodes.write_csv(f))?;
        w.with("secondary_nodes.csv", |f| inst.secondary_nodes.write_csv(f))?;
    }
    if spec.wants(Emit::Pbm) {
        let pres = build_preservation_regions(&inst)?;
        w.with("preservation.pbm", |f| {
            pres.write_pbm(f).map_err(|e| Error::io("preservation.pbm", e))
        })?;
        if inst.model() == Model::Infrastructure {
            let avoid = build_avoidance_regions(&inst)?;
            w.with("avoidance.pbm", |f| {
                avoid.write_pbm(f).map_err(|e| Error::io("avoidance.pbm", e))
            })?;
        }
    }
    Ok(format!(
        "deployed {} primary and {} secondary nodes, {} base stations\n",
        inst.primary_nodes.count(),
        inst.secondary_nodes.count(),
        inst.bs_positions.len()
    ))
}

/// Writes the per-instance artifacts of the first trial.
fn first_trial_artifacts(spec: &ExperimentSpec, w: &mut Writer) -> Result<()> {
    let wants_any = [Emit::Json, Emit::Csv, Emit::Pbm, Emit::SlotTrace]
        .iter()
        .any(|&e| spec.wants(e));
    if !wants_any {
        return Ok(());
    }
    let inst = deploy(&spec.config, trial_seed(spec.seed, 0, 0))?;
    let opts = SimOptions {
        frames: spec.frames,
        trace: spec.wants(Emit::SlotTrace),
    };
    let sim = simulate(&inst, &opts)?;
    if spec.wants(Emit::Json) {
        w.with("secondary_routes.jsonl", |f| write_routes_jsonl(&sim.secondary_routes, f))?;
        if !sim.primary_routes.is_empty() {
            w.with("primary_routes.jsonl", |f| write_routes_jsonl(&sim.primary_routes, f))?;
        }
    }
    if spec.wants(Emit::Csv) {
        w.with("secondary_loads.csv", |f| write_loads_csv(&sim.secondary_loads, f))?;
        if !sim.primary_loads.is_empty() {
            w.with("primary_loads.csv", |f| write_loads_csv(&sim.primary_loads, f))?;
        }
    }
    if spec.wants(Emit::Pbm) {
        w.with("preservation.pbm", |f| {
            sim.preservation
                .write_pbm(f)
                .map_err(|e| Error::io("preservation.pbm", e))
        })?;
        if let Some(a) = &sim.avoidance {
            w.with("avoidance.pbm", |f| a.write_pbm(f).map_err(|e| Error::io("avoidance.pbm", e)))?;
        }
    }
    if spec.wants(Emit::SlotTrace) {
        w.with("slot_trace.csv", |f| write_trace_csv(&sim.trace, f))?;
    }
    Ok(())
}

fn report_line(r: &ThroughputReport) -> String {
    format!(
        "T_p={:.4e} S_p={:.4e} T_alone={:.4e} T_s={:.4e} S_s={:.4e} outage={}\n",
        r.t_p,
        r.s_p,
        r.t_alone,
        r.t_s,
        r.s_s,
        r.outage_fraction.map_or("n/a".to_string(), |o| format!("{o:.4}"))
    )
}

/// Executes a spec, writing artifacts under its output directory.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    spec.validate()?;
    let mut w = Writer::new(&spec.output_dir)?;
    let opts = spec.sim_options();
    let (exit_code, summary) = match spec.command {
        Command::Deploy => (EXIT_OK, run_deploy(spec, &mut w)?),
        Command::Simulate => {
            let batch = run_trials(&spec.config, 0, spec.trials, spec.seed, &opts, spec.threads)?;
            if spec.wants(Emit::Json) {
                w.json("report.json", &BatchDoc { spec, batch: &batch })?;
            }
            if spec.wants(Emit::Csv) {
                w.with("trials.csv", |f| write_rows(&sweep_rows(std::slice::from_ref(&batch)), f))?;
            }
            first_trial_artifacts(spec, &mut w)?;
            let mut s = String::new();
            for r in &batch.reports {
                s.push_str(&report_line(r));
            }
            s.push_str(&format_checks(&batch.checks));
            (EXIT_OK, s)
        }
        Command::Sweep => {
            let densities = spec.densities.as_deref().unwrap_or_default();
            let batches = run_sweep(&spec.config, densities, spec.trials, spec.seed, &opts, spec.threads)?;
            let reports: Vec<Vec<ThroughputReport>> =
                batches.iter().map(|b| b.reports.clone()).collect();
            let mut fits = Vec::new();
            let mut skipped = Vec::new();
            for &stat in statistics_for(spec.config.model) {
                match fit_statistic(&reports, stat) {
                    Ok(f) => fits.push(f),
                    Err(e) => {
                        log::warn!("no fit for {}: {e}", stat.name());
                        skipped.push(stat.name().to_string());
                    }
                }
            }
            w.with("sweep.csv", |f| write_rows(&sweep_rows(&batches), f))?;
            let mut s = String::new();
            for f in &fits {
                s.push_str(&format!(
                    "{:<22} slope={:.4} intercept={:.4} r2={:.4}\n",
                    f.statistic, f.slope, f.intercept, f.r2
                ));
            }
            w.json("fit.json", &SweepSummary { spec, fits, skipped })?;
            (EXIT_OK, s)
        }
        Command::Verify => {
            let batch = run_trials(&spec.config, 0, spec.trials, spec.seed, &opts, spec.threads)?;
            let pass = batch.all_pass();
            w.json(
                "verify.json",
                &VerifyDoc {
                    spec,
                    n_hat_c: batch.n_hat_c,
                    pass,
                    checks: &batch.checks,
                },
            )?;
            let code = if pass { EXIT_OK } else { EXIT_BOUND_FAILURE };
            (code, format_checks(&batch.checks))
        }
    };
    Ok(Outcome {
        exit_code,
        artifacts: w.written,
        summary,
    })
}

/// Exit status for an error.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parses arguments, runs, prints the summary and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = ExperimentSpec::resolve(&args).and_then(|spec| run(&spec));
    match outcome {
        Ok(o) => {
            print!("{}", o.summary);
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
