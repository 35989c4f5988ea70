//! Command-line front end: generate traces, train the difficulty forest,
//! generate network weights, profile configurations, compute Pareto fronts,
//! and run simulations or full sweeps.
//!
//! Exit codes: 0 on success, 2 when a constraint was infeasible and the
//! soft-violation fallback was taken, 1 on any error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use chris_core::difficulty::{self, RandomForest};
use chris_core::energy::{alternate_profiles, default_profiles, ProfileSet};
use chris_core::engine::{ConnectionStatus, Constraint};
use chris_core::predictors::{tcn, PredictorSet};
use chris_core::signal::{self, ActivityId};
use chris_core::sim::{save_sweep_csv, LinkSchedule, SimReport, Simulation};
use chris_core::zoo;

#[derive(Parser)]
#[command(name = "chris", version, about = "Collaborative wearable-to-mobile HR inference toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labeled trace CSV.
    Synth(SynthArgs),
    /// Train the 8-tree difficulty forest on a labeled trace.
    TrainRf(TrainRfArgs),
    /// Generate a seeded, calibrated int8 network container.
    GenModel(GenModelArgs),
    /// Profile all 60 configurations over a trace's windows.
    Profile(ProfileArgs),
    /// Pareto-filter profiled configurations into the stored table.
    Pareto(ParetoArgs),
    /// Run the full decision loop over a trace.
    Simulate(SimulateArgs),
    /// Run every configuration (forced) and emit the MAE/energy cloud.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Inclusive activity range, e.g. 1..9
    #[arg(long, default_value = "1..9")]
    activities: String,
    #[arg(long, default_value_t = 50)]
    windows_per_activity: usize,
    /// Base heart rate in BPM for activity 1.
    #[arg(long, default_value_t = 75.0)]
    hr: f64,
    /// Heart-rate increment per activity level.
    #[arg(long, default_value_t = 2.0)]
    hr_step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pad segments so each activity labels exactly windows-per-activity
    /// windows instead of using equal-length segments.
    #[arg(long)]
    uniform: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainRfArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenModelArgs {
    /// Network size: small or big.
    #[arg(long)]
    arch: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Refit the regression head on synthetic labeled windows.
    #[arg(long)]
    fit_head: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ModelFiles {
    /// Container for the small network (needed when a configuration routes to it).
    #[arg(long)]
    model_small: Option<PathBuf>,
    /// Container for the big network (needed when a configuration routes to it).
    #[arg(long)]
    model_big: Option<PathBuf>,
}

impl ModelFiles {
    fn load(&self) -> Result<PredictorSet, CliError> {
        let small = self
            .model_small
            .as_ref()
            .map(|p| tcn::load_model(p))
            .transpose()?;
        let big = self
            .model_big
            .as_ref()
            .map(|p| tcn::load_model(p))
            .transpose()?;
        Ok(PredictorSet::new(small, big))
    }
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    forest: PathBuf,
    /// Profile fixture: default, alternate, or a JSON file path.
    #[arg(long, default_value = "default")]
    profiles: String,
    #[command(flatten)]
    models: ModelFiles,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ParetoArgs {
    /// Profiled configurations CSV (e.g. the `profile` output).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Stored configuration table CSV (the `pareto` output).
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    forest: PathBuf,
    #[arg(long, default_value = "default")]
    profiles: String,
    #[command(flatten)]
    models: ModelFiles,
    /// max-mae=<bpm> or max-energy=<mJ>
    #[arg(long)]
    constraint: Constraint,
    /// Link schedule JSON; defaults to always connected.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    forest: PathBuf,
    #[arg(long, default_value = "default")]
    profiles: String,
    #[command(flatten)]
    models: ModelFiles,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
struct CliError(String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

/// Everything a command run depends on, recorded next to its outputs so a
/// rerun with the same manifest reproduces them byte for byte.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    seed: u64,
    inputs: Vec<String>,
    args: Vec<(String, String)>,
}

impl RunManifest {
    fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            seed,
            inputs: Vec::new(),
            args: Vec::new(),
        }
    }

    fn input(mut self, path: &Path) -> Result<Self, CliError> {
        if !path.exists() {
            return Err(CliError(format!("input file not found: {}", path.display())));
        }
        self.inputs.push(path.display().to_string());
        Ok(self)
    }

    fn input_opt(self, path: Option<&PathBuf>) -> Result<Self, CliError> {
        match path {
            Some(p) => self.input(p),
            None => Ok(self),
        }
    }

    fn arg(mut self, key: &str, value: impl ToString) -> Self {
        self.args.push((key.to_string(), value.to_string()));
        self
    }

    fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        std::fs::write(
            out_dir.join("manifest.json"),
            serde_json::to_string_pretty(self).expect("manifest serializes"),
        )?;
        Ok(())
    }
}

fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn parse_activities(s: &str) -> Result<Vec<ActivityId>, CliError> {
    let parse_id = |t: &str| -> Result<u8, CliError> {
        t.trim()
            .parse::<u8>()
            .map_err(|e| CliError(format!("bad activity `{t}`: {e}")))
    };
    let ids: Vec<u8> = if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (parse_id(lo)?, parse_id(hi)?);
        if lo > hi {
            return Err(CliError(format!("empty activity range `{s}`")));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(parse_id).collect::<Result<_, _>>()?
    };
    ids.into_iter()
        .map(|id| ActivityId::new(id).map_err(|e| CliError(e.to_string())))
        .collect()
}

fn load_profiles(name: &str) -> Result<ProfileSet, CliError> {
    match name {
        "default" => Ok(default_profiles()),
        "alternate" => Ok(alternate_profiles()),
        path => Ok(ProfileSet::load_json(Path::new(path))?),
    }
}

fn load_schedule(path: Option<&PathBuf>) -> Result<LinkSchedule, CliError> {
    match path {
        Some(p) => Ok(LinkSchedule::load_json(p)?),
        None => Ok(LinkSchedule::always(ConnectionStatus::Connected)),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<ExitCode, CliError> {
    let activities = parse_activities(&args.activities)?;
    let trace = if args.uniform {
        signal::synth_trace_uniform_windows(
            &activities,
            args.windows_per_activity,
            args.hr,
            args.hr_step,
            args.seed,
        )?
    } else {
        signal::synth_trace_equal_segments(
            &activities,
            args.windows_per_activity,
            args.hr,
            args.hr_step,
            args.seed,
        )?
    };
    ensure_out_dir(&args.out)?;
    signal::save_trace(&trace, &args.out.join("trace.csv"))?;
    RunManifest::new("synth", args.seed)
        .arg("activities", &args.activities)
        .arg("windows_per_activity", args.windows_per_activity)
        .arg("hr", args.hr)
        .arg("hr_step", args.hr_step)
        .arg("uniform", args.uniform)
        .write(&args.out)?;
    println!("wrote {} ({} rows)", args.out.join("trace.csv").display(), trace.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_train_rf(args: &TrainRfArgs) -> Result<ExitCode, CliError> {
    let manifest = RunManifest::new("train-rf", args.seed).input(&args.trace)?;
    let trace = signal::load_trace(&args.trace)?;
    let windows = signal::windows(&trace)?;
    let dataset: Vec<_> = windows
        .iter()
        .map(|w| (difficulty::features_of_window(w), w.activity()))
        .collect();
    let forest = difficulty::rf_train(&dataset, args.seed)?;
    ensure_out_dir(&args.out)?;
    forest.save_json(&args.out.join("forest.json"))?;
    manifest.write(&args.out)?;
    println!("wrote {}", args.out.join("forest.json").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_model(args: &GenModelArgs) -> Result<ExitCode, CliError> {
    let arch = match args.arch.as_str() {
        "small" => tcn::TcnArch::timeppg_small(),
        "big" => tcn::TcnArch::timeppg_big(),
        other => return Err(CliError(format!("unknown arch `{other}` (use small or big)"))),
    };
    let model = if args.fit_head {
        // Fit the head on synthetic labeled windows, then quantize.
        let mut float = tcn::random_float_tcn(&arch, args.seed);
        let mut windows = Vec::new();
        let mut targets = Vec::new();
        for a in ActivityId::all() {
            for k in 0..8u64 {
                let hr = 55.0 + 15.0 * k as f64;
                let w = signal::synth_window(hr, a, args.seed ^ ((a.get() as u64) << 16) ^ k)?;
                windows.push(w);
                targets.push(hr);
            }
        }
        tcn::fit_head(&mut float, &windows, &targets);
        tcn::quantize_float_tcn(&float, &windows)
    } else {
        tcn::random_model(&arch, args.seed)
    };
    ensure_out_dir(&args.out)?;
    let file = args.out.join(format!("model-{}.json", args.arch));
    tcn::TcnContainer::from_model(&model).save_json(&file)?;
    RunManifest::new("gen-model", args.seed)
        .arg("arch", &args.arch)
        .arg("fit_head", args.fit_head)
        .write(&args.out)?;
    let ops = tcn::count_ops(model.spec());
    println!("wrote {} ({} params, {} MACs)", file.display(), ops.params, ops.macs);
    Ok(ExitCode::SUCCESS)
}

fn cmd_profile(args: &ProfileArgs) -> Result<ExitCode, CliError> {
    let manifest = RunManifest::new("profile", args.seed)
        .input(&args.trace)?
        .input(&args.forest)?
        .input_opt(args.models.model_small.as_ref())?
        .input_opt(args.models.model_big.as_ref())?
        .arg("profiles", &args.profiles);
    let trace = signal::load_trace(&args.trace)?;
    let windows = signal::windows(&trace)?;
    let forest = RandomForest::load_json(&args.forest)?;
    let profiles = load_profiles(&args.profiles)?;
    let predictors = args.models.load()?;

    let specs = zoo::enumerate(&profiles);
    let mut rows = Vec::with_capacity(specs.len());
    for spec in &specs {
        rows.push(zoo::profile(spec, &windows, &forest, &predictors, &profiles)?);
    }
    ensure_out_dir(&args.out)?;
    let file = args.out.join("profiled.csv");
    zoo::save_configurations_csv(&rows, &file)?;
    manifest.write(&args.out)?;
    println!("wrote {} ({} configurations)", file.display(), rows.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_pareto(args: &ParetoArgs) -> Result<ExitCode, CliError> {
    let manifest = RunManifest::new("pareto", args.seed).input(&args.input)?;
    let rows = zoo::load_configurations_csv(&args.input)?;
    let table = zoo::pareto_filter(&rows);
    ensure_out_dir(&args.out)?;
    let file = args.out.join("table.csv");
    table.save_csv(&file)?;
    manifest.write(&args.out)?;
    println!(
        "wrote {} ({} of {} configurations on the front)",
        file.display(),
        table.len(),
        rows.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode, CliError> {
    let manifest = RunManifest::new("simulate", args.seed)
        .input(&args.trace)?
        .input(&args.table)?
        .input(&args.forest)?
        .input_opt(args.models.model_small.as_ref())?
        .input_opt(args.models.model_big.as_ref())?
        .input_opt(args.schedule.as_ref())?
        .arg("profiles", &args.profiles)
        .arg("constraint", args.constraint);
    let trace = signal::load_trace(&args.trace)?;
    let table = zoo::ConfigTable::load_csv(&args.table)?;
    let forest = RandomForest::load_json(&args.forest)?;
    let profiles = load_profiles(&args.profiles)?;
    let predictors = args.models.load()?;
    let schedule = load_schedule(args.schedule.as_ref())?;

    let sim = Simulation::new(&trace, &forest, &predictors, &profiles)?;
    let report = sim.run(&table, &args.constraint, &schedule)?;

    ensure_out_dir(&args.out)?;
    write_report(&report, &args.out)?;
    manifest.write(&args.out)?;
    let soft_violation = report.config_switches.iter().any(|s| s.soft_violation);
    let mae = report
        .mae_bpm
        .map(|v| format!("{v:.2}"))
        .unwrap_or_else(|| "n/a".to_string());
    println!(
        "simulated {} windows: mae={} BPM, watch={:.3} mJ/window, offload={:.3}{}",
        report.n_windows,
        mae,
        report.watch_mj_mean,
        report.offload_fraction,
        if soft_violation { " (constraint infeasible, fallback taken)" } else { "" }
    );
    Ok(if soft_violation {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode, CliError> {
    let manifest = RunManifest::new("sweep", args.seed)
        .input(&args.trace)?
        .input(&args.forest)?
        .input_opt(args.models.model_small.as_ref())?
        .input_opt(args.models.model_big.as_ref())?
        .arg("profiles", &args.profiles);
    let trace = signal::load_trace(&args.trace)?;
    let forest = RandomForest::load_json(&args.forest)?;
    let profiles = load_profiles(&args.profiles)?;
    let predictors = args.models.load()?;

    let sim = Simulation::new(&trace, &forest, &predictors, &profiles)?;
    let rows = sim.sweep()?;
    ensure_out_dir(&args.out)?;
    let file = args.out.join("sweep.csv");
    save_sweep_csv(&rows, &file)?;
    manifest.write(&args.out)?;
    println!("wrote {} ({} configurations)", file.display(), rows.len());
    Ok(ExitCode::SUCCESS)
}

fn write_report(report: &SimReport, out_dir: &Path) -> Result<(), CliError> {
    report.save_json(&out_dir.join("report.json"))?;
    report.save_window_csv(&out_dir.join("windows.csv"))?;
    report.save_summary_csv(&out_dir.join("summary.csv"))?;
    Ok(())
}

fn main() -> ExitCode {
    // Map argument errors to exit code 1; 2 is reserved for the
    // constraint-infeasible outcome.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::TrainRf(args) => cmd_train_rf(args),
        Command::GenModel(args) => cmd_gen_model(args),
        Command::Profile(args) => cmd_profile(args),
        Command::Pareto(args) => cmd_pareto(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
