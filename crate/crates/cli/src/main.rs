//! Command-line front end for the aircomp simulator.

use std::cell::RefCell;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use aircomp::channel::{ChannelRealization, ImpairmentProfile};
use aircomp::constellation::{check_feasibility, optimize_channelcomp, Constellation, DesignOptions, FunctionTable};
use aircomp::domain::{FunctionKind, FunctionSpec, Interval};
use aircomp::mimo::{aggregation_beamformer, mimo_mse, MimoScenario};
use aircomp::modem::Quantizer;
use aircomp::ofdm::{predict_composite, Conditions, OfdmConfig};
use aircomp::power::solve_optimal_policy;
use aircomp::sim::{
    fig10_scenario, fig7a_scenarios, fig7b_scenarios, fig9_scenario, run_sweep_with, FigureSeries, RunOptions,
    Scenario, SchemeChoice, SweepResult, CSV_HEADER,
};
use aircomp::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(name = "aircomp", version, about = "Over-the-air computation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON: one scenario or a list of labelled series.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Results format; both are written when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig7a,
    Fig7b,
    Fig9,
    Fig10,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a scenario sweep.
    Run(RunArgs),
    /// Runs one base scenario under several schemes with shared draws.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// JSON list of `{"label": .., "config": <scheme>}`.
        #[arg(long)]
        schemes: PathBuf,
    },
    /// Designs a ChannelComp constellation for a function on a quantizer grid.
    DesignConstellation {
        /// Function kind, e.g. sum, product, arithmetic_mean, majority_vote.
        #[arg(long)]
        function: String,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        nodes: usize,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values_t = [0.0, 1.0])]
        range: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 400)]
        iterations: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Checks a constellation for destructive overlaps.
    CheckConstellation {
        #[arg(long = "in")]
        input: PathBuf,
        /// Recomputes the function table with this function of the level values.
        #[arg(long)]
        function: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal power control for single-antenna nodes.
    PowerPolicy {
        /// Channel magnitudes as a JSON list.
        #[arg(long)]
        channels: String,
        /// Power budgets as a JSON list.
        #[arg(long)]
        budgets: String,
        #[arg(long)]
        noise: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregation beamformer for a MIMO scenario.
    MimoBeamform {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form composite coefficients of a synchronized OFDM uplink.
    SyncPredict {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Lists the available schemes.
    ListSchemes,
    /// Regenerates the data behind a published figure.
    Figure {
        #[arg(value_enum)]
        name: Figure,
        #[arg(long)]
        out: PathBuf,
        /// Trials per point; defaults to the published count.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    /// Completed, but the result violates a constraint.
    Infeasible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Json(e))
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Lib(e) => match e {
                Error::Unsupported(_) | Error::Constraint(_) => 3,
                Error::Numerical(_) => 4,
                _ => 2,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Infeasible(_) => "constraint",
            Failure::Lib(e) => match e {
                Error::Unsupported(_) => "unsupported",
                Error::Constraint(_) => "constraint",
                Error::Numerical(_) => "numerical",
                Error::Io(_) => "io",
                Error::Json(_) => "malformed_input",
                _ => "invalid_input",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Manifest {
    command: String,
    args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    version: &'static str,
    outputs: Vec<String>,
}

fn manifest(command: &str, scenario_hash: Option<String>, seed: Option<u64>, outputs: Vec<String>) -> Manifest {
    Manifest {
        command: command.to_string(),
        args: std::env::args().skip(1).collect(),
        scenario_hash,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        outputs,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))
}

/// Writes `value` with a sibling manifest to `out`, or prints it.
fn emit<T: Serialize>(command: &str, out: Option<&Path>, value: &T) -> CliResult<()> {
    match out {
        Some(p) => {
            write_json(p, value)?;
            write_sibling_manifest(command, p, None)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

/// `<file>.manifest.json` next to a single-file output.
fn write_sibling_manifest(command: &str, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let path = out.with_file_name(format!("{name}.manifest.json"));
    write_json(&path, &manifest(command, None, seed, vec![name]))
}

fn finish_manifest(dir: &Path, m: &Manifest) -> CliResult<()> {
    write_json(&dir.join("manifest.json"), m)
}

fn parse_list(name: &str, text: &str) -> CliResult<Vec<f64>> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("--{name} must be a JSON list of numbers: {e}")))
}

fn function_kind(name: &str) -> CliResult<FunctionKind> {
    Ok(match name {
        "sum" => FunctionKind::Sum,
        "arithmetic_mean" | "mean" => FunctionKind::ArithmeticMean,
        "product" => FunctionKind::Product,
        "majority_vote" => FunctionKind::MajorityVote,
        "maximum" | "max" => FunctionKind::Maximum { p0: 1.0 },
        "minimum" | "min" => FunctionKind::Minimum { p0: 1.0 },
        "geometric_mean" => FunctionKind::GeometricMean { p0: 1.0 },
        other => return Err(Failure::Usage(format!("unknown function '{other}'"))),
    })
}

/// Table of `name` over the given level values for `nodes` nodes.
fn function_table(name: &str, values: &[f64], nodes: usize) -> CliResult<FunctionTable> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = if hi > lo { Interval::new(lo, hi)? } else { Interval::new(lo, lo + 1.0)? };
    let spec = FunctionSpec::new(function_kind(name)?, range, nodes)?;
    let err = RefCell::new(None);
    let table = FunctionTable::from_levels(values, nodes, |v| match spec.evaluate(v) {
        Ok(f) => f,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    })?;
    match err.into_inner() {
        Some(e) => Err(e.into()),
        None => Ok(table),
    }
}

/// Scenario files hold either one scenario or a list of labelled series.
#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioFile {
    One(Scenario),
    Many(Vec<FigureSeries>),
}

fn run_series(series: &[FigureSeries], workers: usize) -> CliResult<Vec<(String, SweepResult)>> {
    series
        .iter()
        .map(|s| {
            log::info!("running {}", s.label);
            Ok((s.label.clone(), run_sweep_with(&s.scenario, &RunOptions { workers })?))
        })
        .collect()
}

fn write_results(dir: &Path, results: &[(String, SweepResult)], format: Option<Format>) -> CliResult<Vec<String>> {
    let mut outputs = Vec::new();
    if format != Some(Format::Json) {
        let mut f = fs::File::create(dir.join("results.csv"))?;
        writeln!(f, "{CSV_HEADER}")?;
        for (label, r) in results {
            r.write_csv_rows(label, &mut f)?;
        }
        outputs.push("results.csv".to_string());
    }
    if format != Some(Format::Csv) {
        let value: Vec<_> = results.iter().map(|(l, r)| json!({"series": l, "result": r})).collect();
        write_json(&dir.join("results.json"), &value)?;
        outputs.push("results.json".to_string());
    }
    Ok(outputs)
}

fn combined_hash(series: &[FigureSeries]) -> CliResult<String> {
    if series.len() == 1 {
        return Ok(series[0].scenario.hash()?);
    }
    let hashes = series.iter().map(|s| s.scenario.hash()).collect::<Result<Vec<_>, _>>()?;
    Ok(hashes.join("+"))
}

fn cmd_run(args: &RunArgs, extra: Option<&Path>) -> CliResult<()> {
    let mut series = match read_json::<ScenarioFile>(&args.scenario)? {
        ScenarioFile::One(s) => vec![FigureSeries {
            label: if s.name.is_empty() { s.scheme.name().to_string() } else { s.name.clone() },
            scenario: s,
        }],
        ScenarioFile::Many(v) => v,
    };
    if let Some(path) = extra {
        #[derive(Deserialize)]
        struct Labelled {
            label: String,
            config: SchemeChoice,
        }
        let schemes: Vec<Labelled> = read_json(path)?;
        let base = series
            .first()
            .ok_or_else(|| Failure::Usage("scenario file lists no series".into()))?
            .scenario
            .clone();
        series = schemes
            .into_iter()
            .map(|l| FigureSeries {
                scenario: Scenario {
                    name: l.label.clone(),
                    scheme: l.config,
                    ..base.clone()
                },
                label: l.label,
            })
            .collect();
    }
    if series.is_empty() {
        return Err(Failure::Usage("scenario file lists no series".into()));
    }
    if let Some(seed) = args.seed {
        series.iter_mut().for_each(|s| s.scenario.seed = seed);
    }
    prepare_dir(&args.out)?;
    let results = run_series(&series, args.workers)?;
    let outputs = write_results(&args.out, &results, args.format)?;
    let command = if extra.is_some() { "compare" } else { "run" };
    finish_manifest(
        &args.out,
        &manifest(command, Some(combined_hash(&series)?), Some(series[0].scenario.seed), outputs),
    )
}

fn long_rows(name: Figure, results: &[(String, SweepResult)]) -> Vec<(String, f64, f64)> {
    let mut rows = Vec::new();
    for (label, r) in results {
        for p in &r.points {
            let row = match name {
                Figure::Fig7a | Figure::Fig7b => (label.clone(), p.snr_db, p.report.nmse),
                Figure::Fig9 => (format!("snr={}dB", p.snr_db), p.phase_deviation_deg, p.report.mse),
                Figure::Fig10 => (
                    format!("snr={}dB,dev={}deg", p.snr_db, p.phase_deviation_deg),
                    p.num_nodes as f64,
                    p.report.mse,
                ),
            };
            rows.push(row);
        }
    }
    rows
}

fn cmd_figure(name: Figure, out: &Path, trials: Option<usize>, seed: u64, workers: usize) -> CliResult<()> {
    let series = match name {
        Figure::Fig7a => fig7a_scenarios(trials.unwrap_or(50_000), seed)?,
        Figure::Fig7b => fig7b_scenarios(trials.unwrap_or(50_000), seed)?,
        Figure::Fig9 => vec![FigureSeries {
            label: "fig9".into(),
            scenario: fig9_scenario(trials.unwrap_or(10_000), seed)?,
        }],
        Figure::Fig10 => vec![FigureSeries {
            label: "fig10".into(),
            scenario: fig10_scenario(trials.unwrap_or(10_000), seed)?,
        }],
    };
    prepare_dir(out)?;
    if series.len() == 1 {
        write_json(&out.join("scenario.json"), &series[0].scenario)?;
    } else {
        write_json(&out.join("scenario.json"), &series)?;
    }
    let results = run_series(&series, workers)?;
    let mut outputs = vec!["scenario.json".to_string()];
    outputs.extend(write_results(out, &results, Some(Format::Csv))?);
    let mut f = fs::File::create(out.join("plot.csv"))?;
    writeln!(f, "series,x,y")?;
    for (s, x, y) in long_rows(name, &results) {
        writeln!(f, "{s},{x},{y:e}")?;
    }
    outputs.push("plot.csv".to_string());
    finish_manifest(out, &manifest("figure", Some(combined_hash(&series)?), Some(seed), outputs))
}

fn fresh_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_design(
    function: &str,
    levels: usize,
    nodes: usize,
    range: &[f64],
    budget: f64,
    restarts: usize,
    iterations: usize,
    seed: Option<u64>,
    out: &Path,
) -> CliResult<()> {
    let seed = seed.unwrap_or_else(fresh_seed);
    let q = Quantizer::new(levels, Interval::new(range[0], range[1])?)?;
    let values = q.values();
    let table = function_table(function, &values, nodes)?;
    let opts = DesignOptions {
        restarts,
        iterations,
        tied: None,
        seed,
    };
    let outcome = optimize_channelcomp(&table, &vec![budget; nodes], &opts)?;
    let constellation = outcome.constellation.clone().with_level_values(values)?;
    prepare_dir(out)?;
    write_json(&out.join("constellation.json"), &constellation)?;
    constellation.write_csv(fs::File::create(out.join("constellation.csv"))?)?;
    let report = check_feasibility(&constellation)?;
    write_json(
        &out.join("design.json"),
        &json!({"delta": outcome.delta, "feasible": report.feasible, "tied": outcome.tied,
                "unconstrained": outcome.unconstrained}),
    )?;
    finish_manifest(
        out,
        &manifest(
            "design-constellation",
            None,
            Some(seed),
            vec!["constellation.json".into(), "constellation.csv".into(), "design.json".into()],
        ),
    )?;
    if report.feasible {
        Ok(())
    } else {
        Err(Failure::Infeasible(format!(
            "designed constellation has {} destructive overlaps",
            report.collisions.len()
        )))
    }
}

fn cmd_check(input: &Path, function: Option<&str>, out: Option<&Path>) -> CliResult<()> {
    let mut c: Constellation = read_json(input)?;
    if let Some(name) = function {
        let values = c
            .level_values
            .clone()
            .unwrap_or_else(|| (0..c.levels()).map(|i| i as f64).collect());
        c.function_table = function_table(name, &values, c.nodes())?;
    }
    let report = check_feasibility(&c)?;
    let value = json!({
        "feasible": report.feasible,
        "colliding_values": report.colliding_values(),
        "collisions": report.collisions,
        "delta": c.delta(),
    });
    emit("check-constellation", out, &value)?;
    if report.feasible {
        Ok(())
    } else {
        let pairs: Vec<String> = report
            .colliding_values()
            .iter()
            .map(|(a, b)| format!("f={a} / f={b}"))
            .collect();
        Err(Failure::Infeasible(format!("destructive overlaps: {}", pairs.join(", "))))
    }
}

#[derive(Deserialize)]
struct SyncScenario {
    config: OfdmConfig,
    realization: ChannelRealization,
    profile: ImpairmentProfile,
    #[serde(default = "all_conditions")]
    conditions: Conditions,
}

fn all_conditions() -> Conditions {
    Conditions::ALL
}

fn cmd_sync(path: &Path, out: Option<&Path>, format: Format) -> CliResult<()> {
    let s: SyncScenario = read_json(path)?;
    let m = predict_composite(&s.config, &s.realization, &s.profile, s.conditions)?;
    match (format, out) {
        (Format::Json, _) => emit("sync-predict", out, &m),
        (Format::Csv, Some(p)) => {
            m.write_csv(fs::File::create(p)?)?;
            write_sibling_manifest("sync-predict", p, None)
        }
        (Format::Csv, None) => Ok(m.write_csv(std::io::stdout().lock())?),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => cmd_run(&args, None),
        Command::Compare { run, schemes } => cmd_run(&run, Some(&schemes)),
        Command::DesignConstellation {
            function,
            levels,
            nodes,
            range,
            budget,
            restarts,
            iterations,
            seed,
            out,
        } => cmd_design(&function, levels, nodes, &range, budget, restarts, iterations, seed, &out),
        Command::CheckConstellation { input, function, out } => cmd_check(&input, function.as_deref(), out.as_deref()),
        Command::PowerPolicy {
            channels,
            budgets,
            noise,
            out,
        } => {
            let h = parse_list("channels", &channels)?;
            let p = parse_list("budgets", &budgets)?;
            let policy = solve_optimal_policy(&h, &p, noise)?;
            emit("power-policy", out.as_deref(), &policy)
        }
        Command::MimoBeamform { scenario, out } => {
            let s: MimoScenario = read_json(&scenario)?;
            let bf = aggregation_beamformer(&s)?;
            let mse = mimo_mse(&s, &bf)?;
            emit("mimo-beamform", out.as_deref(), &json!({"beamformer": bf, "mse": mse}))
        }
        Command::SyncPredict { scenario, out, format } => cmd_sync(&scenario, out.as_deref(), format),
        Command::ListSchemes => {
            for name in [
                "analog_da",
                "digital_bitwise",
                "tbma_fsk",
                "log_fsk",
                "dct_hybrid",
                "goldenbaum",
                "sum_comp",
                "channel_comp",
                "constellation",
            ] {
                println!("{name}");
            }
            Ok(())
        }
        Command::Figure {
            name,
            out,
            trials,
            seed,
            workers,
        } => cmd_figure(name, &out, trials, seed, workers),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AIRCOMP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": f.kind(), "message": f.message()}));
            ExitCode::from(f.code())
        }
    }
}
