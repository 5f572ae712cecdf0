//! Deterministic Monte Carlo engine.
//!
//! A [`Scenario`] fixes a function, a scheme, an input distribution, a
//! channel model and the sweep axes (node count, SNR, maximum phase
//! deviation). Every trial draws its readings, fading, phase errors and noise
//! from substreams keyed by `(trial, node, purpose)`, so all axis points and
//! all schemes run with the same draws at a given trial index and the result
//! does not depend on the number of worker threads.
//!
//! The superposition seen by the decoder is
//! `ỹ_l = Σ_k g_k x_{k,l} + √σ_eff² n_l` with `n_l ~ CN(0, 1)`. On an AWGN
//! channel `g_k = e^{jθ_k}` and `σ_eff² = σ²`. Under Rayleigh fading the
//! optimal power policy is solved on the true magnitudes per trial, giving
//! `g_k = √p_k |h_k| e^{jθ_k}/√η` and `σ_eff² = σ²/η`. `θ_k` is uniform on
//! `[−Δ, Δ]` for a maximum phase deviation `Δ`.

mod figures;
mod pipeline;

pub use figures::{fig10_scenario, fig7a_scenarios, fig7b_scenarios, fig9_scenario, FigureSeries};

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::channel::complex_gaussian;
use crate::constellation::Constellation;
use crate::domain::{compute_metrics_complex, FunctionKind, FunctionSpec, Interval, MetricsReport};
use crate::error::{invalid, Error, Result};
use crate::modem::SchemeConfig;
use crate::power::solve_optimal_policy;
use crate::rng::{MasterSeed, Purpose, StreamId, RECEIVER};
use pipeline::Pipeline;

/// Digital computation schemes built on constellations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum DigitalScheme {
    /// Lattice code on `φ(s)` quantized to `levels` points, decoded as a sum.
    SumComp { levels: usize, base: usize },
    /// Collinear ChannelComp constellation on `levels` input points at unit
    /// peak power.
    ChannelComp { levels: usize },
    /// Explicit per-node constellation with its function table.
    Constellation { constellation: Constellation },
}

/// Any scheme the engine can run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeChoice {
    Modem(SchemeConfig),
    Digital(DigitalScheme),
}

impl SchemeChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeChoice::Modem(c) => c.name(),
            SchemeChoice::Digital(DigitalScheme::SumComp { .. }) => "sum_comp",
            SchemeChoice::Digital(DigitalScheme::ChannelComp { .. }) => "channel_comp",
            SchemeChoice::Digital(DigitalScheme::Constellation { .. }) => "constellation",
        }
    }
}

/// Distribution of each node's reading.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum InputDistribution {
    /// Uniform over the input range.
    #[default]
    Uniform,
    /// Uniform over `count` equally spaced points spanning the input range.
    Levels { count: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Unit gains.
    #[default]
    Awgn,
    /// Unit-variance Rayleigh fading with optimal power control.
    Rayleigh,
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub function: FunctionSpec,
    pub scheme: SchemeChoice,
    #[serde(default)]
    pub inputs: InputDistribution,
    #[serde(default)]
    pub channel: ChannelModel,
    /// Per-user SNR points in dB; `"inf"` means noise-free.
    #[serde(with = "snr_list")]
    pub snr_db: Vec<f64>,
    /// Maximum phase deviations in degrees.
    #[serde(default = "zero_list")]
    pub phase_deviation_deg: Vec<f64>,
    /// Node counts to sweep; defaults to the function's `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_nodes: Option<Vec<usize>>,
    pub trials: usize,
    pub seed: u64,
    /// Outage threshold; defaults to 1% of the output range width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("a scenario needs at least one trial"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Empty("SNR list"));
        }
        if self.phase_deviation_deg.is_empty() {
            return Err(Error::Empty("phase deviation list"));
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(invalid("SNR values must be numbers or \"inf\""));
        }
        if let Some(&d) = self
            .phase_deviation_deg
            .iter()
            .find(|d| !(**d >= 0.0 && **d <= 180.0))
        {
            return Err(invalid(format!("phase deviation {d} must lie in [0, 180] degrees")));
        }
        match &self.num_nodes {
            Some(ks) if ks.is_empty() => return Err(Error::Empty("node count list")),
            Some(ks) if ks.contains(&0) => return Err(invalid("node counts must be >= 1")),
            _ => {}
        }
        if let InputDistribution::Levels { count } = self.inputs {
            if count < 2 {
                return Err(invalid("a level input distribution needs at least 2 levels"));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(invalid(format!("outage threshold must be > 0, got {e}")));
            }
        }
        Ok(())
    }

    /// Node counts on the sweep axis.
    pub fn node_counts(&self) -> Vec<usize> {
        self.num_nodes.clone().unwrap_or_else(|| vec![self.function.num_nodes])
    }

    /// The function with `K = k`.
    pub fn spec_for(&self, k: usize) -> Result<FunctionSpec> {
        FunctionSpec::new(self.function.kind.clone(), self.function.input_range, k)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&json)))
    }
}

/// One point of the sweep grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub num_nodes: usize,
    #[serde(with = "snr_value")]
    pub snr_db: f64,
    pub phase_deviation_deg: f64,
    pub report: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub scenario: String,
    pub scheme: String,
    pub scenario_hash: String,
    pub seed: u64,
    /// SHA-256 over every reading, channel, phase and noise substream id the
    /// sweep consumed. Equal digests mean equal draws.
    pub stream_digest: String,
    pub wall_time_s: f64,
    pub workers: usize,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub metadata: SweepMetadata,
}

pub const CSV_HEADER: &str = "series,num_nodes,snr_db,phase_deviation_deg,mse,nmse,outage_rate,cer,ci_halfwidth,trials";

impl SweepResult {
    /// Appends one CSV row per point, labelled with `series`.
    pub fn write_csv_rows<W: std::io::Write>(&self, series: &str, mut w: W) -> Result<()> {
        for p in &self.points {
            let r = &p.report;
            writeln!(
                w,
                "{series},{},{},{},{:e},{:e},{},{},{:e},{}",
                p.num_nodes,
                p.snr_db,
                p.phase_deviation_deg,
                r.mse,
                r.nmse,
                r.outage_rate,
                r.cer.map(|c| c.to_string()).unwrap_or_default(),
                r.confidence_halfwidth,
                r.trial_count
            )?;
        }
        Ok(())
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        self.write_csv_rows(&self.metadata.scenario, w)
    }

    /// The point at the given axis values, if present.
    pub fn point(&self, num_nodes: usize, snr_db: f64, phase_deviation_deg: f64) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.num_nodes == num_nodes && p.snr_db == snr_db && p.phase_deviation_deg == phase_deviation_deg)
    }
}

/// Execution options that do not affect results.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 0 }
    }
}

/// `σ²` for a per-user SNR with unit energy per node.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

fn draw_reading(seed: MasterSeed, trial: u64, node: u64, range: Interval, inputs: &InputDistribution) -> f64 {
    let mut rng = seed.substream(trial, node, Purpose::Reading);
    match inputs {
        InputDistribution::Uniform => range.lo + range.width() * rng.random::<f64>(),
        InputDistribution::Levels { count } => {
            let i = rng.random_range(0..*count);
            range.lo + range.width() * i as f64 / (*count - 1) as f64
        }
    }
}

/// Substream ids consumed by one trial with `k` nodes.
pub fn trial_stream_ids(trial: u64, k: usize, channel: ChannelModel) -> Vec<StreamId> {
    let mut ids = Vec::with_capacity(3 * k + 1);
    for node in 0..k as u64 {
        ids.push(StreamId {
            trial,
            node,
            purpose: Purpose::Reading,
        });
        if channel == ChannelModel::Rayleigh {
            ids.push(StreamId {
                trial,
                node,
                purpose: Purpose::Channel,
            });
        }
        ids.push(StreamId {
            trial,
            node,
            purpose: Purpose::Phase,
        });
    }
    ids.push(StreamId {
        trial,
        node: RECEIVER,
        purpose: Purpose::Noise,
    });
    ids
}

fn stream_digest(scenario: &Scenario) -> String {
    let mut h = Sha256::new();
    h.update(scenario.seed.to_le_bytes());
    for k in scenario.node_counts() {
        for t in 0..scenario.trials as u64 {
            for id in trial_stream_ids(t, k, scenario.channel) {
                h.update(id.trial.to_le_bytes());
                h.update(id.node.to_le_bytes());
                h.update(serde_json::to_vec(&id.purpose).unwrap_or_default());
            }
        }
    }
    hex::encode(h.finalize())
}

struct PointSetup {
    spec: FunctionSpec,
    pipeline: Pipeline,
    sigma2: f64,
    deviation: f64,
}

fn run_trial(scenario: &Scenario, setup: &PointSetup, trial: u64) -> Result<(f64, Complex64)> {
    let seed = MasterSeed(scenario.seed);
    let spec = &setup.spec;
    let k = spec.num_nodes;
    let values: Vec<f64> = (0..k as u64)
        .map(|n| draw_reading(seed, trial, n, spec.input_range, &scenario.inputs))
        .collect();
    let truth = spec.evaluate(&values)?;
    let phases: Vec<Complex64> = (0..k as u64)
        .map(|n| {
            let u: f64 = seed.substream(trial, n, Purpose::Phase).random_range(-1.0..=1.0);
            Complex64::from_polar(1.0, u * setup.deviation)
        })
        .collect();
    let (gains, noise) = match scenario.channel {
        ChannelModel::Awgn => (phases, setup.sigma2),
        ChannelModel::Rayleigh => {
            let mags: Vec<f64> = (0..k as u64)
                .map(|n| complex_gaussian(&mut seed.substream(trial, n, Purpose::Channel), 1.0).norm())
                .collect();
            let policy = solve_optimal_policy(&mags, &vec![1.0; k], setup.sigma2)?;
            let root = policy.eta.sqrt();
            let gains = phases
                .iter()
                .zip(&policy.powers)
                .zip(&mags)
                .map(|((ph, p), h)| ph * (p.sqrt() * h / root))
                .collect();
            (gains, setup.sigma2 / policy.eta)
        }
    };
    let x = setup.pipeline.encode(&values, seed, trial)?;
    let len = setup.pipeline.resources();
    let mut noise_rng = seed.substream(trial, RECEIVER, Purpose::Noise);
    let sd = noise.sqrt();
    let y: Vec<Complex64> = (0..len)
        .map(|l| {
            let s: Complex64 = x.iter().zip(&gains).map(|(xk, g)| g * xk[l]).sum();
            s + complex_gaussian(&mut noise_rng, 1.0) * sd
        })
        .collect();
    let est = setup.pipeline.decode(&y, noise)?;
    Ok((truth, est))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))
}

fn setup(scenario: &Scenario, k: usize, snr_db: f64, deviation_deg: f64) -> Result<PointSetup> {
    let spec = scenario.spec_for(k)?;
    let pipeline = Pipeline::new(&scenario.scheme, &spec, &scenario.inputs)?;
    Ok(PointSetup {
        spec,
        pipeline,
        sigma2: noise_variance(snr_db),
        deviation: deviation_deg.to_radians(),
    })
}

/// Per-trial `(truth, estimate)` pairs at one axis point, in trial order.
pub fn simulate_point(
    scenario: &Scenario,
    num_nodes: usize,
    snr_db: f64,
    phase_deviation_deg: f64,
    options: &RunOptions,
) -> Result<Vec<(f64, Complex64)>> {
    scenario.validate()?;
    let s = setup(scenario, num_nodes, snr_db, phase_deviation_deg)?;
    pool(options.workers)?.install(|| {
        (0..scenario.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(scenario, &s, t))
            .collect()
    })
}

/// Metrics for a list of per-trial outcomes.
pub fn summarize(spec: &FunctionSpec, outcomes: &[(f64, Complex64)], epsilon: Option<f64>) -> Result<MetricsReport> {
    let eps = epsilon.unwrap_or_else(|| 0.01 * spec.output_range().width());
    let eps = if eps > 0.0 { eps } else { 1e-9 };
    let truth: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let est: Vec<Complex64> = outcomes.iter().map(|o| o.1).collect();
    compute_metrics_complex(&truth, &est, eps, spec.kind.is_discrete())
}

pub fn run_sweep(scenario: &Scenario) -> Result<SweepResult> {
    run_sweep_with(scenario, &RunOptions::default())
}

pub fn run_sweep_with(scenario: &Scenario, options: &RunOptions) -> Result<SweepResult> {
    scenario.validate()?;
    let start = Instant::now();
    let pool = pool(options.workers)?;
    let mut points = Vec::new();
    for k in scenario.node_counts() {
        for &snr in &scenario.snr_db {
            for &dev in &scenario.phase_deviation_deg {
                let s = setup(scenario, k, snr, dev)?;
                let outcomes: Vec<(f64, Complex64)> = pool.install(|| {
                    (0..scenario.trials as u64)
                        .into_par_iter()
                        .map(|t| run_trial(scenario, &s, t))
                        .collect::<Result<_>>()
                })?;
                let report = summarize(&s.spec, &outcomes, scenario.epsilon)?;
                log::debug!("K={k} snr={snr} dev={dev}: mse {:e}", report.mse);
                points.push(SweepPoint {
                    num_nodes: k,
                    snr_db: snr,
                    phase_deviation_deg: dev,
                    report,
                });
            }
        }
    }
    Ok(SweepResult {
        points,
        metadata: SweepMetadata {
            scenario: scenario.name.clone(),
            scheme: scenario.scheme.name().to_string(),
            scenario_hash: scenario.hash()?,
            seed: scenario.seed,
            stream_digest: stream_digest(scenario),
            wall_time_s: start.elapsed().as_secs_f64(),
            workers: pool.current_num_threads(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

/// Analog sum over Rayleigh fading with optimal power control on the true
/// channels and per-node phase errors uniform on `[−Δ, Δ]`. Readings are
/// uniform on `[−√3, √3]`.
pub fn csi_error_scenario(node_counts: &[usize], snr_db: &[f64], deviations_deg: &[f64], trials: usize, seed: u64) -> Result<Scenario> {
    let k0 = *node_counts.first().ok_or(Error::Empty("node count list"))?;
    let r = 3f64.sqrt();
    Ok(Scenario {
        name: "csi_error".into(),
        function: FunctionSpec::new(FunctionKind::Sum, Interval::new(-r, r)?, k0)?,
        scheme: SchemeChoice::Modem(SchemeConfig::AnalogDa),
        inputs: InputDistribution::Uniform,
        channel: ChannelModel::Rayleigh,
        snr_db: snr_db.to_vec(),
        phase_deviation_deg: deviations_deg.to_vec(),
        num_nodes: Some(node_counts.to_vec()),
        trials,
        seed,
        epsilon: None,
    })
}

pub fn run_csi_error_experiment(
    node_counts: &[usize],
    snr_db: &[f64],
    deviations_deg: &[f64],
    trials: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<SweepResult> {
    run_sweep_with(&csi_error_scenario(node_counts, snr_db, deviations_deg, trials, seed)?, options)
}

/// Runs `base` once per scheme with the same seed, so every scheme sees the
/// same readings, channels, phase errors and noise at each trial index.
pub fn run_scheme_comparison(
    schemes: &[(String, SchemeChoice)],
    base: &Scenario,
    options: &RunOptions,
) -> Result<Vec<(String, SweepResult)>> {
    let mut scenarios = Vec::with_capacity(schemes.len());
    for (name, scheme) in schemes {
        let s = Scenario {
            name: name.clone(),
            scheme: scheme.clone(),
            ..base.clone()
        };
        s.validate()?;
        for k in s.node_counts() {
            Pipeline::new(&s.scheme, &s.spec_for(k)?, &s.inputs)?;
        }
        scenarios.push(s);
    }
    scenarios
        .iter()
        .map(|s| Ok((s.name.clone(), run_sweep_with(s, options)?)))
        .collect()
}

fn snr_to_json(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        v.into()
    }
}

fn snr_from_json<E: serde::de::Error>(v: serde_json::Value) -> std::result::Result<f64, E> {
    match v {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| E::custom("SNR out of range")),
        serde_json::Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        other => Err(E::custom(format!("SNR must be a number or \"inf\", got {other}"))),
    }
}

mod snr_value {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        snr_to_json(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        snr_from_json(serde_json::Value::deserialize(d)?)
    }
}

mod snr_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(|x| snr_to_json(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        Vec::<serde_json::Value>::deserialize(d)?
            .into_iter()
            .map(snr_from_json)
            .collect()
    }
}
