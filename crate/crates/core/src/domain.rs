//! Readings, target functions, nomographic decompositions and error metrics.
//!
//! A target function `f(s_1, .., s_K)` is nomographic when it can be written as
//! `Ψ(ψ(Σ_k φ(s_k)))`. The channel computes the inner sum; nodes apply `φ`
//! and the receiver applies `ψ` and `Ψ`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};

/// Closed real interval `[lo, hi]`, serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval { lo: v[0], hi: v[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(invalid(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval { lo: 0.0, hi: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                value: x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// A node's readout `s_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub value: f64,
    pub node_id: usize,
}

impl Reading {
    /// Wraps plain values as readings with node ids `1..=K`.
    pub fn from_values(values: &[f64]) -> Vec<Reading> {
        values
            .iter()
            .enumerate()
            .map(|(i, &value)| Reading {
                value,
                node_id: i + 1,
            })
            .collect()
    }
}

/// The family of target functions.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionKind {
    ArithmeticMean,
    Sum,
    MajorityVote,
    PNorm { p: f64 },
    GeometricMean { p0: f64 },
    Maximum { p0: f64 },
    Minimum { p0: f64 },
    Product,
    Custom { name: String },
}

impl FunctionKind {
    pub fn name(&self) -> &str {
        match self {
            FunctionKind::ArithmeticMean => "arithmetic_mean",
            FunctionKind::Sum => "sum",
            FunctionKind::MajorityVote => "majority_vote",
            FunctionKind::PNorm { .. } => "p_norm",
            FunctionKind::GeometricMean { .. } => "geometric_mean",
            FunctionKind::Maximum { .. } => "maximum",
            FunctionKind::Minimum { .. } => "minimum",
            FunctionKind::Product => "product",
            FunctionKind::Custom { .. } => "custom",
        }
    }

    /// True when the decomposition only approximates the function.
    pub fn is_approximate(&self) -> bool {
        matches!(
            self,
            FunctionKind::GeometricMean { .. } | FunctionKind::Maximum { .. } | FunctionKind::Minimum { .. }
        )
    }

    /// True when the function takes values on a discrete set.
    pub fn is_discrete(&self) -> bool {
        matches!(self, FunctionKind::MajorityVote)
    }
}

/// Target function with its input domain and node count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunctionSpec", into = "RawFunctionSpec")]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    pub input_range: Interval,
    pub num_nodes: usize,
}

#[derive(Serialize, Deserialize)]
struct RawFunctionSpec {
    kind: String,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
    input_range: Interval,
    #[serde(rename = "K")]
    k: usize,
}

impl TryFrom<RawFunctionSpec> for FunctionSpec {
    type Error = Error;

    fn try_from(raw: RawFunctionSpec) -> Result<Self> {
        let num = |key: &str| -> Result<f64> {
            raw.params
                .get(key)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| invalid(format!("{} needs numeric parameter '{key}'", raw.kind)))
        };
        let kind = match raw.kind.as_str() {
            "arithmetic_mean" => FunctionKind::ArithmeticMean,
            "sum" => FunctionKind::Sum,
            "majority_vote" => FunctionKind::MajorityVote,
            "p_norm" => FunctionKind::PNorm { p: num("p")? },
            "geometric_mean" => FunctionKind::GeometricMean { p0: num("p0")? },
            "maximum" => FunctionKind::Maximum { p0: num("p0")? },
            "minimum" => FunctionKind::Minimum { p0: num("p0")? },
            "product" => FunctionKind::Product,
            "custom" => FunctionKind::Custom {
                name: raw
                    .params
                    .get("name")
                    .and_then(|v| v.as_str())
                    .unwrap_or("custom")
                    .to_string(),
            },
            other => return Err(invalid(format!("unknown function kind '{other}'"))),
        };
        FunctionSpec::new(kind, raw.input_range, raw.k)
    }
}

impl From<FunctionSpec> for RawFunctionSpec {
    fn from(spec: FunctionSpec) -> Self {
        let mut params = serde_json::Map::new();
        match &spec.kind {
            FunctionKind::PNorm { p } => {
                params.insert("p".into(), (*p).into());
            }
            FunctionKind::GeometricMean { p0 } | FunctionKind::Maximum { p0 } | FunctionKind::Minimum { p0 } => {
                params.insert("p0".into(), (*p0).into());
            }
            FunctionKind::Custom { name } => {
                params.insert("name".into(), name.clone().into());
            }
            _ => {}
        }
        RawFunctionSpec {
            kind: spec.kind.name().to_string(),
            params,
            input_range: spec.input_range,
            k: spec.num_nodes,
        }
    }
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind, input_range: Interval, num_nodes: usize) -> Result<Self> {
        if num_nodes == 0 {
            return Err(invalid("function needs at least one node"));
        }
        Interval::new(input_range.lo, input_range.hi)?;
        match kind {
            FunctionKind::PNorm { p } if !(p > 0.0 && p.is_finite()) => {
                return Err(invalid(format!("p-norm needs p > 0, got {p}")))
            }
            FunctionKind::GeometricMean { p0 } | FunctionKind::Maximum { p0 } | FunctionKind::Minimum { p0 }
                if !(p0 > 0.0 && p0.is_finite()) =>
            {
                return Err(invalid(format!("precision p0 must be > 0, got {p0}")))
            }
            FunctionKind::GeometricMean { .. } | FunctionKind::Product if input_range.lo < 0.0 => {
                return Err(invalid(format!("{} needs a nonnegative input range", kind.name())))
            }
            _ => {}
        }
        Ok(FunctionSpec {
            kind,
            input_range,
            num_nodes,
        })
    }

    /// Image of `input_range^K` under the function.
    pub fn output_range(&self) -> Interval {
        let Interval { lo, hi } = self.input_range;
        let k = self.num_nodes as f64;
        match self.kind {
            FunctionKind::ArithmeticMean
            | FunctionKind::GeometricMean { .. }
            | FunctionKind::Maximum { .. }
            | FunctionKind::Minimum { .. }
            | FunctionKind::Custom { .. } => self.input_range,
            FunctionKind::Sum => Interval { lo: k * lo, hi: k * hi },
            FunctionKind::MajorityVote => Interval { lo: -1.0, hi: 1.0 },
            FunctionKind::PNorm { p } => {
                let small = if self.input_range.contains(0.0) { 0.0 } else { lo.abs().min(hi.abs()) };
                let big = lo.abs().max(hi.abs());
                let s = k.powf(1.0 / p);
                Interval { lo: s * small, hi: s * big }
            }
            FunctionKind::Product => {
                let n = self.num_nodes as i32;
                let mut vals: Vec<f64> = (0..=n).map(|a| lo.powi(a) * hi.powi(n - a)).collect();
                if self.input_range.contains(0.0) {
                    vals.push(0.0);
                }
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Interval { lo: min, hi: max }
            }
        }
    }

    /// Evaluates `f` directly on plain values. This is the ground truth every
    /// scheme is compared against.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64> {
        if values.is_empty() {
            return Err(Error::Empty("readings"));
        }
        check_len(self.num_nodes, values.len())?;
        for &v in values {
            self.input_range.check(v)?;
        }
        Ok(self.evaluate_unchecked(values))
    }

    pub(crate) fn evaluate_unchecked(&self, values: &[f64]) -> f64 {
        let k = values.len() as f64;
        match &self.kind {
            FunctionKind::ArithmeticMean => values.iter().sum::<f64>() / k,
            FunctionKind::Sum => values.iter().sum(),
            FunctionKind::MajorityVote => sign(values.iter().map(|&x| sign(x)).sum()),
            FunctionKind::PNorm { p } => values.iter().map(|x| x.abs().powf(*p)).sum::<f64>().powf(1.0 / p),
            FunctionKind::GeometricMean { .. } => {
                if values.iter().any(|&x| x == 0.0) {
                    0.0
                } else {
                    (values.iter().map(|x| x.ln()).sum::<f64>() / k).exp()
                }
            }
            FunctionKind::Maximum { .. } => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            FunctionKind::Minimum { .. } => values.iter().cloned().fold(f64::INFINITY, f64::min),
            FunctionKind::Product => values.iter().product(),
            FunctionKind::Custom { .. } => f64::NAN,
        }
    }
}

/// `sign(x)` with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Ground-truth evaluation of `spec` on a list of readings.
pub fn evaluate_function(spec: &FunctionSpec, readings: &[Reading]) -> Result<f64> {
    if readings.is_empty() {
        return Err(Error::Empty("readings"));
    }
    if matches!(spec.kind, FunctionKind::Custom { .. }) {
        return Err(Error::Unsupported("custom functions have no built-in evaluator".into()));
    }
    let values: Vec<f64> = readings.iter().map(|r| r.value).collect();
    spec.evaluate(&values)
}

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Combiner = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `f(s) ≈ Ψ(ψ_1(Σφ(s_k)), .., ψ_L(Σφ(s_k)))`.
#[derive(Clone)]
pub struct NomographicDecomposition {
    pub preprocess: ScalarMap,
    pub postprocess: Vec<ScalarMap>,
    pub aggregate: Combiner,
    /// Constant added to every reading before `φ` so that it sees a
    /// nonnegative argument. Undone inside the postprocessing.
    pub input_shift: f64,
    /// Sup-norm approximation error measured over the input box. Zero for
    /// exact decompositions.
    pub epsilon: f64,
    pub exact: bool,
}

impl fmt::Debug for NomographicDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NomographicDecomposition")
            .field("num_resources", &self.num_resources())
            .field("input_shift", &self.input_shift)
            .field("epsilon", &self.epsilon)
            .field("exact", &self.exact)
            .finish()
    }
}

impl NomographicDecomposition {
    pub fn num_resources(&self) -> usize {
        self.postprocess.len()
    }

    pub fn pre(&self, x: f64) -> f64 {
        (self.preprocess)(x)
    }

    /// Applies every `ψ_l` to the aggregated value and combines them with `Ψ`.
    pub fn post(&self, y: f64) -> f64 {
        let parts: Vec<f64> = self.postprocess.iter().map(|p| p(y)).collect();
        (self.aggregate)(&parts)
    }

    /// Full noise-free composition `Ψ(ψ(Σφ(s_k)))`.
    pub fn compose(&self, values: &[f64]) -> f64 {
        self.post(values.iter().map(|&x| self.pre(x)).sum())
    }
}

fn identity_combiner() -> Combiner {
    Arc::new(|v: &[f64]| v[0])
}

/// Returns the standard `(φ, ψ)` pair for `spec` with a single resource.
pub fn decompose(spec: &FunctionSpec) -> Result<NomographicDecomposition> {
    let k = spec.num_nodes as f64;
    let lo = spec.input_range.lo;
    let (pre, post, shift): (ScalarMap, ScalarMap, f64) = match spec.kind {
        FunctionKind::ArithmeticMean => (Arc::new(move |x| x / k), Arc::new(|y| y), 0.0),
        FunctionKind::Sum => (Arc::new(|x| x), Arc::new(|y| y), 0.0),
        FunctionKind::MajorityVote => (Arc::new(sign), Arc::new(sign), 0.0),
        FunctionKind::PNorm { p } => (Arc::new(move |x: f64| x.abs().powf(p)), Arc::new(move |y: f64| y.powf(1.0 / p)), 0.0),
        FunctionKind::Product => {
            if lo <= 0.0 {
                return Err(Error::Unsupported("product decomposition needs strictly positive inputs".into()));
            }
            (Arc::new(|x: f64| x.ln()), Arc::new(|y: f64| y.exp()), 0.0)
        }
        FunctionKind::GeometricMean { p0 } => (
            Arc::new(move |x: f64| (x + 1.0 / p0).ln()),
            Arc::new(move |y: f64| (y / k).exp()),
            0.0,
        ),
        FunctionKind::Maximum { p0 } => {
            let c = (-lo).max(0.0);
            (
                Arc::new(move |x: f64| (x + c).powf(p0)),
                Arc::new(move |y: f64| y.powf(1.0 / p0) - c),
                c,
            )
        }
        FunctionKind::Minimum { p0 } => {
            let c = (-lo).max(0.0);
            (
                Arc::new(move |x: f64| (x + c).powf(-p0)),
                Arc::new(move |y: f64| y.powf(-1.0 / p0) - c),
                c,
            )
        }
        FunctionKind::Custom { .. } => {
            return Err(Error::Unsupported("custom functions supply their own decomposition".into()))
        }
    };
    let mut d = NomographicDecomposition {
        preprocess: pre,
        postprocess: vec![post],
        aggregate: identity_combiner(),
        input_shift: shift,
        epsilon: 0.0,
        exact: !spec.kind.is_approximate(),
    };
    if !d.exact {
        d.epsilon = measure_sup_error(spec, &d);
    }
    Ok(d)
}

/// Number of random points used when measuring an approximation error.
pub const EPSILON_GRID_POINTS: usize = 10_000;

/// Sup-norm error of `d` against `spec` over two-level configurations of the
/// input box plus a fixed pseudo-random point cloud.
pub fn measure_sup_error(spec: &FunctionSpec, d: &NomographicDecomposition) -> f64 {
    let k = spec.num_nodes;
    let Interval { lo, hi } = spec.input_range;
    let mut worst: f64 = 0.0;
    let mut probe = |v: &[f64]| {
        let err = (d.compose(v) - spec.evaluate_unchecked(v)).abs();
        if err.is_finite() {
            worst = worst.max(err);
        } else if !err.is_nan() {
            worst = f64::INFINITY;
        }
    };
    let levels = 21;
    let level = |i: usize| lo + (hi - lo) * i as f64 / (levels - 1) as f64;
    let mut v = vec![0.0; k];
    for a in 0..levels {
        for b in a..levels {
            for j in 0..=k {
                for (i, x) in v.iter_mut().enumerate() {
                    *x = if i < j { level(a) } else { level(b) };
                }
                probe(&v);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_E951);
    for _ in 0..EPSILON_GRID_POINTS {
        for x in v.iter_mut() {
            *x = rng.random_range(lo..=hi);
        }
        probe(&v);
    }
    worst
}

/// Accumulated error statistics over a set of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub nmse: f64,
    pub epsilon: f64,
    pub outage_rate: f64,
    pub cer: Option<f64>,
    pub trial_count: usize,
    /// Half-width of the normal-approximation 95% confidence interval of `mse`.
    pub confidence_halfwidth: f64,
}

/// Relative tolerance under which two discrete outputs count as equal.
const DISCRETE_TOL: f64 = 1e-9;

pub fn compute_metrics(truth: &[f64], estimates: &[f64], epsilon: f64, discrete: bool) -> Result<MetricsReport> {
    check_len(truth.len(), estimates.len())?;
    let errors: Vec<f64> = truth.iter().zip(estimates).map(|(t, e)| (t - e).abs()).collect();
    metrics_from_errors(truth, &errors, epsilon, discrete)
}

/// Metrics of complex estimates of a real function; the error of a trial is
/// `|f̂ − f|`, so the quadrature component counts as error.
pub fn compute_metrics_complex(
    truth: &[f64],
    estimates: &[Complex64],
    epsilon: f64,
    discrete: bool,
) -> Result<MetricsReport> {
    check_len(truth.len(), estimates.len())?;
    let errors: Vec<f64> = truth.iter().zip(estimates).map(|(t, e)| (e - t).norm()).collect();
    metrics_from_errors(truth, &errors, epsilon, discrete)
}

fn metrics_from_errors(truth: &[f64], errors: &[f64], epsilon: f64, discrete: bool) -> Result<MetricsReport> {
    if truth.is_empty() {
        return Err(Error::Empty("trials"));
    }
    if !(epsilon > 0.0) {
        return Err(invalid(format!("outage threshold must be > 0, got {epsilon}")));
    }
    let n = truth.len() as f64;
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mse = sq.iter().sum::<f64>() / n;
    let power = truth.iter().map(|t| t * t).sum::<f64>() / n;
    let nmse = if power == 0.0 {
        if mse == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        mse / power
    };
    let outages = errors.iter().filter(|e| !(**e < epsilon)).count();
    let cer = discrete.then(|| {
        let wrong = truth
            .iter()
            .zip(errors)
            .filter(|(t, e)| !(**e <= DISCRETE_TOL * t.abs().max(1.0)))
            .count();
        wrong as f64 / n
    });
    let halfwidth = if truth.len() > 1 {
        let var = sq.iter().map(|s| (s - mse) * (s - mse)).sum::<f64>() / (n - 1.0);
        1.96 * (var / n).sqrt()
    } else {
        0.0
    };
    Ok(MetricsReport {
        mse,
        nmse,
        epsilon,
        outage_rate: outages as f64 / n,
        cer,
        trial_count: truth.len(),
        confidence_halfwidth: halfwidth,
    })
}
