//! Per-scheme encoders and decoders used by the Monte Carlo engine.
//!
//! Every pipeline maps the readings of one trial to per-node resource vectors
//! and turns the denoised superposition back into an estimate. Unless noted,
//! symbols are scaled so that a node spends unit average energy per
//! computation under the scenario's input distribution.

use num_complex::Complex64;

use super::{DigitalScheme, InputDistribution, SchemeChoice};
use crate::constellation::{build_demapper, pam_channelcomp, LinearSumDemapper, SumCompCode, SumConstellation};
use crate::domain::{decompose, FunctionKind, FunctionSpec, Interval, NomographicDecomposition};
use crate::error::{invalid, Error, Result};
use crate::modem::{
    bitwise_demodulate, bitwise_modulate_levels, dct_hybrid_demodulate, dct_hybrid_modulate, goldenbaum_demodulate,
    goldenbaum_modulate, logfsk_demodulate, logfsk_modulate, tbma_demodulate, Affine, DctHybridConfig, LogFskConfig,
    Quantizer, SchemeConfig,
};
use crate::rng::{MasterSeed, Purpose};

/// Points of the midpoint rule used for continuous input moments.
const MOMENT_POINTS: usize = 4096;

pub(crate) struct Pipeline {
    spec: FunctionSpec,
    kind: Kind,
    /// Receive-side division undoing the transmit energy normalization.
    scale: f64,
}

enum Kind {
    Analog {
        d: NomographicDecomposition,
        mean: f64,
        linear: bool,
    },
    Bitwise {
        q: Quantizer,
        base: u32,
        digits: u32,
    },
    Tbma {
        q: Quantizer,
    },
    LogFsk {
        q: Quantizer,
        cfg: LogFskConfig,
    },
    Dct {
        q: Quantizer,
        cfg: DctHybridConfig,
    },
    Goldenbaum {
        d: NomographicDecomposition,
        seq_len: usize,
        g: Affine,
        h: Affine,
    },
    SumComp {
        d: NomographicDecomposition,
        q: Quantizer,
        code: SumCompCode,
    },
    ChannelComp {
        d: NomographicDecomposition,
        q: Quantizer,
        points: Vec<Complex64>,
        lo: f64,
        hi: f64,
        demapper: LinearSumDemapper,
    },
    Designed {
        q: Quantizer,
        symbols: Vec<Vec<Complex64>>,
        demapper: SumConstellation,
    },
}

/// Mean of `g` over the input distribution.
fn expect(inputs: &InputDistribution, range: Interval, g: impl Fn(f64) -> f64) -> f64 {
    match inputs {
        InputDistribution::Uniform => {
            let w = range.width() / MOMENT_POINTS as f64;
            (0..MOMENT_POINTS)
                .map(|i| g(range.lo + (i as f64 + 0.5) * w))
                .sum::<f64>()
                / MOMENT_POINTS as f64
        }
        InputDistribution::Levels { count } => {
            let step = range.width() / (*count - 1) as f64;
            (0..*count).map(|i| g(range.lo + step * i as f64)).sum::<f64>() / *count as f64
        }
    }
}

fn quantizer(levels: usize, range: Interval) -> Result<Quantizer> {
    Quantizer::new(levels, range)
}

fn unit_scale(energy: f64) -> f64 {
    if energy > 0.0 {
        energy.sqrt()
    } else {
        1.0
    }
}

/// Range of `φ` over the input interval, found on a fine grid.
fn pre_range(d: &NomographicDecomposition, range: Interval) -> Result<Interval> {
    let n = 4096;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=n {
        let v = d.pre(range.lo + range.width() * i as f64 / n as f64);
        if !v.is_finite() {
            return Err(invalid("preprocessed values are not finite over the input range"));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Interval::new(lo, hi)
}

fn sum_like(spec: &FunctionSpec, scheme: &str) -> Result<()> {
    match spec.kind {
        FunctionKind::Sum | FunctionKind::ArithmeticMean => Ok(()),
        _ => Err(Error::Unsupported(format!(
            "{scheme} computes sums and means only, not {}",
            spec.kind.name()
        ))),
    }
}

impl Pipeline {
    pub(crate) fn new(scheme: &SchemeChoice, spec: &FunctionSpec, inputs: &InputDistribution) -> Result<Self> {
        let range = spec.input_range;
        let k = spec.num_nodes;
        let (kind, scale) = match scheme {
            SchemeChoice::Modem(cfg) => {
                cfg.validate()?;
                match cfg {
                    SchemeConfig::AnalogDa => {
                        let d = decompose(spec)?;
                        let mean = expect(inputs, range, |s| d.pre(s));
                        let energy = expect(inputs, range, |s| (d.pre(s) - mean).powi(2));
                        let linear = matches!(spec.kind, FunctionKind::Sum | FunctionKind::ArithmeticMean);
                        (Kind::Analog { d, mean, linear }, unit_scale(energy))
                    }
                    SchemeConfig::DigitalBitwise { base, digits } => {
                        sum_like(spec, "bitwise aggregation")?;
                        let levels = cfg.quantizer_levels().unwrap_or(0);
                        let p = *base as f64;
                        let energy = *digits as f64 * (p * p - 1.0) / 3.0;
                        (
                            Kind::Bitwise {
                                q: quantizer(levels, range)?,
                                base: *base,
                                digits: *digits,
                            },
                            unit_scale(energy),
                        )
                    }
                    SchemeConfig::TbmaFsk { levels } => (
                        Kind::Tbma {
                            q: quantizer(*levels, range)?,
                        },
                        1.0,
                    ),
                    SchemeConfig::LogFsk(c) => {
                        sum_like(spec, "Log-FSK")?;
                        if c.max_bin(k) >= c.samples {
                            return Err(invalid(format!(
                                "Log-FSK with {k} nodes needs more than {} samples",
                                c.samples
                            )));
                        }
                        let energy = (0..c.levels)
                            .map(|v| logfsk_modulate(v, c).map(|w| w.iter().map(|x| x * x).sum::<f64>()))
                            .sum::<Result<f64>>()?
                            / c.levels as f64;
                        (
                            Kind::LogFsk {
                                q: quantizer(c.levels, range)?,
                                cfg: *c,
                            },
                            unit_scale(energy),
                        )
                    }
                    SchemeConfig::DctHybrid(c) => {
                        if k != 1 {
                            return Err(Error::Unsupported("the DCT hybrid waveform serves a single transmitter".into()));
                        }
                        let energy = (0..c.grid)
                            .map(|s| dct_hybrid_modulate(s, c).map(|w| w.iter().map(|x| x * x).sum::<f64>()))
                            .sum::<Result<f64>>()?
                            / c.grid as f64;
                        (
                            Kind::Dct {
                                q: quantizer(c.grid, range)?,
                                cfg: c.clone(),
                            },
                            unit_scale(energy),
                        )
                    }
                    SchemeConfig::Goldenbaum { seq_len, g, h } => (
                        Kind::Goldenbaum {
                            d: decompose(spec)?,
                            seq_len: *seq_len,
                            g: *g,
                            h: *h,
                        },
                        1.0,
                    ),
                }
            }
            SchemeChoice::Digital(DigitalScheme::SumComp { levels, base }) => {
                let code = SumCompCode::new(*levels, *base)?;
                let d = decompose(spec)?;
                let q = quantizer(*levels, pre_range(&d, range)?)?;
                (Kind::SumComp { d, q, code }, unit_scale(code.energy()))
            }
            SchemeChoice::Digital(DigitalScheme::ChannelComp { levels }) => {
                let d = decompose(spec)?;
                let q = quantizer(*levels, range)?;
                let inner: Vec<f64> = q.values().iter().map(|&v| d.pre(v)).collect();
                let points = pam_channelcomp(&inner, 1.0)?;
                let lo = inner.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = inner.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let demapper = LinearSumDemapper::new(&inner, k)?;
                (
                    Kind::ChannelComp {
                        d,
                        q,
                        points,
                        lo,
                        hi,
                        demapper,
                    },
                    1.0,
                )
            }
            SchemeChoice::Digital(DigitalScheme::Constellation { constellation: c }) => {
                if c.nodes() != k {
                    return Err(invalid(format!(
                        "constellation serves {} nodes, scenario has {k}",
                        c.nodes()
                    )));
                }
                let demapper = build_demapper(c, 0.0)?;
                (
                    Kind::Designed {
                        q: quantizer(c.levels(), range)?,
                        symbols: c.per_node_symbols.clone(),
                        demapper,
                    },
                    1.0,
                )
            }
        };
        Ok(Pipeline {
            spec: spec.clone(),
            kind,
            scale,
        })
    }

    /// Number of complex resources per computation.
    pub(crate) fn resources(&self) -> usize {
        match &self.kind {
            Kind::Analog { .. } | Kind::SumComp { .. } | Kind::ChannelComp { .. } | Kind::Designed { .. } => 1,
            Kind::Bitwise { digits, .. } => *digits as usize,
            Kind::Tbma { q } => q.levels,
            Kind::LogFsk { cfg, .. } => cfg.samples,
            Kind::Dct { cfg, .. } => cfg.samples,
            Kind::Goldenbaum { seq_len, .. } => *seq_len,
        }
    }

    /// Per-node transmit vectors for one trial.
    pub(crate) fn encode(&self, values: &[f64], seed: MasterSeed, trial: u64) -> Result<Vec<Vec<Complex64>>> {
        let c = |x: f64| Complex64::new(x / self.scale, 0.0);
        let real = |w: Vec<f64>| w.into_iter().map(c).collect::<Vec<_>>();
        match &self.kind {
            Kind::Analog { d, mean, .. } => values
                .iter()
                .map(|&s| {
                    let a = d.pre(s);
                    if a.is_finite() {
                        Ok(vec![c(a - mean)])
                    } else {
                        Err(invalid(format!("preprocessed value of {s} is not finite")))
                    }
                })
                .collect(),
            Kind::Bitwise { q, base, digits } => {
                let levels: Vec<usize> = values.iter().map(|&s| q.quantize(s)).collect();
                let x = bitwise_modulate_levels(&levels, *base, *digits)?;
                Ok(x.into_iter().map(|v| v.into_iter().map(|a| a / self.scale).collect()).collect())
            }
            Kind::Tbma { q } => Ok(values
                .iter()
                .map(|&s| {
                    let mut v = vec![Complex64::new(0.0, 0.0); q.levels];
                    v[q.quantize(s)] = Complex64::new(1.0, 0.0);
                    v
                })
                .collect()),
            Kind::LogFsk { q, cfg } => values.iter().map(|&s| logfsk_modulate(q.quantize(s), cfg).map(real)).collect(),
            Kind::Dct { q, cfg } => values
                .iter()
                .map(|&s| dct_hybrid_modulate(q.quantize(s), cfg).map(real))
                .collect(),
            Kind::Goldenbaum { d, seq_len, g, .. } => values
                .iter()
                .enumerate()
                .map(|(k, &s)| {
                    let mut rng = seed.substream(trial, k as u64, Purpose::Sequence);
                    goldenbaum_modulate(g.apply(d.pre(s)), *seq_len, &mut rng)
                })
                .collect(),
            Kind::SumComp { d, q, code } => {
                let center = code.center();
                values
                    .iter()
                    .map(|&s| Ok(vec![(code.map(q.quantize(d.pre(s)))? - center) / self.scale]))
                    .collect()
            }
            Kind::ChannelComp { q, points, .. } => Ok(values.iter().map(|&s| vec![points[q.quantize(s)]]).collect()),
            Kind::Designed { q, symbols, .. } => Ok(values
                .iter()
                .enumerate()
                .map(|(k, &s)| vec![symbols[k][q.quantize(s)]])
                .collect()),
        }
    }

    /// Fallback estimate when a detector finds nothing.
    fn center(&self) -> Complex64 {
        let r = self.spec.output_range();
        Complex64::new(0.5 * (r.lo + r.hi), 0.0)
    }

    /// Estimate from the denoised superposition `y` with residual noise
    /// variance `noise` per resource.
    pub(crate) fn decode(&self, y: &[Complex64], noise: f64) -> Result<Complex64> {
        let k = self.spec.num_nodes;
        let kf = k as f64;
        let re = |v: f64| Complex64::new(v, 0.0);
        let lin: Vec<f64> = y.iter().map(|v| v.re * self.scale).collect();
        let est = match &self.kind {
            Kind::Analog { d, mean, linear } => {
                let z = y[0] * self.scale + kf * mean;
                if *linear {
                    // ψ is linear for sums and means, so the quadrature part
                    // passes through and counts as error
                    let sum_re = d.post(z.re);
                    let slope = d.post(1.0) - d.post(0.0);
                    Complex64::new(sum_re, slope * z.im)
                } else {
                    re(d.post(z.re))
                }
            }
            Kind::Bitwise { q, base, .. } => {
                let mean_level = bitwise_demodulate(&lin, k, *base);
                re(level_to_output(&self.spec, q, mean_level * kf))
            }
            Kind::Tbma { q } => match tbma_demodulate(&lin, &self.spec, k, q) {
                Ok(v) => re(v),
                Err(Error::Numerical(m)) => {
                    log::debug!("TBMA detection failed: {m}");
                    self.center()
                }
                Err(e) => return Err(e),
            },
            Kind::LogFsk { q, cfg } => match logfsk_demodulate(&lin, k, cfg) {
                Ok(det) => re(level_to_output(&self.spec, q, det.level_sum as f64)),
                Err(Error::Numerical(m)) => {
                    log::debug!("Log-FSK detection failed: {m}");
                    self.center()
                }
                Err(e) => return Err(e),
            },
            Kind::Dct { cfg, .. } => re(dct_hybrid_demodulate(&lin, cfg)?.value),
            Kind::Goldenbaum { d, h, .. } => re(d.post(goldenbaum_demodulate(y, noise, h))),
            Kind::SumComp { d, q, code } => {
                let z = y[0] * self.scale + code.center() * kf;
                let levels = code.decode(z, k) as f64;
                re(d.post(kf * q.range.lo + q.step() * levels))
            }
            Kind::ChannelComp {
                d, lo, hi, demapper, ..
            } => {
                let u = kf * lo + (y[0].re + kf) * (hi - lo) / 2.0;
                re(d.post(demapper.nearest(u)))
            }
            Kind::Designed { demapper, .. } => re(demapper.demap(y[0])),
        };
        Ok(est)
    }
}

/// Output value for a sum of quantizer level indices.
fn level_to_output(spec: &FunctionSpec, q: &Quantizer, level_sum: f64) -> f64 {
    let k = spec.num_nodes as f64;
    let total = k * q.range.lo + q.step() * level_sum;
    match spec.kind {
        FunctionKind::ArithmeticMean => total / k,
        _ => total,
    }
}
