//! Log-FSK: a logarithmically predistorted tone whose exponential at the
//! receiver turns the channel sum into a product of tones.
//!
//! Node `k` with level `v_k` sends `A·ln(√(2/T)·cos(π(2v_k+1)t/(2T)) + α)`.
//! After `exp(y/A)` the highest frequency present is `Σ_k(2v_k+1)/(4T)`,
//! which reveals `Σ_k v_k`. The waveform is observed on `N` midpoint samples
//! of `[0, 2T)`, where every multiple of `1/(4T)` is an exact DCT-II bin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFskConfig {
    pub alpha: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Tone period parameter `T` in seconds.
    pub duration: f64,
    pub samples: usize,
    /// Number of quantization levels (tones).
    pub levels: usize,
    /// Relative magnitude, against the strongest bin, that a bin must exceed
    /// to count as present.
    #[serde(default = "default_ratio")]
    pub threshold_ratio: f64,
}

fn one() -> f64 {
    1.0
}

fn default_ratio() -> f64 {
    1e-6
}

impl LogFskConfig {
    pub fn new(alpha: f64, duration: f64, samples: usize, levels: usize) -> Result<Self> {
        let c = LogFskConfig {
            alpha,
            amplitude: 1.0,
            duration,
            samples,
            levels,
            threshold_ratio: default_ratio(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.amplitude > 0.0) {
            return Err(invalid("Log-FSK needs positive duration and amplitude"));
        }
        if self.levels < 1 || self.samples < 2 {
            return Err(invalid("Log-FSK needs at least one level and two samples"));
        }
        if !(self.alpha > (2.0 / self.duration).sqrt()) {
            return Err(invalid(format!(
                "alpha {} must exceed the tone amplitude {} to keep the log argument positive",
                self.alpha,
                (2.0 / self.duration).sqrt()
            )));
        }
        if !(self.threshold_ratio > 0.0 && self.threshold_ratio < 1.0) {
            return Err(invalid("threshold ratio must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn time(&self, n: usize) -> f64 {
        (n as f64 + 0.5) * 2.0 * self.duration / self.samples as f64
    }

    /// Highest frequency bin that `k` superposed nodes can produce.
    pub fn max_bin(&self, k: usize) -> usize {
        k * (2 * self.levels - 1)
    }
}

pub fn logfsk_modulate(level: usize, cfg: &LogFskConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if level >= cfg.levels {
        return Err(invalid(format!("level {level} exceeds {} tones", cfg.levels)));
    }
    let amp = (2.0 / cfg.duration).sqrt();
    (0..cfg.samples)
        .map(|n| {
            let t = cfg.time(n);
            let arg = amp * (PI * (2 * level + 1) as f64 * t / (2.0 * cfg.duration)).cos() + cfg.alpha;
            if arg > 0.0 {
                Ok(cfg.amplitude * arg.ln())
            } else {
                Err(invalid("log argument is not positive"))
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFskDetection {
    /// Detected top frequency in units of `1/(4T)`.
    pub bin: usize,
    /// `Σ_k v_k` implied by the detected bin.
    pub level_sum: usize,
}

fn dct_bin(z: &[f64], bin: usize) -> f64 {
    let n = z.len() as f64;
    let s: f64 = z
        .iter()
        .enumerate()
        .map(|(i, &x)| x * (PI * bin as f64 * (i as f64 + 0.5) / n).cos())
        .sum();
    s * 2.0 / n
}

/// Tone detection on the exponentiated superposition `z`.
///
/// The DC bin is removed and the top band is scanned: bins with the parity of
/// `K` between `K` and `K(2M−1)`. The highest one whose magnitude exceeds
/// `threshold_ratio` times the strongest non-DC bin wins.
pub fn logfsk_detect(z: &[f64], k: usize, cfg: &LogFskConfig) -> Result<LogFskDetection> {
    if z.len() != cfg.samples {
        return Err(Error::LengthMismatch {
            expected: cfg.samples,
            found: z.len(),
        });
    }
    let top = cfg.max_bin(k);
    if top >= cfg.samples {
        return Err(invalid(format!(
            "{} samples cannot resolve frequency bin {top}",
            cfg.samples
        )));
    }
    let mags: Vec<f64> = (0..=top).map(|b| if b == 0 { 0.0 } else { dct_bin(z, b).abs() }).collect();
    let strongest = mags.iter().cloned().fold(0.0, f64::max);
    if strongest == 0.0 {
        return Err(Error::Numerical("no tone present".into()));
    }
    let bin = (0..=(top - k) / 2)
        .rev()
        .map(|j| k + 2 * j)
        .find(|&b| mags[b] > cfg.threshold_ratio * strongest)
        .ok_or_else(|| Error::Numerical("no tone in the top band".into()))?;
    Ok(LogFskDetection {
        bin,
        level_sum: (bin - k) / 2,
    })
}

/// Exponentiates the received real waveform and detects the top tone.
pub fn logfsk_demodulate(y: &[f64], k: usize, cfg: &LogFskConfig) -> Result<LogFskDetection> {
    let z: Vec<f64> = y.iter().map(|v| (v / cfg.amplitude).exp()).collect();
    logfsk_detect(&z, k, cfg)
}

#[cfg(test)]
mod test {
    use super::*;

    fn cfg() -> LogFskConfig {
        LogFskConfig::new(1.5, 2.0, 256, 8).unwrap()
    }

    fn superpose(levels: &[usize], c: &LogFskConfig) -> Vec<f64> {
        let mut y = vec![0.0; c.samples];
        for &v in levels {
            for (a, b) in y.iter_mut().zip(logfsk_modulate(v, c).unwrap()) {
                *a += b;
            }
        }
        y
    }

    #[test]
    fn two_nodes_give_sum_frequency() {
        let c = cfg();
        for (v1, v2) in [(0, 0), (1, 3), (7, 7), (2, 6)] {
            let d = logfsk_demodulate(&superpose(&[v1, v2], &c), 2, &c).unwrap();
            assert_eq!(d.bin / 2, v1 + v2 + 1);
            assert_eq!(d.level_sum, v1 + v2);
        }
    }

    #[test]
    fn single_node_detects_its_level() {
        let c = cfg();
        for v in 0..8 {
            assert_eq!(logfsk_demodulate(&superpose(&[v], &c), 1, &c).unwrap().level_sum, v);
        }
    }

    #[test]
    fn exp_inverts_log() {
        let c = cfg();
        let x = logfsk_modulate(3, &c).unwrap();
        let amp = (2.0 / c.duration).sqrt();
        for (n, v) in x.iter().enumerate() {
            let cosine = (v.exp() - c.alpha) / amp;
            let expect = (PI * 7.0 * c.time(n) / (2.0 * c.duration)).cos();
            assert!((cosine - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_must_exceed_tone_amplitude() {
        assert!(LogFskConfig::new(1.0, 2.0, 64, 4).is_err());
        assert!(LogFskConfig::new(0.6, 8.0, 64, 4).is_ok());
    }

    #[test]
    fn scaling_keeps_detection() {
        let c = cfg();
        let y = superpose(&[2, 5, 1], &c);
        let z: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        let base = logfsk_detect(&z, 3, &c).unwrap();
        for s in [1e-3, 0.5, 7.0, 1e4] {
            let scaled: Vec<f64> = z.iter().map(|v| v * s).collect();
            assert_eq!(logfsk_detect(&scaled, 3, &c).unwrap(), base);
        }
        assert_eq!(base.level_sum, 8);
    }
}
