//! Hybrid amplitude/frequency waveform built from a truncated DCT of the
//! target function.
//!
//! For data index `s` on a grid of `G` points the transmitter sends
//! `A·Σ_i w_i F_i cos(2π·i(2s+1)·t/(4T))`, i.e. the inverse DCT with a time
//! index appended. The receiver finds `s` from the tone family and reads the
//! amplitudes `F_i` back. The waveform is observed on `N` midpoint samples of
//! `[0, 2T)`, where every tone falls on an exact DCT-II bin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DctHybridConfig {
    /// Orthonormal DCT-II coefficients `F_0..F_{I−1}` of the target function.
    pub coeffs: Vec<f64>,
    /// Number of grid points `G` the data index ranges over.
    pub grid: usize,
    /// Tone period parameter `T` in seconds.
    pub duration: f64,
    pub samples: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

fn weight(i: usize, grid: usize) -> f64 {
    if i == 0 {
        (1.0 / grid as f64).sqrt()
    } else {
        (2.0 / grid as f64).sqrt()
    }
}

/// Orthonormal DCT-II of `f` sampled on its grid.
pub fn dct_coefficients(f: &[f64]) -> Vec<f64> {
    let g = f.len();
    (0..g)
        .map(|i| {
            weight(i, g)
                * f.iter()
                    .enumerate()
                    .map(|(n, v)| v * (PI * i as f64 * (2 * n + 1) as f64 / (2.0 * g as f64)).cos())
                    .sum::<f64>()
        })
        .collect()
}

impl DctHybridConfig {
    /// Configuration carrying the first `terms` DCT coefficients of `f`.
    pub fn from_function(f: &[f64], terms: usize, duration: f64, samples: usize) -> Result<Self> {
        let mut coeffs = dct_coefficients(f);
        coeffs.truncate(terms);
        let c = DctHybridConfig {
            coeffs,
            grid: f.len(),
            duration,
            samples,
            amplitude: 1.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(invalid("DCT hybrid needs at least one coefficient"));
        }
        if self.grid < 1 || !(self.duration > 0.0 && self.amplitude > 0.0) {
            return Err(invalid("DCT hybrid needs a nonempty grid and positive duration"));
        }
        let top = (self.coeffs.len() - 1) * (2 * self.grid - 1);
        if top >= self.samples {
            return Err(invalid(format!(
                "Nyquist violation: tone bin {top} needs more than {} samples",
                self.samples
            )));
        }
        Ok(())
    }

    /// Value of the truncated inverse DCT at grid index `s`.
    pub fn approximation(&self, s: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, f)| weight(i, self.grid) * f * (PI * i as f64 * (2 * s + 1) as f64 / (2.0 * self.grid as f64)).cos())
            .sum()
    }

    fn bin(&self, i: usize, s: usize) -> usize {
        i * (2 * s + 1)
    }
}

pub fn dct_hybrid_modulate(s: usize, cfg: &DctHybridConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if s >= cfg.grid {
        return Err(invalid(format!("index {s} outside grid of {}", cfg.grid)));
    }
    let n = cfg.samples as f64;
    Ok((0..cfg.samples)
        .map(|m| {
            cfg.coeffs
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let b = cfg.bin(i, s) as f64;
                    weight(i, cfg.grid) * f * (PI * b * (m as f64 + 0.5) / n).cos()
                })
                .sum::<f64>()
                * cfg.amplitude
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DctEstimate {
    pub index: usize,
    pub coeffs: Vec<f64>,
    pub value: f64,
}

fn bin_amplitude(y: &[f64], b: usize) -> f64 {
    let n = y.len() as f64;
    let s: f64 = y
        .iter()
        .enumerate()
        .map(|(m, v)| v * (PI * b as f64 * (m as f64 + 0.5) / n).cos())
        .sum();
    if b == 0 {
        s / n
    } else {
        2.0 * s / n
    }
}

/// Matched-filter search over the grid followed by amplitude readout.
pub fn dct_hybrid_demodulate(y: &[f64], cfg: &DctHybridConfig) -> Result<DctEstimate> {
    cfg.validate()?;
    if y.len() != cfg.samples {
        return Err(Error::LengthMismatch {
            expected: cfg.samples,
            found: y.len(),
        });
    }
    let n = cfg.samples as f64;
    let top = (cfg.coeffs.len() - 1) * (2 * cfg.grid - 1);
    let amps: Vec<f64> = (0..=top).map(|b| bin_amplitude(y, b)).collect();
    let energy = |b: usize| if b == 0 { n * amps[0] * amps[0] } else { 0.5 * n * amps[b] * amps[b] };
    let mut best = (0, f64::NEG_INFINITY);
    for s in 0..cfg.grid {
        let captured: f64 = (0..cfg.coeffs.len()).map(|i| energy(cfg.bin(i, s))).sum();
        if captured > best.1 {
            best = (s, captured);
        }
    }
    let s = best.0;
    let coeffs: Vec<f64> = (0..cfg.coeffs.len())
        .map(|i| amps[cfg.bin(i, s)] / (cfg.amplitude * weight(i, cfg.grid)))
        .collect();
    let est = DctHybridConfig {
        coeffs: coeffs.clone(),
        ..cfg.clone()
    };
    Ok(DctEstimate {
        index: s,
        value: est.approximation(s),
        coeffs,
    })
}
