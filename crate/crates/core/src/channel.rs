//! Fading channel realizations, synchronization impairments and AWGN.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};

/// One multipath component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub gain: Complex64,
    /// Delay in seconds.
    pub delay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub flat_gains: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<Vec<Tap>>>,
    /// Noise variance per complex sample.
    pub noise_variance: f64,
}

impl ChannelRealization {
    pub fn flat(flat_gains: Vec<Complex64>, noise_variance: f64) -> Result<Self> {
        if flat_gains.is_empty() {
            return Err(Error::Empty("channel gains"));
        }
        if !(noise_variance >= 0.0) {
            return Err(invalid(format!("noise variance must be >= 0, got {noise_variance}")));
        }
        Ok(ChannelRealization {
            flat_gains,
            taps: None,
            noise_variance,
        })
    }

    /// Multipath realization. The flat gain of each node is set to its tap sum.
    pub fn multipath(taps: Vec<Vec<Tap>>, noise_variance: f64) -> Result<Self> {
        for (k, node) in taps.iter().enumerate() {
            if node.is_empty() {
                return Err(invalid(format!("node {k} has no taps")));
            }
            if node[0].delay < 0.0 {
                return Err(invalid(format!("node {k} has a negative delay")));
            }
            if node.windows(2).any(|w| w[1].delay <= w[0].delay) {
                return Err(invalid(format!("node {k} delays are not strictly increasing")));
            }
        }
        let flat = taps.iter().map(|n| n.iter().map(|t| t.gain).sum()).collect();
        let mut r = Self::flat(flat, noise_variance)?;
        r.taps = Some(taps);
        Ok(r)
    }

    pub fn with_noise_variance(mut self, noise_variance: f64) -> Self {
        self.noise_variance = noise_variance;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.flat_gains.len()
    }

    /// Taps of node `k`; a flat channel is a single tap at delay zero.
    pub fn node_taps(&self, k: usize) -> Vec<Tap> {
        match &self.taps {
            Some(t) => t[k].clone(),
            None => vec![Tap {
                gain: self.flat_gains[k],
                delay: 0.0,
            }],
        }
    }
}

/// Per-node carrier frequency, timing and phase offsets plus receiver timing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentProfile {
    /// Carrier frequency offsets in Hz.
    pub cfo: Vec<f64>,
    /// Transmit timing offsets in seconds.
    pub to: Vec<f64>,
    /// Phase offsets in radians, wrapped to (−π, π].
    pub po: Vec<f64>,
    /// Receiver timing offset in seconds.
    pub rx_to: f64,
    /// Receiver DFT back-off in seconds.
    pub backoff: f64,
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y == -PI {
        y = PI;
    }
    y
}

impl ImpairmentProfile {
    pub fn new(cfo: Vec<f64>, to: Vec<f64>, po: Vec<f64>, rx_to: f64, backoff: f64) -> Result<Self> {
        check_len(cfo.len(), to.len())?;
        check_len(cfo.len(), po.len())?;
        Ok(ImpairmentProfile {
            cfo,
            to,
            po: po.into_iter().map(wrap_phase).collect(),
            rx_to,
            backoff,
        })
    }

    /// Profile with every offset equal to zero.
    pub fn zero(k: usize) -> Self {
        ImpairmentProfile {
            cfo: vec![0.0; k],
            to: vec![0.0; k],
            po: vec![0.0; k],
            rx_to: 0.0,
            backoff: 0.0,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.po.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    PerUser,
    Total,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub snr_db: f64,
    pub reference: SnrReference,
}

impl SnrSpec {
    pub fn per_user(snr_db: f64) -> Self {
        SnrSpec {
            snr_db,
            reference: SnrReference::PerUser,
        }
    }
}

/// Noise variance giving the requested SNR for nodes of power `per_user_power`.
pub fn snr_to_noise_variance(spec: SnrSpec, per_user_power: f64, k: usize) -> Result<f64> {
    if !(per_user_power > 0.0) {
        return Err(invalid(format!("signal power must be > 0, got {per_user_power}")));
    }
    if spec.snr_db.is_nan() {
        return Err(invalid("SNR is NaN"));
    }
    let lin = 10f64.powf(spec.snr_db / 10.0);
    Ok(match spec.reference {
        SnrReference::PerUser => per_user_power / lin,
        SnrReference::Total => k as f64 * per_user_power / lin,
    })
}

/// One draw of CN(0, variance).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Independent unit-variance Rayleigh gains for `k` nodes, noiseless.
pub fn draw_rayleigh<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<ChannelRealization> {
    if k == 0 {
        return Err(invalid("a network needs at least one node"));
    }
    let gains = (0..k).map(|_| complex_gaussian(rng, 1.0)).collect();
    ChannelRealization::flat(gains, 0.0)
}

fn check_nodes(symbols: &[Vec<Complex64>], realization: &ChannelRealization) -> Result<usize> {
    if symbols.is_empty() {
        return Err(Error::Empty("node signals"));
    }
    check_len(realization.num_nodes(), symbols.len())?;
    let len = symbols[0].len();
    for s in symbols {
        check_len(len, s.len())?;
    }
    Ok(len)
}

/// `y = Σ_k h_k x_k + w` element-wise, `w ~ CN(0, σ²)`.
pub fn apply_flat_channel<R: Rng + ?Sized>(
    symbols: &[Vec<Complex64>],
    realization: &ChannelRealization,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let len = check_nodes(symbols, realization)?;
    let mut y = vec![Complex64::new(0.0, 0.0); len];
    for (x, h) in symbols.iter().zip(&realization.flat_gains) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += h * xi;
        }
    }
    add_noise(&mut y, realization.noise_variance, rng);
    Ok(y)
}

pub fn add_noise<R: Rng + ?Sized>(y: &mut [Complex64], variance: f64, rng: &mut R) {
    if variance > 0.0 {
        for yi in y.iter_mut() {
            *yi += complex_gaussian(rng, variance);
        }
    }
}

/// Minimum ratio of sample rate to the largest carrier frequency offset.
pub const CFO_OVERSAMPLING: f64 = 10.0;

/// Superposes sampled node waveforms through multipath taps with timing,
/// phase and frequency offsets.
///
/// All waveforms start at `t = 0` and are zero outside their support. Each
/// tap delay plus the node's timing offset is rounded to the nearest sample.
/// The receiver timing offset is not applied here.
pub fn apply_impairments<R: Rng + ?Sized>(
    baseband: &[Vec<Complex64>],
    profile: &ImpairmentProfile,
    realization: &ChannelRealization,
    sample_rate: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let len = check_nodes(baseband, realization)?;
    check_len(baseband.len(), profile.num_nodes())?;
    if !(sample_rate > 0.0) {
        return Err(invalid("sample rate must be positive"));
    }
    let max_cfo = profile.cfo.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    if sample_rate < CFO_OVERSAMPLING * max_cfo {
        return Err(invalid(format!(
            "sample rate {sample_rate} Hz cannot resolve a {max_cfo} Hz frequency offset"
        )));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); len];
    for (k, x) in baseband.iter().enumerate() {
        let rot = Complex64::from_polar(1.0, profile.po[k]);
        for tap in realization.node_taps(k) {
            let shift = ((tap.delay + profile.to[k]) * sample_rate).round();
            if shift.abs() >= len as f64 {
                return Err(invalid(format!(
                    "node {k}: delay of {shift} samples exceeds waveform length {len}"
                )));
            }
            let shift = shift as i64;
            let g = tap.gain * rot;
            for (n, yn) in y.iter_mut().enumerate() {
                let src = n as i64 - shift;
                if src < 0 || src >= len as i64 {
                    continue;
                }
                let t = n as f64 / sample_rate;
                let beat = Complex64::from_polar(1.0, 2.0 * PI * profile.cfo[k] * (t - tap.delay));
                *yn += g * x[src as usize] * beat;
            }
        }
    }
    add_noise(&mut y, realization.noise_variance, rng);
    Ok(y)
}
