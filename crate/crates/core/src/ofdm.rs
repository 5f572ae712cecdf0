//! OFDM framing with a cyclic prefix, receiver back-off and the composite
//! per-subcarrier coefficient under timing, phase and frequency offsets.
//!
//! Time is measured on a common axis where a perfectly synchronized node
//! starts its cyclic prefix at `−T_cp` and its core symbol at `0`. Node `k`
//! shifts both by its timing offset `Δt_k`. The receiver, itself offset by
//! `Δt_rx`, opens its DFT window `t_bo` after the nominal prefix start, so the
//! window covers `[t_bo − Δt_rx − T_cp, t_bo − Δt_rx)` and the DFT phase
//! reference is `t_bo − Δt_rx`. With
//! `d_k = t_bo − Δt_rx − Δt_k`, every path of node `k` lands inside the
//! prefix when `0 ≤ d_k − τ_w ≤ T_cp`, and subcarrier `ℓ` then sees
//! `H_{k,ℓ}·e^{jΔθ_k}·e^{j2πℓ d_k/T_sym}` with
//! `H_{k,ℓ} = Σ_w h_{k,w} e^{−j2πℓτ_{k,w}/T_sym}`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{add_noise, ChannelRealization, ImpairmentProfile};
use crate::error::{check_len, invalid, Error, Result};
use crate::modem::SampledWaveform;

/// Default oversampling factor of the time-domain pipeline.
pub const DEFAULT_OVERSAMPLING: usize = 4;

/// Relative tolerance on timing comparisons, as a fraction of `T_sym`.
const TIME_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub num_subcarriers: usize,
    /// Core symbol duration `T_sym` in seconds.
    pub symbol_duration: f64,
    /// Cyclic prefix duration `T_cp` in seconds.
    pub cp_duration: f64,
    /// Receiver back-off `t_bo` into the prefix, in seconds.
    pub backoff: f64,
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
}

fn default_oversampling() -> usize {
    DEFAULT_OVERSAMPLING
}

impl OfdmConfig {
    pub fn new(num_subcarriers: usize, symbol_duration: f64, cp_duration: f64, backoff: f64) -> Result<Self> {
        let c = OfdmConfig {
            num_subcarriers,
            symbol_duration,
            cp_duration,
            backoff,
            oversampling: DEFAULT_OVERSAMPLING,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_oversampling(mut self, oversampling: usize) -> Result<Self> {
        self.oversampling = oversampling;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_subcarriers == 0 {
            return Err(invalid("at least one subcarrier is required"));
        }
        if !(self.symbol_duration > 0.0) || !self.symbol_duration.is_finite() {
            return Err(invalid("symbol duration must be positive"));
        }
        if !(self.cp_duration >= 0.0) || !self.cp_duration.is_finite() {
            return Err(invalid("cyclic prefix duration must be >= 0"));
        }
        if !(self.backoff >= 0.0 && self.backoff <= self.cp_duration) {
            return Err(invalid(format!(
                "back-off {} must lie in [0, {}]",
                self.backoff, self.cp_duration
            )));
        }
        if self.oversampling == 0 {
            return Err(invalid("oversampling must be >= 1"));
        }
        Ok(())
    }

    /// Samples per core symbol.
    pub fn samples_per_symbol(&self) -> usize {
        self.num_subcarriers * self.oversampling
    }

    pub fn sample_rate(&self) -> f64 {
        self.samples_per_symbol() as f64 / self.symbol_duration
    }

    /// DFT phase reference for a receiver timing offset `rx_to`.
    pub fn window_reference(&self, rx_to: f64) -> f64 {
        self.backoff - rx_to
    }

    /// First instant of the DFT window.
    pub fn window_start(&self, rx_to: f64) -> f64 {
        self.window_reference(rx_to) - self.cp_duration
    }

    fn tol(&self) -> f64 {
        TIME_TOL * self.symbol_duration
    }
}

/// One node's continuous-time OFDM symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct OfdmSymbol {
    pub symbols: Vec<Complex64>,
    /// Transmit timing offset `Δt_k` in seconds.
    pub timing: f64,
    pub config: OfdmConfig,
}

impl OfdmSymbol {
    pub fn new(symbols: Vec<Complex64>, config: OfdmConfig, timing: f64) -> Result<Self> {
        config.validate()?;
        check_len(config.num_subcarriers, symbols.len())?;
        if !timing.is_finite() {
            return Err(invalid("timing offset must be finite"));
        }
        Ok(OfdmSymbol { symbols, timing, config })
    }

    /// Support `[−T_cp + Δt, T_sym + Δt)`.
    pub fn support(&self) -> (f64, f64) {
        (
            self.timing - self.config.cp_duration,
            self.timing + self.config.symbol_duration,
        )
    }

    /// Waveform value at `t`, zero outside the support.
    pub fn eval(&self, t: f64) -> Complex64 {
        let (lo, hi) = self.support();
        if t < lo - self.config.tol() || t >= hi {
            return Complex64::new(0.0, 0.0);
        }
        self.eval_periodic(t)
    }

    /// Cyclic extension of the core symbol, defined for every `t`.
    fn eval_periodic(&self, t: f64) -> Complex64 {
        let x = (t - self.timing) / self.config.symbol_duration;
        self.symbols
            .iter()
            .enumerate()
            .map(|(q, a)| a * Complex64::from_polar(1.0, 2.0 * PI * q as f64 * x))
            .sum()
    }
}

/// Samples node `k`'s OFDM symbol, prefix included, at `Q × oversampling`
/// samples per core symbol starting at `−T_cp + Δt_k`.
pub fn ofdm_modulate(symbols: &[Complex64], config: &OfdmConfig, timing: f64) -> Result<SampledWaveform> {
    let sym = OfdmSymbol::new(symbols.to_vec(), *config, timing)?;
    let fs = config.sample_rate();
    let (lo, hi) = sym.support();
    let count = (((hi - lo) * fs) - TIME_TOL * config.samples_per_symbol() as f64).ceil() as usize;
    let samples = (0..count).map(|n| sym.eval_periodic(lo + n as f64 / fs)).collect();
    Ok(SampledWaveform {
        start: lo,
        sample_rate: fs,
        samples,
    })
}

/// Which of the three synchronization conditions hold.
///
/// 1: the phase offsets do not vary in time. 2: the timing offsets relative
/// to the receiver back-off do not jitter. 3: there is no carrier frequency
/// offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub static_phase: bool,
    pub static_timing: bool,
    pub zero_cfo: bool,
}

impl Conditions {
    pub const ALL: Conditions = Conditions {
        static_phase: true,
        static_timing: true,
        zero_cfo: true,
    };
}

/// Composite coefficient per node (rows) and subcarrier (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeMatrix {
    pub values: Vec<Vec<Complex64>>,
}

impl CompositeMatrix {
    pub fn num_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.values[k][l]
    }

    /// Noise-free receiver output `Σ_k C_{k,ℓ} a_{k,ℓ}` per subcarrier.
    pub fn apply(&self, symbols: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
        check_len(self.num_nodes(), symbols.len())?;
        let q = self.num_subcarriers();
        let mut out = vec![Complex64::new(0.0, 0.0); q];
        for (row, a) in self.values.iter().zip(symbols) {
            check_len(q, a.len())?;
            for l in 0..q {
                out[l] += row[l] * a[l];
            }
        }
        Ok(out)
    }

    /// Writes `k,l,re,im` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,l,re,im")?;
        for (k, row) in self.values.iter().enumerate() {
            for (l, c) in row.iter().enumerate() {
                writeln!(w, "{k},{l},{},{}", c.re, c.im)?;
            }
        }
        Ok(())
    }
}

/// Multipath frequency response `Σ_w h_w e^{−j2πℓτ_w/T_sym}` of node `k`.
pub fn frequency_response(realization: &ChannelRealization, k: usize, l: usize, symbol_duration: f64) -> Complex64 {
    realization
        .node_taps(k)
        .iter()
        .map(|t| t.gain * Complex64::from_polar(1.0, -2.0 * PI * l as f64 * t.delay / symbol_duration))
        .sum()
}

fn check_profile(config: &OfdmConfig, realization: &ChannelRealization, profile: &ImpairmentProfile) -> Result<()> {
    config.validate()?;
    check_len(realization.num_nodes(), profile.num_nodes())?;
    check_len(profile.num_nodes(), profile.to.len())?;
    check_len(profile.num_nodes(), profile.cfo.len())?;
    Ok(())
}

/// Checks that every path of every node falls inside the cyclic prefix.
pub fn check_cp_margin(config: &OfdmConfig, realization: &ChannelRealization, profile: &ImpairmentProfile) -> Result<()> {
    check_profile(config, realization, profile)?;
    let tol = config.tol();
    for k in 0..profile.num_nodes() {
        let d = config.window_reference(profile.rx_to) - profile.to[k];
        for tap in realization.node_taps(k) {
            let m = d - tap.delay;
            if m < -tol || m > config.cp_duration + tol {
                return Err(Error::Constraint(format!(
                    "node {k}: net offset {d} with path delay {} leaves the cyclic prefix [0, {}]",
                    tap.delay, config.cp_duration
                )));
            }
        }
    }
    Ok(())
}

/// Closed-form composite coefficients `H_{k,ℓ}·e^{jΔθ_k}·e^{j2πℓ d_k/T_sym}`.
///
/// Requires all three conditions and a profile without frequency offsets.
pub fn predict_composite(
    config: &OfdmConfig,
    realization: &ChannelRealization,
    profile: &ImpairmentProfile,
    conditions: Conditions,
) -> Result<CompositeMatrix> {
    let missing: Vec<&str> = [
        (conditions.static_phase, "static phase"),
        (conditions.static_timing, "static timing"),
        (conditions.zero_cfo, "zero CFO"),
    ]
    .iter()
    .filter(|(ok, _)| !ok)
    .map(|(_, n)| *n)
    .collect();
    if !missing.is_empty() {
        return Err(Error::Unsupported(format!(
            "closed form needs the conditions: {}",
            missing.join(", ")
        )));
    }
    check_profile(config, realization, profile)?;
    if let Some(k) = profile.cfo.iter().position(|&f| f != 0.0) {
        return Err(Error::Unsupported(format!(
            "node {k} has a frequency offset of {} Hz",
            profile.cfo[k]
        )));
    }
    check_cp_margin(config, realization, profile)?;
    let t = config.symbol_duration;
    let values = (0..profile.num_nodes())
        .map(|k| {
            let d = config.window_reference(profile.rx_to) - profile.to[k];
            let rot = Complex64::from_polar(1.0, profile.po[k]);
            (0..config.num_subcarriers)
                .map(|l| {
                    frequency_response(realization, k, l, t)
                        * rot
                        * Complex64::from_polar(1.0, 2.0 * PI * l as f64 * d / t)
                })
                .collect()
        })
        .collect();
    Ok(CompositeMatrix { values })
}

/// DC-subcarrier coefficient of every node.
pub fn single_carrier_view(matrix: &CompositeMatrix) -> Result<Vec<Complex64>> {
    if matrix.num_subcarriers() == 0 {
        return Err(Error::Empty("composite matrix has no subcarriers"));
    }
    Ok(matrix.values.iter().map(|row| row[0]).collect())
}

/// Received superposition sampled on the receiver grid.
///
/// Each node's continuous-time waveform passes through its taps with phase
/// offset `Δθ_k` and frequency offset `Δf_k` (applied as
/// `e^{j2πΔf_k(t−τ)}`), and the sum is evaluated exactly at the receiver
/// sample instants. The grid is aligned with the DFT window and spans every
/// arriving path. Complex AWGN with the realization's noise variance is added.
pub fn superpose<R: Rng + ?Sized>(
    symbols: &[Vec<Complex64>],
    config: &OfdmConfig,
    realization: &ChannelRealization,
    profile: &ImpairmentProfile,
    rng: &mut R,
) -> Result<SampledWaveform> {
    check_profile(config, realization, profile)?;
    check_len(profile.num_nodes(), symbols.len())?;
    let nodes = symbols
        .iter()
        .enumerate()
        .map(|(k, a)| OfdmSymbol::new(a.clone(), *config, profile.to[k]))
        .collect::<Result<Vec<_>>>()?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (k, n) in nodes.iter().enumerate() {
        let (a, b) = n.support();
        for tap in realization.node_taps(k) {
            lo = lo.min(a + tap.delay);
            hi = hi.max(b + tap.delay);
        }
    }
    let fs = config.sample_rate();
    let ts = config.window_start(profile.rx_to);
    lo = lo.min(ts);
    hi = hi.max(ts + config.symbol_duration);
    let n_lo = ((lo - ts) * fs).floor() as i64;
    let n_hi = ((hi - ts) * fs).ceil() as i64;
    let start = ts + n_lo as f64 / fs;
    let mut samples = Vec::with_capacity((n_hi - n_lo) as usize);
    for n in n_lo..n_hi {
        let t = ts + n as f64 / fs;
        let mut r = Complex64::new(0.0, 0.0);
        for (k, node) in nodes.iter().enumerate() {
            let rot = Complex64::from_polar(1.0, profile.po[k]);
            for tap in realization.node_taps(k) {
                let x = node.eval(t - tap.delay);
                if x == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let beat = Complex64::from_polar(1.0, 2.0 * PI * profile.cfo[k] * (t - tap.delay));
                r += tap.gain * rot * beat * x;
            }
        }
        samples.push(r);
    }
    add_noise(&mut samples, realization.noise_variance, rng);
    Ok(SampledWaveform {
        start,
        sample_rate: fs,
        samples,
    })
}

/// Index of the first DFT-window sample inside `waveform`.
fn window_offset(waveform: &SampledWaveform, config: &OfdmConfig, rx_to: f64) -> Result<usize> {
    let fs = config.sample_rate();
    if (waveform.sample_rate - fs).abs() > 1e-9 * fs {
        return Err(invalid(format!(
            "waveform sample rate {} differs from the OFDM rate {fs}",
            waveform.sample_rate
        )));
    }
    let pos = (config.window_start(rx_to) - waveform.start) * fs;
    let idx = pos.round();
    if (pos - idx).abs() > 1e-6 {
        return Err(invalid("DFT window is not aligned with the sample grid"));
    }
    let n = config.samples_per_symbol();
    if idx < 0.0 || idx as usize + n > waveform.samples.len() {
        return Err(Error::OutOfRange {
            value: config.window_start(rx_to),
            lo: waveform.start,
            hi: waveform.time(waveform.samples.len()),
        });
    }
    Ok(idx as usize)
}

/// All `Q × oversampling` DFT bins of the receiver window,
/// `Y_ℓ = (1/N) Σ_n r(t_n) e^{−j2πℓ(t_n − t_ref)/T_sym}`.
pub fn window_dft(waveform: &SampledWaveform, config: &OfdmConfig, rx_to: f64) -> Result<Vec<Complex64>> {
    config.validate()?;
    let off = window_offset(waveform, config, rx_to)?;
    let n = config.samples_per_symbol();
    let win = &waveform.samples[off..off + n];
    // t_n − t_ref = n·T/N − T_cp
    let cp_turns = config.cp_duration / config.symbol_duration;
    Ok((0..n)
        .map(|l| {
            let s: Complex64 = win
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let turns = ((l * i) % n) as f64 / n as f64;
                    r * Complex64::from_polar(1.0, -2.0 * PI * turns)
                })
                .sum();
            s * Complex64::from_polar(1.0, 2.0 * PI * l as f64 * cp_turns) / n as f64
        })
        .collect())
}

/// Projects the receiver window onto the `Q` subcarriers.
pub fn receive_dft(waveform: &SampledWaveform, config: &OfdmConfig, rx_to: f64) -> Result<Vec<Complex64>> {
    let mut y = window_dft(waveform, config, rx_to)?;
    y.truncate(config.num_subcarriers);
    Ok(y)
}

/// Time-domain samples inside the receiver window.
pub fn window_samples<'a>(waveform: &'a SampledWaveform, config: &OfdmConfig, rx_to: f64) -> Result<&'a [Complex64]> {
    let off = window_offset(waveform, config, rx_to)?;
    Ok(&waveform.samples[off..off + config.samples_per_symbol()])
}

#[cfg(test)]
mod test {
    use super::*;
    use crate::channel::Tap;
    use crate::rng::{MasterSeed, Purpose};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg(q: usize) -> OfdmConfig {
        OfdmConfig::new(q, 1.0, 0.25, 0.125).unwrap()
    }

    fn sup(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn config_validation() {
        assert!(OfdmConfig::new(4, 1.0, 0.25, 0.3).is_err());
        assert!(OfdmConfig::new(0, 1.0, 0.25, 0.1).is_err());
        assert!(cfg(4).with_oversampling(0).is_err());
        assert_eq!(cfg(4).samples_per_symbol(), 16);
    }

    #[test]
    fn dc_subcarrier_is_constant() {
        let w = ofdm_modulate(&[c(1.0, 0.0)], &cfg(1), 0.0).unwrap();
        assert_eq!(w.samples.len(), 5);
        assert!(w.samples.iter().all(|s| (s - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn single_subcarrier_is_a_tone() {
        let conf = cfg(4);
        let mut a = vec![c(0.0, 0.0); 4];
        a[2] = c(1.0, 0.0);
        let w = ofdm_modulate(&a, &conf, 0.0).unwrap();
        for (n, s) in w.samples.iter().enumerate() {
            let t = w.time(n);
            assert!((s - Complex64::from_polar(1.0, 2.0 * PI * 2.0 * t)).norm() < 1e-12);
        }
    }

    #[test]
    fn cyclic_prefix_repeats_the_tail() {
        let conf = cfg(4);
        let a = vec![c(1.0, -0.5), c(0.3, 0.2), c(-1.0, 0.0), c(0.0, 0.7)];
        let w = ofdm_modulate(&a, &conf, 0.1).unwrap();
        let ncp = 4;
        let n = conf.samples_per_symbol();
        assert_eq!(w.samples.len(), n + ncp);
        for i in 0..ncp {
            assert!((w.samples[i] - w.samples[i + n]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_offsets_unit_tap() {
        let conf = OfdmConfig::new(8, 1.0, 0.25, 0.0).unwrap();
        let r = ChannelRealization::flat(vec![c(1.0, 0.0)], 0.0).unwrap();
        let m = predict_composite(&conf, &r, &ImpairmentProfile::zero(1), Conditions::ALL).unwrap();
        assert!(m.values[0].iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn quarter_symbol_offset_rotates_first_subcarrier() {
        let conf = OfdmConfig::new(4, 1.0, 0.25, 0.25).unwrap();
        let r = ChannelRealization::flat(vec![c(1.0, 0.0)], 0.0).unwrap();
        let m = predict_composite(&conf, &r, &ImpairmentProfile::zero(1), Conditions::ALL).unwrap();
        assert!((m.get(0, 1) - c(0.0, 1.0)).norm() < 1e-12);
        // the phase grows linearly with the subcarrier index
        for l in 0..4 {
            let want = Complex64::from_polar(1.0, PI / 2.0 * l as f64);
            assert!((m.get(0, l) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn cp_violation_and_missing_conditions() {
        let conf = cfg(4);
        let r = ChannelRealization::flat(vec![c(1.0, 0.0); 2], 0.0).unwrap();
        let p = ImpairmentProfile::new(vec![0.0; 2], vec![0.0, 0.2], vec![0.0; 2], 0.0, 0.125).unwrap();
        match predict_composite(&conf, &r, &p, Conditions::ALL) {
            Err(Error::Constraint(m)) => assert!(m.contains("node 1"), "{m}"),
            other => panic!("{other:?}"),
        }
        let p = ImpairmentProfile::zero(2);
        let mut cond = Conditions::ALL;
        cond.zero_cfo = false;
        assert!(matches!(predict_composite(&conf, &r, &p, cond), Err(Error::Unsupported(_))));
        let p = ImpairmentProfile::new(vec![0.1, 0.0], vec![0.0; 2], vec![0.0; 2], 0.0, 0.0).unwrap();
        assert!(matches!(predict_composite(&conf, &r, &p, Conditions::ALL), Err(Error::Unsupported(_))));
    }

    #[test]
    fn single_node_roundtrip() {
        let conf = cfg(8);
        let a: Vec<_> = (0..8).map(|i| c(i as f64, -(i as f64) / 2.0)).collect();
        let r = ChannelRealization::flat(vec![c(1.0, 0.0)], 0.0).unwrap();
        let mut p = ImpairmentProfile::zero(1);
        p.backoff = 0.0;
        let conf = OfdmConfig { backoff: 0.0, ..conf };
        let mut rng = MasterSeed(0).substream(0, 0, Purpose::Noise);
        let w = superpose(&[a.clone()], &conf, &r, &p, &mut rng).unwrap();
        let y = receive_dft(&w, &conf, 0.0).unwrap();
        assert!(sup(&y, &a) < 1e-9);
    }

    #[test]
    fn time_domain_matches_closed_form_with_multipath() {
        let conf = cfg(8);
        let taps = vec![
            vec![
                Tap { gain: c(0.8, 0.1), delay: 0.0 },
                Tap { gain: c(-0.2, 0.3), delay: 0.031 },
            ],
            vec![Tap { gain: c(0.1, -0.9), delay: 0.01 }],
        ];
        let r = ChannelRealization::multipath(taps, 0.0).unwrap();
        let p = ImpairmentProfile::new(vec![0.0; 2], vec![0.02, -0.07], vec![0.4, -2.0], 0.01, conf.backoff).unwrap();
        let a: Vec<Vec<_>> = (0..2)
            .map(|k| (0..8).map(|l| c((k + l) as f64 * 0.1, 1.0 - l as f64 * 0.2)).collect())
            .collect();
        let mut rng = MasterSeed(0).substream(0, 0, Purpose::Noise);
        let w = superpose(&a, &conf, &r, &p, &mut rng).unwrap();
        let y = receive_dft(&w, &conf, p.rx_to).unwrap();
        let m = predict_composite(&conf, &r, &p, Conditions::ALL).unwrap();
        assert!(sup(&y, &m.apply(&a).unwrap()) < 1e-9);
        let dc = single_carrier_view(&m).unwrap();
        for k in 0..2 {
            assert_eq!(dc[k], m.get(k, 0));
        }
    }

    #[test]
    fn frequency_offset_breaks_the_closed_form() {
        let conf = cfg(8);
        let r = ChannelRealization::flat(vec![c(1.0, 0.0); 2], 0.0).unwrap();
        let p0 = ImpairmentProfile::new(vec![0.0; 2], vec![0.05, -0.05], vec![0.3, 1.0], 0.0, conf.backoff).unwrap();
        let mut p = p0.clone();
        p.cfo = vec![0.1 / conf.symbol_duration, 0.0];
        let a: Vec<Vec<_>> = (0..2).map(|_| vec![c(1.0, 0.0); 8]).collect();
        let mut rng = MasterSeed(0).substream(0, 0, Purpose::Noise);
        let w = superpose(&a, &conf, &r, &p, &mut rng).unwrap();
        let y = receive_dft(&w, &conf, 0.0).unwrap();
        let m = predict_composite(&conf, &r, &p0, Conditions::ALL).unwrap();
        assert!(sup(&y, &m.apply(&a).unwrap()) > 1e-3);
    }

    #[test]
    fn parseval_on_noisy_window() {
        let conf = cfg(4);
        let r = ChannelRealization::flat(vec![c(0.5, 0.5), c(1.0, -0.2)], 0.3).unwrap();
        let p = ImpairmentProfile::new(vec![0.0; 2], vec![0.01, 0.03], vec![0.2, 0.0], 0.02, conf.backoff).unwrap();
        let a: Vec<Vec<_>> = (0..2).map(|k| vec![c(1.0, k as f64); 4]).collect();
        let mut rng = MasterSeed(5).substream(0, 0, Purpose::Noise);
        let w = superpose(&a, &conf, &r, &p, &mut rng).unwrap();
        let y = window_dft(&w, &conf, p.rx_to).unwrap();
        let win = window_samples(&w, &conf, p.rx_to).unwrap();
        let ef: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        let et: f64 = win.iter().map(|v| v.norm_sqr()).sum::<f64>() / win.len() as f64;
        assert!((ef - et).abs() < 1e-9 * et.max(1.0));
    }

    #[test]
    fn window_out_of_range() {
        let conf = cfg(4);
        let w = ofdm_modulate(&[c(1.0, 0.0); 4], &conf, 0.0).unwrap();
        assert!(receive_dft(&w, &conf, 0.0).is_ok());
        assert!(matches!(receive_dft(&w, &conf, -0.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn composite_csv() {
        let m = CompositeMatrix {
            values: vec![vec![c(1.0, 0.0), c(0.0, -1.0)]],
        };
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "k,l,re,im\n0,0,1,0\n0,1,0,-1\n");
    }
}
