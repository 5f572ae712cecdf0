//! AirComp modulation and demodulation schemes.
//!
//! Analog direct aggregation, bitwise digital aggregation, type-based
//! multiple access with FSK, Log-FSK, the DCT hybrid waveform and the
//! non-coherent energy scheme with random-phase sequences.

mod analog;
mod bitwise;
mod dct;
mod goldenbaum;
mod logfsk;
mod tbma;

pub use analog::{analog_da_demodulate, analog_da_modulate};
pub use bitwise::{bitwise_demodulate, bitwise_digit_sums, bitwise_modulate, bitwise_modulate_levels};
pub use dct::{dct_coefficients, dct_hybrid_demodulate, dct_hybrid_modulate, DctEstimate, DctHybridConfig};
pub use goldenbaum::{goldenbaum_demodulate, goldenbaum_modulate, Affine};
pub use logfsk::{logfsk_demodulate, logfsk_detect, logfsk_modulate, LogFskConfig, LogFskDetection};
pub use tbma::{tbma_demodulate, tbma_modulate, tbma_threshold};

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::Interval;
use crate::error::{invalid, Result};

/// Uniform scalar quantizer with `levels` reconstruction points spanning `range`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub levels: usize,
    pub range: Interval,
}

impl Quantizer {
    pub fn new(levels: usize, range: Interval) -> Result<Self> {
        if levels < 2 {
            return Err(invalid(format!("a quantizer needs at least 2 levels, got {levels}")));
        }
        if !(range.width() > 0.0) {
            return Err(invalid("quantizer range must have positive width"));
        }
        Ok(Quantizer { levels, range })
    }

    /// Distance between neighbouring reconstruction points.
    pub fn step(&self) -> f64 {
        self.range.width() / (self.levels - 1) as f64
    }

    /// Index of the nearest reconstruction point; values outside the range clamp.
    pub fn quantize(&self, x: f64) -> usize {
        let i = ((x - self.range.lo) / self.step()).round();
        i.clamp(0.0, (self.levels - 1) as f64) as usize
    }

    pub fn dequantize(&self, index: usize) -> f64 {
        self.range.lo + self.step() * index as f64
    }

    /// `dequantize(quantize(x))`.
    pub fn snap(&self, x: f64) -> f64 {
        self.dequantize(self.quantize(x))
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.levels).map(|i| self.dequantize(i)).collect()
    }
}

/// The modulation schemes and their parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SchemeConfig {
    AnalogDa,
    DigitalBitwise { base: u32, digits: u32 },
    TbmaFsk { levels: usize },
    LogFsk(LogFskConfig),
    DctHybrid(DctHybridConfig),
    Goldenbaum { seq_len: usize, g: Affine, h: Affine },
}

impl SchemeConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeConfig::AnalogDa => "analog_da",
            SchemeConfig::DigitalBitwise { .. } => "digital_bitwise",
            SchemeConfig::TbmaFsk { .. } => "tbma_fsk",
            SchemeConfig::LogFsk(_) => "log_fsk",
            SchemeConfig::DctHybrid(_) => "dct_hybrid",
            SchemeConfig::Goldenbaum { .. } => "goldenbaum",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SchemeConfig::DigitalBitwise { base, digits } if *base < 2 || *digits < 1 => {
                Err(invalid("bitwise scheme needs base >= 2 and at least one digit"))
            }
            SchemeConfig::TbmaFsk { levels } if *levels < 2 => Err(invalid("TBMA needs at least 2 levels")),
            SchemeConfig::LogFsk(c) => c.validate(),
            SchemeConfig::DctHybrid(c) => c.validate(),
            SchemeConfig::Goldenbaum { seq_len: 0, .. } => Err(invalid("sequence length must be >= 1")),
            _ => Ok(()),
        }
    }

    /// Quantizer levels used by the scheme, if it quantizes.
    pub fn quantizer_levels(&self) -> Option<usize> {
        match self {
            SchemeConfig::DigitalBitwise { base, digits } => Some((*base as usize).pow(*digits)),
            SchemeConfig::TbmaFsk { levels } => Some(*levels),
            SchemeConfig::LogFsk(c) => Some(c.levels),
            SchemeConfig::DctHybrid(c) => Some(c.grid),
            _ => None,
        }
    }

    /// Number of orthogonal resources (or samples) consumed per computation.
    pub fn resources(&self) -> usize {
        match self {
            SchemeConfig::AnalogDa => 1,
            SchemeConfig::DigitalBitwise { digits, .. } => *digits as usize,
            SchemeConfig::TbmaFsk { levels } => *levels,
            SchemeConfig::LogFsk(c) => c.samples,
            SchemeConfig::DctHybrid(c) => c.samples,
            SchemeConfig::Goldenbaum { seq_len, .. } => *seq_len,
        }
    }
}

/// Uniformly sampled complex waveform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledWaveform {
    /// Time of the first sample in seconds.
    pub start: f64,
    pub sample_rate: f64,
    pub samples: Vec<Complex64>,
}

impl SampledWaveform {
    pub fn from_real(start: f64, sample_rate: f64, samples: &[f64]) -> Self {
        SampledWaveform {
            start,
            sample_rate,
            samples: samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn time(&self, n: usize) -> f64 {
        self.start + n as f64 / self.sample_rate
    }

    /// Writes `time,re,im` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,re,im")?;
        for (n, s) in self.samples.iter().enumerate() {
            writeln!(w, "{},{},{}", self.time(n), s.re, s.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn quantizer_idempotent() {
        let q = Quantizer::new(8, Interval::new(0.0, 7.0).unwrap()).unwrap();
        assert_eq!(q.step(), 1.0);
        for x in [0.0, 0.49, 0.51, 3.2, 6.9, 7.0, 9.0, -1.0] {
            let s = q.snap(x);
            assert_eq!(q.snap(s), s);
        }
        assert_eq!(q.quantize(3.4), 3);
        assert_eq!(q.quantize(100.0), 7);
        assert!(Quantizer::new(1, Interval::unit()).is_err());
    }

    #[test]
    fn scheme_json() {
        let s = SchemeConfig::DigitalBitwise { base: 2, digits: 6 };
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["scheme"], "digital_bitwise");
        assert_eq!(serde_json::from_value::<SchemeConfig>(j).unwrap(), s);
        assert_eq!(s.resources(), 6);
        assert_eq!(s.quantizer_levels(), Some(64));
        let t = SchemeConfig::TbmaFsk { levels: 8 };
        assert_eq!(t.resources(), 8);
        assert!(SchemeConfig::DigitalBitwise { base: 1, digits: 3 }.validate().is_err());
    }

    #[test]
    fn waveform_csv() {
        let w = SampledWaveform::from_real(0.0, 2.0, &[1.0, -1.0]);
        let mut out = Vec::new();
        w.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "time,re,im\n0,1,0\n0.5,-1,0\n");
    }
}
