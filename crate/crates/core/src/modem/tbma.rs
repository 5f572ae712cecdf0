//! Type-based multiple access with FSK: one orthogonal tone per quantization
//! level, so the received energy per tone is the histogram ("type") of the data.

use num_complex::Complex64;

use super::Quantizer;
use crate::domain::{sign, FunctionKind, FunctionSpec};
use crate::error::{Error, Result};

/// One-hot tone vectors, one per node.
pub fn tbma_modulate(values: &[f64], quantizer: &Quantizer) -> Vec<Vec<Complex64>> {
    values
        .iter()
        .map(|&x| {
            let mut v = vec![Complex64::new(0.0, 0.0); quantizer.levels];
            v[quantizer.quantize(x)] = Complex64::new(1.0, 0.0);
            v
        })
        .collect()
}

/// Bin height a tone must exceed to count as occupied for maximum/minimum
/// detection: `K/(2M)` of a unit bin, capped at half a bin so that a single
/// node is always detectable without noise.
pub fn tbma_threshold(k: usize, levels: usize) -> f64 {
    (k as f64 / (2.0 * levels as f64)).min(0.5)
}

/// Computes `spec`'s function from a (possibly noisy) type estimate.
pub fn tbma_demodulate(y: &[f64], spec: &FunctionSpec, k: usize, quantizer: &Quantizer) -> Result<f64> {
    if y.len() != quantizer.levels {
        return Err(Error::LengthMismatch {
            expected: quantizer.levels,
            found: y.len(),
        });
    }
    let kf = k as f64;
    let values = quantizer.values();
    let weighted = |g: &dyn Fn(f64) -> f64| -> f64 { y.iter().zip(&values).map(|(c, &v)| c * g(v)).sum() };
    let occupied = || {
        let t = tbma_threshold(k, quantizer.levels);
        let mut bins = y.iter().enumerate().filter(move |(_, &c)| c > t).map(|(i, _)| i);
        let first = bins.next();
        first.map(|f| (f, bins.last().unwrap_or(f)))
    };
    Ok(match &spec.kind {
        FunctionKind::ArithmeticMean => weighted(&|v| v) / kf,
        FunctionKind::Sum => weighted(&|v| v),
        FunctionKind::MajorityVote => sign(weighted(&sign)),
        FunctionKind::PNorm { p } => weighted(&|v: f64| v.abs().powf(*p)).max(0.0).powf(1.0 / p),
        FunctionKind::GeometricMean { .. } | FunctionKind::Product => {
            let floor = values.iter().cloned().find(|&v| v > 0.0).unwrap_or(1.0);
            let log_sum = weighted(&|v: f64| v.max(floor).ln());
            if matches!(spec.kind, FunctionKind::Product) {
                log_sum.exp()
            } else {
                (log_sum / kf).exp()
            }
        }
        FunctionKind::Maximum { .. } => {
            let (_, hi) = occupied().ok_or_else(|| Error::Numerical("no TBMA bin above threshold".into()))?;
            values[hi]
        }
        FunctionKind::Minimum { .. } => {
            let (lo, _) = occupied().ok_or_else(|| Error::Numerical("no TBMA bin above threshold".into()))?;
            values[lo]
        }
        FunctionKind::Custom { .. } => return Err(Error::Unsupported("TBMA cannot evaluate custom functions".into())),
    })
}
