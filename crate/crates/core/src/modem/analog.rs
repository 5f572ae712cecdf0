//! Analog direct aggregation: each node sends `φ(s_k)` as an amplitude.

use num_complex::Complex64;

use crate::domain::NomographicDecomposition;
use crate::error::{invalid, Result};

/// Per-node single-resource symbols `φ(s_k)`.
pub fn analog_da_modulate(values: &[f64], d: &NomographicDecomposition) -> Result<Vec<Vec<Complex64>>> {
    values
        .iter()
        .map(|&s| {
            let a = d.pre(s);
            if a.is_finite() {
                Ok(vec![Complex64::new(a, 0.0)])
            } else {
                Err(invalid(format!("preprocessed value of {s} is not finite")))
            }
        })
        .collect()
}

/// Applies `ψ` and `Ψ` to the in-phase part of the received sample.
pub fn analog_da_demodulate(y: Complex64, d: &NomographicDecomposition) -> f64 {
    d.post(y.re)
}
