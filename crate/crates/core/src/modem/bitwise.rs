//! Digital direct aggregation digit by digit.
//!
//! A quantized value is expanded in base `p`; digit `m` of every node is sent
//! on its own resource as the polar PAM symbol `(p − 1) − 2m`, so the channel
//! sum of a resource reveals the sum of that digit over all nodes.

use num_complex::Complex64;

use super::Quantizer;
use crate::error::{invalid, Result};

/// Symbols for already quantized level indices.
pub fn bitwise_modulate_levels(levels: &[usize], base: u32, digits: u32) -> Result<Vec<Vec<Complex64>>> {
    if base < 2 || digits < 1 {
        return Err(invalid("bitwise scheme needs base >= 2 and at least one digit"));
    }
    let p = base as usize;
    let capacity = p.checked_pow(digits).ok_or_else(|| invalid("digit capacity overflows"))?;
    levels
        .iter()
        .map(|&v| {
            if v >= capacity {
                return Err(invalid(format!("value {v} needs more than {digits} base-{base} digits")));
            }
            let mut rest = v;
            Ok((0..digits)
                .map(|_| {
                    let m = rest % p;
                    rest /= p;
                    Complex64::new((p - 1) as f64 - 2.0 * m as f64, 0.0)
                })
                .collect())
        })
        .collect()
}

/// Quantizes each reading and returns its digit symbols, least significant first.
pub fn bitwise_modulate(values: &[f64], quantizer: &Quantizer, base: u32, digits: u32) -> Result<Vec<Vec<Complex64>>> {
    let levels: Vec<usize> = values.iter().map(|&x| quantizer.quantize(x)).collect();
    bitwise_modulate_levels(&levels, base, digits)
}

/// Per-digit sums recovered from the received resources, rounded and clamped
/// to `[0, K(p − 1)]`.
pub fn bitwise_digit_sums(y: &[f64], k: usize, base: u32) -> Vec<u64> {
    let top = (k * (base as usize - 1)) as f64;
    y.iter()
        .map(|&yl| ((top - yl) / 2.0).round().clamp(0.0, top) as u64)
        .collect()
}

/// Mean quantized level `Σ_l p^l · Σm_l / K`.
pub fn bitwise_demodulate(y: &[f64], k: usize, base: u32) -> f64 {
    let sums = bitwise_digit_sums(y, k, base);
    let mut weight = 1.0;
    let mut total = 0.0;
    for s in sums {
        total += weight * s as f64;
        weight *= base as f64;
    }
    total / k as f64
}

#[cfg(test)]
mod test {
    use super::*;

    fn superpose(x: &[Vec<Complex64>]) -> Vec<f64> {
        (0..x[0].len()).map(|l| x.iter().map(|v| v[l].re).sum()).collect()
    }

    #[test]
    fn three_and_five_average_to_four() {
        let x = bitwise_modulate_levels(&[3, 5], 2, 3).unwrap();
        let y = superpose(&x);
        assert_eq!(bitwise_demodulate(&y, 2, 2), 4.0);
    }

    #[test]
    fn zero_is_all_plus_one() {
        let x = bitwise_modulate_levels(&[0], 2, 4).unwrap();
        assert!(x[0].iter().all(|a| *a == Complex64::new(1.0, 0.0)));
        assert_eq!(bitwise_demodulate(&[3.0, 3.0], 3, 2), 0.0);
    }

    #[test]
    fn single_node_exact_and_overflow() {
        for v in 0..27 {
            let x = bitwise_modulate_levels(&[v], 3, 3).unwrap();
            assert_eq!(bitwise_demodulate(&superpose(&x), 1, 3), v as f64);
        }
        assert!(bitwise_modulate_levels(&[27], 3, 3).is_err());
    }

    #[test]
    fn small_noise_is_rounded_away() {
        let x = bitwise_modulate_levels(&[6, 1, 7, 2], 2, 3).unwrap();
        let y = superpose(&x);
        let noisy: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + if i % 2 == 0 { 0.9 } else { -0.9 }).collect();
        assert_eq!(bitwise_demodulate(&noisy, 4, 2), bitwise_demodulate(&y, 4, 2));
    }

    #[test]
    fn digit_sums_clamped() {
        let s = bitwise_digit_sums(&[100.0, -100.0], 4, 3);
        assert_eq!(s, vec![0, 8]);
    }
}
