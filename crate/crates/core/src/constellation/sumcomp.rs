//! Lattice mapping whose superposition is decodable by rounding.
//!
//! A quantized value is written in base `q`; digit 0 goes on the in-phase
//! integer grid and digit 1 on the quadrature grid. The sum of `K` such points
//! is an integer point whose coordinates are the digit sums, so the sum of the
//! values is recovered as `round(Re) + q·round(Im)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumCompCode {
    pub levels: usize,
    pub base: usize,
}

impl SumCompCode {
    /// Accepts `levels ≤ base` (PAM) or `levels = base²` (square QAM).
    pub fn new(levels: usize, base: usize) -> Result<Self> {
        if base < 2 || levels < 2 {
            return Err(invalid("SumComp needs base >= 2 and at least 2 levels"));
        }
        if levels > base && levels != base * base {
            return Err(invalid(format!(
                "{levels} levels are neither PAM (<= {base}) nor square QAM ({})",
                base * base
            )));
        }
        Ok(SumCompCode { levels, base })
    }

    pub fn is_qam(&self) -> bool {
        self.levels > self.base
    }

    /// Integer lattice point of level `v`.
    pub fn map(&self, v: usize) -> Result<Complex64> {
        if v >= self.levels {
            return Err(invalid(format!("level {v} exceeds {} levels", self.levels)));
        }
        Ok(Complex64::new((v % self.base) as f64, (v / self.base) as f64))
    }

    /// Sum of the levels of `k` superposed lattice points.
    pub fn decode(&self, y: Complex64, k: usize) -> u64 {
        let per_digit = if self.is_qam() { self.base - 1 } else { self.levels - 1 };
        let top = (k * per_digit) as f64;
        let i = y.re.round().clamp(0.0, top) as u64;
        if self.is_qam() {
            i + self.base as u64 * y.im.round().clamp(0.0, top) as u64
        } else {
            i
        }
    }

    /// Mean lattice point over uniformly distributed levels.
    pub fn center(&self) -> Complex64 {
        if self.is_qam() {
            let c = (self.base - 1) as f64 / 2.0;
            Complex64::new(c, c)
        } else {
            Complex64::new((self.levels - 1) as f64 / 2.0, 0.0)
        }
    }

    /// Average energy of `map(v) − center()` over uniformly distributed levels.
    pub fn energy(&self) -> f64 {
        if self.is_qam() {
            let q = self.base as f64;
            2.0 * (q * q - 1.0) / 12.0
        } else {
            let m = self.levels as f64;
            (m * m - 1.0) / 12.0
        }
    }
}

/// Lattice point of level `v` for a `levels`-point code in base `base`.
pub fn sumcomp_map(v: usize, levels: usize, base: usize) -> Result<Complex64> {
    SumCompCode::new(levels, base)?.map(v)
}

#[cfg(test)]
mod test {
    use super::*;

    #[test]
    fn ten_plus_twenty() {
        let c = SumCompCode::new(64, 8).unwrap();
        let y = c.map(10).unwrap() + c.map(20).unwrap();
        assert_eq!(c.decode(y, 2), 30);
    }

    #[test]
    fn origin_and_single_node() {
        assert_eq!(sumcomp_map(0, 64, 8).unwrap(), Complex64::new(0.0, 0.0));
        for (m, q) in [(64, 8), (16, 4), (5, 8), (8, 8)] {
            let c = SumCompCode::new(m, q).unwrap();
            for v in 0..m {
                assert_eq!(c.decode(c.map(v).unwrap(), 1), v as u64);
            }
        }
    }

    #[test]
    fn unrepresentable_sizes() {
        assert!(SumCompCode::new(32, 8).is_err());
        assert!(SumCompCode::new(4, 1).is_err());
    }

    #[test]
    fn energy_matches_enumeration() {
        for (m, q) in [(64, 8), (6, 8)] {
            let c = SumCompCode::new(m, q).unwrap();
            let e: f64 = (0..m).map(|v| (c.map(v).unwrap() - c.center()).norm_sqr()).sum::<f64>() / m as f64;
            assert!((e - c.energy()).abs() < 1e-12);
        }
    }
}
