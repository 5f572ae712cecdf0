//! Non-coherent energy scheme: the squared norm of a random-phase unimodular
//! sequence carries `g(s)`, so received energy estimates `Σ_k g(s_k)` without
//! phase synchronization.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `x ↦ scale·x + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub scale: f64,
    pub offset: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { scale: 1.0, offset: 0.0 };

    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }

    pub fn invert(&self, y: f64) -> f64 {
        (y - self.offset) / self.scale
    }
}

impl Default for Affine {
    fn default() -> Self {
        Affine::IDENTITY
    }
}

/// `√g · (e^{jθ_1}, .., e^{jθ_Q})` with independent uniform phases.
pub fn goldenbaum_modulate<R: Rng + ?Sized>(g: f64, seq_len: usize, rng: &mut R) -> Result<Vec<Complex64>> {
    if !(g >= 0.0) {
        return Err(invalid(format!("energy value g(s) = {g} is negative")));
    }
    if seq_len == 0 {
        return Err(invalid("sequence length must be >= 1"));
    }
    let a = g.sqrt();
    Ok((0..seq_len)
        .map(|_| Complex64::from_polar(a, rng.random_range(0.0..2.0 * PI)))
        .collect())
}

/// `h(max(‖r‖²/Q − σ², 0))`. With several nodes the random-phase cross
/// terms leave a zero-mean error of standard deviation `√(Σ_{i≠j} g_i g_j / Q)`.
pub fn goldenbaum_demodulate(r: &[Complex64], noise_variance: f64, h: &Affine) -> f64 {
    if r.is_empty() {
        return h.apply(0.0);
    }
    let e = r.iter().map(|v| v.norm_sqr()).sum::<f64>() / r.len() as f64 - noise_variance;
    h.apply(e.max(0.0))
}

#[cfg(test)]
mod test {
    use super::*;
    use crate::rng::{MasterSeed, Purpose};

    #[test]
    fn zero_reading_is_silent() {
        let mut rng = MasterSeed(1).substream(0, 0, Purpose::Sequence);
        let x = goldenbaum_modulate(0.0, 16, &mut rng).unwrap();
        assert!(x.iter().all(|v| v.norm() == 0.0));
        assert_eq!(goldenbaum_demodulate(&x, 0.0, &Affine::IDENTITY), 0.0);
        assert!(goldenbaum_modulate(-0.1, 4, &mut rng).is_err());
    }

    #[test]
    fn energy_is_exact_for_one_node() {
        let mut rng = MasterSeed(2).substream(0, 0, Purpose::Sequence);
        let x = goldenbaum_modulate(0.37, 32, &mut rng).unwrap();
        let e: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        assert!((e - 32.0 * 0.37).abs() < 1e-12);
        assert!((goldenbaum_demodulate(&x, 0.0, &Affine::IDENTITY) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn global_phase_does_not_matter() {
        let mut rng = MasterSeed(3).substream(0, 0, Purpose::Sequence);
        let a = goldenbaum_modulate(0.5, 64, &mut rng).unwrap();
        let b = goldenbaum_modulate(0.8, 64, &mut rng).unwrap();
        let sum = |rot: Complex64| -> Vec<Complex64> { a.iter().zip(&b).map(|(x, y)| x * rot + y).collect() };
        let e0 = goldenbaum_demodulate(&sum(Complex64::new(1.0, 0.0)), 0.0, &Affine::IDENTITY);
        let e1 = goldenbaum_demodulate(&sum(Complex64::from_polar(1.0, 1.3)), 0.0, &Affine::IDENTITY);
        // Per realization the cross term moves, but both stay near g1 + g2.
        assert!((e0 - 1.3).abs() < 0.5 && (e1 - 1.3).abs() < 0.5);
        let single = |rot: Complex64| -> f64 {
            let r: Vec<Complex64> = a.iter().map(|x| x * rot).collect();
            goldenbaum_demodulate(&r, 0.0, &Affine::IDENTITY)
        };
        assert!((single(Complex64::new(1.0, 0.0)) - single(Complex64::from_polar(1.0, 2.2))).abs() < 1e-12);
    }

    #[test]
    fn rotated_node_has_same_energy_statistics() {
        let mut rng = MasterSeed(4).substream(0, 0, Purpose::Sequence);
        let rot = Complex64::from_polar(1.0, 0.9);
        let trials = 20_000;
        let (mut plain, mut rotated) = (0.0, 0.0);
        for _ in 0..trials {
            let a = goldenbaum_modulate(0.5, 8, &mut rng).unwrap();
            let b = goldenbaum_modulate(0.8, 8, &mut rng).unwrap();
            let r0: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let r1: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * rot + y).collect();
            plain += goldenbaum_demodulate(&r0, 0.0, &Affine::IDENTITY);
            rotated += goldenbaum_demodulate(&r1, 0.0, &Affine::IDENTITY);
        }
        let (m0, m1) = (plain / trials as f64, rotated / trials as f64);
        assert!((m0 - 1.3).abs() < 0.01 && (m1 - 1.3).abs() < 0.01, "{m0} {m1}");
    }
}
