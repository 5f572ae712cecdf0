//! Single-antenna transmit power control for coherent analog aggregation.
//!
//! Node `k` with channel magnitude `|h_k|` and budget `P_k` transmits with
//! power `p_k`, and the receiver scales the superposition by `1/√η`. The
//! quality indicator `g_k = P_k|h_k|²` ranks nodes. For a given `η` the nodes
//! with `g_k < η` cannot invert their channel and transmit at full power,
//! contributing the misalignment `(√(g_k/η) − 1)²`, while the others invert
//! exactly. The optimal `η` minimizes misalignment plus noise `σ²/η`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::complex_gaussian;
use crate::error::{check_len, invalid, Error, Result};

/// Relative slack when testing whether a candidate lies in its interval.
const INTERVAL_TOL: f64 = 1e-12;

/// Truncated channel inversion `b = ρ0·h*/|h|²`, or zero below `g_th`.
///
/// Active nodes satisfy `h·b = ρ0`.
pub fn truncated_inversion(h: Complex64, rho0: f64, g_th: f64) -> Result<Complex64> {
    if !(g_th >= 0.0) {
        return Err(invalid(format!("truncation threshold must be >= 0, got {g_th}")));
    }
    let g = h.norm_sqr();
    if g == 0.0 && g_th == 0.0 {
        return Err(Error::Numerical("cannot invert a zero channel".into()));
    }
    if g < g_th {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(h.conj() * (rho0 / g))
}

/// Misalignment plus noise, `Σ_k min(√(g_k/η) − 1, 0)² + σ²/η`.
pub fn objective(eta: f64, indicators: &[f64], noise_variance: f64) -> f64 {
    let x = eta.sqrt().recip();
    let mis: f64 = indicators
        .iter()
        .map(|&g| {
            let m = (g.sqrt() * x - 1.0).min(0.0);
            m * m
        })
        .sum();
    mis + noise_variance / eta
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    /// Transmit power per node, in the caller's node order.
    pub powers: Vec<f64>,
    /// Denoising factor `η*`.
    pub eta: f64,
    /// Number of nodes at full power (the weakest indicators).
    pub threshold_index: usize,
    /// Objective value at `η*`.
    pub objective: f64,
}

/// One subproblem of the divide-and-conquer search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    /// Number of full-power nodes assumed by this subproblem.
    pub k: usize,
    /// Unconstrained stationary point, infinite when `k = 0`.
    pub eta_tilde: f64,
    /// Interval `F_k = [g_(k), g_(k+1)]` of admissible `η`.
    pub interval: (f64, f64),
    /// `eta_tilde` projected onto `F_k`.
    pub eta: f64,
    pub accepted: bool,
    pub objective: f64,
}

fn indicators(magnitudes: &[f64], budgets: &[f64]) -> Result<Vec<f64>> {
    check_len(magnitudes.len(), budgets.len())?;
    if magnitudes.is_empty() {
        return Err(Error::Empty("channel magnitudes"));
    }
    for (k, (&h, &p)) in magnitudes.iter().zip(budgets).enumerate() {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("node {k}: channel magnitude must be positive, got {h}")));
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(invalid(format!("node {k}: power budget must be positive, got {p}")));
        }
    }
    Ok(magnitudes.iter().zip(budgets).map(|(h, p)| p * h * h).collect())
}

/// Node indices sorted by ascending indicator, ties by index.
fn order(g: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    idx.sort_by(|&a, &b| g[a].total_cmp(&g[b]));
    idx
}

/// All `K + 1` subproblems for sorted indicators `g` and noise `σ²`.
pub fn candidates(sorted: &[f64], noise_variance: f64) -> Vec<Candidate> {
    let kk = sorted.len();
    let mut sum_g = 0.0;
    let mut sum_sqrt = 0.0;
    (0..=kk)
        .map(|k| {
            if k > 0 {
                sum_g += sorted[k - 1];
                sum_sqrt += sorted[k - 1].sqrt();
            }
            let lo = if k == 0 { 0.0 } else { sorted[k - 1] };
            let hi = if k == kk { f64::INFINITY } else { sorted[k] };
            let eta_tilde = if k == 0 {
                f64::INFINITY
            } else {
                ((noise_variance + sum_g) / sum_sqrt).powi(2)
            };
            let tol = INTERVAL_TOL * eta_tilde.min(hi.max(lo));
            let accepted = k > 0 && eta_tilde >= lo - tol && eta_tilde <= hi + tol;
            let eta = if k == 0 { hi } else { eta_tilde.clamp(lo, hi) };
            Candidate {
                k,
                eta_tilde,
                interval: (lo, hi),
                eta,
                accepted,
                objective: objective(eta, sorted, noise_variance),
            }
        })
        .collect()
}

/// Optimal threshold policy from channel magnitudes `|h_k|`, budgets `P_k`
/// and noise variance `σ²`.
pub fn solve_optimal_policy(magnitudes: &[f64], budgets: &[f64], noise_variance: f64) -> Result<PowerPolicy> {
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(invalid(format!("noise variance must be >= 0, got {noise_variance}")));
    }
    let g = indicators(magnitudes, budgets)?;
    let idx = order(&g);
    let sorted: Vec<f64> = idx.iter().map(|&i| g[i]).collect();
    let eta = if noise_variance == 0.0 {
        sorted[0]
    } else {
        let cands = candidates(&sorted, noise_variance);
        let pool: Vec<&Candidate> = if cands.iter().any(|c| c.accepted) {
            cands.iter().filter(|c| c.accepted).collect()
        } else {
            log::warn!("no stationary candidate inside its interval; using projected candidates");
            cands.iter().collect()
        };
        pool.iter()
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
            .map(|c| c.eta)
            .ok_or_else(|| Error::Numerical("no power-control candidate".into()))?
    };
    let powers: Vec<f64> = magnitudes
        .iter()
        .zip(budgets)
        .zip(&g)
        .map(|((h, &p), &gk)| if gk <= eta { p } else { eta / (h * h) })
        .collect();
    Ok(PowerPolicy {
        threshold_index: g.iter().filter(|&&gk| gk < eta).count(),
        objective: objective(eta, &sorted, noise_variance),
        powers,
        eta,
    })
}

impl PowerPolicy {
    /// Checks `p_k ≤ P_k`, full power when `g_k ≤ η` and exact inversion
    /// `p_k|h_k|² = η` otherwise.
    pub fn check_structure(&self, magnitudes: &[f64], budgets: &[f64]) -> Result<()> {
        let g = indicators(magnitudes, budgets)?;
        check_len(g.len(), self.powers.len())?;
        let tol = 1e-12;
        for k in 0..g.len() {
            let p = self.powers[k];
            if p > budgets[k] * (1.0 + tol) {
                return Err(Error::Constraint(format!("node {k} exceeds its budget")));
            }
            let rx = p * magnitudes[k] * magnitudes[k];
            let ok = if g[k] <= self.eta * (1.0 + tol) {
                (p - budgets[k]).abs() <= tol * budgets[k]
            } else {
                (rx - self.eta).abs() <= tol * self.eta.max(rx)
            };
            if !ok {
                return Err(Error::Constraint(format!("node {k} violates the threshold structure")));
            }
        }
        Ok(())
    }
}

/// Simulates `y = Σ_k √p_k|h_k| s_k + w` with complex noise of variance `σ²`
/// and returns the mean estimate `y/(K√η)`.
pub fn apply_policy<R: Rng + ?Sized>(
    readings: &[f64],
    policy: &PowerPolicy,
    magnitudes: &[f64],
    noise_variance: f64,
    rng: &mut R,
) -> Result<Complex64> {
    check_len(readings.len(), policy.powers.len())?;
    check_len(readings.len(), magnitudes.len())?;
    if readings.is_empty() {
        return Err(Error::Empty("readings"));
    }
    if !(policy.eta > 0.0) {
        return Err(invalid("denoising factor must be positive"));
    }
    let s: f64 = readings
        .iter()
        .zip(&policy.powers)
        .zip(magnitudes)
        .map(|((s, p), h)| p.sqrt() * h * s)
        .sum();
    let y = Complex64::new(s, 0.0) + complex_gaussian(rng, noise_variance);
    Ok(y / (readings.len() as f64 * policy.eta.sqrt()))
}
