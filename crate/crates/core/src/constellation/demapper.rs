//! Maximum-likelihood demapping of superposed constellation points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_feasibility, Constellation};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumPoint {
    pub point: Complex64,
    pub f: f64,
    /// Number of input tuples landing on this point.
    pub multiplicity: usize,
}

/// Reachable superposed points with nearest-point decision regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumConstellation {
    /// Sorted by ascending `f`.
    pub points: Vec<SumPoint>,
    pub noise_variance: f64,
}

/// Relative distance difference treated as an exact tie.
const TIE_TOL: f64 = 1e-12;

impl SumConstellation {
    /// Function value of the nearest reachable point; ties go to the smaller `f`.
    pub fn demap(&self, y: Complex64) -> f64 {
        let mut best = (f64::INFINITY, f64::INFINITY);
        for p in &self.points {
            let d = (y - p.point).norm_sqr();
            if d < best.0 * (1.0 - TIE_TOL) || (d <= best.0 * (1.0 + TIE_TOL) && p.f < best.1) {
                best = (d, p.f);
            }
        }
        best.1
    }
}

/// Enumerates reachable sums of a feasible constellation and merges points
/// that coincide with equal function value.
pub fn build_demapper(c: &Constellation, noise_variance: f64) -> Result<SumConstellation> {
    let report = check_feasibility(c)?;
    if !report.feasible {
        let (a, b) = report.colliding_values()[0];
        return Err(Error::Constraint(format!(
            "constellation is infeasible: f = {a} collides with f = {b}"
        )));
    }
    let tol = c.tolerance();
    let t = &c.function_table;
    let mut points: Vec<SumPoint> = Vec::new();
    for i in 0..t.len() {
        let s = c.sum_point(&t.tuple(i));
        match points.iter_mut().find(|p| (p.point - s).norm() <= tol) {
            Some(p) => p.multiplicity += 1,
            None => points.push(SumPoint {
                point: s,
                f: t.values[i],
                multiplicity: 1,
            }),
        }
    }
    points.sort_by(|a, b| a.f.total_cmp(&b.f).then(a.point.re.total_cmp(&b.point.re)));
    Ok(SumConstellation {
        points,
        noise_variance,
    })
}

/// Nearest attainable `Σ_k g(v_k)` for a tied collinear constellation, where
/// the projected received value is an unbiased estimate of that sum.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSumDemapper {
    kind: SumSet,
}

#[derive(Clone, Debug, PartialEq)]
enum SumSet {
    Lattice { start: f64, step: f64, count: usize },
    Sorted(Vec<f64>),
}

/// Largest attainable-sum table built for irregular inner values.
pub const MAX_SUM_TABLE: usize = 2_000_000;

impl LinearSumDemapper {
    pub fn new(inner: &[f64], nodes: usize) -> Result<Self> {
        if inner.len() < 2 || nodes < 1 {
            return Err(invalid("need at least two levels and one node"));
        }
        let mut g = inner.to_vec();
        g.sort_by(f64::total_cmp);
        let step = g[1] - g[0];
        let span = g[g.len() - 1] - g[0];
        let regular = step > 0.0 && g.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * span);
        if regular {
            return Ok(LinearSumDemapper {
                kind: SumSet::Lattice {
                    start: nodes as f64 * g[0],
                    step,
                    count: nodes * (g.len() - 1) + 1,
                },
            });
        }
        let mut sums = vec![0.0];
        for _ in 0..nodes {
            let mut next: Vec<f64> = sums.iter().flat_map(|s| g.iter().map(move |x| s + x)).collect();
            next.sort_by(f64::total_cmp);
            next.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span.max(1.0));
            if next.len() > MAX_SUM_TABLE {
                return Err(invalid("too many attainable sums"));
            }
            sums = next;
        }
        Ok(LinearSumDemapper { kind: SumSet::Sorted(sums) })
    }

    /// Attainable sum nearest to `u`; ties go to the smaller sum.
    pub fn nearest(&self, u: f64) -> f64 {
        match &self.kind {
            SumSet::Lattice { start, step, count } => {
                let n = ((u - start) / step - 0.5).ceil().clamp(0.0, (*count - 1) as f64);
                start + step * n
            }
            SumSet::Sorted(s) => {
                let i = s.partition_point(|&x| x < u);
                if i == 0 {
                    s[0]
                } else if i == s.len() {
                    s[i - 1]
                } else if u - s[i - 1] <= s[i] - u {
                    s[i - 1]
                } else {
                    s[i]
                }
            }
        }
    }
}
