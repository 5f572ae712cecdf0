//! Max-δ constellation design.
//!
//! Maximizes `δ` subject to `|Σa(i) − Σa(j)|² ≥ δ|f(i) − f(j)|²` for every pair
//! of tuples and `|a_k|² ≤ P_k`. The minimum over pairs is smoothed with a
//! log-sum-exp soft minimum and climbed by projected gradient ascent from
//! several random starts, followed by randomized perturbation rounds around
//! the best candidate.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_feasibility, same_value, Constellation, FunctionTable};
use crate::error::{invalid, Result};
use crate::rng::{MasterSeed, Purpose};

/// Largest table the pairwise optimizer accepts.
pub const MAX_DESIGN_TUPLES: usize = 10_000;

/// Value reported for `δ` when no pair of tuples is constrained.
pub const UNBOUNDED_DELTA: f64 = f64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Share one point set between all nodes. `None` ties exactly when the
    /// function is symmetric and the budgets are equal.
    pub tied: Option<bool>,
    pub seed: u64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            restarts: 32,
            iterations: 400,
            tied: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub constellation: Constellation,
    pub delta: f64,
    pub feasible: bool,
    /// True when the table is constant, so no pair constrains the design.
    pub unconstrained: bool,
    pub tied: bool,
}

/// Pairwise constraint on the variable vector: `d = Σ coef·z[var]`.
struct Pair {
    terms: Vec<(usize, f64)>,
    weight: f64,
}

struct Problem {
    vars: usize,
    radius: Vec<f64>,
    pairs: Vec<Pair>,
}

impl Problem {
    fn diff(&self, p: &Pair, z: &[Complex64]) -> Complex64 {
        p.terms.iter().map(|&(v, c)| z[v] * c).sum()
    }

    fn ratios(&self, z: &[Complex64]) -> Vec<f64> {
        self.pairs.iter().map(|p| p.weight * self.diff(p, z).norm_sqr()).collect()
    }

    fn delta(&self, z: &[Complex64]) -> f64 {
        self.ratios(z).into_iter().fold(f64::INFINITY, f64::min)
    }

    fn project(&self, z: &mut [Complex64]) {
        for (v, r) in z.iter_mut().zip(&self.radius) {
            let n = v.norm();
            if n > *r {
                *v *= r / n;
            }
        }
    }

    /// Gradient ascent on the soft minimum; returns the best exact `δ` seen.
    fn climb(&self, z: &mut Vec<Complex64>, iterations: usize, step0: f64) -> f64 {
        let scale = self.radius.iter().cloned().fold(0.0, f64::max);
        let mut best = (self.delta(z), z.clone());
        let mut grad = vec![Complex64::new(0.0, 0.0); self.vars];
        for it in 0..iterations {
            let r = self.ratios(z);
            let rmin = r.iter().cloned().fold(f64::INFINITY, f64::min);
            if rmin > best.0 {
                best = (rmin, z.clone());
            }
            let beta = 40.0 / rmin.max(1e-12 * scale * scale);
            let weights: Vec<f64> = r.iter().map(|x| (-beta * (x - rmin)).exp()).collect();
            let total: f64 = weights.iter().sum();
            grad.iter_mut().for_each(|g| *g = Complex64::new(0.0, 0.0));
            for ((p, w), _) in self.pairs.iter().zip(&weights).zip(&r) {
                if *w < 1e-12 * total {
                    continue;
                }
                let d = self.diff(p, z);
                let s = 2.0 * p.weight * w / total;
                for &(v, c) in &p.terms {
                    grad[v] += d * (s * c);
                }
            }
            let gmax = grad.iter().map(|g| g.norm()).fold(0.0, f64::max);
            if gmax == 0.0 {
                break;
            }
            let step = step0 * scale * (1.0 - it as f64 / iterations as f64).max(0.02);
            for (v, g) in z.iter_mut().zip(&grad) {
                *v += g * (step / gmax);
            }
            self.project(z);
        }
        let last = self.delta(z);
        if last > best.0 {
            best = (last, z.clone());
        }
        *z = best.1;
        best.0
    }
}

fn build_problem(table: &FunctionTable, budgets: &[f64], tied: bool) -> Result<Problem> {
    let (m, k) = (table.levels, table.nodes);
    let vars = if tied { m } else { m * k };
    let var = |node: usize, level: usize| if tied { level } else { node * m + level };
    let mut classes: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut order: Vec<Vec<i64>> = Vec::new();
    for i in 0..table.len() {
        let mut counts = vec![0i64; vars];
        for (node, &level) in table.tuple(i).iter().enumerate() {
            counts[var(node, level)] += 1;
        }
        match classes.get(&counts) {
            Some(&f) if !same_value(f, table.values[i]) => {
                return Err(invalid(
                    "a tied constellation cannot separate permuted tuples with different values",
                ))
            }
            Some(_) => {}
            None => {
                classes.insert(counts.clone(), table.values[i]);
                order.push(counts);
            }
        }
    }
    let mut pairs = Vec::new();
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            let (fa, fb) = (classes[&order[a]], classes[&order[b]]);
            let df = fa - fb;
            if same_value(fa, fb) {
                continue;
            }
            let terms: Vec<(usize, f64)> = (0..vars)
                .filter_map(|v| {
                    let c = order[a][v] - order[b][v];
                    (c != 0).then_some((v, c as f64))
                })
                .collect();
            pairs.push(Pair {
                terms,
                weight: 1.0 / (df * df),
            });
        }
    }
    let radius = (0..vars)
        .map(|v| if tied { budgets[0].sqrt() } else { budgets[v / m].sqrt() })
        .collect();
    Ok(Problem { vars, radius, pairs })
}

fn random_start<R: Rng>(p: &Problem, rng: &mut R) -> Vec<Complex64> {
    p.radius
        .iter()
        .map(|r| Complex64::from_polar(r * rng.random::<f64>().sqrt(), rng.random_range(0.0..2.0 * PI)))
        .collect()
}

fn to_constellation(z: &[Complex64], table: &FunctionTable, budgets: &[f64], tied: bool) -> Result<Constellation> {
    let m = table.levels;
    let pts = (0..table.nodes)
        .map(|k| if tied { z.to_vec() } else { z[k * m..(k + 1) * m].to_vec() })
        .collect();
    Constellation::new(pts, budgets.to_vec(), table.clone())
}

/// Designs a constellation for `table` under per-node power `budgets`.
pub fn optimize_channelcomp(table: &FunctionTable, budgets: &[f64], opts: &DesignOptions) -> Result<DesignOutcome> {
    if budgets.len() != table.nodes {
        return Err(crate::Error::LengthMismatch {
            expected: table.nodes,
            found: budgets.len(),
        });
    }
    if budgets.iter().any(|p| !(*p > 0.0)) {
        return Err(invalid("power budgets must be positive"));
    }
    if table.len() > MAX_DESIGN_TUPLES {
        return Err(invalid(format!(
            "{} tuples exceed the design limit of {MAX_DESIGN_TUPLES}",
            table.len()
        )));
    }
    if opts.restarts == 0 {
        return Err(invalid("at least one restart is required"));
    }
    let equal_budgets = budgets.iter().all(|p| *p == budgets[0]);
    let tied = opts.tied.unwrap_or(table.is_symmetric() && equal_budgets);
    if tied && !equal_budgets {
        return Err(invalid("a tied constellation needs equal power budgets"));
    }
    let problem = build_problem(table, budgets, tied)?;
    let seed = MasterSeed(opts.seed);
    if problem.pairs.is_empty() {
        let z = vec![Complex64::new(0.0, 0.0); problem.vars];
        return Ok(DesignOutcome {
            constellation: to_constellation(&z, table, budgets, tied)?,
            delta: UNBOUNDED_DELTA,
            feasible: true,
            unconstrained: true,
            tied,
        });
    }
    let starts: Vec<(f64, Vec<Complex64>)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.substream(r as u64, 0, Purpose::Design);
            let mut z = random_start(&problem, &mut rng);
            let d = problem.climb(&mut z, opts.iterations, 0.05);
            (d, z)
        })
        .collect();
    let mut best = starts
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one restart");
    let rounds = opts.restarts.div_ceil(2);
    let scale = problem.radius.iter().cloned().fold(0.0, f64::max);
    for r in 0..rounds {
        let mut rng = seed.substream(r as u64, 1, Purpose::Design);
        let mut z: Vec<Complex64> = best
            .1
            .iter()
            .map(|v| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                v + Complex64::new(re, im) * (0.05 * scale)
            })
            .collect();
        problem.project(&mut z);
        let d = problem.climb(&mut z, opts.iterations / 4, 0.01);
        if d > best.0 {
            best = (d, z);
        }
    }
    let constellation = to_constellation(&best.1, table, budgets, tied)?;
    let delta = constellation.delta().unwrap_or(UNBOUNDED_DELTA);
    let feasible = check_feasibility(&constellation)?.feasible && delta > 0.0;
    Ok(DesignOutcome {
        constellation,
        delta,
        feasible,
        unconstrained: false,
        tied,
    })
}

/// Points of the tied collinear constellation
/// `a(v) = √P·(2(g_v − g_min)/(g_max − g_min) − 1)`.
///
/// For `f = Σ_k g(v_k)` this attains `δ = 4P/(g_max − g_min)²`, which is the
/// largest possible: the all-minimum and all-maximum tuples differ in `f` by
/// `K(g_max − g_min)` while their sums can be at most `2K√P` apart.
pub fn pam_channelcomp(inner: &[f64], budget: f64) -> Result<Vec<Complex64>> {
    if inner.len() < 2 {
        return Err(invalid("at least two levels are needed"));
    }
    if !(budget > 0.0) {
        return Err(invalid("power budget must be positive"));
    }
    let lo = inner.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = inner.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(invalid("inner values must not all coincide"));
    }
    let amp = budget.sqrt();
    Ok(inner
        .iter()
        .map(|g| Complex64::new(amp * (2.0 * (g - lo) / (hi - lo) - 1.0), 0.0))
        .collect())
}

/// Ground-truth `δ` for tiny tied designs by exhaustive search over a polar
/// grid of candidate points (`rings × sectors` candidates plus the origin).
pub fn grid_search_delta(table: &FunctionTable, budget: f64, rings: usize, sectors: usize) -> Result<f64> {
    let problem = build_problem(table, &vec![budget; table.nodes], true)?;
    let r = budget.sqrt();
    let mut cand = vec![Complex64::new(0.0, 0.0)];
    for i in 1..=rings {
        for s in 0..sectors {
            cand.push(Complex64::from_polar(r * i as f64 / rings as f64, 2.0 * PI * s as f64 / sectors as f64));
        }
    }
    let combos = cand
        .len()
        .checked_pow(problem.vars as u32)
        .filter(|&n| n <= 50_000_000)
        .ok_or_else(|| invalid("grid search too large"))?;
    let mut best = 0.0f64;
    let mut z = vec![Complex64::new(0.0, 0.0); problem.vars];
    for mut idx in 0..combos {
        for v in z.iter_mut() {
            *v = cand[idx % cand.len()];
            idx /= cand.len();
        }
        best = best.max(problem.delta(&z));
    }
    Ok(best)
}
