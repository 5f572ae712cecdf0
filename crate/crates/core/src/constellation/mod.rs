//! Digital constellations for direct aggregation.
//!
//! A constellation maps each node's quantized reading to a complex point. The
//! receiver sees the sum of the points and must tell apart any two input
//! tuples whose function values differ.

mod demapper;
mod optimize;
mod sumcomp;

pub use demapper::{build_demapper, LinearSumDemapper, SumConstellation, SumPoint};
pub use optimize::{grid_search_delta, optimize_channelcomp, pam_channelcomp, DesignOptions, DesignOutcome};
pub use sumcomp::{sumcomp_map, SumCompCode};

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest number of input tuples that may be enumerated.
pub const MAX_TUPLES: usize = 1_000_000;

/// Relative tolerance (against the square root of the largest budget) under
/// which two superposed points count as equal.
pub const COLLISION_TOL: f64 = 1e-6;

/// Function values for all `M^K` input tuples. Tuple `(i_1, .., i_K)` has index
/// `Σ_k i_k M^(k−1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionTable {
    pub levels: usize,
    pub nodes: usize,
    pub values: Vec<f64>,
}

/// Function values closer than this (relative) are treated as equal, so
/// rounding in the table does not create spurious constraints.
pub const VALUE_TOL: f64 = 1e-12;

pub(crate) fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_TOL * a.abs().max(b.abs()).max(1.0)
}

pub(crate) fn tuple_count(levels: usize, nodes: usize) -> Option<usize> {
    levels.checked_pow(nodes as u32)
}

impl FunctionTable {
    pub fn from_fn(levels: usize, nodes: usize, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        if levels < 1 || nodes < 1 {
            return Err(invalid("function table needs at least one level and one node"));
        }
        let n = tuple_count(levels, nodes)
            .filter(|&n| n <= MAX_TUPLES)
            .ok_or_else(|| invalid(format!("{levels}^{nodes} tuples exceed the enumeration limit")))?;
        let mut t = FunctionTable {
            levels,
            nodes,
            values: Vec::with_capacity(n),
        };
        for i in 0..n {
            let tuple = t.tuple(i);
            t.values.push(f(&tuple));
        }
        Ok(t)
    }

    /// Table of `f` applied to the level values of each tuple.
    pub fn from_levels(level_values: &[f64], nodes: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(level_values.len(), nodes, |t| {
            let v: Vec<f64> = t.iter().map(|&i| level_values[i]).collect();
            f(&v)
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tuple(&self, mut index: usize) -> Vec<usize> {
        (0..self.nodes)
            .map(|_| {
                let i = index % self.levels;
                index /= self.levels;
                i
            })
            .collect()
    }

    /// True when every permutation of a tuple has the same value.
    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| {
            let mut t = self.tuple(i);
            t.sort_unstable();
            let j = t.iter().rev().fold(0, |acc, &x| acc * self.levels + x);
            same_value(self.values[i], self.values[j])
        })
    }
}

/// Per-node point lists with power budgets and the function they compute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub per_node_symbols: Vec<Vec<Complex64>>,
    pub power_budgets: Vec<f64>,
    /// Input value each level index stands for, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_values: Option<Vec<f64>>,
    pub function_table: FunctionTable,
}

impl Constellation {
    pub fn new(per_node_symbols: Vec<Vec<Complex64>>, power_budgets: Vec<f64>, function_table: FunctionTable) -> Result<Self> {
        let c = Constellation {
            per_node_symbols,
            power_budgets,
            level_values: None,
            function_table,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_level_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.levels() {
            return Err(Error::LengthMismatch {
                expected: self.levels(),
                found: values.len(),
            });
        }
        self.level_values = Some(values);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.function_table.nodes;
        let m = self.function_table.levels;
        if self.per_node_symbols.len() != k || self.power_budgets.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                found: self.per_node_symbols.len().min(self.power_budgets.len()),
            });
        }
        for (node, (pts, &p)) in self.per_node_symbols.iter().zip(&self.power_budgets).enumerate() {
            if pts.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    found: pts.len(),
                });
            }
            if !(p > 0.0) {
                return Err(invalid(format!("node {node} has a nonpositive power budget")));
            }
            if let Some(a) = pts.iter().find(|a| a.norm_sqr() > p * (1.0 + 1e-9)) {
                return Err(Error::Constraint(format!(
                    "node {node} point {a} exceeds its power budget {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.function_table.nodes
    }

    pub fn levels(&self) -> usize {
        self.function_table.levels
    }

    /// Superposed point of a tuple over an ideal channel.
    pub fn sum_point(&self, tuple: &[usize]) -> Complex64 {
        tuple.iter().enumerate().map(|(k, &i)| self.per_node_symbols[k][i]).sum()
    }

    pub(crate) fn tolerance(&self) -> f64 {
        COLLISION_TOL * self.power_budgets.iter().cloned().fold(0.0, f64::max).sqrt()
    }

    /// Smallest `|Σa(i) − Σa(j)|² / |f(i) − f(j)|²` over tuples with different
    /// function values; `None` when no pair is constrained.
    pub fn delta(&self) -> Option<f64> {
        let t = &self.function_table;
        let sums: Vec<Complex64> = (0..t.len()).map(|i| self.sum_point(&t.tuple(i))).collect();
        let mut best: Option<f64> = None;
        for i in 0..sums.len() {
            for j in i + 1..sums.len() {
                let df = t.values[i] - t.values[j];
                if !same_value(t.values[i], t.values[j]) {
                    let r = (sums[i] - sums[j]).norm_sqr() / (df * df);
                    best = Some(best.map_or(r, |b| b.min(r)));
                }
            }
        }
        best
    }

    /// Writes `node,index,level,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "node,index,level,re,im")?;
        for (k, pts) in self.per_node_symbols.iter().enumerate() {
            for (i, a) in pts.iter().enumerate() {
                let level = self.level_values.as_ref().map_or(i as f64, |v| v[i]);
                writeln!(w, "{k},{i},{level},{},{}", a.re, a.im)?;
            }
        }
        Ok(())
    }
}

/// Two input tuples with different function values whose sums coincide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub tuple_a: Vec<usize>,
    pub tuple_b: Vec<usize>,
    pub f_a: f64,
    pub f_b: f64,
    pub point: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub collisions: Vec<Collision>,
}

impl FeasibilityReport {
    /// Distinct unordered pairs of colliding function values, sorted.
    pub fn colliding_values(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self
            .collisions
            .iter()
            .map(|c| if c.f_a <= c.f_b { (c.f_a, c.f_b) } else { (c.f_b, c.f_a) })
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("function values are not NaN"));
        v.dedup();
        v
    }
}

/// Enumerates every tuple and reports all colliding pairs with different `f`.
pub fn check_feasibility(c: &Constellation) -> Result<FeasibilityReport> {
    c.validate()?;
    let t = &c.function_table;
    if t.len() > MAX_TUPLES {
        return Err(invalid("too many tuples to enumerate"));
    }
    let tol = c.tolerance();
    let sums: Vec<Complex64> = (0..t.len()).map(|i| c.sum_point(&t.tuple(i))).collect();
    let mut order: Vec<usize> = (0..sums.len()).collect();
    order.sort_by(|&a, &b| sums[a].re.total_cmp(&sums[b].re).then(a.cmp(&b)));
    let mut collisions = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if sums[j].re - sums[i].re > tol {
                break;
            }
            if (sums[i] - sums[j]).norm() <= tol && !same_value(t.values[i], t.values[j]) {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                collisions.push(Collision {
                    tuple_a: t.tuple(a),
                    tuple_b: t.tuple(b),
                    f_a: t.values[a],
                    f_b: t.values[b],
                    point: sums[a],
                });
            }
        }
    }
    collisions.sort_by(|x, y| x.tuple_a.cmp(&y.tuple_a).then(x.tuple_b.cmp(&y.tuple_b)));
    Ok(FeasibilityReport {
        feasible: collisions.is_empty(),
        collisions,
    })
}

#[cfg(test)]
mod test {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bpsk_sum() -> Constellation {
        let table = FunctionTable::from_fn(2, 2, |t| (t[0] + t[1]) as f64).unwrap();
        let pts = vec![c(1.0, 0.0), c(-1.0, 0.0)];
        Constellation::new(vec![pts.clone(), pts], vec![1.0, 1.0], table).unwrap()
    }

    #[test]
    fn table_indexing_and_symmetry() {
        let t = FunctionTable::from_fn(3, 2, |t| (t[0] * 10 + t[1]) as f64).unwrap();
        assert_eq!(t.tuple(5), vec![2, 1]);
        assert_eq!(t.values[5], 21.0);
        assert!(!t.is_symmetric());
        let s = FunctionTable::from_fn(3, 3, |t| t.iter().product::<usize>() as f64).unwrap();
        assert!(s.is_symmetric());
    }

    #[test]
    fn bpsk_sum_is_feasible() {
        let r = check_feasibility(&bpsk_sum()).unwrap();
        assert!(r.feasible);
        assert_eq!(bpsk_sum().delta(), Some(4.0));
    }

    #[test]
    fn budget_enforced() {
        let table = FunctionTable::from_fn(2, 1, |t| t[0] as f64).unwrap();
        let r = Constellation::new(vec![vec![c(2.0, 0.0), c(0.0, 0.0)]], vec![1.0], table);
        assert!(matches!(r, Err(Error::Constraint(_))));
    }

    #[test]
    fn csv_export() {
        let mut out = Vec::new();
        bpsk_sum().write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("node,index,level,re,im\n0,0,0,1,0\n"));
        assert_eq!(s.lines().count(), 5);
    }
}
