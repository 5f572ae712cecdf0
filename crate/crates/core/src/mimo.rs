//! MIMO aggregation beamforming with zero-forcing transmit beamformers.
//!
//! Node `k` sends `Q` streams through `H_k` (`N_r × N_t`) with transmit
//! beamformer `B_k`. The receiver applies `Aᴴ = √η Fᴴ` where `F` has
//! orthonormal columns, so the estimate of `Σ_k s_k` is `Aᴴ y`. The closed
//! form takes `F` as the top `Q` eigenvectors of
//! `G = Σ_k λ_min,k U_k U_kᴴ`, with `U_k` the `Q` strongest left singular
//! vectors of `H_k` and `λ_min,k` the smallest of the `Q` largest squared
//! singular values.
//!
//! Here `η` multiplies the receive side, so a single-antenna node with
//! channel `h` and budget `P_0` gets `η = 1/(P_0|h|²)`, the reciprocal of the
//! denoising factor used by the power control module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::complex_gaussian;
use crate::error::{check_len, invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative singular-value floor below which a channel counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MimoScenario {
    /// Channel matrices `H_k`, each `N_r × N_t`.
    #[serde(with = "matrix_list")]
    pub channels: Vec<CMatrix>,
    /// Number of streams `Q`.
    pub streams: usize,
    /// Per-node power cap `P_0`.
    pub power_cap: f64,
    /// Receiver noise variance per antenna.
    pub noise_variance: f64,
}

impl MimoScenario {
    pub fn new(channels: Vec<CMatrix>, streams: usize, power_cap: f64, noise_variance: f64) -> Result<Self> {
        let s = MimoScenario {
            channels,
            streams,
            power_cap,
            noise_variance,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn num_nodes(&self) -> usize {
        self.channels.len()
    }

    pub fn rx_antennas(&self) -> usize {
        self.channels.first().map_or(0, |h| h.nrows())
    }

    pub fn tx_antennas(&self) -> usize {
        self.channels.first().map_or(0, |h| h.ncols())
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::Empty("MIMO channels"));
        }
        let (nr, nt) = (self.rx_antennas(), self.tx_antennas());
        if self.streams == 0 || self.streams > nr.min(nt) {
            return Err(invalid(format!(
                "stream count {} must lie in [1, min({nr}, {nt})]",
                self.streams
            )));
        }
        if !(self.power_cap > 0.0) || !self.power_cap.is_finite() {
            return Err(invalid("power cap must be positive"));
        }
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(invalid("noise variance must be >= 0"));
        }
        for (k, h) in self.channels.iter().enumerate() {
            if h.nrows() != nr || h.ncols() != nt {
                return Err(invalid(format!("channel {k} is {}x{}, expected {nr}x{nt}", h.nrows(), h.ncols())));
            }
            if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(invalid(format!("channel {k} has non-finite entries")));
            }
        }
        Ok(())
    }
}

/// Receive combiner, denoising factor and transmit beamformers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    /// `F`, `N_r × Q` with orthonormal columns.
    #[serde(with = "matrix")]
    pub receive: CMatrix,
    pub eta: f64,
    /// `B_k`, each `N_t × Q`.
    #[serde(with = "matrix_list")]
    pub transmit: Vec<CMatrix>,
}

impl BeamformerSet {
    /// `A = √η F`.
    pub fn combiner(&self) -> CMatrix {
        self.receive.map(|v| v * self.eta.sqrt())
    }
}

/// Left singular basis of the `q` strongest modes and their squared singular values.
pub fn principal_subspace(h: &CMatrix, q: usize) -> (CMatrix, Vec<f64>) {
    let svd = h.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let cols: Vec<DVector<Complex64>> = idx[..q].iter().map(|&i| u.column(i).into_owned()).collect();
    let power = idx[..q].iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    (CMatrix::from_columns(&cols), power)
}

/// Rotates every column so its largest-magnitude entry is real-positive.
fn normalize_phase(m: &mut CMatrix) {
    for mut col in m.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].norm() > col[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let p = col[best];
        if p.norm() > 0.0 {
            let rot = p.conj() / p.norm();
            col.iter_mut().for_each(|v| *v *= rot);
        }
    }
}

/// `G = Σ_k λ_min,k U_k U_kᴴ`.
pub fn subspace_matrix(scenario: &MimoScenario) -> Result<CMatrix> {
    scenario.validate()?;
    let nr = scenario.rx_antennas();
    let q = scenario.streams;
    let mut g = CMatrix::zeros(nr, nr);
    for (k, h) in scenario.channels.iter().enumerate() {
        let (u, power) = principal_subspace(h, q);
        let lmin = power[q - 1];
        if !(lmin > (RANK_TOL * power[0].sqrt()).powi(2)) {
            return Err(Error::Constraint(format!("channel {k} has rank below {q}")));
        }
        g += (&u * u.adjoint()).map(|v| v * lmin);
    }
    Ok(g)
}

/// `trace(Fᴴ G F) = Σ_k λ_min,k trace(U_kᴴ F Fᴴ U_k)`.
pub fn trace_objective(g: &CMatrix, f: &CMatrix) -> f64 {
    (f.adjoint() * g * f).trace().re
}

/// Top-`q` eigenvectors of a Hermitian matrix, ties by ascending index.
fn top_eigenvectors(g: &CMatrix, q: usize) -> CMatrix {
    let eig = SymmetricEigen::new(g.clone());
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let cols: Vec<DVector<Complex64>> = idx[..q].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let mut f = CMatrix::from_columns(&cols);
    normalize_phase(&mut f);
    f
}

/// `(Fᴴ H Hᴴ F)⁻¹`, or a numerical error naming node `k` when singular.
fn effective_inverse(f: &CMatrix, h: &CMatrix, k: usize) -> Result<CMatrix> {
    let fh = f.adjoint() * h;
    let m = &fh * fh.adjoint();
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let scale = h.iter().map(|v| v.norm_sqr()).sum::<f64>();
    if !(min > 1e-12 * max.max(scale)) {
        return Err(Error::Numerical(format!(
            "aggregation beamformer nulls channel {k}: Fᴴ H Hᴴ F is singular"
        )));
    }
    m.try_inverse()
        .ok_or_else(|| Error::Numerical(format!("cannot invert the effective channel of node {k}")))
}

/// Zero-forcing transmit beamformers for a given receive combiner `F`.
///
/// `η = max_k trace((Fᴴ H_k H_kᴴ F)⁻¹)/P_0` and
/// `B_k = H_kᴴ A (Aᴴ H_k H_kᴴ A)⁻¹` with `A = √η F`.
pub fn zero_forcing(scenario: &MimoScenario, f: &CMatrix) -> Result<BeamformerSet> {
    scenario.validate()?;
    check_len(scenario.rx_antennas(), f.nrows())?;
    check_len(scenario.streams, f.ncols())?;
    let inv = scenario
        .channels
        .iter()
        .enumerate()
        .map(|(k, h)| effective_inverse(f, h, k))
        .collect::<Result<Vec<_>>>()?;
    let eta = inv.iter().map(|m| m.trace().re).fold(0.0f64, f64::max) / scenario.power_cap;
    let transmit = scenario
        .channels
        .iter()
        .zip(&inv)
        .map(|(h, m)| (h.adjoint() * f * m).map(|v| v / eta.sqrt()))
        .collect();
    Ok(BeamformerSet {
        receive: f.clone(),
        eta,
        transmit,
    })
}

/// Closed-form aggregation beamformer and its zero-forcing transmit side.
pub fn aggregation_beamformer(scenario: &MimoScenario) -> Result<BeamformerSet> {
    let g = subspace_matrix(scenario)?;
    let f = top_eigenvectors(&g, scenario.streams);
    zero_forcing(scenario, &f)
}

/// `Σ_k ‖Aᴴ H_k B_k − I‖_F² + σ² trace(Aᴴ A)`.
pub fn mimo_mse(scenario: &MimoScenario, bf: &BeamformerSet) -> Result<f64> {
    scenario.validate()?;
    check_len(scenario.num_nodes(), bf.transmit.len())?;
    let q = scenario.streams;
    check_len(q, bf.receive.ncols())?;
    let a = bf.combiner();
    let eye = CMatrix::identity(q, q);
    let mut mse = 0.0;
    for (h, b) in scenario.channels.iter().zip(&bf.transmit) {
        check_len(scenario.tx_antennas(), b.nrows())?;
        check_len(q, b.ncols())?;
        let e = a.adjoint() * h * b - &eye;
        mse += e.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    mse += scenario.noise_variance * (a.adjoint() * &a).trace().re;
    Ok(mse)
}

/// Simulates `y = Σ_k H_k B_k s_k + n` and returns `Aᴴ y`.
pub fn mimo_transmit_receive<R: Rng + ?Sized>(
    readings: &[DVector<Complex64>],
    scenario: &MimoScenario,
    bf: &BeamformerSet,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    scenario.validate()?;
    check_len(scenario.num_nodes(), readings.len())?;
    check_len(scenario.num_nodes(), bf.transmit.len())?;
    let mut y = DVector::zeros(scenario.rx_antennas());
    for ((h, b), s) in scenario.channels.iter().zip(&bf.transmit).zip(readings) {
        check_len(scenario.streams, s.len())?;
        y += h * (b * s);
    }
    for v in y.iter_mut() {
        *v += complex_gaussian(rng, scenario.noise_variance);
    }
    Ok(bf.combiner().adjoint() * y)
}

/// `n × q` matrix with orthonormal columns drawn from the Haar measure.
pub fn random_orthonormal<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> CMatrix {
    let m = CMatrix::from_fn(n, q, |_, _| complex_gaussian(rng, 1.0));
    m.qr().q()
}

/// Matrix with i.i.d. unit-variance circularly symmetric Gaussian entries.
pub fn rayleigh_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}

/// Row-major `[[[re, im], ...], ...]` encoding of complex matrices.
mod matrix {
    use super::*;

    pub(super) fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        m.row_iter().map(|r| r.iter().map(|v| [v.re, v.im]).collect()).collect()
    }

    pub(super) fn from_rows<E: serde::de::Error>(rows: Vec<Vec<[f64; 2]>>) -> std::result::Result<CMatrix, E> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(E::custom("ragged matrix rows"));
        }
        Ok(CMatrix::from_fn(nrows, ncols, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        from_rows(Vec::<Vec<[f64; 2]>>::deserialize(d)?)
    }
}

mod matrix_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(matrix::to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?
            .into_iter()
            .map(matrix::from_rows)
            .collect()
    }
}
