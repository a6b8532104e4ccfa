//! Haar-random (generic) Fock states, CUE unitaries and the analytic
//! complexity of generic states.
//!
//! All randomness comes from ChaCha20 (`rand_chacha`), seeded with a 64-bit
//! seed and a 64-bit stream id, so every sample is reproducible from
//! `(seed, stream)` alone.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSector, ManyBodyState};
use crate::linalg::CMat;

/// Independent generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Standard complex Gaussian: real and imaginary parts `N(0, 1)`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

#[derive(Clone, Debug)]
pub struct HaarSample {
    pub state: ManyBodyState,
    pub seed: u64,
}

/// Uniformly distributed unit vector in the sector (normalized complex
/// Gaussian amplitudes).
pub fn sample_haar_state(sector: Arc<FockSector>, seed: u64) -> Result<HaarSample> {
    sample_haar_state_stream(sector, seed, 0)
}

/// As [`sample_haar_state`], drawing from stream `stream` of `seed`.
pub fn sample_haar_state_stream(sector: Arc<FockSector>, seed: u64, stream: u64) -> Result<HaarSample> {
    let mut r = rng(seed, stream);
    let amps: Vec<C64> = (0..sector.dim()).map(|_| complex_gaussian(&mut r)).collect();
    Ok(HaarSample { state: ManyBodyState::new(sector, amps)?, seed })
}

/// Haar-distributed `n × n` unitary: Gram-Schmidt (QR with positive real `R`
/// diagonal) of a complex Ginibre matrix.
pub fn sample_cue_unitary(n: usize, seed: u64) -> Result<CMat> {
    sample_cue_unitary_stream(n, seed, 0)
}

pub fn sample_cue_unitary_stream(n: usize, seed: u64, stream: u64) -> Result<CMat> {
    if n == 0 {
        return Err(Error::InvalidArgument("unitary dimension must be positive".into()));
    }
    let mut r = rng(seed, stream);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut r)).collect();
        for _ in 0..2 {
            for q in &cols {
                let ov: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= qi * ov;
                }
            }
        }
        let nrm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if nrm < 1e-12 {
            return Err(Error::NonConvergence { what: "Ginibre orthogonalization", iterations: 2, residual: nrm });
        }
        v.iter_mut().for_each(|a| *a /= nrm);
        cols.push(v);
    }
    Ok(Mat::from_fn(n, n, |i, j| cols[j][i]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericAnalytics {
    /// `−ln(2/Q)`.
    pub s_cue: f64,
    /// `−N_o ln(ν^ν (1−ν)^{1−ν})`.
    pub s_leading: f64,
    pub alpha_g: f64,
}

/// `ln C(n, k)` without overflow.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Generic-state ratio `α_g(ν)`; symmetric under `ν → 1 − ν`.
pub fn alpha_g(nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidFilling(format!("α_g needs 0 < ν < 1, got {nu}")));
    }
    let (p, h) = (nu, 1.0 - nu);
    Ok(if nu <= 0.5 {
        1.0 + h * h.ln() / (p * p.ln())
    } else {
        1.0 + p * p.ln() / (h * h.ln())
    })
}

pub fn generic_complexity_analytics(n_orbitals: usize, n_particles: usize) -> Result<GenericAnalytics> {
    if n_particles == 0 || n_particles >= n_orbitals {
        return Err(Error::InvalidFilling(format!(
            "generic analytics need 0 < N_p < N_o, got N_p = {n_particles}, N_o = {n_orbitals}"
        )));
    }
    let nu = n_particles as f64 / n_orbitals as f64;
    let s_cue = ln_binomial(n_orbitals, n_particles) - 2f64.ln();
    let s_leading = -(n_orbitals as f64) * (nu * nu.ln() + (1.0 - nu) * (1.0 - nu).ln());
    Ok(GenericAnalytics { s_cue, s_leading, alpha_g: alpha_g(nu)? })
}

/// `−ln(2/Q)` for an arbitrary sector dimension.
pub fn s_cue_for_dim(dim: usize) -> f64 {
    (dim as f64 / 2.0).ln()
}
