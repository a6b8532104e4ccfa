//! Sector diagonalization: dense full spectra, a block Lanczos solver for the
//! lowest states, and post-hoc momentum/parity labels.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{inner, norm, FockSector, LinearOperator, ManyBodyState, SparseOperator};
use crate::generic::{complex_gaussian, rng};
use crate::linalg::{self, CMat};

pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Relative energy tolerance for degeneracy groups.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Symmetry data of one eigenstate. `momentum` is `⟨T⟩`; `momentum_index` is
/// `m` with `⟨T⟩ = e^{2πim/L}`. Parity is only defined where `T² = 1` on the
/// state (momentum 0 or π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateLabel {
    pub group: usize,
    pub momentum: Option<C64>,
    pub momentum_index: Option<usize>,
    pub parity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub energies: Vec<f64>,
    pub states: Vec<ManyBodyState>,
    pub labels: Vec<StateLabel>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `max_k ‖H ψ_k − E_k ψ_k‖`.
    pub fn max_residual(&self, h: &dyn LinearOperator) -> f64 {
        self.states
            .iter()
            .zip(&self.energies)
            .map(|(s, &e)| residual(h, s.amplitudes(), e))
            .fold(0.0, f64::max)
    }

    /// `max_{j,k} |⟨ψ_j|ψ_k⟩ − δ_jk|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (j, a) in self.states.iter().enumerate() {
            for (k, b) in self.states.iter().enumerate().skip(j) {
                let ov = inner(a.amplitudes(), b.amplitudes());
                let target = if j == k { 1.0 } else { 0.0 };
                d = d.max((ov - target).norm());
            }
        }
        d
    }

    /// Index ranges of the degeneracy groups.
    pub fn groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut out: Vec<std::ops::Range<usize>> = Vec::new();
        for (k, l) in self.labels.iter().enumerate() {
            match out.last_mut() {
                Some(r) if self.labels[r.start].group == l.group => r.end = k + 1,
                _ => out.push(k..k + 1),
            }
        }
        out
    }

    pub fn is_degenerate(&self, k: usize) -> bool {
        self.groups().iter().any(|r| r.contains(&k) && r.len() > 1)
    }
}

fn residual(h: &dyn LinearOperator, v: &[C64], e: f64) -> f64 {
    let hv = h.apply(v);
    hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

fn group_ids(energies: &[f64]) -> Vec<usize> {
    let mut ids = Vec::with_capacity(energies.len());
    let mut g = 0;
    for (k, &e) in energies.iter().enumerate() {
        if k > 0 {
            let prev = energies[k - 1];
            if e - prev > DEGENERACY_TOL * prev.abs().max(1.0) {
                g += 1;
            }
        }
        ids.push(g);
    }
    ids
}

fn unlabeled(energies: &[f64]) -> Vec<StateLabel> {
    group_ids(energies)
        .into_iter()
        .map(|group| StateLabel { group, momentum: None, momentum_index: None, parity: None })
        .collect()
}

fn ensure_hermitian(h: &SparseOperator) -> Result<()> {
    let d = h.hermiticity_defect();
    if d > 1e-12 {
        return Err(Error::InvalidArgument(format!("operator is not Hermitian ({d:.3e})")));
    }
    Ok(())
}

/// All eigenpairs by dense diagonalization, with the default size cap.
pub fn full_spectrum(h: &SparseOperator) -> Result<SpectrumResult> {
    full_spectrum_capped(h, DEFAULT_DENSE_CAP)
}

pub fn full_spectrum_capped(h: &SparseOperator, dense_cap: usize) -> Result<SpectrumResult> {
    ensure_hermitian(h)?;
    let q = h.dim();
    if q > dense_cap {
        return Err(Error::Capacity(format!("dense diagonalization of Q = {q} exceeds the cap {dense_cap}")));
    }
    let sector = h.sector().clone();
    let (energies, columns): (Vec<f64>, Vec<Vec<C64>>) = if h.is_real() {
        let mut m = Mat::<f64>::zeros(q, q);
        for (r, c, v) in h.triplets() {
            m[(r, c)] = v.re;
        }
        let (e, u) = linalg::symmetric_eigen(m.as_ref())?;
        drop(m);
        let cols = (0..q).map(|k| (0..q).map(|i| C64::new(u[(i, k)], 0.0)).collect()).collect();
        (e, cols)
    } else {
        let mut m = linalg::zeros(q);
        for (r, c, v) in h.triplets() {
            m[(r, c)] = v;
        }
        let (e, u) = linalg::hermitian_eigen(m.as_ref())?;
        drop(m);
        let cols = (0..q).map(|k| (0..q).map(|i| u[(i, k)]).collect()).collect();
        (e, cols)
    };
    let states = columns
        .into_iter()
        .map(|c| ManyBodyState::new(sector.clone(), c))
        .collect::<Result<Vec<_>>>()?;
    let labels = unlabeled(&energies);
    Ok(SpectrumResult { energies, states, labels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    pub seed: u64,
    /// Residual bound `‖Hψ − Eψ‖` per returned pair.
    pub tol: f64,
    /// Basis size at which the subspace is restarted.
    pub max_basis: usize,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { seed: 0, tol: 1e-8, max_basis: 64, max_restarts: 400 }
    }
}

/// Lowest `n_lowest` eigenpairs with the default options.
pub fn ground_state(h: &SparseOperator, n_lowest: usize) -> Result<SpectrumResult> {
    ground_state_with(h, n_lowest, &LanczosOptions::default())
}

/// Block Lanczos (block size `n_lowest`) with full reorthogonalization and
/// thick restarts: after each restart the basis keeps the lowest Ritz vectors
/// and grows from their residuals.
pub fn ground_state_with(h: &dyn LinearOperator, n_lowest: usize, opts: &LanczosOptions) -> Result<SpectrumResult> {
    let sector = h.sector().clone();
    let q = sector.dim();
    if n_lowest == 0 || n_lowest > q {
        return Err(Error::InvalidArgument(format!("cannot return {n_lowest} eigenpairs of a sector with Q = {q}")));
    }
    let block = n_lowest;
    let max_basis = opts.max_basis.max(3 * block + 2).min(q);
    let keep = (2 * block).max(block + 2).min(max_basis.saturating_sub(block)).max(block);

    let mut random = rng(opts.seed, 0x1a2c);
    let mut basis = Basis::new(q);
    let mut pending: Vec<Vec<C64>> = (0..block)
        .map(|_| (0..q).map(|_| complex_gaussian(&mut random)).collect())
        .collect();
    let mut restarts = 0;
    let mut best_residual = f64::INFINITY;
    loop {
        for v in pending.drain(..) {
            if basis.len() >= max_basis {
                break;
            }
            basis.push(h, v, &mut random);
        }
        let (theta, s) = linalg::hermitian_eigen(basis.projected().as_ref())?;
        let m = basis.len();
        let ritz: Vec<(Vec<C64>, Vec<C64>)> = (0..keep.min(m))
            .map(|k| basis.combine(s.col(k).iter().copied().collect::<Vec<_>>().as_slice()))
            .collect();
        let residuals: Vec<Vec<C64>> = ritz
            .iter()
            .zip(&theta)
            .map(|((x, hx), &t)| hx.iter().zip(x).map(|(a, b)| a - b * t).collect())
            .collect();
        let worst = residuals.iter().take(block).map(|r| norm(r)).fold(0.0, f64::max);
        best_residual = best_residual.min(worst);
        if worst < 0.5 * opts.tol || m == q {
            let mut energies = Vec::with_capacity(block);
            let mut states = Vec::with_capacity(block);
            for (x, _) in ritz.into_iter().take(block) {
                let st = ManyBodyState::new(sector.clone(), x)?;
                let e = inner(st.amplitudes(), &h.apply(st.amplitudes())).re;
                let r = residual(h, st.amplitudes(), e);
                if r >= opts.tol {
                    return Err(Error::NonConvergence { what: "Lanczos eigenpair", iterations: restarts, residual: r });
                }
                energies.push(e);
                states.push(st);
            }
            let labels = unlabeled(&energies);
            return Ok(SpectrumResult { energies, states, labels });
        }
        if basis.len() + block > max_basis {
            restarts += 1;
            if restarts > opts.max_restarts {
                return Err(Error::NonConvergence {
                    what: "Lanczos ground state",
                    iterations: restarts,
                    residual: best_residual,
                });
            }
            basis = Basis::from_ritz(q, ritz, &theta[..keep.min(m)]);
        }
        // Grow from the residual directions of the wanted Ritz pairs; once a
        // pair has converged its residual is dropped in favour of the next.
        pending = residuals.into_iter().take(block).filter(|r| norm(r) > 0.1 * opts.tol).collect();
        if pending.is_empty() {
            pending.push((0..q).map(|_| complex_gaussian(&mut random)).collect());
        }
    }
}

/// Orthonormal basis `V`, its image `HV`, and the projected matrix `V†HV`.
struct Basis {
    q: usize,
    v: Vec<Vec<C64>>,
    hv: Vec<Vec<C64>>,
    g: Vec<Vec<C64>>,
}

impl Basis {
    fn new(q: usize) -> Self {
        Basis { q, v: Vec::new(), hv: Vec::new(), g: Vec::new() }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    fn from_ritz(q: usize, ritz: Vec<(Vec<C64>, Vec<C64>)>, theta: &[f64]) -> Self {
        let n = ritz.len();
        let mut b = Basis::new(q);
        for (k, (x, hx)) in ritz.into_iter().enumerate() {
            b.v.push(x);
            b.hv.push(hx);
            let mut row = vec![C64::new(0.0, 0.0); n];
            row[k] = C64::new(theta[k], 0.0);
            b.g.push(row);
        }
        for row in &mut b.g {
            row.truncate(n);
        }
        b
    }

    /// Orthogonalizes `w` (twice) and appends it unless it is numerically in
    /// the span, in which case a random direction is tried instead.
    fn push(&mut self, h: &dyn LinearOperator, mut w: Vec<C64>, random: &mut rand_chacha::ChaCha20Rng) -> bool {
        if self.v.len() >= self.q {
            return false;
        }
        for _ in 0..3 {
            let before = norm(&w);
            for _ in 0..2 {
                for b in &self.v {
                    let ov = inner(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= bi * ov;
                    }
                }
            }
            let after = norm(&w);
            if after > 1e-10 * before.max(f64::MIN_POSITIVE) && after > 1e-300 {
                w.iter_mut().for_each(|x| *x /= after);
                let hw = h.apply(&w);
                let n = self.v.len();
                let col: Vec<C64> = self.v.iter().map(|b| inner(b, &hw)).collect();
                for (row, c) in self.g.iter_mut().zip(&col) {
                    row.push(*c);
                }
                let mut last: Vec<C64> = col.iter().map(|c| c.conj()).collect();
                last.push(C64::new(inner(&w, &hw).re, 0.0));
                debug_assert_eq!(last.len(), n + 1);
                self.g.push(last);
                self.v.push(w);
                self.hv.push(hw);
                return true;
            }
            w = (0..self.q).map(|_| complex_gaussian(random)).collect();
        }
        false
    }

    fn projected(&self) -> CMat {
        let n = self.v.len();
        let raw = Mat::from_fn(n, n, |i, j| self.g[i][j]);
        linalg::hermitian_part(raw.as_ref())
    }

    fn combine(&self, coeffs: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let mut x = vec![C64::new(0.0, 0.0); self.q];
        let mut hx = vec![C64::new(0.0, 0.0); self.q];
        for ((c, v), hv) in coeffs.iter().zip(&self.v).zip(&self.hv) {
            for ((xi, hi), (vi, hvi)) in x.iter_mut().zip(hx.iter_mut()).zip(v.iter().zip(hv)) {
                *xi += c * vi;
                *hi += c * hvi;
            }
        }
        (x, hx)
    }
}

fn project(op: &dyn LinearOperator, basis: &[Vec<C64>]) -> CMat {
    let images: Vec<Vec<C64>> = basis.iter().map(|b| op.apply(b)).collect();
    Mat::from_fn(basis.len(), basis.len(), |i, j| inner(&basis[i], &images[j]))
}

fn rotate_basis(basis: &[Vec<C64>], s: &CMat) -> Vec<Vec<C64>> {
    let q = basis[0].len();
    (0..s.ncols())
        .map(|k| {
            let mut out = vec![C64::new(0.0, 0.0); q];
            for (j, b) in basis.iter().enumerate() {
                let c = s[(j, k)];
                if c != C64::new(0.0, 0.0) {
                    for (o, x) in out.iter_mut().zip(b) {
                        *o += c * x;
                    }
                }
            }
            out
        })
        .collect()
}

/// Eigenvectors of a unitary restricted to an invariant subspace, through the
/// Hermitian combination `(e^{−iφ}M + e^{iφ}M†)/2`, clustered by eigenvalue.
fn unitary_eigen_clusters(m: &CMat, phi: f64) -> Result<(CMat, Vec<std::ops::Range<usize>>)> {
    let n = m.nrows();
    let w = C64::from_polar(1.0, -phi);
    let h = Mat::from_fn(n, n, |i, j| (w * m[(i, j)] + (w * m[(j, i)]).conj()) * 0.5);
    let (vals, vecs) = linalg::hermitian_eigen(h.as_ref())?;
    let mut clusters: Vec<std::ops::Range<usize>> = Vec::new();
    for k in 0..n {
        match clusters.last_mut() {
            Some(r) if vals[k] - vals[k - 1] < 1e-6 => r.end = k + 1,
            _ => clusters.push(k..k + 1),
        }
    }
    Ok((vecs, clusters))
}

fn momentum_index(t: C64, length: usize) -> usize {
    let a = t.arg().rem_euclid(2.0 * PI);
    ((a * length as f64 / (2.0 * PI)).round() as usize) % length
}

/// Adds momentum and parity labels. Each degeneracy group is rotated so that
/// its states diagonalize `T`, then `P` inside the momentum-0 and momentum-π
/// subspaces; group members are ordered by momentum index, then parity
/// (`+1` first).
pub fn label_symmetry(
    spectrum: &SpectrumResult,
    t_op: &SparseOperator,
    p_op: &SparseOperator,
    length: usize,
) -> Result<SpectrumResult> {
    if spectrum.is_empty() {
        return Ok(spectrum.clone());
    }
    let sector: Arc<FockSector> = spectrum.states[0].sector().clone();
    if **t_op.sector() != *sector || **p_op.sector() != *sector {
        return Err(Error::SectorMismatch("symmetry operators and states live in different sectors".into()));
    }
    let phi = PI / (2.0 * length as f64);
    let mut out = spectrum.clone();
    for range in spectrum.groups() {
        let vecs: Vec<Vec<C64>> = spectrum.states[range.clone()].iter().map(|s| s.amplitudes().to_vec()).collect();
        let tm = project(t_op, &vecs);
        let (s, clusters) = unitary_eigen_clusters(&tm, phi)?;
        let rotated = rotate_basis(&vecs, &s);
        let mut labelled: Vec<(usize, f64, Vec<C64>, C64, Option<f64>)> = Vec::new();
        for cl in clusters {
            let sub: Vec<Vec<C64>> = rotated[cl.clone()].to_vec();
            let t_sub = project(t_op, &sub);
            let t_val = (0..sub.len()).map(|k| t_sub[(k, k)]).sum::<C64>() / sub.len() as f64;
            if (t_val.norm() - 1.0).abs() > 1e-3 {
                return Err(Error::Labeling(format!(
                    "|⟨T⟩| = {:.6} in degeneracy group {}",
                    t_val.norm(),
                    spectrum.labels[range.start].group
                )));
            }
            let m_idx = momentum_index(t_val, length);
            let self_conjugate = (t_val.im).abs() < 1e-6;
            if self_conjugate {
                let p_sub = project(p_op, &sub);
                let (_, ps) = linalg::hermitian_eigen(linalg::hermitian_part(p_sub.as_ref()).as_ref())?;
                let sub_rot = rotate_basis(&sub, &ps);
                for v in sub_rot {
                    let pv = inner(&v, &p_op.apply(&v)).re;
                    let t_k = inner(&v, &t_op.apply(&v));
                    labelled.push((m_idx, pv, v, t_k, Some(pv)));
                }
            } else {
                for v in sub {
                    let t_k = inner(&v, &t_op.apply(&v));
                    labelled.push((m_idx, 0.0, v, t_k, None));
                }
            }
        }
        labelled.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(b.4.is_some().cmp(&a.4.is_some()))
                .then(b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal))
        });
        for (offset, (m_idx, _, v, t_k, parity)) in labelled.into_iter().enumerate() {
            let k = range.start + offset;
            if (t_k.norm() - 1.0).abs() > 1e-3 {
                return Err(Error::Labeling(format!("|⟨T⟩| = {:.6} for state {k}", t_k.norm())));
            }
            out.states[k] = ManyBodyState::new(sector.clone(), fix_global_phase(v))?;
            out.labels[k].momentum = Some(t_k);
            out.labels[k].momentum_index = Some(m_idx);
            out.labels[k].parity = parity;
        }
    }
    Ok(out)
}

/// Makes the largest-magnitude amplitude (lowest index among ties) real
/// positive.
pub fn fix_global_phase(mut v: Vec<C64>) -> Vec<C64> {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, a) in v.iter().enumerate() {
        let m = a.norm();
        if m > best_abs * (1.0 + 1e-10) {
            best = i;
            best_abs = m;
        }
    }
    if best_abs > 0.0 {
        let ph = v[best].conj() / best_abs;
        v.iter_mut().for_each(|a| *a *= ph);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_hamiltonian, parity_operator, translation_operator, ModelSpec};

    #[test]
    fn one_dimensional_sector() {
        let spec = ModelSpec::tv(4, 1.0, 2.0, 4);
        let h = build_hamiltonian(&spec, spec.sector().unwrap()).unwrap();
        let s = full_spectrum(&h).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.energies[0] - 8.0).abs() < 1e-12);
        let g = ground_state(&h, 1).unwrap();
        assert!((g.energies[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn trace_and_residuals() {
        let spec = ModelSpec::hubbard(4, 1.0, 3.0, 2, 1);
        let h = build_hamiltonian(&spec, spec.sector().unwrap()).unwrap();
        let s = full_spectrum(&h).unwrap();
        assert_eq!(s.len(), h.dim());
        let sum: f64 = s.energies.iter().sum();
        assert!((sum - h.trace().re).abs() < 1e-8);
        assert!(s.max_residual(&h) < 1e-8);
        assert!(s.orthonormality_defect() < 1e-8);
        assert!(s.energies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cap_is_enforced() {
        let spec = ModelSpec::tv(10, 1.0, 1.0, 5);
        let h = build_hamiltonian(&spec, spec.sector().unwrap()).unwrap();
        assert!(matches!(full_spectrum_capped(&h, 100), Err(Error::Capacity(_))));
    }

    #[test]
    fn lanczos_matches_dense() {
        let spec = ModelSpec::hubbard(5, 1.0, 4.0, 2, 2);
        let h = build_hamiltonian(&spec, spec.sector().unwrap()).unwrap();
        let d = full_spectrum(&h).unwrap();
        let l = ground_state(&h, 3).unwrap();
        for k in 0..3 {
            assert!((d.energies[k] - l.energies[k]).abs() < 1e-8, "{k}: {} vs {}", d.energies[k], l.energies[k]);
        }
        assert!(l.max_residual(&h) < 1e-8);
    }

    #[test]
    fn lanczos_rejects_bad_count() {
        let spec = ModelSpec::tv(4, 1.0, 1.0, 2);
        let h = build_hamiltonian(&spec, spec.sector().unwrap()).unwrap();
        assert!(ground_state(&h, 0).is_err());
        assert!(ground_state(&h, 7).is_err());
    }

    #[test]
    fn labels_on_small_chain() {
        let spec = ModelSpec::tv(6, 1.0, 0.7, 3);
        let sector = spec.sector().unwrap();
        let h = build_hamiltonian(&spec, sector.clone()).unwrap();
        let t = translation_operator(&spec, sector.clone()).unwrap();
        let p = parity_operator(&spec, sector).unwrap();
        let s = label_symmetry(&full_spectrum(&h).unwrap(), &t, &p, 6).unwrap();
        for l in &s.labels {
            let m = l.momentum.unwrap();
            assert!((m.norm() - 1.0).abs() < 1e-6);
            if let Some(par) = l.parity {
                assert!((par.abs() - 1.0).abs() < 1e-6);
            }
        }
        assert!(s.max_residual(&h) < 1e-8);
    }
}
