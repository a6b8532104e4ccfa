//! Single-particle basis changes acting on many-body states.
//!
//! A unitary `U = exp(iA)` on the orbitals (with `c' = U c`) acts on Fock space
//! as `exp(i Â)`, `Â = Σ_ij A_ij c†_i c_j`. The action on a vector is computed
//! with a scaled truncated Taylor series that only needs products with `Â`.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{norm, FockSector, LinearOperator, ManyBodyState};
use crate::linalg::{self, CMat};

/// Hermitian generator `A` of the single-particle unitary `exp(iA)`.
#[derive(Clone, Debug)]
pub struct RotationGenerator {
    a: CMat,
    blocks: Option<Vec<(usize, usize)>>,
}

impl RotationGenerator {
    /// Fails unless `a` is Hermitian within 1e-12 and, when `blocks` is given,
    /// exactly zero outside the diagonal blocks.
    pub fn new(a: CMat, blocks: Option<Vec<(usize, usize)>>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidArgument("generator must be square".into()));
        }
        let dev = linalg::hermiticity_defect(a.as_ref());
        if dev > 1e-12 * (1.0 + max_abs(a.as_ref())) {
            return Err(Error::InvalidArgument(format!("generator not Hermitian ({dev:.3e})")));
        }
        if let Some(b) = &blocks {
            if linalg::off_block_norm(a.as_ref(), b) != 0.0 {
                return Err(Error::InvalidArgument(
                    "generator mixes orbital blocks it must not mix".into(),
                ));
            }
        }
        Ok(RotationGenerator { a, blocks })
    }

    /// Hermitian part of `a`, with off-block entries dropped when `blocks` is
    /// given.
    pub fn hermitian_projection(a: MatRef<'_, C64>, blocks: Option<Vec<(usize, usize)>>) -> Self {
        let mut h = linalg::hermitian_part(a);
        if let Some(b) = &blocks {
            h = linalg::restrict_to_blocks(h.as_ref(), b);
        }
        RotationGenerator { a: h, blocks }
    }

    pub fn zero(n: usize) -> Self {
        RotationGenerator { a: linalg::zeros(n), blocks: None }
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.a.as_ref()
    }

    pub fn blocks(&self) -> Option<&[(usize, usize)]> {
        self.blocks.as_deref()
    }

    pub fn n_orbitals(&self) -> usize {
        self.a.nrows()
    }

    pub fn negated(&self) -> Self {
        RotationGenerator { a: Mat::from_fn(self.a.nrows(), self.a.ncols(), |i, j| -self.a[(i, j)]), blocks: self.blocks.clone() }
    }

    /// `exp(iA)`.
    pub fn unitary(&self) -> Result<CMat> {
        linalg::expm_i_hermitian(self.a.as_ref())
    }
}

fn max_abs(m: MatRef<'_, C64>) -> f64 {
    let mut d: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            d = d.max(m[(i, j)].norm());
        }
    }
    d
}

/// Phases this close to `−π` are put on the `+π` side of the branch cut.
pub const BRANCH_CUT_EPS: f64 = 1e-12;

/// `A = −i log(U)` on the principal branch `(−π, π]`. With `blocks`, each
/// diagonal block is treated separately and `U` must not mix blocks.
pub fn generator_from_unitary(
    u: MatRef<'_, C64>,
    blocks: Option<Vec<(usize, usize)>>,
) -> Result<RotationGenerator> {
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::InvalidArgument("unitary must be square".into()));
    }
    let deviation = linalg::unitarity_defect(u);
    if deviation > 1e-10 {
        return Err(Error::NotUnitary { deviation });
    }
    let parts = blocks.clone().unwrap_or_else(|| vec![(0, n)]);
    if blocks.is_some() && linalg::off_block_norm(u, &parts) > 1e-10 {
        return Err(Error::InvalidArgument("unitary mixes orbital blocks".into()));
    }
    let mut a = linalg::zeros(n);
    for &(offset, len) in &parts {
        let ub = linalg::diagonal_block(u, offset, len);
        let ab = unitary_log(ub.as_ref())?;
        linalg::set_diagonal_block(&mut a, offset, ab.as_ref());
    }
    let a = linalg::hermitian_part(a.as_ref());
    Ok(RotationGenerator { a, blocks })
}

/// Principal logarithm of a unitary via the eigenvectors of a generic
/// Hermitian combination `(e^{-iφ}U + e^{iφ}U†)/2`, whose eigenvalues
/// `cos(θ − φ)` separate distinct eigenphases unless `θ₁ + θ₂ = 2φ`.
fn unitary_log(u: MatRef<'_, C64>) -> Result<CMat> {
    let n = u.nrows();
    let mut worst = f64::INFINITY;
    for &phi in &[0.7390851332151607, 2.2360679774997896, -1.4142135623730951, 0.5772156649015329] {
        let w = C64::from_polar(1.0, -phi);
        let h = Mat::from_fn(n, n, |i, j| (w * u[(i, j)] + (w * u[(j, i)]).conj()) * 0.5);
        let (_, v) = linalg::hermitian_eigen(h.as_ref())?;
        let uv = u * v.as_ref();
        let mut thetas = Vec::with_capacity(n);
        let mut residual: f64 = 0.0;
        for c in 0..n {
            let z: C64 = (0..n).map(|r| v[(r, c)].conj() * uv[(r, c)]).sum();
            let mut theta = z.arg();
            if theta <= -PI + BRANCH_CUT_EPS {
                log::debug!("eigenphase {theta} at the branch cut mapped to +π");
                theta = PI;
            }
            for r in 0..n {
                residual = residual.max((uv[(r, c)] - z * v[(r, c)]).norm());
            }
            thetas.push(theta);
        }
        if residual < 1e-9 {
            let scaled = Mat::from_fn(n, n, |i, j| v[(i, j)] * thetas[j]);
            return Ok(scaled * linalg::adjoint(v.as_ref()));
        }
        worst = worst.min(residual);
    }
    Err(Error::NonConvergence { what: "unitary logarithm", iterations: 4, residual: worst })
}

/// `Â = Σ A_ij c†_i c_j` restricted to a sector.
pub struct OneBodyOperator {
    sector: Arc<FockSector>,
    a: CMat,
}

impl OneBodyOperator {
    /// `a` must not couple orbitals of different conserved blocks.
    pub fn new(sector: Arc<FockSector>, a: CMat) -> Result<Self> {
        let n = sector.n_orbitals();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::SectorMismatch(format!(
                "{}x{} matrix for {n} orbitals",
                a.nrows(),
                a.ncols()
            )));
        }
        for j in 0..n {
            for i in 0..n {
                if a[(i, j)] != C64::new(0.0, 0.0) && !sector.same_block(i, j) {
                    return Err(Error::SectorMismatch(format!(
                        "A[{i},{j}] couples different conserved blocks"
                    )));
                }
            }
        }
        Ok(OneBodyOperator { sector, a })
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.a.as_ref()
    }
}

impl LinearOperator for OneBodyOperator {
    fn sector(&self) -> &Arc<FockSector> {
        &self.sector
    }

    fn apply_add(&self, x: &[C64], y: &mut [C64]) {
        let sector = &*self.sector;
        let n = sector.n_orbitals();
        let diag: Vec<C64> = (0..n).map(|i| self.a[(i, i)]).collect();
        match sector.hop_table() {
            Some(table) => {
                for (k, &xk) in x.iter().enumerate() {
                    if xk == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let occ = sector.unrank(k);
                    let d: C64 = occ.orbitals().map(|o| diag[o]).sum();
                    y[k] += d * xk;
                    for h in table.hops_from(k) {
                        let v = self.a[(h.i as usize, h.j as usize)] * xk;
                        y[h.target as usize] += if h.negative { -v } else { v };
                    }
                }
            }
            None => {
                for (k, &xk) in x.iter().enumerate() {
                    if xk == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let occ = sector.unrank(k);
                    for j in occ.orbitals() {
                        y[k] += diag[j] * xk;
                        for i in 0..n {
                            let aij = self.a[(i, j)];
                            if i == j || aij == C64::new(0.0, 0.0) || occ.is_occupied(i) {
                                continue;
                            }
                            let (t, s) = occ.hop(i, j).expect("valid hop");
                            y[sector.rank(t)] += aij * s * xk;
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RotationOptions {
    /// Target accuracy of the action, relative to the input norm.
    pub tol: f64,
    /// Largest spectral radius handled by a single Taylor step.
    pub max_step_radius: f64,
    pub max_degree: usize,
}

impl Default for RotationOptions {
    fn default() -> Self {
        RotationOptions { tol: 1e-10, max_step_radius: 6.0, max_degree: 120 }
    }
}

/// Generator with the same `exp(iA)` but eigenphases packed into the
/// shortest arc, plus the exact spectral interval `[lo, hi]` of `Â` on the
/// sector.
fn compact_generator(sector: &FockSector, a: MatRef<'_, C64>) -> Result<(CMat, f64, f64)> {
    let n = a.nrows();
    let mut out = linalg::zeros(n);
    let (mut lo, mut hi) = (0.0, 0.0);
    for b in sector.blocks() {
        let ab = linalg::diagonal_block(a, b.offset, b.len);
        let (values, v) = linalg::hermitian_eigen(ab.as_ref())?;
        let mut phases: Vec<f64> = values.iter().map(|x| x.rem_euclid(2.0 * PI)).collect();
        let mut sorted = phases.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // Cut the circle at the widest gap between consecutive phases.
        let mut cut = sorted[0];
        let mut best_gap = sorted[0] + 2.0 * PI - sorted[sorted.len() - 1];
        for w in sorted.windows(2) {
            if w[1] - w[0] > best_gap {
                best_gap = w[1] - w[0];
                cut = w[1];
            }
        }
        for p in &mut phases {
            if *p < cut {
                *p += 2.0 * PI;
            }
        }
        // Keep the original generator where it is already at least as compact.
        let span = |xs: &[f64]| {
            let mx = xs.iter().cloned().fold(f64::MIN, f64::max);
            let mn = xs.iter().cloned().fold(f64::MAX, f64::min);
            mx - mn
        };
        let chosen = if span(&values) <= span(&phases) { values } else { phases };
        let mut s = chosen.clone();
        s.sort_by(|x, y| x.partial_cmp(y).unwrap());
        lo += s[..b.particles].iter().sum::<f64>();
        hi += s[b.len - b.particles..].iter().sum::<f64>();
        let scaled = Mat::from_fn(b.len, b.len, |i, j| v[(i, j)] * chosen[j]);
        let rebuilt = scaled * linalg::adjoint(v.as_ref());
        linalg::set_diagonal_block(&mut out, b.offset, rebuilt.as_ref());
    }
    Ok((out, lo, hi))
}

fn is_diagonal(a: MatRef<'_, C64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| i == j || a[(i, j)] == C64::new(0.0, 0.0)))
}

/// `exp(iÂ) |state⟩` with default options.
pub fn rotate(state: &ManyBodyState, gen: &RotationGenerator) -> Result<ManyBodyState> {
    rotate_with(state, gen, &RotationOptions::default())
}

pub fn rotate_with(
    state: &ManyBodyState,
    gen: &RotationGenerator,
    opts: &RotationOptions,
) -> Result<ManyBodyState> {
    let sector = state.sector().clone();
    let n = sector.n_orbitals();
    if gen.n_orbitals() != n {
        return Err(Error::SectorMismatch(format!(
            "generator for {} orbitals, sector has {n}",
            gen.n_orbitals()
        )));
    }
    let a = gen.matrix();
    for j in 0..n {
        for i in 0..n {
            if a[(i, j)] != C64::new(0.0, 0.0) && !sector.same_block(i, j) {
                return Err(Error::SectorMismatch(format!("A[{i},{j}] couples different conserved blocks")));
            }
        }
    }
    if is_diagonal(a) && (0..n).all(|i| a[(i, i)].re == 0.0) {
        return Ok(state.clone());
    }
    if is_diagonal(a) {
        let phases: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        let amps = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let theta: f64 = sector.unrank(k).orbitals().map(|o| phases[o]).sum();
                x * C64::from_polar(1.0, theta)
            })
            .collect();
        return ManyBodyState::new(sector, amps);
    }
    let (compact, lo, hi) = compact_generator(&sector, a)?;
    let op = OneBodyOperator::new(sector.clone(), compact)?;
    let center = 0.5 * (lo + hi);
    let radius = 0.5 * (hi - lo);
    let out = expi_action(&op, center, radius, state.amplitudes(), opts)?;
    let nrm = norm(&out);
    if (nrm - 1.0).abs() > 1e3 * opts.tol.max(1e-13) {
        return Err(Error::NonConvergence {
            what: "exponential action (norm drift)",
            iterations: 0,
            residual: (nrm - 1.0).abs(),
        });
    }
    ManyBodyState::new(sector, out)
}

/// `exp(i op) v` for Hermitian `op` with spectrum in `center ± radius`.
pub fn expi_action<O: LinearOperator>(
    op: &O,
    center: f64,
    radius: f64,
    v: &[C64],
    opts: &RotationOptions,
) -> Result<Vec<C64>> {
    let steps = ((radius / opts.max_step_radius).ceil() as usize).max(1);
    let tau = 1.0 / steps as f64;
    let step_tol = opts.tol / steps as f64;
    let mut acc = v.to_vec();
    let mut term = vec![C64::new(0.0, 0.0); v.len()];
    let mut next = vec![C64::new(0.0, 0.0); v.len()];
    for _ in 0..steps {
        let scale = norm(&acc);
        term.copy_from_slice(&acc);
        let mut prev_norm = f64::INFINITY;
        let mut converged = false;
        let mut last = f64::INFINITY;
        for k in 1..=opts.max_degree {
            next.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            op.apply_add(&term, &mut next);
            let factor = C64::new(0.0, tau / k as f64);
            for (nx, t) in next.iter_mut().zip(&term) {
                *nx = (*nx - t * center) * factor;
            }
            std::mem::swap(&mut term, &mut next);
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            let tn = norm(&term);
            last = tn;
            if tn + prev_norm <= step_tol * scale {
                converged = true;
                break;
            }
            prev_norm = tn;
        }
        if !converged {
            return Err(Error::NonConvergence {
                what: "Taylor series of the exponential action",
                iterations: opts.max_degree,
                residual: last,
            });
        }
    }
    let phase = C64::from_polar(1.0, center);
    acc.iter_mut().for_each(|x| *x *= phase);
    Ok(acc)
}
