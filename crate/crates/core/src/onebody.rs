//! One-body correlation matrix, natural orbitals and correlation entropies.

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSector, ManyBodyState};
use crate::linalg::{self, CMat};

/// `G_ij = ⟨bra| c†_i c_j |ket⟩` for all orbital pairs inside a conserved
/// block; pairs across blocks vanish identically.
pub fn transition_matrix(sector: &FockSector, bra: &[C64], ket: &[C64]) -> CMat {
    let n = sector.n_orbitals();
    let mut g = linalg::zeros(n);
    let mut diag = vec![C64::new(0.0, 0.0); n];
    match sector.hop_table() {
        Some(table) => {
            for (k, &psi) in ket.iter().enumerate() {
                if psi == C64::new(0.0, 0.0) {
                    continue;
                }
                let occ = sector.unrank(k);
                let w = bra[k].conj() * psi;
                for o in occ.orbitals() {
                    diag[o] += w;
                }
                for h in table.hops_from(k) {
                    let v = bra[h.target as usize].conj() * psi;
                    g[(h.i as usize, h.j as usize)] += if h.negative { -v } else { v };
                }
            }
        }
        None => {
            for (k, &psi) in ket.iter().enumerate() {
                if psi == C64::new(0.0, 0.0) {
                    continue;
                }
                let occ = sector.unrank(k);
                let w = bra[k].conj() * psi;
                for j in occ.orbitals() {
                    diag[j] += w;
                    for i in 0..n {
                        if i == j || occ.is_occupied(i) || !sector.same_block(i, j) {
                            continue;
                        }
                        let (t, s) = occ.hop(i, j).expect("valid hop");
                        g[(i, j)] += bra[sector.rank(t)].conj() * psi * s;
                    }
                }
            }
        }
    }
    for (o, d) in diag.into_iter().enumerate() {
        g[(o, o)] = d;
    }
    g
}

/// One-body reduced density matrix `C_ij = ⟨Φ| c†_j c_i |Φ⟩`.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    entries: CMat,
    n_particles: usize,
    blocks: Vec<(usize, usize)>,
}

pub fn correlation_matrix(state: &ManyBodyState) -> CorrelationMatrix {
    let sector = state.sector();
    let psi = state.amplitudes();
    let g = transition_matrix(sector, psi, psi);
    let n = sector.n_orbitals();
    // C_ij = G_ji; symmetrize away roundoff.
    let entries = Mat::from_fn(n, n, |i, j| (g[(j, i)] + g[(i, j)].conj()) * 0.5);
    CorrelationMatrix {
        entries,
        n_particles: sector.n_particles(),
        blocks: sector.blocks().iter().map(|b| (b.offset, b.len)).collect(),
    }
}

impl CorrelationMatrix {
    /// Wraps an explicit matrix; checks Hermiticity and the trace.
    pub fn from_matrix(entries: CMat, n_particles: usize) -> Result<Self> {
        let n = entries.nrows();
        if linalg::hermiticity_defect(entries.as_ref()) > 1e-10 {
            return Err(Error::InvalidArgument("correlation matrix is not Hermitian".into()));
        }
        let tr: f64 = (0..n).map(|i| entries[(i, i)].re).sum();
        if (tr - n_particles as f64).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "trace {tr} differs from particle number {n_particles}"
            )));
        }
        Ok(CorrelationMatrix { entries, n_particles, blocks: vec![(0, n)] })
    }

    pub fn entries(&self) -> MatRef<'_, C64> {
        self.entries.as_ref()
    }

    pub fn n_orbitals(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn trace(&self) -> f64 {
        (0..self.n_orbitals()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// Occupations `n̄_i = C_ii` in the current basis.
    pub fn diagonal_occupations(&self) -> Vec<f64> {
        (0..self.n_orbitals()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// `Tr C² = Σ |C_ij|²`.
    pub fn trace_of_square(&self) -> f64 {
        let n = self.n_orbitals();
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += self.entries[(i, j)].norm_sqr();
            }
        }
        s
    }

    /// Conserved orbital blocks `(offset, len)` inherited from the sector.
    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// Eigenvalues `λ_i` in descending order, clipped to `[0, 1]`.
    pub fn occupations(&self) -> Result<Vec<f64>> {
        Ok(self.natural_orbitals()?.occupations)
    }

    pub fn natural_orbitals(&self) -> Result<NaturalOrbitals> {
        natural_orbitals(self)
    }
}

/// Eigenvalues may leave `[0, 1]` by at most this much before clipping.
pub const OCCUPATION_TOL: f64 = 1e-8;
const DEGENERACY_TOL: f64 = 1e-9;

/// Eigenbasis of the correlation matrix.
#[derive(Clone, Debug)]
pub struct NaturalOrbitals {
    /// Descending.
    pub occupations: Vec<f64>,
    /// Column `c` is the orbital with occupation `occupations[c]`.
    pub orbitals: CMat,
    /// Conserved block each column belongs to.
    pub block_of_column: Vec<usize>,
    blocks: Vec<(usize, usize)>,
}

impl NaturalOrbitals {
    /// Single-particle basis change `U` (with `c' = U c`) whose rows are the
    /// natural orbitals, arranged block by block in descending occupation so
    /// that `U` respects the conserved blocks. `U C U†` is diagonal.
    pub fn basis_unitary(&self) -> CMat {
        let n = self.orbitals.nrows();
        let mut u = linalg::zeros(n);
        let mut next_row: Vec<usize> = self.blocks.iter().map(|b| b.0).collect();
        for c in 0..n {
            let b = self.block_of_column[c];
            let r = next_row[b];
            next_row[b] += 1;
            for x in 0..n {
                u[(r, x)] = self.orbitals[(x, c)].conj();
            }
        }
        u
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMat {
        let n = self.orbitals.nrows();
        let scaled = Mat::from_fn(n, n, |i, j| self.orbitals[(i, j)] * self.occupations[j]);
        scaled * linalg::adjoint(self.orbitals.as_ref())
    }
}

fn natural_orbitals(c: &CorrelationMatrix) -> Result<NaturalOrbitals> {
    let n = c.n_orbitals();
    let mut columns: Vec<(f64, usize, Vec<C64>)> = Vec::with_capacity(n);
    for (b, &(offset, len)) in c.blocks.iter().enumerate() {
        let block = linalg::diagonal_block(c.entries(), offset, len);
        let (mut values, vectors) = linalg::hermitian_eigen(block.as_ref())?;
        for v in &mut values {
            if *v < -OCCUPATION_TOL || *v > 1.0 + OCCUPATION_TOL {
                return Err(Error::InvalidArgument(format!(
                    "natural occupation {v} outside [0, 1]"
                )));
            }
            *v = v.clamp(0.0, 1.0);
        }
        let mut order: Vec<usize> = (0..len).collect();
        order.reverse();
        let mut start = 0;
        while start < len {
            let mut end = start + 1;
            while end < len
                && (values[order[start]] - values[order[end]]).abs()
                    <= DEGENERACY_TOL * values[order[start]].abs().max(1.0)
            {
                end += 1;
            }
            let group: Vec<Vec<C64>> = order[start..end]
                .iter()
                .map(|&col| (0..len).map(|x| vectors[(x, col)]).collect())
                .collect();
            let basis = if group.len() > 1 { canonical_subspace_basis(&group) } else { group };
            for (idx, mut v) in basis.into_iter().enumerate() {
                fix_phase(&mut v);
                let mut full = vec![C64::new(0.0, 0.0); n];
                full[offset..offset + len].copy_from_slice(&v);
                columns.push((values[order[start + idx]], b, full));
            }
            start = end;
        }
    }
    // Stable sort keeps block order among equal occupations.
    columns.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let orbitals = Mat::from_fn(n, n, |i, j| columns[j].2[i]);
    Ok(NaturalOrbitals {
        occupations: columns.iter().map(|c| c.0).collect(),
        block_of_column: columns.iter().map(|c| c.1).collect(),
        orbitals,
        blocks: c.blocks.clone(),
    })
}

/// Orthonormal basis of span(`group`) built by Gram-Schmidt on the projected
/// unit vectors `P e_0, P e_1, …`.
fn canonical_subspace_basis(group: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let dim = group[0].len();
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(group.len());
    for x in 0..dim {
        if out.len() == group.len() {
            break;
        }
        // P e_x = Σ_g v_g conj(v_g[x])
        let mut w = vec![C64::new(0.0, 0.0); dim];
        for v in group {
            let c = v[x].conj();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += vi * c;
            }
        }
        for _ in 0..2 {
            for u in &out {
                let ov: C64 = u.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= ui * ov;
                }
            }
        }
        let nrm = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-6 {
            w.iter_mut().for_each(|a| *a /= nrm);
            out.push(w);
        }
    }
    out
}

/// Make the largest-magnitude entry (lowest index among ties) real positive.
fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|a| a.norm() >= max - 1e-12).unwrap();
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|a| *a *= phase);
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntropies {
    /// `−ln(Σλ²/N_p)`; `None` without particles.
    pub s_c_particle: Option<f64>,
    /// `−ln(Σ(1−λ)²/(N_o−N_p))`; `None` without holes.
    pub s_c_hole: Option<f64>,
    /// Larger of the two.
    pub s_c: f64,
    /// `(n, S_{c,n})` pairs.
    pub renyi_n: Vec<(f64, f64)>,
}

fn power_sum(values: impl Iterator<Item = f64>, order: f64) -> f64 {
    if order == 2.0 {
        values.map(|x| x * x).sum()
    } else {
        values.map(|x| if x > 0.0 { x.powf(order) } else { 0.0 }).sum()
    }
}

/// Particle, hole and Renyi-n correlation entropies (nats).
pub fn correlation_entropies(c: &CorrelationMatrix, orders: &[f64]) -> Result<CorrelationEntropies> {
    let lambda = c.occupations()?;
    entropies_from_occupations(&lambda, c.n_particles(), orders)
}

/// As [`correlation_entropies`] from natural occupations directly.
pub fn entropies_from_occupations(
    lambda: &[f64],
    n_particles: usize,
    orders: &[f64],
) -> Result<CorrelationEntropies> {
    let n_orbitals = lambda.len();
    let n_holes = n_orbitals - n_particles.min(n_orbitals);
    let s_c_particle = (n_particles > 0)
        .then(|| -(power_sum(lambda.iter().copied(), 2.0) / n_particles as f64).ln());
    let s_c_hole = (n_holes > 0)
        .then(|| -(power_sum(lambda.iter().map(|l| 1.0 - l), 2.0) / n_holes as f64).ln());
    let s_c = match (s_c_particle, s_c_hole) {
        (Some(p), Some(h)) => p.max(h),
        (Some(p), None) => p,
        (None, Some(h)) => h,
        (None, None) => return Err(Error::InvalidArgument("empty orbital set".into())),
    };
    let mut renyi_n = Vec::with_capacity(orders.len());
    for &n in orders {
        if !(n > 0.0) {
            return Err(Error::InvalidArgument(format!("Renyi order {n} must be positive")));
        }
        if n_particles == 0 {
            return Err(Error::InvalidArgument("Renyi correlation entropy needs particles".into()));
        }
        let np = n_particles as f64;
        let value = if n == 1.0 {
            -lambda.iter().filter(|&&l| l > 0.0).map(|l| l * l.ln()).sum::<f64>() / np
        } else {
            (power_sum(lambda.iter().copied(), n) / np).ln() / (1.0 - n)
        };
        renyi_n.push((n, value));
    }
    Ok(CorrelationEntropies { s_c_particle, s_c_hole, s_c, renyi_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{enumerate_sector, Occupation};

    #[test]
    fn slater_correlation_is_projector() {
        let s = enumerate_sector(5, 2).unwrap();
        let st = ManyBodyState::basis(s, Occupation::from_orbitals(&[1, 4])).unwrap();
        let c = correlation_matrix(&st);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j && (i == 1 || i == 4) { 1.0 } else { 0.0 };
                assert!((c.entries()[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
        let e = correlation_entropies(&c, &[2.0, 3.0]).unwrap();
        assert_eq!(e.s_c_particle, Some(0.0));
        assert_eq!(e.s_c_hole, Some(0.0));
        assert_eq!(e.s_c, 0.0);
    }

    #[test]
    fn ghz_pair_is_diagonal_half() {
        let s = enumerate_sector(4, 2).unwrap();
        let w = C64::new(1.0, 0.0);
        let st = ManyBodyState::superposition(
            s,
            &[(Occupation::from_orbitals(&[0, 1]), w), (Occupation::from_orbitals(&[2, 3]), w)],
        )
        .unwrap();
        let c = correlation_matrix(&st);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((c.entries()[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
        let e = correlation_entropies(&c, &[2.0]).unwrap();
        assert!((e.s_c - 2f64.ln()).abs() < 1e-14);
        assert_eq!(e.renyi_n[0].1, e.s_c_particle.unwrap());
    }

    #[test]
    fn uniform_occupations_reach_maximum() {
        let nu: f64 = 0.25;
        let lambda = vec![nu; 12];
        let e = entropies_from_occupations(&lambda, 3, &[]).unwrap();
        assert!((e.s_c_particle.unwrap() + nu.ln()).abs() < 1e-14);
        assert!((e.s_c_hole.unwrap() + (1.0 - nu).ln()).abs() < 1e-14);
    }

    #[test]
    fn empty_sector_reports_hole_entropy_only() {
        let e = entropies_from_occupations(&[0.0; 4], 0, &[]).unwrap();
        assert_eq!(e.s_c_particle, None);
        assert_eq!(e.s_c_hole, Some(0.0));
        assert!(entropies_from_occupations(&[0.0; 4], 0, &[2.0]).is_err());
    }

    #[test]
    fn out_of_range_occupations_rejected() {
        let mut m = linalg::zeros(2);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        let c = CorrelationMatrix::from_matrix(m, 1).unwrap();
        assert!(c.natural_orbitals().is_err());
    }

    #[test]
    fn degenerate_subspace_is_canonical() {
        // Identity-like degenerate block returns the unit vectors.
        let mut m = linalg::zeros(3);
        for i in 0..3 {
            m[(i, i)] = C64::new(1.0 / 3.0, 0.0);
        }
        let c = CorrelationMatrix::from_matrix(m, 1).unwrap();
        let nat = c.natural_orbitals().unwrap();
        assert!(linalg::max_abs_diff(nat.orbitals.as_ref(), linalg::identity(3).as_ref()) < 1e-12);
    }
}
