//! Lattice Hamiltonians: the Hubbard chain and the spinless t-V chain.
//!
//! Hubbard orbitals are packed as `site + L·spin` (spin up = 0), so the
//! conserved spin blocks are the contiguous ranges `[0, L)` and `[L, 2L)`.
//!
//! The interaction is the on-site form `U Σ_i n_{i↑} n_{i↓}`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{orbital_permutation_operator, FockSector, SparseOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Hubbard,
    Tv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filling {
    Spinful { up: usize, down: usize },
    Spinless { particles: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub length: usize,
    pub hopping: f64,
    /// `U` for Hubbard, `V` for t-V.
    pub interaction: f64,
    pub filling: Filling,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelSpec {
    pub fn hubbard(length: usize, hopping: f64, u: f64, up: usize, down: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Hubbard,
            length,
            hopping,
            interaction: u,
            filling: Filling::Spinful { up, down },
            boundary: Boundary::Periodic,
        }
    }

    /// Half-filled Hubbard chain, `L/2` particles per spin.
    pub fn hubbard_half_filled(length: usize, hopping: f64, u: f64) -> Self {
        Self::hubbard(length, hopping, u, length / 2, length / 2)
    }

    pub fn tv(length: usize, hopping: f64, v: f64, particles: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Tv,
            length,
            hopping,
            interaction: v,
            filling: Filling::Spinless { particles },
            boundary: Boundary::Periodic,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_interaction(mut self, interaction: f64) -> Self {
        self.interaction = interaction;
        self
    }

    pub fn n_orbitals(&self) -> usize {
        match self.kind {
            ModelKind::Hubbard => 2 * self.length,
            ModelKind::Tv => self.length,
        }
    }

    pub fn n_particles(&self) -> usize {
        match self.filling {
            Filling::Spinful { up, down } => up + down,
            Filling::Spinless { particles } => particles,
        }
    }

    /// Filling fraction `N_p / N_o`.
    pub fn filling_fraction(&self) -> f64 {
        self.n_particles() as f64 / self.n_orbitals() as f64
    }

    /// Orbital blocks as `(offset, len)`: one per spin for Hubbard.
    pub fn spin_blocks(&self) -> Vec<(usize, usize)> {
        match self.kind {
            ModelKind::Hubbard => vec![(0, self.length), (self.length, self.length)],
            ModelKind::Tv => vec![(0, self.length)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidArgument("chain length must be positive".into()));
        }
        if self.boundary == Boundary::Periodic && self.length < 3 {
            return Err(Error::InvalidArgument(format!(
                "periodic chains need L ≥ 3 (L = {} double counts bonds); use an open boundary",
                self.length
            )));
        }
        match (self.kind, self.filling) {
            (ModelKind::Hubbard, Filling::Spinful { up, down }) => {
                if up > self.length || down > self.length {
                    return Err(Error::InvalidFilling(format!(
                        "({up}, {down}) particles on {} sites",
                        self.length
                    )));
                }
            }
            (ModelKind::Tv, Filling::Spinless { particles }) => {
                if particles > self.length {
                    return Err(Error::InvalidFilling(format!(
                        "{particles} particles on {} sites",
                        self.length
                    )));
                }
            }
            _ => {
                return Err(Error::InvalidFilling(
                    "filling kind does not match the model".into(),
                ))
            }
        }
        Ok(())
    }

    /// The particle-number sector the model lives in.
    pub fn sector(&self) -> Result<Arc<FockSector>> {
        self.validate()?;
        let s = match self.filling {
            Filling::Spinful { up, down } => {
                FockSector::with_blocks(&[(self.length, up), (self.length, down)])?
            }
            Filling::Spinless { particles } => FockSector::new(self.length, particles)?,
        };
        Ok(Arc::new(s))
    }

    /// Nearest-neighbour bonds `(i, i+1)`, wrapping for periodic chains.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.length;
        match self.boundary {
            Boundary::Periodic => (0..l).map(|i| (i, (i + 1) % l)).collect(),
            Boundary::Open => (0..l.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
        }
    }

    fn check_sector(&self, sector: &FockSector) -> Result<()> {
        let expected = self.sector()?;
        if *expected != *sector {
            return Err(Error::InvalidFilling(format!(
                "sector {sector:?} does not match the model filling {:?}",
                self.filling
            )));
        }
        Ok(())
    }
}

/// Sparse Hamiltonian of `spec` on `sector`.
pub fn build_hamiltonian(spec: &ModelSpec, sector: Arc<FockSector>) -> Result<SparseOperator> {
    spec.check_sector(&sector)?;
    let l = spec.length;
    let bonds = spec.bonds();
    let offsets: Vec<usize> = spec.spin_blocks().iter().map(|b| b.0).collect();
    let t = spec.hopping;
    let mut triplets = Vec::new();
    for k in 0..sector.dim() {
        let occ = sector.unrank(k);
        let mut diag = 0.0;
        match spec.kind {
            ModelKind::Hubbard => {
                for i in 0..l {
                    if occ.is_occupied(i) && occ.is_occupied(i + l) {
                        diag += spec.interaction;
                    }
                }
            }
            ModelKind::Tv => {
                for &(a, b) in &bonds {
                    if occ.is_occupied(a) && occ.is_occupied(b) {
                        diag += spec.interaction;
                    }
                }
            }
        }
        if diag != 0.0 {
            triplets.push((k, k, C64::new(diag, 0.0)));
        }
        if t == 0.0 {
            continue;
        }
        for &off in &offsets {
            for &(a, b) in &bonds {
                for (i, j) in [(a + off, b + off), (b + off, a + off)] {
                    if let Some((target, sign)) = occ.hop(i, j) {
                        triplets.push((sector.rank(target), k, C64::new(t * sign, 0.0)));
                    }
                }
            }
        }
    }
    SparseOperator::from_triplets(sector, triplets, true)
}

fn site_permutation(spec: &ModelSpec, site_map: impl Fn(usize) -> usize) -> Vec<usize> {
    let l = spec.length;
    let mut perm = Vec::with_capacity(spec.n_orbitals());
    for (off, _) in spec.spin_blocks() {
        for s in 0..l {
            perm.push(off + site_map(s));
        }
    }
    perm
}

/// Translation by one site, `T c†_i T⁻¹ = c†_{i+1}`.
pub fn translation_operator(spec: &ModelSpec, sector: Arc<FockSector>) -> Result<SparseOperator> {
    spec.check_sector(&sector)?;
    if spec.boundary != Boundary::Periodic {
        return Err(Error::InvalidArgument("translation needs a periodic chain".into()));
    }
    let l = spec.length;
    orbital_permutation_operator(sector, &site_permutation(spec, |s| (s + 1) % l))
}

/// Reflection `i → L − 1 − i`.
pub fn parity_operator(spec: &ModelSpec, sector: Arc<FockSector>) -> Result<SparseOperator> {
    spec.check_sector(&sector)?;
    let l = spec.length;
    orbital_permutation_operator(sector, &site_permutation(spec, |s| l - 1 - s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::LinearOperator;
    use crate::linalg::hermitian_eigen;
    use faer::Mat;

    #[test]
    fn two_site_hubbard_ground_energy() {
        for &(t, u) in &[(1.0, 0.0), (1.0, 4.0), (0.5, 10.0)] {
            let spec = ModelSpec::hubbard(2, t, u, 1, 1).with_boundary(Boundary::Open);
            let sector = spec.sector().unwrap();
            assert_eq!(sector.dim(), 4);
            let h = build_hamiltonian(&spec, sector).unwrap();
            let d = h.to_dense();
            let m = Mat::from_fn(4, 4, |i, j| d[i][j]);
            let (e, _) = hermitian_eigen(m.as_ref()).unwrap();
            let exact = (u - (u * u + 16.0 * t * t).sqrt()) / 2.0;
            assert!((e[0] - exact).abs() < 1e-12, "{} vs {}", e[0], exact);
        }
    }

    #[test]
    fn periodic_two_site_rejected() {
        let spec = ModelSpec::hubbard(2, 1.0, 1.0, 1, 1);
        assert!(spec.sector().is_err());
    }

    #[test]
    fn wrong_sector_rejected() {
        let spec = ModelSpec::tv(6, 1.0, 1.0, 2);
        let other = Arc::new(FockSector::new(6, 3).unwrap());
        assert!(matches!(build_hamiltonian(&spec, other), Err(Error::InvalidFilling(_))));
    }

    #[test]
    fn orbital_counts() {
        assert_eq!(ModelSpec::hubbard_half_filled(8, 1.0, 4.0).n_orbitals(), 16);
        assert_eq!(ModelSpec::tv(9, 1.0, 1.0, 3).n_orbitals(), 9);
        assert_eq!(ModelSpec::hubbard_half_filled(8, 1.0, 4.0).sector().unwrap().dim(), 4900);
    }

    #[test]
    fn parity_is_an_involution() {
        let spec = ModelSpec::hubbard(4, 1.0, 2.0, 2, 1);
        let sector = spec.sector().unwrap();
        let p = parity_operator(&spec, sector.clone()).unwrap();
        let x: Vec<C64> = (0..sector.dim()).map(|k| C64::new((k as f64).sin(), k as f64)).collect();
        let y = p.apply(&p.apply(&x));
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
