//! Fixed-particle-number Fock sectors.
//!
//! Orbital `i` is bit `i` of an [`Occupation`] word. A Slater basis state is
//! `c†_{o_n} … c†_{o_2} c†_{o_1} |0⟩` with `o_1 < o_2 < … < o_n`, i.e. creation
//! operators applied in ascending index order, so the highest orbital sits
//! leftmost. Under this ordering the matrix element of `c†_i c_j` between two
//! occupations is the parity of the occupied orbitals strictly between `i` and
//! `j`.
//!
//! A sector may be split into orbital blocks with separately conserved particle
//! numbers (the spin-resolved Hubbard sector). Basis states are ranked in
//! ascending order of the occupation word; within one block this is the
//! combinatorial number system.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const MAX_ORBITALS: usize = 64;

/// Sectors above this dimension generate one-body matrix elements on the fly
/// instead of caching the hop table.
pub const HOP_TABLE_MAX_DIM: usize = 100_000;

fn binomial_table() -> &'static [[u64; MAX_ORBITALS + 1]; MAX_ORBITALS + 1] {
    static TABLE: OnceLock<Box<[[u64; MAX_ORBITALS + 1]; MAX_ORBITALS + 1]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[0u64; MAX_ORBITALS + 1]; MAX_ORBITALS + 1]);
        for n in 0..=MAX_ORBITALS {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            }
        }
        t
    })
}

/// `C(n, k)` for `n ≤ 64`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n || n > MAX_ORBITALS {
        return 0;
    }
    binomial_table()[n][k]
}

/// Occupation numbers of all orbitals packed in one word.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Occupation(pub u64);

impl Occupation {
    pub fn from_orbitals(orbitals: &[usize]) -> Self {
        Occupation(orbitals.iter().fold(0u64, |acc, &o| acc | (1u64 << o)))
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_occupied(self, orbital: usize) -> bool {
        (self.0 >> orbital) & 1 == 1
    }

    #[inline]
    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Occupied orbitals in ascending order.
    pub fn orbitals(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Number of occupied orbitals with index strictly between `a` and `b`.
    #[inline]
    pub fn count_between(self, a: usize, b: usize) -> u32 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi <= lo + 1 {
            return 0;
        }
        let mask = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
        (self.0 & mask).count_ones()
    }

    /// `c†_i c_j |self⟩ = sign |result⟩`, or `None` when the result vanishes.
    #[inline]
    pub fn hop(self, i: usize, j: usize) -> Option<(Occupation, f64)> {
        if !self.is_occupied(j) {
            return None;
        }
        if i == j {
            return Some((self, 1.0));
        }
        if self.is_occupied(i) {
            return None;
        }
        let target = Occupation((self.0 & !(1u64 << j)) | (1u64 << i));
        let sign = if self.count_between(i, j) % 2 == 0 { 1.0 } else { -1.0 };
        Some((target, sign))
    }
}

impl fmt::Debug for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Occupation({:#b})", self.0)
    }
}

/// A contiguous orbital range holding a fixed number of particles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OrbitalBlock {
    pub offset: usize,
    pub len: usize,
    pub particles: usize,
}

impl OrbitalBlock {
    fn mask(&self) -> u64 {
        if self.len == 64 {
            u64::MAX
        } else {
            ((1u64 << self.len) - 1) << self.offset
        }
    }

    pub fn contains(&self, orbital: usize) -> bool {
        orbital >= self.offset && orbital < self.offset + self.len
    }

    fn dim(&self) -> usize {
        binomial(self.len, self.particles) as usize
    }
}

/// Fixed-particle-number Fock sector with rank/unrank maps.
pub struct FockSector {
    n_orbitals: usize,
    n_particles: usize,
    blocks: Vec<OrbitalBlock>,
    block_dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
    hops: OnceLock<Arc<HopTable>>,
}

impl fmt::Debug for FockSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockSector")
            .field("n_orbitals", &self.n_orbitals)
            .field("n_particles", &self.n_particles)
            .field("blocks", &self.blocks)
            .field("dim", &self.dim)
            .finish()
    }
}

impl PartialEq for FockSector {
    fn eq(&self, other: &Self) -> bool {
        self.n_orbitals == other.n_orbitals && self.blocks == other.blocks
    }
}

impl Eq for FockSector {}

/// Builds the sector of `n_particles` fermions in `n_orbitals` orbitals.
pub fn enumerate_sector(n_orbitals: usize, n_particles: usize) -> Result<Arc<FockSector>> {
    FockSector::new(n_orbitals, n_particles).map(Arc::new)
}

impl FockSector {
    pub fn new(n_orbitals: usize, n_particles: usize) -> Result<Self> {
        Self::with_blocks(&[(n_orbitals, n_particles)])
    }

    /// Product sector: consecutive orbital blocks `(len, particles)`, the
    /// first block occupying the lowest orbital indices.
    pub fn with_blocks(blocks: &[(usize, usize)]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("sector needs at least one block".into()));
        }
        let n_orbitals: usize = blocks.iter().map(|b| b.0).sum();
        if n_orbitals > MAX_ORBITALS {
            return Err(Error::Capacity(format!(
                "{n_orbitals} orbitals exceed the {MAX_ORBITALS}-bit occupation word"
            )));
        }
        if n_orbitals == 0 {
            return Err(Error::InvalidArgument("sector needs at least one orbital".into()));
        }
        let mut offset = 0;
        let mut out = Vec::with_capacity(blocks.len());
        for &(len, particles) in blocks {
            if particles > len {
                return Err(Error::InvalidFilling(format!(
                    "{particles} particles in a block of {len} orbitals"
                )));
            }
            out.push(OrbitalBlock { offset, len, particles });
            offset += len;
        }
        let block_dims: Vec<usize> = out.iter().map(|b| b.dim()).collect();
        let mut strides = Vec::with_capacity(out.len());
        let mut dim: usize = 1;
        for &d in &block_dims {
            strides.push(dim);
            dim = dim
                .checked_mul(d)
                .ok_or_else(|| Error::Capacity("sector dimension overflows usize".into()))?;
        }
        Ok(FockSector {
            n_orbitals,
            n_particles: out.iter().map(|b| b.particles).sum(),
            blocks: out,
            block_dims,
            strides,
            dim,
            hops: OnceLock::new(),
        })
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_holes(&self) -> usize {
        self.n_orbitals - self.n_particles
    }

    /// Number of basis states `Q`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[OrbitalBlock] {
        &self.blocks
    }

    pub fn is_single_block(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Index of the block that holds `orbital`.
    pub fn block_of(&self, orbital: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(orbital))
    }

    /// Whether `c†_i c_j` maps the sector into itself.
    pub fn same_block(&self, i: usize, j: usize) -> bool {
        match (self.block_of(i), self.block_of(j)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    pub fn contains(&self, occ: Occupation) -> bool {
        if self.n_orbitals < 64 && occ.0 >> self.n_orbitals != 0 {
            return false;
        }
        self.blocks
            .iter()
            .all(|b| (occ.0 & b.mask()).count_ones() as usize == b.particles)
    }

    /// Position of `occ` in ascending bit-value order. `occ` must belong to the
    /// sector.
    #[inline]
    pub fn rank(&self, occ: Occupation) -> usize {
        let mut rank = 0;
        for (b, stride) in self.blocks.iter().zip(&self.strides) {
            let mut bits = (occ.0 & b.mask()) >> b.offset;
            let mut r = 0u64;
            let mut k = 1;
            while bits != 0 {
                let p = bits.trailing_zeros() as usize;
                r += binomial(p, k);
                k += 1;
                bits &= bits - 1;
            }
            rank += r as usize * stride;
        }
        rank
    }

    pub fn try_rank(&self, occ: Occupation) -> Option<usize> {
        self.contains(occ).then(|| self.rank(occ))
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn unrank(&self, index: usize) -> Occupation {
        debug_assert!(index < self.dim);
        let mut bits = 0u64;
        let mut rest = index;
        for (b, &d) in self.blocks.iter().zip(&self.block_dims) {
            let mut r = (rest % d) as u64;
            rest /= d;
            let mut p = b.len;
            for k in (1..=b.particles).rev() {
                p -= 1;
                while binomial(p, k) > r {
                    p -= 1;
                }
                r -= binomial(p, k);
                bits |= 1u64 << (p + b.offset);
            }
        }
        Occupation(bits)
    }

    /// All occupations in rank order.
    pub fn occupations(&self) -> impl Iterator<Item = Occupation> + '_ {
        (0..self.dim).map(move |k| self.unrank(k))
    }

    /// Cached table of all single hops within blocks, built on first use.
    /// Returns `None` above [`HOP_TABLE_MAX_DIM`].
    pub fn hop_table(&self) -> Option<Arc<HopTable>> {
        if self.dim > HOP_TABLE_MAX_DIM {
            return None;
        }
        Some(self.hops.get_or_init(|| Arc::new(HopTable::build(self))).clone())
    }
}

/// One off-diagonal hop `c†_i c_j` from a basis state to `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hop {
    pub target: u32,
    pub i: u8,
    pub j: u8,
    pub negative: bool,
}

impl Hop {
    #[inline]
    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }
}

/// For each basis state, every nonvanishing off-diagonal `c†_i c_j` with `i`
/// and `j` in the same block. The count per state is constant.
pub struct HopTable {
    per_state: usize,
    hops: Vec<Hop>,
}

impl HopTable {
    fn build(sector: &FockSector) -> Self {
        let per_state: usize = sector
            .blocks
            .iter()
            .map(|b| b.particles * (b.len - b.particles))
            .sum();
        let mut hops = Vec::with_capacity(per_state * sector.dim);
        for k in 0..sector.dim {
            let occ = sector.unrank(k);
            for b in &sector.blocks {
                for j in b.offset..b.offset + b.len {
                    if !occ.is_occupied(j) {
                        continue;
                    }
                    for i in b.offset..b.offset + b.len {
                        if occ.is_occupied(i) {
                            continue;
                        }
                        let (t, s) = occ.hop(i, j).expect("hop within block");
                        hops.push(Hop {
                            target: sector.rank(t) as u32,
                            i: i as u8,
                            j: j as u8,
                            negative: s < 0.0,
                        });
                    }
                }
            }
        }
        HopTable { per_state, hops }
    }

    #[inline]
    pub fn hops_from(&self, k: usize) -> &[Hop] {
        &self.hops[k * self.per_state..(k + 1) * self.per_state]
    }

    pub fn per_state(&self) -> usize {
        self.per_state
    }
}

/// Normalized amplitude vector over a sector, indexed by rank.
#[derive(Clone, Debug)]
pub struct ManyBodyState {
    sector: Arc<FockSector>,
    amplitudes: Vec<C64>,
}

pub const NORM_TOL: f64 = 1e-10;

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl ManyBodyState {
    /// Normalizes `amplitudes`; fails on a zero or wrongly sized vector.
    pub fn new(sector: Arc<FockSector>, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::SectorMismatch(format!(
                "{} amplitudes for a sector of dimension {}",
                amplitudes.len(),
                sector.dim()
            )));
        }
        let n = norm(&amplitudes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(ManyBodyState { sector, amplitudes })
    }

    /// Slater basis state.
    pub fn basis(sector: Arc<FockSector>, occ: Occupation) -> Result<Self> {
        let k = sector.try_rank(occ).ok_or_else(|| {
            Error::SectorMismatch(format!("{occ:?} does not belong to the sector"))
        })?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); sector.dim()];
        amplitudes[k] = C64::new(1.0, 0.0);
        Ok(ManyBodyState { sector, amplitudes })
    }

    /// Superposition `Σ w_k |occ_k⟩`, normalized.
    pub fn superposition(sector: Arc<FockSector>, terms: &[(Occupation, C64)]) -> Result<Self> {
        let mut amplitudes = vec![C64::new(0.0, 0.0); sector.dim()];
        for &(occ, w) in terms {
            let k = sector.try_rank(occ).ok_or_else(|| {
                Error::SectorMismatch(format!("{occ:?} does not belong to the sector"))
            })?;
            amplitudes[k] += w;
        }
        Self::new(sector, amplitudes)
    }

    pub fn sector(&self) -> &Arc<FockSector> {
        &self.sector
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Fock-basis probabilities `|a_k|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Re-expresses a product-sector state in the single-block sector with the
    /// same orbitals and total particle number.
    pub fn embed_in_full_sector(&self) -> Result<ManyBodyState> {
        let full = enumerate_sector(self.sector.n_orbitals(), self.sector.n_particles())?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); full.dim()];
        for (k, a) in self.amplitudes.iter().enumerate() {
            amplitudes[full.rank(self.sector.unrank(k))] = *a;
        }
        Ok(ManyBodyState { sector: full, amplitudes })
    }
}

/// `amplitude · c†_i c_j |state⟩`, unnormalized.
pub fn apply_hop(state: &ManyBodyState, i: usize, j: usize, amplitude: C64) -> Result<Vec<C64>> {
    let sector = state.sector();
    let n = sector.n_orbitals();
    if i >= n || j >= n {
        return Err(Error::InvalidArgument(format!(
            "orbital index out of range for {n} orbitals"
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); sector.dim()];
    if !sector.same_block(i, j) {
        return Err(Error::SectorMismatch(format!(
            "c†_{i} c_{j} connects different conserved blocks"
        )));
    }
    for (k, a) in state.amplitudes().iter().enumerate() {
        if let Some((t, s)) = sector.unrank(k).hop(i, j) {
            out[sector.rank(t)] += amplitude * s * a;
        }
    }
    Ok(out)
}

/// A linear map on the amplitude space of one sector.
pub trait LinearOperator {
    fn sector(&self) -> &Arc<FockSector>;

    /// `y += op · x`.
    fn apply_add(&self, x: &[C64], y: &mut [C64]);

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.apply_add(x, &mut y);
        y
    }
}

/// `op · state`, unnormalized.
pub fn matvec<O: LinearOperator + ?Sized>(op: &O, state: &ManyBodyState) -> Result<Vec<C64>> {
    if **op.sector() != **state.sector() {
        return Err(Error::SectorMismatch(
            "operator and state live in different sectors".into(),
        ));
    }
    Ok(op.apply(state.amplitudes()))
}

/// Compressed-row sparse operator over a sector.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    sector: Arc<FockSector>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Duplicate `(row, col)` entries are summed. When `hermitian` is set the
    /// assembled matrix is checked to satisfy `A[r,c] = conj(A[c,r])`.
    pub fn from_triplets(
        sector: Arc<FockSector>,
        mut triplets: Vec<(usize, usize, C64)>,
        hermitian: bool,
    ) -> Result<Self> {
        let dim = sector.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(Error::InvalidArgument(format!(
                "triplet ({r}, {c}) outside dimension {dim}"
            )));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols: Vec<u32> = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c as u32);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let op = SparseOperator { sector, row_ptr, cols, values, hermitian };
        if hermitian {
            let dev = op.hermiticity_defect();
            if dev > 1e-12 * (1.0 + op.max_abs()) {
                return Err(Error::InvalidArgument(format!(
                    "operator flagged Hermitian deviates by {dev:.3e}"
                )));
            }
        }
        Ok(op)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.sector.dim()
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&(c as u32)) {
            Ok(p) => self.values[lo + p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.cols[p] as usize, self.values[p]))
        })
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|r| self.get(r, r)).sum()
    }

    /// Dense row-major copy; for tests and small sectors.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut m = vec![vec![C64::new(0.0, 0.0); self.dim()]; self.dim()];
        for (r, c, v) in self.triplets() {
            m[r][c] += v;
        }
        m
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (self.cols[p] as usize, self.values[p]))
    }
}

impl LinearOperator for SparseOperator {
    fn sector(&self) -> &Arc<FockSector> {
        &self.sector
    }

    fn apply_add(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[p] * x[self.cols[p] as usize];
            }
            *yr += acc;
        }
    }
}

/// Operator of a permutation of orbitals: `c†_o → c†_{perm[o]}`, including the
/// reordering sign of the permuted creation string.
pub fn orbital_permutation_operator(sector: Arc<FockSector>, perm: &[usize]) -> Result<SparseOperator> {
    let n = sector.n_orbitals();
    if perm.len() != n {
        return Err(Error::InvalidArgument("permutation length mismatch".into()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
    }
    let mut triplets = Vec::with_capacity(sector.dim());
    for k in 0..sector.dim() {
        let occ = sector.unrank(k);
        let image: Vec<usize> = occ.orbitals().map(|o| perm[o]).collect();
        let mut inversions = 0usize;
        for a in 0..image.len() {
            for b in a + 1..image.len() {
                if image[a] > image[b] {
                    inversions += 1;
                }
            }
        }
        let target = Occupation::from_orbitals(&image);
        let t = sector.try_rank(target).ok_or_else(|| {
            Error::SectorMismatch("permutation does not preserve the sector blocks".into())
        })?;
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        triplets.push((t, k, C64::new(sign, 0.0)));
    }
    SparseOperator::from_triplets(sector, triplets, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_dimensions() {
        assert_eq!(FockSector::new(4, 2).unwrap().dim(), 6);
        assert_eq!(FockSector::new(16, 8).unwrap().dim(), 12870);
        let vac = FockSector::new(7, 0).unwrap();
        assert_eq!(vac.dim(), 1);
        assert_eq!(vac.unrank(0), Occupation(0));
        assert_eq!(FockSector::with_blocks(&[(8, 4), (8, 4)]).unwrap().dim(), 4900);
    }

    #[test]
    fn capacity_and_filling_errors() {
        assert!(matches!(FockSector::new(65, 3), Err(Error::Capacity(_))));
        assert!(matches!(FockSector::new(4, 5), Err(Error::InvalidFilling(_))));
        assert!(FockSector::new(64, 1).is_ok());
    }

    #[test]
    fn ranks_follow_ascending_bit_value() {
        let s = FockSector::new(6, 3).unwrap();
        let mut prev = None;
        for k in 0..s.dim() {
            let occ = s.unrank(k);
            assert_eq!(occ.count(), 3);
            assert_eq!(s.rank(occ), k);
            if let Some(p) = prev {
                assert!(occ > p);
            }
            prev = Some(occ);
        }
        let all: Vec<u64> = (0u64..64).filter(|b| b.count_ones() == 3).collect();
        let ours: Vec<u64> = s.occupations().map(|o| o.0).collect();
        assert_eq!(all, ours);
    }

    #[test]
    fn block_ranks_follow_ascending_bit_value() {
        let s = FockSector::with_blocks(&[(3, 1), (3, 2)]).unwrap();
        let expected: Vec<u64> = (0u64..64)
            .filter(|b| (b & 0b111).count_ones() == 1 && (b >> 3).count_ones() == 2)
            .collect();
        let ours: Vec<u64> = s.occupations().map(|o| o.0).collect();
        assert_eq!(expected, ours);
        for (k, o) in s.occupations().enumerate() {
            assert_eq!(s.rank(o), k);
        }
    }

    #[test]
    fn full_word_sector() {
        let s = FockSector::new(64, 2).unwrap();
        assert_eq!(s.dim(), 2016);
        for k in [0, 1, 1000, 2015] {
            assert_eq!(s.rank(s.unrank(k)), k);
        }
        assert!(s.unrank(2015).is_occupied(63));
    }

    #[test]
    fn hop_signs_count_orbitals_between() {
        // occupation {1, 2}; c†_0 c_2 passes orbital 1.
        let occ = Occupation::from_orbitals(&[1, 2]);
        let (t, s) = occ.hop(0, 2).unwrap();
        assert_eq!(t, Occupation::from_orbitals(&[0, 1]));
        assert_eq!(s, -1.0);
        let (t, s) = occ.hop(3, 1).unwrap();
        assert_eq!(t, Occupation::from_orbitals(&[2, 3]));
        assert_eq!(s, -1.0);
        assert!(occ.hop(0, 3).is_none());
        assert!(occ.hop(2, 1).is_none());
        assert_eq!(occ.hop(1, 1), Some((occ, 1.0)));
    }

    #[test]
    fn apply_hop_number_and_empty() {
        let s = enumerate_sector(4, 2).unwrap();
        let occ = Occupation::from_orbitals(&[0, 3]);
        let st = ManyBodyState::basis(s.clone(), occ).unwrap();
        let out = apply_hop(&st, 0, 0, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(out, st.amplitudes().to_vec());
        let out = apply_hop(&st, 0, 1, C64::new(1.0, 0.0)).unwrap();
        assert!(out.iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn hop_table_matches_direct_hops() {
        let s = FockSector::with_blocks(&[(4, 2), (4, 1)]).unwrap();
        let table = s.hop_table().unwrap();
        assert_eq!(table.per_state(), 2 * 2 + 3);
        for k in 0..s.dim() {
            let occ = s.unrank(k);
            for h in table.hops_from(k) {
                let (t, sign) = occ.hop(h.i as usize, h.j as usize).unwrap();
                assert_eq!(s.rank(t), h.target as usize);
                assert_eq!(sign, h.sign());
            }
        }
    }

    #[test]
    fn permutation_operator_cycles_to_identity() {
        let s = enumerate_sector(5, 2).unwrap();
        let perm: Vec<usize> = (0..5).map(|o| (o + 1) % 5).collect();
        let t = orbital_permutation_operator(s.clone(), &perm).unwrap();
        let x: Vec<C64> = (0..s.dim()).map(|k| C64::new(k as f64, 1.0)).collect();
        let mut y = x.clone();
        for _ in 0..5 {
            y = t.apply(&y);
        }
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn embed_preserves_amplitudes() {
        let s = Arc::new(FockSector::with_blocks(&[(2, 1), (2, 1)]).unwrap());
        let amps: Vec<C64> = (0..4).map(|k| C64::new(1.0 + k as f64, 0.0)).collect();
        let st = ManyBodyState::new(s.clone(), amps).unwrap();
        let full = st.embed_in_full_sector().unwrap();
        assert_eq!(full.sector().dim(), 6);
        for k in 0..4 {
            let occ = s.unrank(k);
            let kf = full.sector().rank(occ);
            assert_eq!(full.amplitudes()[kf], st.amplitudes()[k]);
        }
    }

    #[test]
    fn sparse_duplicates_sum_and_hermitian_check() {
        let s = enumerate_sector(3, 1).unwrap();
        let one = C64::new(1.0, 0.0);
        let op = SparseOperator::from_triplets(
            s.clone(),
            vec![(0, 1, one), (0, 1, one), (1, 0, 2.0 * one)],
            true,
        )
        .unwrap();
        assert_eq!(op.get(0, 1), 2.0 * one);
        assert_eq!(op.nnz(), 2);
        let bad = SparseOperator::from_triplets(s, vec![(0, 1, C64::new(0.0, 1.0))], true);
        assert!(bad.is_err());
    }
}
