//! Explicit Jordan-Wigner matrices on the full 2^N Fock space, used as a
//! brute-force reference for small systems.

use fockcx_core::{ManyBodyState, C64};

/// Row-major square matrix on the full Fock space, index = occupation bits.
#[derive(Clone)]
pub struct Dense {
    pub d: usize,
    pub a: Vec<C64>,
}

impl Dense {
    pub fn zeros(d: usize) -> Self {
        Dense { d, a: vec![C64::new(0.0, 0.0); d * d] }
    }
    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.a[i * d + i] = C64::new(1.0, 0.0);
        }
        m
    }
    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.a[r * self.d + c]
    }
    pub fn mul(&self, o: &Dense) -> Dense {
        let d = self.d;
        let mut m = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let x = self.a[i * d + k];
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    m.a[i * d + j] += x * o.a[k * d + j];
                }
            }
        }
        m
    }
    pub fn adjoint(&self) -> Dense {
        let d = self.d;
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.a[j * d + i] = self.a[i * d + j].conj();
            }
        }
        m
    }
    pub fn add_scaled(&mut self, o: &Dense, s: C64) {
        for (x, y) in self.a.iter_mut().zip(&o.a) {
            *x += s * y;
        }
    }
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.d).map(|i| (0..self.d).map(|j| self.at(i, j) * v[j]).sum()).collect()
    }
    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
    /// exp(M) by scaling and squaring a long Taylor series.
    pub fn exp(&self) -> Dense {
        let norm: f64 = self.max_abs() * self.d as f64;
        let s = (norm / 0.25).log2().ceil().max(0.0) as u32;
        let mut scaled = self.clone();
        let f = C64::new(0.5f64.powi(s as i32), 0.0);
        scaled.a.iter_mut().for_each(|x| *x *= f);
        let mut result = Dense::identity(self.d);
        let mut term = Dense::identity(self.d);
        for k in 1..40 {
            term = term.mul(&scaled);
            let inv = C64::new(1.0 / k as f64, 0.0);
            term.a.iter_mut().for_each(|x| *x *= inv);
            result.add_scaled(&term, C64::new(1.0, 0.0));
        }
        for _ in 0..s {
            result = result.mul(&result);
        }
        result
    }
}

/// Annihilator `c_j` with the ordering `|b⟩ = Π_{k ascending} c†_k |0⟩`.
pub fn annihilator(n: usize, j: usize) -> Dense {
    let d = 1usize << n;
    let mut m = Dense::zeros(d);
    for b in 0..d {
        if b >> j & 1 == 1 {
            let sign = if (b & ((1 << j) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m.a[(b ^ (1 << j)) * d + b] = C64::new(sign, 0.0);
        }
    }
    m
}

pub fn hop_op(n: usize, i: usize, j: usize) -> Dense {
    annihilator(n, i).adjoint().mul(&annihilator(n, j))
}

pub fn embed(state: &ManyBodyState) -> Vec<C64> {
    let n = state.sector().n_orbitals();
    let mut v = vec![C64::new(0.0, 0.0); 1 << n];
    for (k, &x) in state.amplitudes().iter().enumerate() {
        v[state.sector().unrank(k).bits() as usize] = x;
    }
    v
}

pub fn bonds(l: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut b: Vec<(usize, usize)> = (0..l - 1).map(|i| (i, i + 1)).collect();
    if periodic {
        b.push((l - 1, 0));
    }
    b
}

pub fn dense_hubbard(l: usize, t: f64, u: f64, periodic: bool) -> Dense {
    let n = 2 * l;
    let mut h = Dense::zeros(1 << n);
    for (a, b) in bonds(l, periodic) {
        for s in [0, l] {
            h.add_scaled(&hop_op(n, a + s, b + s), C64::new(t, 0.0));
            h.add_scaled(&hop_op(n, b + s, a + s), C64::new(t, 0.0));
        }
    }
    for i in 0..l {
        h.add_scaled(&hop_op(n, i, i).mul(&hop_op(n, i + l, i + l)), C64::new(u, 0.0));
    }
    h
}

pub fn dense_tv(l: usize, t: f64, v: f64, periodic: bool) -> Dense {
    let mut h = Dense::zeros(1 << l);
    for (a, b) in bonds(l, periodic) {
        h.add_scaled(&hop_op(l, a, b), C64::new(t, 0.0));
        h.add_scaled(&hop_op(l, b, a), C64::new(t, 0.0));
        h.add_scaled(&hop_op(l, a, a).mul(&hop_op(l, b, b)), C64::new(v, 0.0));
    }
    h
}

/// `Σ_ij A_ij c†_i c_j` scaled by `i`, for `exp(iÂ)`.
pub fn i_one_body(n: usize, a: &fockcx_core::faer::Mat<C64>) -> Dense {
    let mut m = Dense::zeros(1 << n);
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)].norm() > 0.0 {
                m.add_scaled(&hop_op(n, i, j), a[(i, j)] * C64::new(0.0, 1.0));
            }
        }
    }
    m
}

/// Largest deviation between the model Hamiltonian and its dense reference,
/// over all matrix elements inside the sector.
pub fn hamiltonian_deviation(spec: &fockcx_core::models::ModelSpec) -> f64 {
    use fockcx_core::models::{build_hamiltonian, Boundary, ModelKind};
    let periodic = spec.boundary == Boundary::Periodic;
    let dense = match spec.kind {
        ModelKind::Hubbard => dense_hubbard(spec.length, spec.hopping, spec.interaction, periodic),
        ModelKind::Tv => dense_tv(spec.length, spec.hopping, spec.interaction, periodic),
    };
    let sector = spec.sector().unwrap();
    let h = build_hamiltonian(spec, sector.clone()).unwrap();
    let mut worst: f64 = 0.0;
    for r in 0..sector.dim() {
        for c in 0..sector.dim() {
            let br = sector.unrank(r).bits() as usize;
            let bc = sector.unrank(c).bits() as usize;
            worst = worst.max((h.get(r, c) - dense.at(br, bc)).norm());
        }
    }
    worst
}

/// Largest deviation of `C_ij = ⟨c†_j c_i⟩` from the dense reference.
pub fn correlation_deviation(state: &ManyBodyState) -> f64 {
    let n = state.sector().n_orbitals();
    let v = embed(state);
    let c = fockcx_core::onebody::correlation_matrix(state);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = hop_op(n, j, i).apply(&v);
            let expect: C64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            worst = worst.max((c.entries()[(i, j)] - expect).norm());
        }
    }
    worst
}

/// Largest deviation of `rotate(state, A)` from `exp(iÂ)` applied densely.
pub fn rotation_deviation(state: &ManyBodyState, g: &fockcx_core::rotation::RotationGenerator) -> f64 {
    let n = state.sector().n_orbitals();
    let a = g.matrix().to_owned();
    let expect = i_one_body(n, &a).exp().apply(&embed(state));
    let got = embed(&fockcx_core::rotation::rotate(state, g).unwrap());
    got.iter().zip(&expect).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest deviation of every `c†_i c_j` hop (target and sign) from the
/// dense reference on all `2^n` occupations.
pub fn hop_sign_deviation(n: usize) -> f64 {
    let d = 1usize << n;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let op = hop_op(n, i, j);
            for b in 0..d {
                let got = fockcx_core::Occupation(b as u64).hop(i, j);
                for r in 0..d {
                    let expect = op.at(r, b);
                    let value = match got {
                        Some((t, s)) if t.bits() as usize == r => s,
                        _ => 0.0,
                    };
                    worst = worst.max((expect - C64::new(value, 0.0)).norm());
                }
            }
        }
    }
    worst
}
