//! Fixtures shared by the benchmarks.

use fockcx_core::generic::sample_haar_state;
use fockcx_core::models::{build_hamiltonian, ModelSpec};
use fockcx_core::rotation::RotationGenerator;
use fockcx_core::{faer, ManyBodyState, SparseOperator, C64};

/// Half-filled periodic Hubbard chain at `U = 10`.
pub fn hubbard(l: usize) -> ModelSpec {
    ModelSpec::hubbard_half_filled(l, 1.0, 10.0)
}

pub fn hamiltonian(spec: &ModelSpec) -> SparseOperator {
    build_hamiltonian(spec, spec.sector().expect("valid sector")).expect("hamiltonian")
}

pub fn random_state(spec: &ModelSpec, seed: u64) -> ManyBodyState {
    sample_haar_state(spec.sector().expect("valid sector"), seed).expect("state").state
}

/// Smooth, spin-block-diagonal generator of norm O(1).
pub fn generator(spec: &ModelSpec) -> RotationGenerator {
    let n = spec.n_orbitals();
    let a = faer::Mat::from_fn(n, n, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64 * 0.1, ((i + 2 * j) % 3) as f64 * 0.05));
    RotationGenerator::hermitian_projection(a.as_ref(), Some(spec.spin_blocks()))
}
