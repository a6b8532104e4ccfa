use std::sync::Arc;

use fockcx_core::complexity::{optimize_basis, renyi2_entropy, OptimizerOptions};
use fockcx_core::generic::sample_haar_state_stream;
use fockcx_core::onebody::{correlation_entropies, correlation_matrix};
use fockcx_core::rotation::{rotate, RotationGenerator};
use fockcx_core::{faer, FockSector, ManyBodyState, Occupation, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn generator(n: usize, seed: u64, scale: f64) -> RotationGenerator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = faer::Mat::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale);
    RotationGenerator::hermitian_projection(a.as_ref(), None)
}

fn sector_strategy() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=10).prop_flat_map(|n| (Just(n), 1..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fock_entropy_bounded_by_correlation_entropy((n, p) in sector_strategy(), seed in any::<u64>(), scale in 0.1f64..3.0) {
        let sector = Arc::new(FockSector::new(n, p).unwrap());
        let st = sample_haar_state_stream(sector, seed, 0).unwrap().state;
        let sc = correlation_entropies(&correlation_matrix(&st), &[]).unwrap().s_c;
        let rotated = rotate(&st, &generator(n, seed ^ 1, scale)).unwrap();
        prop_assert!(renyi2_entropy(&rotated) >= sc - 1e-10);
        prop_assert!(renyi2_entropy(&st) >= sc - 1e-10);
    }

    #[test]
    fn rotation_preserves_norm_and_inverts((n, p) in sector_strategy(), seed in any::<u64>(), scale in 0.1f64..3.0) {
        let sector = Arc::new(FockSector::new(n, p).unwrap());
        let st = sample_haar_state_stream(sector, seed, 1).unwrap().state;
        let g = generator(n, seed ^ 2, scale);
        let r = rotate(&st, &g).unwrap();
        prop_assert!((r.norm() - 1.0).abs() < 1e-10);
        let back = rotate(&r, &g.negated()).unwrap();
        let d = back.amplitudes().iter().zip(st.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-9);
    }

    #[test]
    fn rotation_conjugates_correlation_matrix((n, p) in sector_strategy(), seed in any::<u64>(), scale in 0.1f64..3.0) {
        let sector = Arc::new(FockSector::new(n, p).unwrap());
        let st = sample_haar_state_stream(sector, seed, 2).unwrap().state;
        let g = generator(n, seed ^ 3, scale);
        let u = g.unitary().unwrap();
        let c = correlation_matrix(&st);
        let expect = &u * c.entries() * u.adjoint();
        let got = correlation_matrix(&rotate(&st, &g).unwrap());
        for i in 0..n {
            for j in 0..n {
                prop_assert!((got.entries()[(i, j)] - expect[(i, j)]).norm() < 1e-9);
            }
        }
    }
}

/// Equal superposition of `n` Slater determinants on disjoint orbital pairs.
fn n_set_state(n: usize) -> ManyBodyState {
    let sector = Arc::new(FockSector::new(2 * n, 2).unwrap());
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let terms: Vec<(Occupation, C64)> = (0..n).map(|m| (Occupation::from_orbitals(&[2 * m, 2 * m + 1]), amp)).collect();
    ManyBodyState::superposition(sector, &terms).unwrap()
}

#[test]
fn n_set_states_saturate_the_bound() {
    for n in 2..=4 {
        let st = n_set_state(n);
        let ln_n = (n as f64).ln();
        let sc = correlation_entropies(&correlation_matrix(&st), &[]).unwrap().s_c;
        assert!((sc - ln_n).abs() < 1e-12);
        let r = optimize_basis(&st, None, &OptimizerOptions::default()).unwrap();
        assert!((r.s_best() - ln_n).abs() < 1e-8, "n = {n}: {}", r.s_best());
    }
}
