use ghft::gaussian::{h6, mean_field, quadratic_ground_state, tr2_contract, wick_energy, MeanField};
use ghft::linalg::purity_defect;
use ghft::majorana::{compile_hamiltonian, DiracTermList, ModeLayout};
use ghft::oracle::{exact_expectation, gaussian_to_fock, number_matrix};
use ghft::verify::{gradient_error, random_antisym, random_hamiltonian, random_pure_state, wick_fock_error};
use ghft::{Antisym, CovarianceMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wick_energy_equals_fock_expectation(seed in 0u64..10_000, modes in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, modes, 3 * modes);
        let g = random_pure_state(&mut rng, modes);
        prop_assert!(wick_fock_error(&h, &g).unwrap() < 1e-9);
    }

    #[test]
    fn h6_is_the_energy_gradient(seed in 0u64..10_000, modes in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, modes, 4 * modes);
        let g = random_pure_state(&mut rng, modes);
        prop_assert!(gradient_error(&mut rng, &h, &g).unwrap() < 1e-6);
    }

    #[test]
    fn tr2_is_bilinear(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, 3, 10);
        let (x, y) = (random_antisym(&mut rng, 6), random_antisym(&mut rng, 6));
        let lhs = tr2_contract(h.quartic(), &x.scaled(a).axpy(b, &y)).unwrap();
        let rhs = tr2_contract(h.quartic(), &x).unwrap().scaled(a).axpy(b, &tr2_contract(h.quartic(), &y).unwrap());
        prop_assert!(lhs.minus(&rhs).max_abs() < 1e-12 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn mean_field_factor_is_linear(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, 3, 8);
        let g = random_pure_state(&mut rng, 3);
        let t = h.quadratic_dense();
        let m3 = mean_field(&h, &g, MeanField::H3).unwrap().minus(&t);
        let m6 = mean_field(&h, &g, MeanField::H6).unwrap().minus(&t);
        prop_assert!(m6.minus(&m3.scaled(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn quadratic_ground_state_is_pure_and_stationary(seed in 0u64..10_000, modes in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_antisym(&mut rng, 2 * modes);
        let g = quadratic_ground_state(&h).unwrap();
        prop_assert!(purity_defect(g.gamma()) < 1e-10);
        prop_assert!(h.commutator(g.gamma()).max_abs() < 1e-10);
        // no other pure state of the same quadratic Hamiltonian is lower
        let other = random_pure_state(&mut rng, modes);
        prop_assert!(h.pairing(g.gamma()) <= h.pairing(other.gamma()) + 1e-12);
    }
}

#[test]
fn occupation_accessors_agree_with_fock() {
    for occupied in [true, false] {
        let g = CovarianceMatrix::from_occupations(&[occupied]);
        let psi = gaussian_to_fock(&g).unwrap();
        let exact = exact_expectation(&number_matrix(0, 1).unwrap(), &psi).unwrap();
        assert!((g.hopping(0, 0) - exact).norm() < 1e-14);
    }
    let mixed = CovarianceMatrix::new(Antisym::zeros(4)).unwrap();
    for k in 0..4 {
        for l in 0..4 {
            let want = if k == l { 1.0 } else { 0.0 };
            assert_eq!(mixed.two_point(k, l).re, want);
            assert_eq!(mixed.two_point(k, l).im, 0.0);
        }
    }
}

#[test]
fn number_term_ground_states_match_fock() {
    for mu in [1.3, -1.3] {
        let mut terms = DiracTermList::new();
        terms.number(0, mu);
        let h = compile_hamiltonian(ModeLayout::modes_only(1), &terms).unwrap();
        let g = quadratic_ground_state(&h.quadratic_dense()).unwrap();
        assert!((g.occupation(0) - if mu > 0.0 { 0.0 } else { 1.0 }).abs() < 1e-14);
        assert!((wick_energy(&h, &g) - mu.min(0.0)).abs() < 1e-14);
    }
}

#[test]
fn free_mean_field_is_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random_hamiltonian(&mut rng, 3, 0);
    let g = random_pure_state(&mut rng, 3);
    assert_eq!(h6(&h, &g).unwrap(), h.quadratic_dense());
}
