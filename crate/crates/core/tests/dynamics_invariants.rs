use ghft::dynamics::{evolve, free_evolution, imaginary_time_ground_state, real_time_step, FlowOptions};
use ghft::gaussian::{quadratic_ground_state, wick_energy};
use ghft::hubbard::{build_hubbard, HubbardParams};
use ghft::linalg::{expm_antisym, purity_defect};
use ghft::majorana::{compile_hamiltonian, DiracTermList, ModeLayout};
use ghft::verify::{random_antisym, random_hamiltonian, random_pure_state};
use ghft::CovarianceMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn real_time_flow_keeps_state_pure(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, 3, 6);
        let g = random_pure_state(&mut rng, 3);
        let (g, _) = evolve(&h, &g, 1e-2, 500).unwrap();
        prop_assert!(purity_defect(g.gamma()) < 1e-10);
    }

    #[test]
    fn imaginary_time_energy_never_rises(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, 3, 6);
        let g = random_pure_state(&mut rng, 3);
        let opts = FlowOptions { max_iter: 2000, ..Default::default() };
        let (g, report) = imaginary_time_ground_state(&h, &g, &opts).unwrap();
        for w in report.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        prop_assert!(purity_defect(g.gamma()) < 1e-10);
    }
}

#[test]
fn free_evolution_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random_hamiltonian(&mut rng, 3, 0);
    let g0 = random_pure_state(&mut rng, 3);
    let (g, _) = evolve(&h, &g0, 1e-3, 1000).unwrap();
    let exact = free_evolution(&h.quadratic_dense(), &g0, 1.0).unwrap();
    assert!(g.gamma().minus(exact.gamma()).max_abs() < 1e-5);
}

#[test]
fn stationary_state_does_not_move() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_hamiltonian(&mut rng, 3, 0);
    let g = quadratic_ground_state(&h.quadratic_dense()).unwrap();
    let g1 = real_time_step(&h, &g, 1e-2).unwrap();
    assert!(g1.gamma().minus(g.gamma()).max_abs() < 1e-12);
}

#[test]
fn hubbard_energy_conserved_per_step() {
    let p = HubbardParams::new(1.0, -3.0, 0.5, 2, 2);
    let h = build_hubbard(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = random_pure_state(&mut rng, 8);
    let (_, energies) = evolve(&h, &g, 1e-3, 200).unwrap();
    for w in energies.windows(2) {
        assert!((w[1] - w[0]).abs() < 1e-10);
    }
}

#[test]
fn two_site_hopping_reaches_exact_energy() {
    let t = 1.3;
    let mut terms = DiracTermList::new();
    terms.hop(0, 1, t);
    let h = compile_hamiltonian(ModeLayout::modes_only(2), &terms).unwrap();
    let g0 = CovarianceMatrix::from_occupations(&[true, false]);
    let (g, report) = imaginary_time_ground_state(&h, &g0, &FlowOptions::default()).unwrap();
    assert!(report.converged);
    assert!((wick_energy(&h, &g) + t).abs() < 1e-8);
}

#[test]
fn single_site_hubbard_reaches_brute_force_minimum_in_each_parity_sector() {
    // u = 4, μ = 1: vacuum 0, one spin -μ, doubly occupied u - 2μ. The flow
    // conjugates by rotations continuously connected to the identity, so it
    // keeps the fermion parity of its start; compare with the brute-force
    // minimum over random states of the same parity.
    let p = HubbardParams::new(1.0, 4.0, 1.0, 1, 1);
    let h = build_hubbard(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (reference, want) in [([false, false], 0.0), ([true, false], -1.0)] {
        let rotate = |rng: &mut ChaCha8Rng| {
            let o = expm_antisym(&random_antisym(rng, 4).scaled(2.0));
            CovarianceMatrix::new(CovarianceMatrix::from_occupations(&reference).gamma().conjugate(&o)).unwrap()
        };
        let g0 = rotate(&mut rng);
        let (g, report) = imaginary_time_ground_state(&h, &g0, &FlowOptions::default()).unwrap();
        assert!(report.converged);
        let best = (0..2000).map(|_| wick_energy(&h, &rotate(&mut rng))).fold(f64::INFINITY, f64::min);
        let e = wick_energy(&h, &g);
        assert!(e <= best + 1e-8, "flow {e}, brute force {best}");
        assert!((e - want).abs() < 1e-8, "{e} vs {want}");
    }
}
