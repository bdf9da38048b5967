use ghft::dynamics::{imaginary_time_ground_state, FlowOptions};
use ghft::excitation::{apply_linearized, build_dense, spectrum, SpectrumOptions, DEFAULT_DIM_CAP};
use ghft::gaussian::{h6, quadratic_ground_state};
use ghft::hubbard::ti::{ground_state_of, TiModel, TiOptions};
use ghft::hubbard::{build_hubbard, HubbardParams, MuConvention};
use ghft::linalg::expm_antisym;
use ghft::verify::{random_antisym, random_hamiltonian, random_pure_state};
use ghft::CovarianceMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn dense_matrix_reproduces_apply() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = random_hamiltonian(&mut rng, 3, 8);
    let g = random_pure_state(&mut rng, 3);
    let op = build_dense(&h, &g, DEFAULT_DIM_CAP).unwrap();
    for _ in 0..10 {
        let x = random_antisym(&mut rng, 6);
        let got = op.apply_vec(&x.upper_vec());
        let want = apply_linearized(&h, &g, &x).unwrap().upper_vec();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn linearization_is_the_derivative_of_the_equation_of_motion() {
    let p = HubbardParams::new(1.0, -2.0, 0.3, 2, 2);
    let h = build_hubbard(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_pure_state(&mut rng, 8);
    let x = random_antisym(&mut rng, 16);
    let rhs = |eps: f64| {
        let ge = CovarianceMatrix::new(g.gamma().axpy(eps, &x)).unwrap();
        h6(&h, &ge).unwrap().commutator(ge.gamma()).scaled(4.0)
    };
    let eps = 1e-5;
    let fd = rhs(eps).minus(&rhs(-eps)).scaled(0.5 / eps);
    let analytic = apply_linearized(&h, &g, &x).unwrap().scaled(4.0);
    assert!(fd.minus(&analytic).max_abs() <= 1e-6 * analytic.max_abs());
}

#[test]
fn free_two_mode_spectrum_is_sums_and_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = random_hamiltonian(&mut rng, 2, 0);
    let t = h.quadratic_dense();
    let g = quadratic_ground_state(&t).unwrap();
    let s = spectrum(&build_dense(&h, &g, DEFAULT_DIM_CAP).unwrap(), &SpectrumOptions::default()).unwrap();
    // single-particle frequencies: eigenvalues ±iε of T
    let (vals, _) = ghft::linalg::eigh_hermitian(&t.as_array().mapv(|v| num_complex::Complex64::new(0.0, v))).unwrap();
    let mut eps: Vec<f64> = vals.iter().filter(|v| **v > 0.0).cloned().collect();
    eps.sort_by(f64::total_cmp);
    let mut want = vec![eps[0] + eps[1], eps[1] - eps[0]];
    want.sort_by(f64::total_cmp);
    let got = s.omegas();
    assert_eq!(got.len(), 2);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn spectrum_is_stable_paired_and_rotation_invariant_at_a_minimum() {
    let p = HubbardParams::new(1.0, -4.0, 1.0, 2, 2).with_convention(MuConvention::Add);
    let h = build_hubbard(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let opts = FlowOptions { tol: 1e-10, ..Default::default() };
    let (g, report) = imaginary_time_ground_state(&h, &random_pure_state(&mut rng, 8), &opts).unwrap();
    assert!(report.converged);
    let s = spectrum(&build_dense(&h, &g, DEFAULT_DIM_CAP).unwrap(), &SpectrumOptions::default()).unwrap();
    assert!(s.max_real_residual <= 1e-6 * s.scale);
    assert!(s.pairing_defect < 1e-9);

    let o = expm_antisym(&random_antisym(&mut rng, 16));
    let hr = h.rotated(&o).unwrap();
    let gr = CovarianceMatrix::new(g.gamma().conjugate(&o)).unwrap();
    let sr = spectrum(&build_dense(&hr, &gr, DEFAULT_DIM_CAP).unwrap(), &SpectrumOptions::default()).unwrap();
    let (a, b) = (s.omegas(), sr.omegas());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn paired_phase_has_a_global_phase_zero_mode() {
    let p = HubbardParams::new(1.0, -4.0, 1.0, 3, 3).with_convention(MuConvention::Add);
    let model = TiModel::new(&p).unwrap();
    let gs = ground_state_of(&model, &TiOptions::default()).unwrap();
    assert!(gs.observables.p > 1e-3);
    let g = model.to_real_space(&gs.blocks).unwrap();
    let h = build_hubbard(&p).unwrap();
    let s = spectrum(&build_dense(&h, &g, DEFAULT_DIM_CAP).unwrap(), &SpectrumOptions::default()).unwrap();
    assert!(s.zero_modes >= 1);
}
