//! Cross-module property suite: each property compares two independent
//! routes to the same quantity and reports the discrepancy against a tolerance.

use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, FullFlow, ImaginaryTimeFlow};
use crate::error::{Error, Result};
use crate::excitation::{build_dense, spectrum, Linearization, SpectrumOptions};
use crate::gaussian::{h6, wick_energy, CovarianceMatrix};
use crate::hubbard::spectrum::momentum_block;
use crate::hubbard::ti::{ground_state_of, Seed, TiModel, TiOptions};
use crate::hubbard::{build_hubbard, HubbardParams, MuConvention};
use crate::linalg::{expm_antisym, purity_defect, Antisym};
use crate::majorana::{MajoranaHamiltonian, ModeLayout, Quartic};
use crate::oracle::{covariance_of_state, exact_expectation, fock_matrix, gaussian_to_fock, majorana_matrix};

/// Uniform random antisymmetric matrix with entries in `[-1, 1)`.
pub fn random_antisym<R: Rng>(rng: &mut R, n: usize) -> Antisym {
    let mut a = Antisym::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            a.set(i, j, rng.random_range(-1.0..1.0));
        }
    }
    a
}

/// A Haar-ish random pure state `O Γ_vac O^T`, `O = exp(A)`.
pub fn random_pure_state<R: Rng>(rng: &mut R, modes: usize) -> CovarianceMatrix {
    let o = expm_antisym(&random_antisym(rng, 2 * modes).scaled(2.0));
    CovarianceMatrix::new(CovarianceMatrix::vacuum(modes).gamma().conjugate(&o)).expect("even")
}

/// Random quadratic part plus `quartic_terms` random quartic orbits.
pub fn random_hamiltonian<R: Rng>(rng: &mut R, modes: usize, quartic_terms: usize) -> MajoranaHamiltonian {
    let n = 2 * modes;
    let t = random_antisym(rng, n);
    let mut u = Quartic::new();
    if n >= 4 {
        for _ in 0..quartic_terms {
            let mut idx = [0usize; 4];
            loop {
                for v in idx.iter_mut() {
                    *v = rng.random_range(0..n);
                }
                let mut s = idx;
                s.sort_unstable();
                if s.windows(2).all(|w| w[0] != w[1]) {
                    break;
                }
            }
            u.add(idx, rng.random_range(-1.0..1.0)).expect("distinct indices");
        }
    }
    MajoranaHamiltonian::from_parts(ModeLayout::modes_only(modes), &t, u, rng.random_range(-1.0..1.0))
        .expect("consistent dimensions")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyTolerances {
    pub wick: f64,
    pub gradient: f64,
    pub roundtrip: f64,
    pub anticommutator: f64,
    pub reduction: f64,
    pub free_reduction: f64,
    pub flow_equivalence: f64,
    pub purity: f64,
    pub energy_drift: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            wick: 1e-9,
            gradient: 1e-6,
            roundtrip: 1e-10,
            anticommutator: 0.0,
            reduction: 1e-8,
            free_reduction: 1e-10,
            flow_equivalence: 1e-8,
            purity: 1e-10,
            energy_drift: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Lattice model used for the reduction and flow properties (at most 5×5).
    pub params: HubbardParams,
    pub rng_seed: u64,
    /// Random instances for the Wick and round-trip properties.
    pub instances: usize,
    /// Real-time steps of size `dt` for the purity and energy-drift property.
    pub steps: usize,
    pub dt: f64,
    pub tolerances: VerifyTolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            params: HubbardParams::new(1.0, -2.0, 2.0, 3, 3).with_convention(MuConvention::Add),
            rng_seed: 7,
            instances: 20,
            steps: 1000,
            dt: 1e-3,
            tolerances: VerifyTolerances::default(),
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.params.lx > 5 || self.params.ly > 5 {
            return Err(Error::InvalidParameter(format!(
                "verification lattice must be at most 5x5, got {}x{}",
                self.params.lx, self.params.ly
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    /// Measured discrepancy.
    pub error: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn failed(&self) -> Vec<&str> {
        self.properties.iter().filter(|p| !p.passed).map(|p| p.name.as_str()).collect()
    }
}

fn record(out: &mut Vec<PropertyResult>, name: &str, tol: f64, f: impl FnOnce() -> Result<(f64, String)>) {
    let start = Instant::now();
    let (error, detail) = match f() {
        Ok(r) => r,
        Err(e) => (f64::INFINITY, format!("error: {e}")),
    };
    out.push(PropertyResult {
        name: name.to_string(),
        passed: error <= tol,
        error,
        tolerance: tol,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    });
}

/// `max |{c_k, c_l} - 2δ_kl|` over the Jordan-Wigner Majorana matrices.
pub fn anticommutator_defect(modes: usize) -> Result<f64> {
    let cs: Vec<_> = (0..2 * modes).map(|k| majorana_matrix(k, modes)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for k in 0..cs.len() {
        for l in k..cs.len() {
            let ac = cs[k].product(&cs[l]).plus(&cs[l].product(&cs[k]));
            for ((i, j), z) in ac.matrix().indexed_iter() {
                let want = if k == l && i == j { 2.0 } else { 0.0 };
                worst = worst.max((z - Complex64::new(want, 0.0)).norm());
            }
        }
    }
    Ok(worst)
}

/// Relative difference between the Wick energy and the exact Fock-space
/// expectation value in the Gaussian state's vector.
pub fn wick_fock_error(h: &MajoranaHamiltonian, g: &CovarianceMatrix) -> Result<f64> {
    let psi = gaussian_to_fock(g)?;
    let exact = exact_expectation(&fock_matrix(h)?, &psi)?;
    let wick = wick_energy(h, g);
    Ok((wick - exact.re).abs().max(exact.im.abs()) / exact.norm().max(1.0))
}

/// Relative difference between `Σ h6_kl X_kl` and a central finite difference
/// of the energy along the tangent direction `X = [A, Γ]`.
pub fn gradient_error<R: Rng>(rng: &mut R, h: &MajoranaHamiltonian, g: &CovarianceMatrix) -> Result<f64> {
    let a = random_antisym(rng, g.dim());
    let x = a.commutator(g.gamma());
    let eps = 1e-5;
    let plus = wick_energy(h, &CovarianceMatrix::new(g.gamma().axpy(eps, &x))?);
    let minus = wick_energy(h, &CovarianceMatrix::new(g.gamma().axpy(-eps, &x))?);
    let fd = (plus - minus) / (2.0 * eps);
    let analytic = h6(h, g)?.pairing(&x);
    Ok((fd - analytic).abs() / analytic.abs().max(1.0))
}

/// Largest entry of `Γ - Γ(ψ(Γ))`.
pub fn roundtrip_error(g: &CovarianceMatrix) -> Result<f64> {
    let psi = gaussian_to_fock(g)?;
    Ok(covariance_of_state(&psi, g.modes())?.minus(g.gamma()).max_abs())
}

/// Compresses the full lattice linearization onto every block and compares
/// with the per-block operators. Returns the largest matrix-entry difference.
pub fn reduction_error(model: &TiModel, state: &[Antisym]) -> Result<f64> {
    let h = build_hubbard(&model.params)?;
    let full = model.to_real_space(&state.to_vec())?;
    let lin = Linearization::new(&h, &full)?;
    let mut worst = 0.0f64;
    for (bi, b) in model.blocks.iter().enumerate() {
        let e = model.block_embedding(bi);
        let block = momentum_block(model, &state.to_vec(), b.spec.k)?;
        for (col, (a, c)) in block.basis().into_iter().enumerate() {
            let mut x = Array2::<f64>::zeros((b.dim(), b.dim()));
            x[(a, c)] = 1.0;
            x[(c, a)] = -1.0;
            let xf = Antisym::antisymmetrize(&e.dot(&x).dot(&e.t()).view());
            let y = lin.apply(&xf);
            let yb = Antisym::antisymmetrize(&e.t().dot(y.as_array()).dot(&e).view());
            for (row, v) in yb.upper_vec().into_iter().enumerate() {
                worst = worst.max((v - block.matrix[(row, col)]).abs());
            }
        }
    }
    Ok(worst)
}

/// Free model: every block frequency must appear in the dense spectrum, and
/// block compressions must agree with the dense operator. Returns the larger
/// of the two discrepancies.
pub fn free_reduction_error(params: &HubbardParams) -> Result<f64> {
    let p = HubbardParams { u: 0.0, ..*params };
    let model = TiModel::new(&p)?;
    let gs = ground_state_of(&model, &TiOptions::default())?;
    let compressed = reduction_error(&model, &gs.blocks)?;
    let h = build_hubbard(&p)?;
    let full = model.to_real_space(&gs.blocks)?;
    let opts = SpectrumOptions { zero_tol: Some(1e-9), ..Default::default() };
    let dense = spectrum(&build_dense(&h, &full, crate::excitation::DEFAULT_DIM_CAP)?, &opts)?.omegas();
    let mut worst = compressed;
    for b in &model.blocks {
        let s = spectrum(&momentum_block(&model, &gs.blocks, b.spec.k)?, &opts)?;
        for w in s.omegas() {
            let d = dense.iter().map(|v| (v - w).abs()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Runs `steps` fixed imaginary-time steps of size `dtau` with both the
/// per-block and the full-space flow from the same translation-invariant
/// start; returns the largest covariance difference.
pub fn flow_equivalence_error(model: &TiModel, seed: Seed, steps: usize, dtau: f64) -> Result<f64> {
    let h = build_hubbard(&model.params)?;
    let full_flow = FullFlow { hamiltonian: &h };
    let mut ti = model.initial_state(seed)?;
    let mut full = model.to_real_space(&ti)?.into_gamma();
    for _ in 0..steps {
        let (d, _, _) = model.direction(&ti)?;
        ti = model.advance(&ti, &d, dtau);
        let (d, _, _) = full_flow.direction(&full)?;
        full = full_flow.advance(&full, &d, dtau);
    }
    Ok(model.to_real_space(&ti)?.gamma().minus(&full).max_abs())
}

/// Runs the whole suite.
pub fn run_suite(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let tol = &cfg.tolerances;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut out = Vec::new();

    record(&mut out, "majorana_anticommutators", tol.anticommutator, || {
        Ok((anticommutator_defect(4)?, "M = 4".into()))
    });

    let instances: Vec<(MajoranaHamiltonian, CovarianceMatrix)> = (0..cfg.instances)
        .map(|i| {
            let m = 2 + i % 4;
            (random_hamiltonian(&mut rng, m, 3 * m), random_pure_state(&mut rng, m))
        })
        .collect();

    record(&mut out, "wick_fock_energy", tol.wick, || {
        let mut worst = 0.0f64;
        for (h, g) in &instances {
            worst = worst.max(wick_fock_error(h, g)?);
        }
        Ok((worst, format!("{} random instances, M = 2..5", instances.len())))
    });

    let mut grad_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(1));
    record(&mut out, "gradient_identity", tol.gradient, || {
        let mut worst = 0.0f64;
        for (h, g) in &instances {
            worst = worst.max(gradient_error(&mut grad_rng, h, g)?);
        }
        Ok((worst, "central differences, eps = 1e-5".into()))
    });

    record(&mut out, "cm_roundtrip", tol.roundtrip, || {
        let mut worst = 0.0f64;
        for (_, g) in &instances {
            worst = worst.max(roundtrip_error(g)?);
        }
        Ok((worst, "Γ → Fock vector → Γ".into()))
    });

    record(&mut out, "real_time_purity", tol.purity, || {
        let p = HubbardParams::new(cfg.params.t, cfg.params.u, cfg.params.mu, 2, 2)
            .with_convention(cfg.params.mu_convention);
        let h = build_hubbard(&p)?;
        let mut r = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(2));
        let g0 = random_pure_state(&mut r, p.layout().modes());
        let (g, _) = evolve(&h, &g0, cfg.dt, cfg.steps)?;
        Ok((purity_defect(g.gamma()), format!("2x2 lattice, {} steps of {}", cfg.steps, cfg.dt)))
    });

    record(&mut out, "real_time_energy_drift", tol.energy_drift, || {
        let p = HubbardParams::new(cfg.params.t, cfg.params.u, cfg.params.mu, 2, 2)
            .with_convention(cfg.params.mu_convention);
        let h = build_hubbard(&p)?;
        let mut r = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(2));
        let g0 = random_pure_state(&mut r, p.layout().modes());
        let (_, e) = evolve(&h, &g0, cfg.dt, cfg.steps)?;
        let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / e[0].abs().max(1e-300);
        Ok((drift, "relative, 2x2 lattice".into()))
    });

    let model = TiModel::new(&cfg.params)?;
    let gs = ground_state_of(&model, &TiOptions::default());
    record(&mut out, "dense_vs_reduced", tol.reduction, || {
        let gs = gs.as_ref().map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let err = reduction_error(&model, &gs.blocks)?;
        Ok((err, format!("{}x{}, ground-state residual {:.1e}", cfg.params.lx, cfg.params.ly, gs.report.residual)))
    });

    record(&mut out, "free_dense_vs_reduced", tol.free_reduction, || {
        Ok((free_reduction_error(&cfg.params)?, "u = 0".into()))
    });

    record(&mut out, "ti_flow_equivalence", tol.flow_equivalence, || {
        let seed = Seed::pairing(0.05);
        Ok((flow_equivalence_error(&model, seed, 20, 0.02)?, "20 steps of 0.02".into()))
    });

    let passed = out.iter().all(|p| p.passed);
    Ok(VerifyReport { passed, properties: out })
}
