//! Translation-invariant Gaussian states of the Hubbard model.
//!
//! A translation-invariant state is block diagonal in the real Fourier basis:
//! one covariance block per `(k, -k)` pair over the Dirac modes
//! `[k↑, k↓, -k↑, -k↓]` (Majoranas `a` and `a + nm` for mode `a`), with
//! `a_k = N^{-1/2} Σ_x e^{-ik·x} a_x`.
//!
//! The embedding of block Majoranas into the Majoranas of a site `x`,
//! ordered `[c_↑, c_↓, c_{↑+2}, c_{↓+2}]`, is the `4 × 2nm` matrix
//! `W(θ)` with `θ = k·x`: mode `a` with spin `σ` and momentum sign `s`
//! contributes the rotation `R(sθ) = [[cos, sin], [-sin, cos]]` in rows
//! `(σ, σ+2)` and columns `(a, a+nm)`. The real-space covariance matrix is
//! `Γ_{x,y} = N^{-1} Σ_blocks W(k·x) G W(k·y)^T`.
//!
//! Site averages `N^{-1} Σ_x f(k·x)` of trigonometric polynomials of degree
//! at most 4 in `θ` are evaluated exactly on `g'` equispaced angles, where
//! `g` is the order of `k` and `g' = g` for `g ≤ 4`, `g' = 5` otherwise.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_flow, FlowOptions, FlowReport, ImaginaryTimeFlow};
use crate::error::{Error, Result};
use crate::gaussian::{h6, quadratic_ground_state, wick_energy, CovarianceMatrix};
use crate::linalg::{expm_antisym, Antisym};
use crate::majorana::MajoranaHamiltonian;

use super::grid::{BlockSpec, MomentumGrid};
use super::{site_hamiltonian, HubbardParams};

/// One block mode: spin, sign of its momentum relative to the block's `k`,
/// and its grid momentum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockMode {
    pub spin: usize,
    pub sign: f64,
    pub k: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct Block {
    pub spec: BlockSpec,
    pub modes: Vec<BlockMode>,
    /// `W(θ_j)` on the averaging angles.
    pub samples: Vec<Array2<f64>>,
    /// Band energy term `Σ_a ε(k_a) n_a` in Majorana form, without its constant.
    pub kinetic: Antisym,
    pub kinetic_offset: f64,
}

impl Block {
    pub fn nm(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.modes.len()
    }

    /// `N^{-1} Σ_x W(k·x)^T A W(k·x)` for a site matrix `A`.
    pub fn average_pullback(&self, a: &Array2<f64>) -> Array2<f64> {
        let mut acc = Array2::<f64>::zeros((self.dim(), self.dim()));
        for w in &self.samples {
            acc += &w.t().dot(a).dot(w);
        }
        acc / self.samples.len() as f64
    }

    /// `N^{-1} Σ_x W(k·x) G W(k·x)^T` for a block matrix `G`.
    pub fn average_pushforward(&self, g: &Array2<f64>) -> Array2<f64> {
        let mut acc = Array2::<f64>::zeros((4, 4));
        for w in &self.samples {
            acc += &w.dot(g).dot(&w.t());
        }
        acc / self.samples.len() as f64
    }
}

/// `W(θ)` for a block.
pub fn embedding(modes: &[BlockMode], theta: f64) -> Array2<f64> {
    let nm = modes.len();
    let mut w = Array2::<f64>::zeros((4, 2 * nm));
    for (a, m) in modes.iter().enumerate() {
        let (s, c) = (m.sign * theta).sin_cos();
        w[(m.spin, a)] = c;
        w[(m.spin, a + nm)] = s;
        w[(m.spin + 2, a)] = -s;
        w[(m.spin + 2, a + nm)] = c;
    }
    w
}

/// Initial-state bias: the ground state of the mean-field Hamiltonian plus
/// `δ_p Σ_k (a†_{k↑} a†_{-k↓} + h.c.) - δ_m Σ_k (n_{k↑} - n_{k↓})`.
///
/// A small pairing field matters even where the converged state is unpaired:
/// a state built from momentum eigenmodes with sharp occupations is
/// stationary for every occupation pattern, and the flow can only move
/// occupations continuously through Bogoliubov mixing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    #[serde(default)]
    pub pairing: f64,
    #[serde(default)]
    pub magnetic: f64,
}

impl Seed {
    pub const NONE: Seed = Seed { pairing: 0.0, magnetic: 0.0 };

    pub fn pairing(d: f64) -> Self {
        Seed { pairing: d, magnetic: 0.0 }
    }

    pub fn magnetic(d: f64) -> Self {
        Seed { pairing: 0.0, magnetic: d }
    }

    pub fn with_magnetic(mut self, d: f64) -> Self {
        self.magnetic = d;
        self
    }
}

#[derive(Clone, Debug)]
pub struct TiModel {
    pub params: HubbardParams,
    pub grid: MomentumGrid,
    pub blocks: Vec<Block>,
    pub site: MajoranaHamiltonian,
}

/// Block covariance matrices, in the order of [`MomentumGrid::blocks`].
pub type BlockState = Vec<Antisym>;

impl TiModel {
    pub fn new(params: &HubbardParams) -> Result<Self> {
        params.validate()?;
        let grid = MomentumGrid::new(params.lx, params.ly)?;
        let site = site_hamiltonian(params)?;
        let blocks = grid
            .blocks()
            .into_iter()
            .map(|spec| {
                let mut modes = Vec::new();
                for (k, sign) in spec.momenta() {
                    for spin in 0..2 {
                        modes.push(BlockMode { spin, sign, k });
                    }
                }
                let g = grid.order(spec.k);
                let gp = if g <= 4 { g } else { 5 };
                let samples = (0..gp)
                    .map(|j| embedding(&modes, 2.0 * PI * j as f64 / gp as f64))
                    .collect();
                let nm = modes.len();
                let mut kinetic = Antisym::zeros(2 * nm);
                let mut kinetic_offset = 0.0;
                for (a, m) in modes.iter().enumerate() {
                    let (kx, ky) = grid.momentum(m.k);
                    let e = params.band(kx, ky);
                    kinetic.set(a, a + nm, -e / 4.0);
                    kinetic_offset += e / 2.0;
                }
                Block { spec, modes, samples, kinetic, kinetic_offset }
            })
            .collect();
        Ok(TiModel { params: *params, grid, blocks, site })
    }

    pub fn sites(&self) -> usize {
        self.params.sites()
    }

    /// The reduced single-site covariance matrix `Γ̄`.
    pub fn site_covariance(&self, state: &BlockState) -> Antisym {
        let acc = self
            .blocks
            .par_iter()
            .zip(state.par_iter())
            .map(|(b, g)| b.average_pushforward(g.as_array()))
            .reduce(|| Array2::zeros((4, 4)), |a, b| a + b);
        Antisym::antisymmetrize(&(acc / self.sites() as f64).view())
    }

    /// `h6` of the on-site Hamiltonian at `Γ̄`.
    pub fn site_mean_field(&self, gbar: &Antisym) -> Antisym {
        let cm = CovarianceMatrix::new(gbar.clone()).expect("4x4");
        h6(&self.site, &cm).expect("site dimensions")
    }

    /// The lattice `h6` restricted to a block.
    pub fn block_mean_field(&self, b: &Block, h_site: &Antisym) -> Antisym {
        let pulled = b.average_pullback(h_site.as_array());
        b.kinetic.plus(&Antisym::antisymmetrize(&pulled.view()))
    }

    pub fn energy(&self, state: &BlockState) -> f64 {
        let gbar = self.site_covariance(state);
        let kinetic: f64 = self
            .blocks
            .iter()
            .zip(state.iter())
            .map(|(b, g)| b.kinetic.pairing(g) + b.kinetic_offset)
            .sum();
        let site = wick_energy(&self.site, &CovarianceMatrix::new(gbar).expect("4x4"));
        kinetic + self.sites() as f64 * site
    }

    /// Block mean fields and the site covariance for a state.
    pub fn mean_fields(&self, state: &BlockState) -> (Antisym, Vec<Antisym>) {
        let gbar = self.site_covariance(state);
        let hs = self.site_mean_field(&gbar);
        let hb = self.blocks.par_iter().map(|b| self.block_mean_field(b, &hs)).collect();
        (gbar, hb)
    }

    /// `max_blocks ‖[h6, G]‖_max`
    pub fn residual(&self, state: &BlockState) -> f64 {
        let (_, hb) = self.mean_fields(state);
        hb.iter().zip(state).map(|(h, g)| h.commutator(g).max_abs()).fold(0.0, f64::max)
    }

    fn seed_term(&self, b: &Block, seed: Seed) -> Antisym {
        let nm = b.nm();
        let mut s = Antisym::zeros(2 * nm);
        // δ (a†_i a†_j + a_j a_i) = (iδ/2)(c_i c_{j+nm} + c_{i+nm} c_j)
        let pairs: &[(usize, usize)] = if b.spec.self_paired { &[(0, 1)] } else { &[(0, 3), (2, 1)] };
        for &(i, j) in pairs {
            s.add(i, j + nm, seed.pairing / 4.0);
            s.add(i + nm, j, seed.pairing / 4.0);
        }
        for (a, m) in b.modes.iter().enumerate() {
            let sz = if m.spin == 0 { 1.0 } else { -1.0 };
            // -δ s n_a
            s.add(a, a + nm, seed.magnetic * sz / 4.0);
        }
        s
    }

    /// Ground state of the mean-field Hamiltonian at `Γ̄ = 0`, biased by `seed`.
    pub fn initial_state(&self, seed: Seed) -> Result<BlockState> {
        let hs = self.site_mean_field(&Antisym::zeros(4));
        self.blocks
            .par_iter()
            .map(|b| {
                let h = self.block_mean_field(b, &hs).plus(&self.seed_term(b, seed));
                Ok(quadratic_ground_state(&h)?.into_gamma())
            })
            .collect()
    }

    /// Real-space orthonormal columns spanning a block (`4N × 2nm`), rows
    /// indexed by lattice Majoranas `2·site + σ + t·2N`.
    pub fn block_embedding(&self, bi: usize) -> Array2<f64> {
        let b = &self.blocks[bi];
        let n = self.sites();
        let m = 2 * n;
        let norm = 1.0 / (n as f64).sqrt();
        let (kx, ky) = self.grid.momentum(b.spec.k);
        let mut e = Array2::<f64>::zeros((4 * n, b.dim()));
        for y in 0..self.params.ly {
            for x in 0..self.params.lx {
                let site = self.params.site_index(x, y);
                let w = embedding(&b.modes, kx * x as f64 + ky * y as f64);
                for sigma in 0..2 {
                    for t in 0..2 {
                        let row = 2 * site + sigma + t * m;
                        for col in 0..b.dim() {
                            e[(row, col)] = norm * w[(sigma + 2 * t, col)];
                        }
                    }
                }
            }
        }
        e
    }

    /// The full lattice covariance matrix of a block state.
    pub fn to_real_space(&self, state: &BlockState) -> Result<CovarianceMatrix> {
        let n = 4 * self.sites();
        let mut g = Array2::<f64>::zeros((n, n));
        for (bi, gb) in state.iter().enumerate() {
            let e = self.block_embedding(bi);
            g += &e.dot(gb.as_array()).dot(&e.t());
        }
        CovarianceMatrix::new(Antisym::antisymmetrize(&g.view()))
    }

    /// Projects a lattice covariance matrix onto the blocks.
    pub fn from_real_space(&self, g: &CovarianceMatrix) -> Result<BlockState> {
        if g.dim() != 4 * self.sites() {
            return Err(Error::DimensionMismatch { expected: 4 * self.sites(), found: g.dim() });
        }
        Ok((0..self.blocks.len())
            .map(|bi| {
                let e = self.block_embedding(bi);
                Antisym::antisymmetrize(&e.t().dot(g.gamma().as_array()).dot(&e).view())
            })
            .collect())
    }

    pub fn observables(&self, state: &BlockState) -> Observables {
        let gbar = self.site_covariance(state);
        let n_up = 0.5 * (1.0 - gbar.get(0, 2));
        let n_dn = 0.5 * (1.0 - gbar.get(1, 3));
        let filling = 0.5 * (n_up + n_dn);
        let particles = 2.0 * self.sites() as f64 * filling;
        let pair_sum: f64 = self
            .blocks
            .iter()
            .zip(state)
            .map(|(b, g)| {
                let cm = CovarianceMatrix::new(g.clone()).expect("even");
                let nm = b.nm();
                let mut s = 0.0;
                for i in 0..nm {
                    for j in 0..nm {
                        s += cm.anomalous(i, j).norm_sqr();
                    }
                }
                s
            })
            .sum();
        let site_cm = CovarianceMatrix::new(gbar).expect("4x4");
        let onsite_pair = site_cm.anomalous(0, 1);
        let energy = self.energy(state);
        Observables {
            n: filling,
            p: if particles > 0.0 { pair_sum / particles } else { 0.0 },
            p_onsite: if particles > 0.0 {
                onsite_pair.norm_sqr() * self.sites() as f64 / particles
            } else {
                0.0
            },
            n_up,
            n_dn,
            magnetization: 0.5 * (n_up - n_dn),
            onsite_pairing: onsite_pair.norm(),
            energy,
            energy_per_site: energy / self.sites() as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// Filling per spin orbital, `N / (2 Lx Ly)`.
    pub n: f64,
    /// Pairing per particle `Σ_{ij σσ'} |<a†_{iσ} a†_{jσ'}>|² / N`.
    pub p: f64,
    /// The on-site part `Σ_x |<a†_{x↑} a†_{x↓}>|² / N`.
    pub p_onsite: f64,
    pub n_up: f64,
    pub n_dn: f64,
    pub magnetization: f64,
    /// `|<a†_{x↑} a†_{x↓}>|`
    pub onsite_pairing: f64,
    pub energy: f64,
    pub energy_per_site: f64,
}

impl ImaginaryTimeFlow for TiModel {
    type State = BlockState;
    type Direction = Vec<Antisym>;

    fn energy(&self, s: &BlockState) -> f64 {
        TiModel::energy(self, s)
    }

    fn direction(&self, s: &BlockState) -> Result<(Vec<Antisym>, f64, f64)> {
        let (_, hb) = self.mean_fields(s);
        let mut res = 0.0f64;
        let mut scale = 0.0f64;
        let dirs = hb
            .iter()
            .zip(s)
            .map(|(h, g)| {
                let c = h.commutator(g);
                res = res.max(c.max_abs());
                scale = scale.max(h.max_abs());
                c.scaled(2.0)
            })
            .collect();
        Ok((dirs, res, scale))
    }

    fn advance(&self, s: &BlockState, d: &Vec<Antisym>, dtau: f64) -> BlockState {
        s.par_iter()
            .zip(d.par_iter())
            .map(|(g, a)| g.conjugate(&expm_antisym(&a.scaled(dtau))))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiOptions {
    pub flow: FlowOptions,
    /// Seeds to try (see [`default_seeds`]); the lowest final energy wins.
    pub seeds: Option<Vec<Seed>>,
}

impl Default for TiOptions {
    fn default() -> Self {
        TiOptions { flow: FlowOptions { tol: 1e-10, ..FlowOptions::default() }, seeds: None }
    }
}

pub const DEFAULT_SEED_AMPLITUDE: f64 = 1e-2;

/// A pairing seed for `u < 0`, none otherwise.
///
/// Unseeded, the flow for `u > 0` starts (and, being stationary, stays) at
/// the Fermi sea of `ε_k + u/2 - μ'`. Seeding it with pairing lets
/// occupations relax and can reach states of lower energy and different
/// filling; pass seeds explicitly to explore those.
pub fn default_seeds(u: f64) -> Vec<Seed> {
    if u < 0.0 {
        vec![Seed::pairing(DEFAULT_SEED_AMPLITUDE)]
    } else {
        vec![Seed::NONE]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundState {
    pub params: HubbardParams,
    pub blocks: BlockState,
    pub report: FlowReport,
    pub seed: Seed,
    pub observables: Observables,
}

/// Imaginary-time flow restricted to translation-invariant states.
pub fn ti_ground_state(params: &HubbardParams, opts: &TiOptions) -> Result<GroundState> {
    let model = TiModel::new(params)?;
    ground_state_of(&model, opts)
}

pub fn ground_state_of(model: &TiModel, opts: &TiOptions) -> Result<GroundState> {
    let seeds = opts.seeds.clone().unwrap_or_else(|| default_seeds(model.params.u));
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds given".into()));
    }
    let mut best: Option<GroundState> = None;
    for seed in seeds {
        let init = model.initial_state(seed)?;
        let (blocks, report) = run_flow(model, init, &opts.flow)?;
        let observables = model.observables(&blocks);
        log::info!(
            "seed {seed:?}: E = {:.12}, residual {:.3e}, {} iterations",
            report.final_energy,
            report.residual,
            report.iterations
        );
        let candidate = GroundState { params: model.params, blocks, report, seed, observables };
        let better = match &best {
            None => true,
            Some(b) => {
                (candidate.report.converged && !b.report.converged)
                    || (candidate.report.converged == b.report.converged
                        && candidate.report.final_energy < b.report.final_energy - 1e-12)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one seed"))
}

/// `<a†_a a†_b>` and `<a†_a a_b>` perturbations encoded by a complex
/// antisymmetric block perturbation `X` (`δ<c_k c_l> = -i X_kl`).
pub fn perturbation_correlators(x: &Array2<Complex64>) -> (Array2<Complex64>, Array2<Complex64>) {
    let nm = x.nrows() / 2;
    let i = Complex64::i();
    let mut f = Array2::zeros((nm, nm));
    let mut n = Array2::zeros((nm, nm));
    for a in 0..nm {
        for b in 0..nm {
            let cc = -i * x[(a, b)];
            let cs = -i * x[(a, b + nm)];
            let sc = -i * x[(a + nm, b)];
            let ss = -i * x[(a + nm, b + nm)];
            f[(a, b)] = (cc + i * cs + i * sc - ss) * 0.25;
            n[(a, b)] = (cc - i * cs + i * sc + ss) * 0.25;
        }
    }
    (f, n)
}
