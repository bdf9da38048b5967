//! Linearization of the covariance-matrix equation of motion around a
//! stationary state, and its eigen-decomposition into excitation frequencies.
//!
//! With `Γ(t) = Γ₀ + ε Γ₁(t)` the real-time flow gives
//! `dΓ₁/dt = 4 ([h6(Γ₀), Γ₁] + 6 [tr2(U Γ₁), Γ₀])`. The operator `V` below is
//! the bracket without the overall factor 4; eigenvalues `λ = iω` of `V`
//! define the frequencies `ω` in these units.
//!
//! Perturbations are parametrized by their upper triangle `X_ab`, `a < b`, so
//! the operator lives on the `n(n-1)/2`-dimensional antisymmetric subspace.

use std::collections::HashMap;
use std::path::PathBuf;

use log::warn;
use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{h6, tr2_accumulate, CovarianceMatrix};
use crate::linalg::Antisym;
use crate::majorana::{MajoranaHamiltonian, Quartic};

/// Default cap on the operator dimension.
pub const DEFAULT_DIM_CAP: usize = 20_000;

/// The data needed to apply `V` repeatedly: `h6(Γ₀)`, `Γ₀` and `U`.
#[derive(Clone, Debug)]
pub struct Linearization {
    h6: Antisym,
    gamma: Antisym,
    quartic: Quartic,
    /// Orbits touching each Majorana pair `(a, b)`, `a < b`.
    by_pair: HashMap<(usize, usize), Vec<([usize; 4], f64)>>,
}

impl Linearization {
    pub fn new(h: &MajoranaHamiltonian, g0: &CovarianceMatrix) -> Result<Self> {
        let h6 = h6(h, g0)?;
        let residual = h6.commutator(g0.gamma()).max_abs();
        if residual > 1e-7 {
            warn!("linearizing around a non-stationary state (residual {residual:e})");
        }
        Ok(Self::from_parts(h6, g0.gamma().clone(), h.quartic().clone()))
    }

    pub fn from_parts(h6: Antisym, gamma: Antisym, quartic: Quartic) -> Self {
        let mut by_pair: HashMap<(usize, usize), Vec<([usize; 4], f64)>> = HashMap::new();
        for (idx, &v) in quartic.iter() {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    by_pair.entry((idx[i], idx[j])).or_default().push((*idx, v));
                }
            }
        }
        Linearization { h6, gamma, quartic, by_pair }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn h6(&self) -> &Antisym {
        &self.h6
    }

    pub fn gamma(&self) -> &Antisym {
        &self.gamma
    }

    /// `[h6(Γ₀), X] + 6 [tr2(U X), Γ₀]`
    pub fn apply(&self, x: &Antisym) -> Antisym {
        let mut s = Antisym::zeros(self.dim());
        tr2_accumulate(&self.quartic, x, 6.0, &mut s);
        self.h6.commutator(x).plus(&s.commutator(&self.gamma))
    }

    /// `V` applied to the elementary perturbation `e_ab - e_ba`, in `O(n)`
    /// work plus the orbits touching `(a, b)`.
    pub fn apply_elementary(&self, a: usize, b: usize) -> Antisym {
        let n = self.dim();
        let h = self.h6.as_array();
        let g = self.gamma.as_array();
        let mut out = Array2::<f64>::zeros((n, n));
        // [h, E], E = e_ab - e_ba: (hE)_ib = h_ia, (hE)_ia = -h_ib, (Eh)_aj = h_bj, (Eh)_bj = -h_aj
        for i in 0..n {
            out[(i, b)] += h[(i, a)];
            out[(i, a)] -= h[(i, b)];
            out[(a, i)] -= h[(b, i)];
            out[(b, i)] += h[(a, i)];
        }
        // S = 6 tr2(U E) is sparse; accumulate [S, Γ₀].
        let mut s: HashMap<(usize, usize), f64> = HashMap::new();
        if let Some(orbits) = self.by_pair.get(&(a.min(b), a.max(b))) {
            let get = |i: usize, j: usize| {
                if (i, j) == (a, b) {
                    1.0
                } else if (i, j) == (b, a) {
                    -1.0
                } else {
                    0.0
                }
            };
            for (idx, v) in orbits {
                // Same contraction as `tr2_accumulate` with scale 6.
                let [p, q, r, t] = *idx;
                let w = 12.0 * v;
                for (i, j, val) in [
                    (p, q, -w * get(r, t)),
                    (p, r, w * get(q, t)),
                    (p, t, -w * get(q, r)),
                    (q, r, -w * get(p, t)),
                    (q, t, w * get(p, r)),
                    (r, t, -w * get(p, q)),
                ] {
                    if val != 0.0 {
                        *s.entry((i, j)).or_insert(0.0) += val;
                    }
                }
            }
        }
        for (&(p, q), &v) in &s {
            // S = v (e_pq - e_qp); [S, Γ] = S Γ - Γ S
            for j in 0..n {
                out[(p, j)] += v * g[(q, j)];
                out[(q, j)] -= v * g[(p, j)];
                out[(j, q)] -= v * g[(j, p)];
                out[(j, p)] += v * g[(j, q)];
            }
        }
        Antisym::antisymmetrize(&out.view())
    }
}

/// `[h6(Γ₀), X] + 6 [tr2(U X), Γ₀]` for a single perturbation.
pub fn apply_linearized(h: &MajoranaHamiltonian, g0: &CovarianceMatrix, x: &Antisym) -> Result<Antisym> {
    if x.dim() != g0.dim() || h.dim() != g0.dim() {
        return Err(Error::DimensionMismatch { expected: g0.dim(), found: x.dim() });
    }
    let h6 = h6(h, g0)?;
    let mut s = Antisym::zeros(x.dim());
    tr2_accumulate(h.quartic(), x, 6.0, &mut s);
    Ok(h6.commutator(x).plus(&s.commutator(g0.gamma())))
}

/// Upper-triangle coordinates `(a, b)`, `a < b`, in row-major order.
pub fn antisymmetric_basis(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            v.push((a, b));
        }
    }
    v
}

/// Dense matrix of `V` on the antisymmetric subspace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearizedOperator {
    /// Size of the perturbation matrices.
    pub n: usize,
    /// `D × D` matrix in the coordinates of [`antisymmetric_basis`].
    pub matrix: Array2<f64>,
}

impl LinearizedOperator {
    pub fn from_matrix(n: usize, matrix: Array2<f64>) -> Result<Self> {
        let d = n * n.saturating_sub(1) / 2;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        Ok(LinearizedOperator { n, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn basis(&self) -> Vec<(usize, usize)> {
        antisymmetric_basis(self.n)
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.dot(&Array1::from(v.to_vec())).to_vec()
    }
}

/// Builds `V` column by column from elementary perturbations.
pub fn build_dense(h: &MajoranaHamiltonian, g0: &CovarianceMatrix, cap: usize) -> Result<LinearizedOperator> {
    let n = g0.dim();
    let d = n * n.saturating_sub(1) / 2;
    if d > cap {
        return Err(Error::TooLarge { dim: d, cap });
    }
    let lin = Linearization::new(h, g0)?;
    Ok(build_from(&lin))
}

pub fn build_from(lin: &Linearization) -> LinearizedOperator {
    let n = lin.dim();
    let basis = antisymmetric_basis(n);
    let cols: Vec<Vec<f64>> = basis
        .par_iter()
        .map(|&(a, b)| lin.apply_elementary(a, b).upper_vec())
        .collect();
    let d = basis.len();
    let mut m = Array2::<f64>::zeros((d, d));
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    LinearizedOperator { n, matrix: m }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Absolute threshold below which `ω` counts as a zero mode; `None` means
    /// `1e-6` times the largest `|λ|`.
    pub zero_tol: Option<f64>,
    /// Relative tolerance for merging frequencies into multiplets.
    pub degeneracy_tol: f64,
    /// Where to persist the matrix if the eigensolver fails.
    pub dump_dir: Option<PathBuf>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { zero_tol: None, degeneracy_tol: 1e-6, dump_dir: None }
    }
}

/// One positive-frequency eigenpair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Excitation {
    pub omega: f64,
    pub eigenvalue: Complex64,
    /// Eigenvector as a complex antisymmetric perturbation, unit Frobenius norm,
    /// largest-magnitude entry (first in row-major order) real and positive.
    pub vector: Array2<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiplet {
    pub omega: f64,
    pub multiplicity: usize,
    /// `max |Re λ|` over the members.
    pub real_residual: f64,
    /// Indices into [`ExcitationSpectrum::excitations`].
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExcitationSpectrum {
    /// Nonzero frequencies, one per `±ω` pair, sorted ascending.
    pub excitations: Vec<Excitation>,
    pub multiplets: Vec<Multiplet>,
    /// Number of eigenvalues with `|Im λ| < zero_tol` (counted individually).
    pub zero_modes: usize,
    /// `max |Re λ|` over all eigenvalues.
    pub max_real_residual: f64,
    /// Largest `|λ|`.
    pub scale: f64,
    /// Largest distance from `-λ` (resp. `conj λ`) to the nearest eigenvalue.
    pub pairing_defect: f64,
    pub zero_tol: f64,
    pub eigenvalues: Vec<Complex64>,
}

/// Compact JSON form: `{omega, multiplicity, real_residual}` per multiplet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub omega: f64,
    pub multiplicity: usize,
    pub real_residual: f64,
}

impl ExcitationSpectrum {
    pub fn summary(&self) -> Vec<SpectrumSummary> {
        self.multiplets
            .iter()
            .map(|m| SpectrumSummary { omega: m.omega, multiplicity: m.multiplicity, real_residual: m.real_residual })
            .collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.excitations.iter().map(|e| e.omega).collect()
    }
}

/// Eigen-decomposition of `V` into frequencies, multiplets and residuals.
pub fn spectrum(op: &LinearizedOperator, opts: &SpectrumOptions) -> Result<ExcitationSpectrum> {
    let d = op.dim();
    if d == 0 {
        return Ok(ExcitationSpectrum {
            excitations: Vec::new(),
            multiplets: Vec::new(),
            zero_modes: 0,
            max_real_residual: 0.0,
            scale: 0.0,
            pairing_defect: 0.0,
            zero_tol: opts.zero_tol.unwrap_or(0.0),
            eigenvalues: Vec::new(),
        });
    }
    let (vals, vecs) = match op.matrix.eig() {
        Ok(r) => r,
        Err(e) => {
            let dump = opts.dump_dir.as_ref().and_then(|dir| {
                let path = dir.join(format!("failed-eig-{}x{}.csv", d, d));
                crate::io::write_matrix_csv(&path, &op.matrix).ok().map(|_| path)
            });
            return Err(Error::Eigensolver { message: e.to_string(), dump });
        }
    };
    let eigenvalues: Vec<Complex64> = vals.to_vec();
    let scale = eigenvalues.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let zero_tol = opts.zero_tol.unwrap_or(1e-6 * scale.max(1e-300));
    let max_real_residual = eigenvalues.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));

    let mut pairing_defect = 0.0f64;
    for z in &eigenvalues {
        let neg = eigenvalues.iter().map(|w| (w + z).norm()).fold(f64::INFINITY, f64::min);
        let conj = eigenvalues.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
        pairing_defect = pairing_defect.max(neg).max(conj);
    }

    let basis = antisymmetric_basis(op.n);
    let mut zero_modes = 0;
    let mut excitations = Vec::new();
    for (col, z) in eigenvalues.iter().enumerate() {
        if z.im.abs() < zero_tol {
            zero_modes += 1;
            continue;
        }
        if z.im < 0.0 {
            continue;
        }
        let mut x = Array2::<Complex64>::zeros((op.n, op.n));
        for (i, &(a, b)) in basis.iter().enumerate() {
            x[(a, b)] = vecs[(i, col)];
            x[(b, a)] = -vecs[(i, col)];
        }
        normalize_perturbation(&mut x);
        excitations.push(Excitation { omega: z.im, eigenvalue: *z, vector: x });
    }
    excitations.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let multiplets = group_multiplets(&excitations, opts.degeneracy_tol, zero_tol);
    Ok(ExcitationSpectrum {
        excitations,
        multiplets,
        zero_modes,
        max_real_residual,
        scale,
        pairing_defect,
        zero_tol,
        eigenvalues,
    })
}

/// Unit Frobenius norm; the first largest-magnitude entry is made real positive.
pub fn normalize_perturbation(x: &mut Array2<Complex64>) {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let mut best = Complex64::new(0.0, 0.0);
    for z in x.iter() {
        if z.norm() > best.norm() * (1.0 + 1e-9) {
            best = *z;
        }
    }
    let phase = best.conj() / best.norm();
    x.mapv_inplace(|z| z * phase / norm);
}

fn group_multiplets(ex: &[Excitation], tol: f64, zero_tol: f64) -> Vec<Multiplet> {
    let mut out: Vec<Multiplet> = Vec::new();
    for (i, e) in ex.iter().enumerate() {
        let re = e.eigenvalue.re.abs();
        if let Some(last) = out.last_mut() {
            let reference = last.omega;
            if (e.omega - reference).abs() <= tol * reference.max(zero_tol) {
                last.multiplicity += 1;
                last.members.push(i);
                last.real_residual = last.real_residual.max(re);
                continue;
            }
        }
        out.push(Multiplet { omega: e.omega, multiplicity: 1, real_residual: re, members: vec![i] });
    }
    // Report each multiplet at its mean frequency.
    for m in &mut out {
        m.omega = m.members.iter().map(|&i| ex[i].omega).sum::<f64>() / m.members.len() as f64;
    }
    out
}
