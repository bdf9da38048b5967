//! Brute-force Fock-space reference implementation for small systems.
//!
//! Occupation basis: bit `j` of the basis index is `n_j`, mode 0 being the
//! least significant bit. Jordan-Wigner strings run over the lower modes:
//! `a_j |s> = (-1)^{Σ_{i<j} s_i} |s - e_j>`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::linalg::{eigh_hermitian, Antisym};
use crate::majorana::{DiracTermList, MajoranaHamiltonian, ModeLayout};

/// Hard cap on the number of modes (dense `2^M × 2^M` matrices).
pub const MAX_MODES: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense operator on the `2^M`-dimensional Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    modes: usize,
    matrix: Array2<Complex64>,
}

impl FockOperator {
    pub fn zeros(modes: usize) -> Result<Self> {
        check_cap(modes)?;
        let d = 1usize << modes;
        Ok(FockOperator { modes, matrix: Array2::zeros((d, d)) })
    }

    pub fn identity(modes: usize) -> Result<Self> {
        check_cap(modes)?;
        Ok(FockOperator { modes, matrix: Array2::eye(1usize << modes) })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// `max |A - A†|`
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn product(&self, other: &FockOperator) -> FockOperator {
        FockOperator { modes: self.modes, matrix: self.matrix.dot(&other.matrix) }
    }

    pub fn plus(&self, other: &FockOperator) -> FockOperator {
        FockOperator { modes: self.modes, matrix: &self.matrix + &other.matrix }
    }

    /// Eigenvalues and eigenvectors, assuming a Hermitian operator.
    pub fn eigh(&self) -> Result<(Array1<f64>, Array2<Complex64>)> {
        eigh_hermitian(&self.matrix)
    }

    /// Adds `coef` times the Majorana word `c_{w0} c_{w1} ...`.
    fn add_word(&mut self, word: &[usize], coef: Complex64) {
        let d = self.dim();
        for s in 0..d {
            let (phase, t) = apply_word(word, s, self.modes);
            self.matrix[(t, s)] += coef * phase;
        }
    }
}

fn check_cap(modes: usize) -> Result<()> {
    if modes > MAX_MODES {
        return Err(Error::FockCapExceeded { modes, cap: MAX_MODES });
    }
    Ok(())
}

fn jw_sign(state: usize, j: usize) -> f64 {
    if (state & ((1usize << j) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `c_k |s> = phase |t>`
fn apply_majorana(k: usize, state: usize, modes: usize) -> (Complex64, usize) {
    let (j, second) = if k < modes { (k, false) } else { (k - modes, true) };
    let s = jw_sign(state, j);
    let occupied = state >> j & 1 == 1;
    let target = state ^ (1usize << j);
    let phase = if !second {
        Complex64::new(s, 0.0)
    } else if occupied {
        // -i * (-a) on an occupied mode
        Complex64::new(0.0, s)
    } else {
        Complex64::new(0.0, -s)
    };
    (phase, target)
}

/// Applies `c_{w0} c_{w1} ... c_{wn}` (rightmost first) to a basis state.
fn apply_word(word: &[usize], state: usize, modes: usize) -> (Complex64, usize) {
    let mut phase = ONE;
    let mut s = state;
    for &k in word.iter().rev() {
        let (p, t) = apply_majorana(k, s, modes);
        phase *= p;
        s = t;
    }
    (phase, s)
}

/// Matrix of a single Majorana operator `c_k`.
pub fn majorana_matrix(k: usize, modes: usize) -> Result<FockOperator> {
    if k >= 2 * modes {
        return Err(Error::ModeOutOfRange { index: k, modes: 2 * modes });
    }
    let mut op = FockOperator::zeros(modes)?;
    op.add_word(&[k], ONE);
    Ok(op)
}

/// `a_j`, built directly from the occupation basis (independent of the Majorana route).
pub fn annihilation_matrix(j: usize, modes: usize) -> Result<FockOperator> {
    let mut op = FockOperator::zeros(modes)?;
    for s in 0..op.dim() {
        if s >> j & 1 == 1 {
            op.matrix[(s ^ (1 << j), s)] = Complex64::new(jw_sign(s, j), 0.0);
        }
    }
    Ok(op)
}

pub fn creation_matrix(j: usize, modes: usize) -> Result<FockOperator> {
    let a = annihilation_matrix(j, modes)?;
    Ok(FockOperator { modes, matrix: a.matrix.t().mapv(|z| z.conj()) })
}

pub fn number_matrix(j: usize, modes: usize) -> Result<FockOperator> {
    let mut op = FockOperator::zeros(modes)?;
    for s in 0..op.dim() {
        if s >> j & 1 == 1 {
            op.matrix[(s, s)] = ONE;
        }
    }
    Ok(op)
}

/// Exact matrix of `i Σ T c c + Σ U cccc + offset`.
pub fn fock_matrix(h: &MajoranaHamiltonian) -> Result<FockOperator> {
    let m = h.modes();
    let mut op = FockOperator::identity(m)?;
    op.matrix.mapv_inplace(|z| z * h.offset());
    for (k, l, t) in h.quadratic_entries() {
        op.add_word(&[k, l], Complex64::new(0.0, 2.0 * t));
    }
    for (idx, &v) in h.quartic().iter() {
        op.add_word(idx, Complex64::new(24.0 * v, 0.0));
    }
    Ok(op)
}

/// The Dirac-form Hamiltonian assembled directly from creation and
/// annihilation matrices, bypassing the Majorana compiler.
pub fn dirac_fock_matrix(layout: ModeLayout, terms: &DiracTermList) -> Result<FockOperator> {
    let m = layout.modes();
    let mut op = FockOperator::zeros(m)?;
    for h in &terms.hopping {
        let fwd = creation_matrix(h.i, m)?.product(&annihilation_matrix(h.j, m)?);
        let bwd = creation_matrix(h.j, m)?.product(&annihilation_matrix(h.i, m)?);
        op.matrix.scaled_add(Complex64::new(-h.amplitude, 0.0), &fwd.matrix);
        op.matrix.scaled_add(Complex64::new(-h.amplitude, 0.0), &bwd.matrix);
    }
    for n in &terms.number {
        op.matrix.scaled_add(Complex64::new(n.coefficient, 0.0), &number_matrix(n.i, m)?.matrix);
    }
    for d in &terms.density {
        let nn = number_matrix(d.i, m)?.product(&number_matrix(d.j, m)?);
        op.matrix.scaled_add(Complex64::new(d.coefficient, 0.0), &nn.matrix);
    }
    Ok(op)
}

/// `<ψ|op|ψ>`
pub fn exact_expectation(op: &FockOperator, psi: &Array1<Complex64>) -> Result<Complex64> {
    if psi.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: psi.len() });
    }
    let v = op.matrix.dot(psi);
    Ok(psi.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// The Fock vector of a pure Gaussian state.
///
/// The parent Hamiltonian `-i Σ Γ_kl c_k c_l` has `Γ` as its unique ground
/// state with unit gaps in every canonical block; its lowest eigenvector is
/// returned with the largest component made real and positive.
pub fn gaussian_to_fock(g: &CovarianceMatrix) -> Result<Array1<Complex64>> {
    let m = g.modes();
    check_cap(m)?;
    g.require_pure(1e-8)?;
    let parent = MajoranaHamiltonian::from_parts(
        ModeLayout::modes_only(m),
        &g.gamma().scaled(-1.0),
        Default::default(),
        0.0,
    )?;
    let op = fock_matrix(&parent)?;
    let (vals, vecs) = op.eigh()?;
    if vals.len() > 1 {
        let gap = vals[1] - vals[0];
        if gap < 1e-6 {
            return Err(Error::DegenerateGroundSpace(gap));
        }
    }
    let mut psi = vecs.column(0).to_owned();
    let (imax, _) = psi
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
    let phase = psi[imax].conj() / psi[imax].norm();
    psi.mapv_inplace(|z| z * phase);
    Ok(psi)
}

/// Covariance matrix of an arbitrary normalized Fock vector, from exact
/// two-point functions `Γ_kl = i <c_k c_l>` (`k ≠ l`).
pub fn covariance_of_state(psi: &Array1<Complex64>, modes: usize) -> Result<Antisym> {
    check_cap(modes)?;
    let d = 1usize << modes;
    if psi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi.len() });
    }
    let n = 2 * modes;
    let mut g = Antisym::zeros(n);
    for k in 0..n {
        for l in (k + 1)..n {
            let mut acc = ZERO;
            for s in 0..d {
                if psi[s] == ZERO {
                    continue;
                }
                let (p, t) = apply_word(&[k, l], s, modes);
                acc += psi[t].conj() * p * psi[s];
            }
            g.set(k, l, (Complex64::i() * acc).re);
        }
    }
    Ok(g)
}

/// Exact ground energy by full diagonalization.
pub fn ground_energy(h: &MajoranaHamiltonian) -> Result<f64> {
    Ok(fock_matrix(h)?.eigh()?.0[0])
}
