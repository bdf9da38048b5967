//! Fermionic Gaussian states through their covariance matrix.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * `<c_k c_l> = δ_kl - i Γ_kl`.
//! * `tr2[U X]_kl = -Σ_mn U_klmn X_mn`. With this sign the energy gradient is
//!   exactly `h6`: `d/dε E(Γ + εX) = Σ_kl h6(Γ)_kl X_kl` for every antisymmetric
//!   `X` (unit constant, no stray factors).
//! * Quadratic energy `<i Σ T c c> = Σ_kl T_kl Γ_kl`.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh_hermitian, purity_defect, Antisym, ANTISYMMETRY_TOL};
use crate::majorana::{MajoranaHamiltonian, Quartic};

/// Default tolerance for physicality and purity checks.
pub const STATE_TOL: f64 = 1e-8;

/// Covariance matrix `Γ_kl = (i/2) <[c_k, c_l]>` of a Gaussian state on `M` modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    gamma: Antisym,
}

/// Result of [`CovarianceMatrix::validate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub physical: bool,
    pub pure: bool,
    pub max_singular_value: f64,
    /// `‖Γ² + 1‖_max`
    pub purity_defect: f64,
    /// `max(σ_max - 1, 0)`, the amount by which physicality is violated.
    pub max_violation: f64,
}

impl CovarianceMatrix {
    pub fn new(gamma: Antisym) -> Result<Self> {
        if gamma.dim() % 2 != 0 {
            return Err(Error::OddDimension(gamma.dim()));
        }
        Ok(CovarianceMatrix { gamma })
    }

    /// Accepts a dense matrix if it is antisymmetric to 1e-12; never symmetrizes
    /// larger violations away.
    pub fn from_matrix(a: Array2<f64>) -> Result<Self> {
        Self::new(Antisym::try_from_matrix(a, ANTISYMMETRY_TOL)?)
    }

    /// The Fock vacuum: `Γ_{j,j+M} = 1` for every mode.
    pub fn vacuum(modes: usize) -> Self {
        Self::from_occupations(&vec![false; modes])
    }

    /// A Fock product state; occupied modes have `Γ_{j,j+M} = -1`.
    pub fn from_occupations(occupied: &[bool]) -> Self {
        let m = occupied.len();
        let mut g = Antisym::zeros(2 * m);
        for (j, &occ) in occupied.iter().enumerate() {
            g.set(j, j + m, if occ { -1.0 } else { 1.0 });
        }
        CovarianceMatrix { gamma: g }
    }

    pub fn modes(&self) -> usize {
        self.gamma.dim() / 2
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn gamma(&self) -> &Antisym {
        &self.gamma
    }

    pub fn into_gamma(self) -> Antisym {
        self.gamma
    }

    pub fn validate(&self, tol: f64) -> Result<Validation> {
        let n = self.dim();
        let defect = purity_defect(&self.gamma);
        let max_sv = if n == 0 {
            0.0
        } else {
            // Singular values of a real antisymmetric matrix: sqrt(eig(-Γ²)).
            let g = self.gamma.as_array();
            let neg_sq = -g.dot(g);
            let ev = neg_sq.eigh(UPLO::Upper)?.0;
            ev.iter().fold(0.0f64, |m, &v| m.max(v.max(0.0).sqrt()))
        };
        let violation = (max_sv - 1.0).max(0.0);
        Ok(Validation {
            physical: max_sv <= 1.0 + tol,
            pure: defect <= tol,
            max_singular_value: max_sv,
            purity_defect: defect,
            max_violation: violation,
        })
    }

    /// Errors unless the state is pure within `tol`.
    pub fn require_pure(&self, tol: f64) -> Result<()> {
        let d = purity_defect(&self.gamma);
        if d > tol {
            return Err(Error::NotPure(d));
        }
        Ok(())
    }

    pub fn require_physical(&self, tol: f64) -> Result<()> {
        let v = self.validate(tol)?;
        if !v.physical {
            return Err(Error::Unphysical(v.max_violation));
        }
        Ok(())
    }

    /// `<c_k c_l> = δ_kl - i Γ_kl`
    pub fn two_point(&self, k: usize, l: usize) -> Complex64 {
        let d = if k == l { 1.0 } else { 0.0 };
        Complex64::new(d, -self.gamma.get(k, l))
    }

    /// `<a†_i a_j>`
    pub fn hopping(&self, i: usize, j: usize) -> Complex64 {
        let m = self.modes();
        let (ci, si, cj, sj) = (i, i + m, j, j + m);
        let ii = Complex64::i();
        (self.two_point(ci, cj) - ii * self.two_point(ci, sj) + ii * self.two_point(si, cj)
            + self.two_point(si, sj))
            * 0.25
    }

    /// `<a†_i a†_j>`
    pub fn anomalous(&self, i: usize, j: usize) -> Complex64 {
        let m = self.modes();
        let (ci, si, cj, sj) = (i, i + m, j, j + m);
        let ii = Complex64::i();
        (self.two_point(ci, cj) + ii * self.two_point(ci, sj) + ii * self.two_point(si, cj)
            - self.two_point(si, sj))
            * 0.25
    }

    /// `<n_j> = (1 - Γ_{j,j+M}) / 2`
    pub fn occupation(&self, j: usize) -> f64 {
        0.5 * (1.0 - self.gamma.get(j, j + self.modes()))
    }

    pub fn particle_number(&self) -> f64 {
        (0..self.modes()).map(|j| self.occupation(j)).sum()
    }

    /// `<H>` by Wick's theorem. Errors on unphysical states (tolerance [`STATE_TOL`]).
    pub fn energy(&self, h: &MajoranaHamiltonian) -> Result<f64> {
        check_dims(h, self)?;
        self.require_physical(STATE_TOL)?;
        Ok(wick_energy(h, self))
    }
}

fn check_dims(h: &MajoranaHamiltonian, g: &CovarianceMatrix) -> Result<()> {
    if h.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: g.dim() });
    }
    Ok(())
}

/// Energy without the physicality check, for use inside flows where the
/// state is kept on the pure manifold by construction.
pub fn wick_energy(h: &MajoranaHamiltonian, g: &CovarianceMatrix) -> f64 {
    let mut e = h.offset();
    for (k, l, t) in h.quadratic_entries() {
        // i (T_kl <c_k c_l> + T_lk <c_l c_k>) = 2 T_kl Γ_kl
        e += 2.0 * t * g.gamma.get(k, l);
    }
    for (idx, &v) in h.quartic().iter() {
        let [a, b, c, d] = *idx;
        let tp = |x, y| g.two_point(x, y);
        let w = tp(a, b) * tp(c, d) - tp(a, c) * tp(b, d) + tp(a, d) * tp(b, c);
        e += 24.0 * v * w.re;
    }
    e
}

/// `tr2[U X]_kl = -Σ_mn U_klmn X_mn`, exactly antisymmetric and bilinear.
pub fn tr2_contract(u: &Quartic, x: &Antisym) -> Result<Antisym> {
    let n = x.dim();
    if let Some(k) = u.max_index() {
        if k >= n {
            return Err(Error::DimensionMismatch { expected: k + 1, found: n });
        }
    }
    let mut out = Antisym::zeros(n);
    tr2_accumulate(u, x, 1.0, &mut out);
    Ok(out)
}

/// `out += scale * tr2[U X]`
pub(crate) fn tr2_accumulate(u: &Quartic, x: &Antisym, scale: f64, out: &mut Antisym) {
    for (idx, &v) in u.iter() {
        let [a, b, c, d] = *idx;
        let w = 2.0 * v * scale;
        out.add(a, b, -w * x.get(c, d));
        out.add(a, c, w * x.get(b, d));
        out.add(a, d, -w * x.get(b, c));
        out.add(b, c, -w * x.get(a, d));
        out.add(b, d, w * x.get(a, c));
        out.add(c, d, -w * x.get(a, b));
    }
}

/// Which mean-field matrix to build: `h3 = T + 3 tr2[UΓ]` or `h6 = T + 6 tr2[UΓ]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanField {
    H3,
    H6,
}

impl MeanField {
    pub fn factor(self) -> f64 {
        match self {
            MeanField::H3 => 3.0,
            MeanField::H6 => 6.0,
        }
    }
}

pub fn mean_field(h: &MajoranaHamiltonian, g: &CovarianceMatrix, which: MeanField) -> Result<Antisym> {
    check_dims(h, g)?;
    let mut out = h.quadratic_dense();
    tr2_accumulate(h.quartic(), g.gamma(), which.factor(), &mut out);
    Ok(out)
}

/// `h6(Γ)`, the generator of the real-time flow.
pub fn h6(h: &MajoranaHamiltonian, g: &CovarianceMatrix) -> Result<Antisym> {
    mean_field(h, g, MeanField::H6)
}

/// `‖[h6(Γ), Γ]‖_max`, the stationarity residual.
pub fn stationarity_residual(h: &MajoranaHamiltonian, g: &CovarianceMatrix) -> Result<f64> {
    Ok(h6(h, g)?.commutator(g.gamma()).max_abs())
}

/// Ground state of the quadratic Hamiltonian `i Σ h_kl c_k c_l`.
///
/// Diagonalizing the Hermitian matrix `i h = V Λ V†` gives `Γ = i V sign(Λ) V†`
/// (equivalently `Γ = -h (-h²)^{-1/2}`). Zero modes of `h` leave the state
/// undetermined; they are resolved by minimizing the total particle number
/// `Σ n_j` inside the null space, so `h = 0` yields the vacuum and every
/// empty-and-decoupled mode stays empty.
pub fn quadratic_ground_state(h: &Antisym) -> Result<CovarianceMatrix> {
    let n = h.dim();
    if n % 2 != 0 {
        return Err(Error::OddDimension(n));
    }
    if n == 0 {
        return CovarianceMatrix::new(Antisym::zeros(0));
    }
    let ih = h.as_array().mapv(|v| Complex64::new(0.0, v));
    let (lam, v) = eigh_hermitian(&ih)?;
    let scale = lam.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let zero_tol = 1e-10 * scale;

    let mut acc = Array2::<Complex64>::zeros((n, n));
    let mut null: Vec<usize> = Vec::new();
    for (col, &l) in lam.iter().enumerate() {
        if l.abs() <= zero_tol {
            null.push(col);
            continue;
        }
        let s = l.signum();
        let vc = v.column(col);
        for a in 0..n {
            for b in 0..n {
                acc[(a, b)] += vc[a] * vc[b].conj() * s;
            }
        }
    }

    if !null.is_empty() {
        // Vacuum-favoring tie breaker: h_tie = -Γ_vac, i.e. Σ n_j up to a constant.
        let m = n / 2;
        let mut tie = Array2::<Complex64>::zeros((n, n));
        for j in 0..m {
            tie[(j, j + m)] = Complex64::new(0.0, -1.0);
            tie[(j + m, j)] = Complex64::new(0.0, 1.0);
        }
        let d = null.len();
        let mut v0 = Array2::<Complex64>::zeros((n, d));
        for (c, &col) in null.iter().enumerate() {
            v0.column_mut(c).assign(&v.column(col));
        }
        let v0h = v0.t().mapv(|z| z.conj());
        let proj = v0h.dot(&tie).dot(&v0);
        let (beta, w) = eigh_hermitian(&proj)?;
        let rot = v0.dot(&w);
        for (c, &b) in beta.iter().enumerate() {
            // A residual tie inside the null space is broken towards +1.
            let s = if b < -1e-12 { -1.0 } else { 1.0 };
            let vc = rot.column(c);
            for a in 0..n {
                for bb in 0..n {
                    acc[(a, bb)] += vc[a] * vc[bb].conj() * s;
                }
            }
        }
    }

    // Γ = i * acc, which is real up to roundoff.
    let real = acc.mapv(|z| -z.im);
    CovarianceMatrix::new(Antisym::antisymmetrize(&real.view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorana::{compile_hamiltonian, DiracTermList, ModeLayout};
    use ndarray::array;

    #[test]
    fn validate_examples() {
        let zero = CovarianceMatrix::from_matrix(Array2::zeros((2, 2))).unwrap();
        let v = zero.validate(STATE_TOL).unwrap();
        assert!(v.physical && !v.pure);

        let occ = CovarianceMatrix::from_matrix(array![[0.0, -1.0], [1.0, 0.0]]).unwrap();
        let v = occ.validate(STATE_TOL).unwrap();
        assert!(v.physical && v.pure);

        let big = CovarianceMatrix::from_matrix(array![[0.0, -2.0], [2.0, 0.0]]).unwrap();
        let v = big.validate(STATE_TOL).unwrap();
        assert!(!v.physical);
        assert!((v.max_violation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_odd_and_symmetric() {
        assert!(matches!(
            CovarianceMatrix::from_matrix(Array2::zeros((3, 3))),
            Err(Error::OddDimension(3))
        ));
        assert!(matches!(
            CovarianceMatrix::from_matrix(array![[0.0, 1.0], [1.0, 0.0]]),
            Err(Error::NotAntisymmetric(_))
        ));
    }

    #[test]
    fn occupations_and_two_point() {
        let occ = CovarianceMatrix::from_occupations(&[true]);
        assert!((occ.hopping(0, 0).re - 1.0).abs() < 1e-15);
        let vac = CovarianceMatrix::vacuum(1);
        assert!(vac.hopping(0, 0).norm() < 1e-15);
        let zero = CovarianceMatrix::new(Antisym::zeros(4)).unwrap();
        for k in 0..4 {
            for l in 0..4 {
                let e = if k == l { 1.0 } else { 0.0 };
                assert_eq!(zero.two_point(k, l), Complex64::new(e, 0.0));
            }
        }
    }

    #[test]
    fn single_site_hubbard_energies() {
        let (u, mu) = (4.0, 1.0);
        let layout = ModeLayout::new(1, 2);
        let mut terms = DiracTermList::new();
        terms.density(0, 1, u).number(0, -mu).number(1, -mu);
        let h = compile_hamiltonian(layout, &terms).unwrap();
        let vac = CovarianceMatrix::vacuum(2);
        assert!(vac.energy(&h).unwrap().abs() < 1e-14);
        let full = CovarianceMatrix::from_occupations(&[true, true]);
        assert!((full.energy(&h).unwrap() - (u - 2.0 * mu)).abs() < 1e-14);
    }

    #[test]
    fn energy_of_maximally_mixed_is_offset() {
        let mut terms = DiracTermList::new();
        terms.hop(0, 1, 0.7).number(1, 0.3);
        let h = compile_hamiltonian(ModeLayout::modes_only(2), &terms).unwrap();
        let zero = CovarianceMatrix::new(Antisym::zeros(4)).unwrap();
        assert!((zero.energy(&h).unwrap() - h.offset()).abs() < 1e-15);
    }

    #[test]
    fn mean_field_factors() {
        let mut terms = DiracTermList::new();
        terms.density(0, 1, 1.5).hop(0, 1, 0.4);
        let h = compile_hamiltonian(ModeLayout::modes_only(2), &terms).unwrap();
        let g = CovarianceMatrix::from_occupations(&[true, false]);
        let t = h.quadratic_dense();
        let h3 = mean_field(&h, &g, MeanField::H3).unwrap();
        let h6 = mean_field(&h, &g, MeanField::H6).unwrap();
        let d3 = h3.minus(&t);
        let d6 = h6.minus(&t);
        for (a, b) in d6.as_array().iter().zip(d3.as_array().iter()) {
            assert!((a - 2.0 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn number_term_ground_states() {
        let mu = 0.8;
        for (coef, occupied) in [(mu, false), (-mu, true)] {
            let mut terms = DiracTermList::new();
            terms.number(0, coef);
            let h = compile_hamiltonian(ModeLayout::modes_only(1), &terms).unwrap();
            let g = quadratic_ground_state(&h.quadratic_dense()).unwrap();
            let want = CovarianceMatrix::from_occupations(&[occupied]);
            assert!(g.gamma().minus(want.gamma()).max_abs() < 1e-14);
        }
    }

    #[test]
    fn zero_hamiltonian_gives_vacuum() {
        let g = quadratic_ground_state(&Antisym::zeros(6)).unwrap();
        let vac = CovarianceMatrix::vacuum(3);
        for (a, b) in g.gamma().as_array().iter().zip(vac.gamma().as_array().iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
