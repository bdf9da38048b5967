//! Real antisymmetric matrices and the small amount of dense linear algebra
//! the flows need on top of ndarray.

use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder, Zip};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when accepting externally supplied matrices as antisymmetric.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

/// A real antisymmetric matrix.
///
/// Every constructor produces a matrix with `A[(i, j)] == -A[(j, i)]` bit for
/// bit and an exactly zero diagonal, and no method hands out mutable access to
/// the raw storage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Array2<f64>", into = "Array2<f64>")]
pub struct Antisym(Array2<f64>);

impl Antisym {
    pub fn zeros(n: usize) -> Self {
        Antisym(Array2::zeros((n, n)))
    }

    /// Exact antisymmetric part `(A - A^T) / 2` of an arbitrary square matrix.
    pub fn antisymmetrize(a: &ArrayView2<f64>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "antisymmetrize needs a square matrix");
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (a[(i, j)] - a[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = -v;
            }
        }
        Antisym(out)
    }

    /// Accepts `a` if it is antisymmetric to within `tol` (entrywise), storing
    /// its exact antisymmetric part. Nothing is symmetrized silently beyond `tol`.
    pub fn try_from_matrix(a: Array2<f64>, tol: f64) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        let mut worst = 0.0f64;
        for i in 0..r {
            for j in i..r {
                let s = (a[(i, j)] + a[(j, i)]).abs();
                if !s.is_finite() {
                    return Err(Error::NotAntisymmetric(f64::INFINITY));
                }
                worst = worst.max(s);
            }
        }
        if worst > tol {
            return Err(Error::NotAntisymmetric(worst));
        }
        Ok(Self::antisymmetrize(&a.view()))
    }

    /// Builds a matrix from upper-triangle entries `(i, j, v)` with `i < j`.
    /// Repeated entries are summed.
    pub fn from_upper<I>(n: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut a = Self::zeros(n);
        for (i, j, v) in entries {
            a.add(i, j, v);
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Sets `A[i,j] = v` and `A[j,i] = -v`. Panics on `i == j` with `v != 0`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            assert!(v == 0.0, "diagonal of an antisymmetric matrix must vanish");
            return;
        }
        self.0[(i, j)] = v;
        self.0[(j, i)] = -v;
    }

    /// Adds `v` to `A[i,j]` (and `-v` to `A[j,i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            assert!(v == 0.0, "diagonal of an antisymmetric matrix must vanish");
            return;
        }
        let (a, b, s) = if i < j { (i, j, v) } else { (j, i, -v) };
        let nv = self.0[(a, b)] + s;
        self.0[(a, b)] = nv;
        self.0[(b, a)] = -nv;
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `Σ_kl A_kl B_kl`.
    pub fn pairing(&self, other: &Antisym) -> f64 {
        Zip::from(&self.0).and(&other.0).fold(0.0, |acc, a, b| acc + a * b)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Antisym(&self.0 * s)
    }

    pub fn plus(&self, other: &Antisym) -> Self {
        Antisym(&self.0 + &other.0)
    }

    pub fn minus(&self, other: &Antisym) -> Self {
        Antisym(&self.0 - &other.0)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Antisym) -> Self {
        Antisym(&self.0 + &(&other.0 * s))
    }

    /// `[A, B] = AB - BA`. For antisymmetric inputs `BA = (AB)^T`, so one
    /// product suffices and the result is exactly antisymmetric.
    pub fn commutator(&self, other: &Antisym) -> Antisym {
        let ab = self.0.dot(&other.0);
        let mut out = Array2::zeros(ab.raw_dim());
        let n = ab.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = ab[(i, j)] - ab[(j, i)];
                out[(i, j)] = v;
                out[(j, i)] = -v;
            }
        }
        Antisym(out)
    }

    /// `O A O^T` for a (nominally orthogonal) `O`.
    pub fn conjugate(&self, o: &Array2<f64>) -> Antisym {
        let t = o.dot(&self.0).dot(&o.t());
        Self::antisymmetrize(&t.view())
    }

    /// Upper-triangle entries in row-major order: the coordinates of the
    /// antisymmetric subspace.
    pub fn upper_vec(&self) -> Vec<f64> {
        let n = self.dim();
        let mut v = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                v.push(self.0[(i, j)]);
            }
        }
        v
    }

    pub fn from_upper_vec(n: usize, v: &[f64]) -> Self {
        assert_eq!(v.len(), n * n.saturating_sub(1) / 2);
        let mut a = Self::zeros(n);
        let mut it = v.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                a.set(i, j, *it.next().unwrap());
            }
        }
        a
    }
}

impl TryFrom<Array2<f64>> for Antisym {
    type Error = Error;
    fn try_from(a: Array2<f64>) -> Result<Self> {
        Antisym::try_from_matrix(a, ANTISYMMETRY_TOL)
    }
}

impl From<Antisym> for Array2<f64> {
    fn from(a: Antisym) -> Self {
        a.0
    }
}

/// Matrix exponential of an antisymmetric generator (an orthogonal matrix),
/// by scaling and squaring of a truncated Taylor series.
pub fn expm_antisym(a: &Antisym) -> Array2<f64> {
    expm(a.as_array())
}

/// Dense matrix exponential, scaling and squaring with an 18-term Taylor core.
pub fn expm(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.25 {
        squarings = (norm1 / 0.25).log2().ceil() as u32;
    }
    let scale = 0.5f64.powi(squarings as i32);
    let b = a * scale;
    let mut result = Array2::<f64>::eye(n);
    let mut term = Array2::<f64>::eye(n);
    for k in 1..=18 {
        term = term.dot(&b) / k as f64;
        result += &term;
        if term.iter().all(|v| v.abs() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Eigen-decomposition `A = V diag(λ) V†` of a complex Hermitian matrix,
/// eigenvalues ascending.
///
/// The LAPACK wrapper reads row-major complex input as its transpose, which
/// for a Hermitian matrix is the complex conjugate; copying into column-major
/// storage first avoids getting the conjugated eigenvectors back.
pub fn eigh_hermitian(a: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let mut f = Array2::<Complex64>::zeros(a.raw_dim().f());
    f.assign(a);
    Ok(f.eigh(UPLO::Upper)?)
}

/// Largest absolute entry of an arbitrary matrix.
pub fn max_abs(a: &ArrayView2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `‖Γ² + 1‖_max`
pub fn purity_defect(g: &Antisym) -> f64 {
    let mut sq = g.as_array().dot(g.as_array());
    for i in 0..sq.nrows() {
        sq[(i, i)] += 1.0;
    }
    max_abs(&sq.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn antisymmetrize_is_exact() {
        let a = array![[0.3, 1.7, -2.2], [0.1, 5.0, 0.7], [3.3, -0.9, 1.0]];
        let s = Antisym::antisymmetrize(&a.view());
        for i in 0..3 {
            assert_eq!(s.get(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(s.get(i, j), -s.get(j, i));
            }
        }
    }

    #[test]
    fn rejects_symmetric_input() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        assert!(matches!(
            Antisym::try_from_matrix(a, 1e-12),
            Err(Error::NotAntisymmetric(_))
        ));
    }

    #[test]
    fn expm_of_rotation_generator() {
        let theta = 0.7;
        let a = Antisym::from_upper(2, [(0, 1, theta)]);
        let r = expm_antisym(&a);
        assert!((r[(0, 0)] - theta.cos()).abs() < 1e-15);
        assert!((r[(0, 1)] - theta.sin()).abs() < 1e-15);
        assert!((r[(1, 0)] + theta.sin()).abs() < 1e-15);
    }

    #[test]
    fn expm_large_generator_is_orthogonal() {
        let a = Antisym::from_upper(
            4,
            [(0, 1, 3.0), (0, 2, -1.5), (1, 3, 7.0), (2, 3, 0.25), (0, 3, 2.0)],
        );
        let o = expm_antisym(&a);
        let should_be_eye = o.dot(&o.t());
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((should_be_eye[(i, j)] - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn commutator_matches_definition() {
        let a = Antisym::from_upper(3, [(0, 1, 1.0), (1, 2, 2.0)]);
        let b = Antisym::from_upper(3, [(0, 2, -0.5), (0, 1, 0.3)]);
        let c = a.commutator(&b);
        let direct = a.as_array().dot(b.as_array()) - b.as_array().dot(a.as_array());
        for (x, y) in c.as_array().iter().zip(direct.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn hermitian_eigenvectors_are_not_conjugated() {
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        let a = ndarray::array![[z, -i], [i, z]];
        let (l, v) = eigh_hermitian(&a).unwrap();
        let d = Array2::from_diag(&l.mapv(|x| Complex64::new(x, 0.0)));
        let rec = v.dot(&d).dot(&v.t().mapv(|z| z.conj()));
        for (x, y) in rec.iter().zip(a.iter()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn upper_vec_roundtrip() {
        let a = Antisym::from_upper(4, [(0, 1, 1.0), (1, 3, -2.0), (2, 3, 0.5)]);
        let v = a.upper_vec();
        assert_eq!(v.len(), 6);
        assert_eq!(Antisym::from_upper_vec(4, &v), a);
    }
}
