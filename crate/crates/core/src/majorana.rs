//! Dirac term lists and their compilation to Majorana coefficients.
//!
//! A Hamiltonian is stored as `H = i Σ_kl T_kl c_k c_l + Σ_klmn U_klmn c_k c_l c_m c_n + E0`
//! where the sums run over all index tuples, `T` is antisymmetric and `U` is
//! antisymmetric under every transposition. `U` only has entries with four
//! distinct indices; contributions with coincident indices are folded into `T`
//! and `E0` during compilation using `c_k² = 1`.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Antisym;

/// Site/flavor bookkeeping for `M = sites * flavors_per_site` Dirac modes.
///
/// Dirac index `j = site * flavors_per_site + flavor` (zero based). Mode `j`
/// owns the Majorana pair `(j, j + M)`. For spin-1/2 models flavor 0 is spin up
/// and flavor 1 is spin down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeLayout {
    pub sites: usize,
    pub flavors_per_site: usize,
}

impl ModeLayout {
    pub fn new(sites: usize, flavors_per_site: usize) -> Self {
        ModeLayout { sites, flavors_per_site }
    }

    /// A layout with `modes` modes and one flavor per site.
    pub fn modes_only(modes: usize) -> Self {
        ModeLayout { sites: modes, flavors_per_site: 1 }
    }

    pub fn modes(&self) -> usize {
        self.sites * self.flavors_per_site
    }

    pub fn majoranas(&self) -> usize {
        2 * self.modes()
    }

    pub fn dirac_index(&self, site: usize, flavor: usize) -> usize {
        debug_assert!(site < self.sites && flavor < self.flavors_per_site);
        site * self.flavors_per_site + flavor
    }

    pub fn site_flavor(&self, j: usize) -> (usize, usize) {
        (j / self.flavors_per_site, j % self.flavors_per_site)
    }

    pub fn majorana_pair(&self, j: usize) -> (usize, usize) {
        (j, j + self.modes())
    }

    /// Dirac mode and Majorana kind (0 for `a† + a`, 1 for `-i(a† - a)`).
    pub fn dirac_of_majorana(&self, k: usize) -> (usize, usize) {
        let m = self.modes();
        if k < m {
            (k, 0)
        } else {
            (k - m, 1)
        }
    }
}

/// `-amplitude * (a†_i a_j + a†_j a_i)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hopping {
    pub i: usize,
    pub j: usize,
    pub amplitude: f64,
}

/// `coefficient * n_i`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Number {
    pub i: usize,
    pub coefficient: f64,
}

/// `coefficient * n_i n_j`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityDensity {
    pub i: usize,
    pub j: usize,
    pub coefficient: f64,
}

/// Input language for two-body lattice Hamiltonians.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiracTermList {
    #[serde(default)]
    pub hopping: Vec<Hopping>,
    #[serde(default)]
    pub number: Vec<Number>,
    #[serde(default)]
    pub density: Vec<DensityDensity>,
}

impl DiracTermList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hop(&mut self, i: usize, j: usize, amplitude: f64) -> &mut Self {
        self.hopping.push(Hopping { i, j, amplitude });
        self
    }

    pub fn number(&mut self, i: usize, coefficient: f64) -> &mut Self {
        self.number.push(Number { i, coefficient });
        self
    }

    pub fn density(&mut self, i: usize, j: usize, coefficient: f64) -> &mut Self {
        self.density.push(DensityDensity { i, j, coefficient });
        self
    }

    pub fn extend(&mut self, other: &DiracTermList) -> &mut Self {
        self.hopping.extend_from_slice(&other.hopping);
        self.number.extend_from_slice(&other.number);
        self.density.extend_from_slice(&other.density);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.hopping.is_empty() && self.number.is_empty() && self.density.is_empty()
    }

    fn validate(&self, modes: usize) -> Result<()> {
        let check = |i: usize| {
            if i >= modes {
                Err(Error::ModeOutOfRange { index: i, modes })
            } else {
                Ok(())
            }
        };
        let finite = |v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonRealAmplitude(v))
            }
        };
        for h in &self.hopping {
            check(h.i)?;
            check(h.j)?;
            finite(h.amplitude)?;
            if h.i == h.j {
                return Err(Error::InvalidTerm(format!(
                    "hopping from mode {} to itself; use a number term",
                    h.i
                )));
            }
        }
        for n in &self.number {
            check(n.i)?;
            finite(n.coefficient)?;
        }
        for d in &self.density {
            check(d.i)?;
            check(d.j)?;
            finite(d.coefficient)?;
            if d.i == d.j {
                return Err(Error::InvalidTerm(format!(
                    "density-density term on a single mode {}; n_i^2 = n_i, use a number term",
                    d.i
                )));
            }
        }
        Ok(())
    }
}

/// Quartic Majorana coefficients, one canonical representative `k < l < m < n`
/// per orbit of the permutation group.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quartic {
    entries: BTreeMap<[usize; 4], f64>,
}

impl Quartic {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Adds `v` to `U_{idx}` (and implicitly to the whole orbit with signs).
    /// Indices with repetitions are rejected.
    pub fn add(&mut self, idx: [usize; 4], v: f64) -> Result<()> {
        let (sorted, sign) = sort_with_sign(idx);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTerm(format!(
                "quartic coefficient with repeated Majorana index {idx:?}"
            )));
        }
        let e = self.entries.entry(sorted).or_insert(0.0);
        *e += sign * v;
        Ok(())
    }

    /// Full antisymmetric tensor element `U_klmn`.
    pub fn get(&self, idx: [usize; 4]) -> f64 {
        let (sorted, sign) = sort_with_sign(idx);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return 0.0;
        }
        self.entries.get(&sorted).map_or(0.0, |v| sign * v)
    }

    /// Canonical orbits `([k, l, m, n], U_klmn)` with `k < l < m < n`.
    pub fn iter(&self) -> impl Iterator<Item = (&[usize; 4], &f64)> {
        self.entries.iter()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().map(|k| k[3]).max()
    }

    fn prune(&mut self, tol: f64) {
        self.entries.retain(|_, v| v.abs() > tol);
    }
}

/// Sorts four indices, returning the permutation parity as ±1.
fn sort_with_sign(mut idx: [usize; 4]) -> ([usize; 4], f64) {
    let mut sign = 1.0;
    for i in 1..4 {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (idx, sign)
}

/// Compiled Hamiltonian `i Σ T c c + Σ U c c c c + offset` over `2M` Majoranas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajoranaHamiltonian {
    layout: ModeLayout,
    /// Upper triangle of `T`, `(k, l) -> T_kl` with `k < l`.
    quadratic: BTreeMap<(usize, usize), f64>,
    quartic: Quartic,
    offset: f64,
}

impl MajoranaHamiltonian {
    pub fn zero(layout: ModeLayout) -> Self {
        MajoranaHamiltonian {
            layout,
            quadratic: BTreeMap::new(),
            quartic: Quartic::new(),
            offset: 0.0,
        }
    }

    /// Assembles a Hamiltonian from a dense `T` and quartic coefficients.
    pub fn from_parts(layout: ModeLayout, t: &Antisym, quartic: Quartic, offset: f64) -> Result<Self> {
        let n = layout.majoranas();
        if t.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: t.dim() });
        }
        if let Some(k) = quartic.max_index() {
            if k >= n {
                return Err(Error::ModeOutOfRange { index: k, modes: n });
            }
        }
        let mut quadratic = BTreeMap::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = t.get(i, j);
                if v != 0.0 {
                    quadratic.insert((i, j), v);
                }
            }
        }
        Ok(MajoranaHamiltonian { layout, quadratic, quartic, offset })
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    pub fn modes(&self) -> usize {
        self.layout.modes()
    }

    /// Number of Majorana operators, `2M`.
    pub fn dim(&self) -> usize {
        self.layout.majoranas()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn quartic(&self) -> &Quartic {
        &self.quartic
    }

    pub fn t(&self, k: usize, l: usize) -> f64 {
        match k.cmp(&l) {
            std::cmp::Ordering::Less => self.quadratic.get(&(k, l)).copied().unwrap_or(0.0),
            std::cmp::Ordering::Greater => -self.quadratic.get(&(l, k)).copied().unwrap_or(0.0),
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Nonzero upper-triangle entries of `T`.
    pub fn quadratic_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.quadratic.iter().map(|(&(k, l), &v)| (k, l, v))
    }

    pub fn quadratic_dense(&self) -> Antisym {
        Antisym::from_upper(self.dim(), self.quadratic_entries())
    }

    /// Componentwise sum of two Hamiltonians on the same layout.
    pub fn sum(&self, other: &MajoranaHamiltonian) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let mut out = self.clone();
        for (&key, &v) in &other.quadratic {
            *out.quadratic.entry(key).or_insert(0.0) += v;
        }
        for (idx, &v) in other.quartic.iter() {
            out.quartic.add(*idx, v)?;
        }
        out.offset += other.offset;
        Ok(out)
    }

    /// The Hamiltonian expressed in rotated Majoranas `c' = O c`, i.e.
    /// `T -> O T O^T` and `U -> (O ⊗ O ⊗ O ⊗ O) U`. Dense in the quartic part,
    /// so intended for small systems.
    pub fn rotated(&self, o: &Array2<f64>) -> Result<Self> {
        let n = self.dim();
        if o.nrows() != n || o.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: o.nrows() });
        }
        let t = self.quadratic_dense().conjugate(o);
        let mut quartic = Quartic::new();
        if !self.quartic.is_empty() {
            // Contract one index at a time; a dense n^4 tensor is fine at test sizes.
            let mut u = vec![0.0; n * n * n * n];
            let at = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
            for (idx, &v) in self.quartic.iter() {
                for perm in PERMUTATIONS_4 {
                    let p = [idx[perm.0[0]], idx[perm.0[1]], idx[perm.0[2]], idx[perm.0[3]]];
                    u[at(p[0], p[1], p[2], p[3])] = perm.1 * v;
                }
            }
            for axis in 0..4 {
                let mut next = vec![0.0; u.len()];
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            for d in 0..n {
                                let mut acc = 0.0;
                                for x in 0..n {
                                    let (src, w) = match axis {
                                        0 => (at(x, b, c, d), o[(a, x)]),
                                        1 => (at(a, x, c, d), o[(b, x)]),
                                        2 => (at(a, b, x, d), o[(c, x)]),
                                        _ => (at(a, b, c, x), o[(d, x)]),
                                    };
                                    if w != 0.0 {
                                        acc += w * u[src];
                                    }
                                }
                                next[at(a, b, c, d)] = acc;
                            }
                        }
                    }
                }
                u = next;
            }
            for a in 0..n {
                for b in (a + 1)..n {
                    for c in (b + 1)..n {
                        for d in (c + 1)..n {
                            let v = u[at(a, b, c, d)];
                            if v.abs() > 1e-15 {
                                quartic.add([a, b, c, d], v)?;
                            }
                        }
                    }
                }
            }
        }
        MajoranaHamiltonian::from_parts(self.layout, &t, quartic, self.offset)
    }
}

/// The 24 permutations of four slots together with their parity.
pub(crate) const PERMUTATIONS_4: [([usize; 4], f64); 24] = [
    ([0, 1, 2, 3], 1.0),
    ([0, 1, 3, 2], -1.0),
    ([0, 2, 1, 3], -1.0),
    ([0, 2, 3, 1], 1.0),
    ([0, 3, 1, 2], 1.0),
    ([0, 3, 2, 1], -1.0),
    ([1, 0, 2, 3], -1.0),
    ([1, 0, 3, 2], 1.0),
    ([1, 2, 0, 3], 1.0),
    ([1, 2, 3, 0], -1.0),
    ([1, 3, 0, 2], -1.0),
    ([1, 3, 2, 0], 1.0),
    ([2, 0, 1, 3], 1.0),
    ([2, 0, 3, 1], -1.0),
    ([2, 1, 0, 3], -1.0),
    ([2, 1, 3, 0], 1.0),
    ([2, 3, 0, 1], 1.0),
    ([2, 3, 1, 0], -1.0),
    ([3, 0, 1, 2], -1.0),
    ([3, 0, 2, 1], 1.0),
    ([3, 1, 0, 2], 1.0),
    ([3, 1, 2, 0], -1.0),
    ([3, 2, 0, 1], -1.0),
    ([3, 2, 1, 0], 1.0),
];

/// Polynomials in Majorana operators with complex coefficients, keyed by the
/// strictly increasing index list of each normal-ordered monomial.
#[derive(Clone, Debug, Default)]
struct MajoranaPoly(BTreeMap<Vec<usize>, Complex64>);

impl MajoranaPoly {
    fn scalar(c: Complex64) -> Self {
        let mut p = MajoranaPoly::default();
        p.0.insert(Vec::new(), c);
        p
    }

    /// `a†_j = (c_j + i c_{j+M}) / 2`
    fn creation(j: usize, m: usize) -> Self {
        let mut p = MajoranaPoly::default();
        p.0.insert(vec![j], Complex64::new(0.5, 0.0));
        p.0.insert(vec![j + m], Complex64::new(0.0, 0.5));
        p
    }

    /// `a_j = (c_j - i c_{j+M}) / 2`
    fn annihilation(j: usize, m: usize) -> Self {
        let mut p = MajoranaPoly::default();
        p.0.insert(vec![j], Complex64::new(0.5, 0.0));
        p.0.insert(vec![j + m], Complex64::new(0.0, -0.5));
        p
    }

    fn number(j: usize, m: usize) -> Self {
        Self::creation(j, m).mul(&Self::annihilation(j, m))
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = MajoranaPoly::default();
        for (a, ca) in &self.0 {
            for (b, cb) in &other.0 {
                let mut word: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                let sign = normal_order(&mut word);
                *out.0.entry(word).or_insert(Complex64::new(0.0, 0.0)) += ca * cb * sign;
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &Self, s: f64) {
        for (k, v) in &other.0 {
            *self.0.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += v * s;
        }
    }
}

/// Sorts a Majorana word into increasing order using `{c_a, c_b} = 2 δ_ab`,
/// cancelling squares. Returns the accumulated sign.
fn normal_order(word: &mut Vec<usize>) -> f64 {
    let mut sign = 1.0;
    for i in 1..word.len() {
        let mut j = i;
        while j > 0 && word[j - 1] > word[j] {
            word.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == word[i + 1] {
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    *word = out;
    sign
}

/// Compiles a Dirac term list into Majorana coefficients.
///
/// The result satisfies, on every Fock state, `<φ| i Σ T c c + Σ U cccc + offset |ψ>`
/// equal to the Dirac-form matrix element.
pub fn compile_hamiltonian(layout: ModeLayout, terms: &DiracTermList) -> Result<MajoranaHamiltonian> {
    let m = layout.modes();
    terms.validate(m)?;

    let mut poly = MajoranaPoly::default();
    for h in &terms.hopping {
        let fwd = MajoranaPoly::creation(h.i, m).mul(&MajoranaPoly::annihilation(h.j, m));
        let bwd = MajoranaPoly::creation(h.j, m).mul(&MajoranaPoly::annihilation(h.i, m));
        poly.add_scaled(&fwd, -h.amplitude);
        poly.add_scaled(&bwd, -h.amplitude);
    }
    for n in &terms.number {
        poly.add_scaled(&MajoranaPoly::number(n.i, m), n.coefficient);
    }
    for d in &terms.density {
        let nn = MajoranaPoly::number(d.i, m).mul(&MajoranaPoly::number(d.j, m));
        poly.add_scaled(&nn, d.coefficient);
    }
    if terms.is_empty() {
        poly = MajoranaPoly::scalar(Complex64::new(0.0, 0.0));
    }

    const HERMITICITY_TOL: f64 = 1e-12;
    let mut quadratic = BTreeMap::new();
    let mut quartic = Quartic::new();
    let mut offset = 0.0;
    for (word, c) in poly.0 {
        match word.len() {
            0 => {
                if c.im.abs() > HERMITICITY_TOL {
                    return Err(Error::InvalidTerm("non-Hermitian scalar part".into()));
                }
                offset += c.re;
            }
            2 => {
                // c_k c_l (k < l) appears as i (T_kl c_k c_l + T_lk c_l c_k) = 2 i T_kl c_k c_l.
                if c.re.abs() > HERMITICITY_TOL {
                    return Err(Error::InvalidTerm("non-Hermitian quadratic part".into()));
                }
                if c.im != 0.0 {
                    quadratic.insert((word[0], word[1]), c.im / 2.0);
                }
            }
            4 => {
                // The 24 orderings of a distinct 4-tuple each contribute U_klmn c_k c_l c_m c_n.
                if c.im.abs() > HERMITICITY_TOL {
                    return Err(Error::InvalidTerm("non-Hermitian quartic part".into()));
                }
                if c.re != 0.0 {
                    quartic.add([word[0], word[1], word[2], word[3]], c.re / 24.0)?;
                }
            }
            k => {
                return Err(Error::InvalidTerm(format!(
                    "term of Majorana degree {k} is outside the two-body class"
                )))
            }
        }
    }
    quadratic.retain(|_, v: &mut f64| *v != 0.0);
    quartic.prune(0.0);
    Ok(MajoranaHamiltonian { layout, quadratic, quartic, offset })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_number_term() {
        let mu = 1.3;
        let mut terms = DiracTermList::new();
        terms.number(0, mu);
        let h = compile_hamiltonian(ModeLayout::modes_only(1), &terms).unwrap();
        // n = 1/2 - (i/2) c_0 c_1, so i * 2 T_01 c_0 c_1 = -(i mu / 2) c_0 c_1.
        assert!((h.t(0, 1) + mu / 4.0).abs() < 1e-15);
        assert!((h.t(1, 0) - mu / 4.0).abs() < 1e-15);
        assert!(h.quartic().is_empty());
        assert!((h.offset() - mu / 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_term_list_compiles_to_zero() {
        let h = compile_hamiltonian(ModeLayout::new(3, 2), &DiracTermList::new()).unwrap();
        assert_eq!(h.quadratic_entries().count(), 0);
        assert!(h.quartic().is_empty());
        assert_eq!(h.offset(), 0.0);
    }

    #[test]
    fn density_density_has_one_orbit() {
        let mut terms = DiracTermList::new();
        terms.density(0, 1, 2.0);
        let h = compile_hamiltonian(ModeLayout::modes_only(2), &terms).unwrap();
        assert_eq!(h.quartic().len(), 1);
        let (idx, v) = h.quartic().iter().next().unwrap();
        assert_eq!(*idx, [0, 1, 2, 3]);
        // n_0 n_1 contains (1/4) c_0 c_2 c_1 c_3 = -(1/4) c_0 c_1 c_2 c_3
        assert!((v - (-(-2.0 / 4.0) / 24.0)).abs() < 1e-15);
        assert!((h.offset() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_indices() {
        let mut terms = DiracTermList::new();
        terms.hop(0, 5, 1.0);
        assert!(matches!(
            compile_hamiltonian(ModeLayout::modes_only(2), &terms),
            Err(Error::ModeOutOfRange { index: 5, .. })
        ));
        let mut terms = DiracTermList::new();
        terms.hop(1, 1, 1.0);
        assert!(matches!(
            compile_hamiltonian(ModeLayout::modes_only(2), &terms),
            Err(Error::InvalidTerm(_))
        ));
        let mut terms = DiracTermList::new();
        terms.number(0, f64::NAN);
        assert!(matches!(
            compile_hamiltonian(ModeLayout::modes_only(2), &terms),
            Err(Error::NonRealAmplitude(_))
        ));
    }

    #[test]
    fn quartic_sign_expansion() {
        let mut q = Quartic::new();
        q.add([3, 1, 2, 0], 1.0).unwrap();
        // (3,1,2,0) -> (0,1,2,3) is a product of 3 transpositions... check via get.
        let canonical = q.get([0, 1, 2, 3]);
        assert_eq!(q.get([3, 1, 2, 0]), 1.0);
        assert_eq!(q.get([1, 0, 2, 3]), -canonical);
        assert_eq!(q.get([0, 0, 2, 3]), 0.0);
        assert!(q.add([0, 0, 1, 2], 1.0).is_err());
    }

    #[test]
    fn permutation_table_parities() {
        for (p, s) in PERMUTATIONS_4 {
            let (_, parity) = sort_with_sign(p);
            assert_eq!(parity, s, "{p:?}");
        }
    }

    #[test]
    fn layout_maps() {
        let l = ModeLayout::new(3, 2);
        assert_eq!(l.modes(), 6);
        assert_eq!(l.dirac_index(2, 1), 5);
        assert_eq!(l.site_flavor(5), (2, 1));
        assert_eq!(l.majorana_pair(4), (4, 10));
        assert_eq!(l.dirac_of_majorana(10), (4, 1));
        let mut seen = vec![false; l.majoranas()];
        for j in 0..l.modes() {
            let (a, b) = l.majorana_pair(j);
            assert!(!seen[a] && !seen[b]);
            seen[a] = true;
            seen[b] = true;
        }
        assert!(seen.into_iter().all(|s| s));
    }
}
