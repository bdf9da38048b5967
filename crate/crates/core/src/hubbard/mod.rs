//! Two-dimensional Hubbard model on a periodic `Lx × Ly` lattice.
//!
//! `H = -t Σ_{<x,y>,σ} (a†_{xσ} a_{yσ} + h.c.) + u Σ_x n_{x↑} n_{x↓} ∓ μ Σ_{x,σ} n_{xσ}`
//!
//! Bonds are the directed pairs `(x, x + e_x)` and `(x, x + e_y)` for every
//! site, so each nearest-neighbour bond appears once for `L ≥ 3`; for `L = 2`
//! the two bonds joining the same pair of sites are both kept, which gives the
//! band `ε(k) = -2t (cos kx + cos ky)` on every lattice size. A direction of
//! length 1 has no bonds.
//!
//! Sites are numbered `x + Lx * y`; Dirac mode `2 * site + σ` with σ = 0 for ↑.

pub mod bcs;
pub mod grid;
pub mod spectrum;
pub mod ti;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorana::{compile_hamiltonian, DiracTermList, MajoranaHamiltonian, ModeLayout};

pub use grid::{BlockSpec, MomentumGrid};
pub use spectrum::{classify, dispersion, momentum_block, Channel, DispersionData};
pub use ti::{ti_ground_state, GroundState, Observables, TiModel};

/// Sign with which μ enters the Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuConvention {
    /// `- μ Σ n`, as the Hamiltonian is usually written.
    #[default]
    Subtract,
    /// `+ μ Σ n`. The reference attractive-model fillings at
    /// `(u, μ) = (-4, 1), (-2, 2), (-4, 3)` are reproduced with this sign.
    Add,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub t: f64,
    pub u: f64,
    pub mu: f64,
    pub lx: usize,
    pub ly: usize,
    #[serde(default)]
    pub mu_convention: MuConvention,
}

impl HubbardParams {
    pub fn new(t: f64, u: f64, mu: f64, lx: usize, ly: usize) -> Self {
        HubbardParams { t, u, mu, lx, ly, mu_convention: MuConvention::Subtract }
    }

    pub fn with_convention(mut self, c: MuConvention) -> Self {
        self.mu_convention = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lx == 0 || self.ly == 0 {
            return Err(Error::InvalidParameter(format!(
                "lattice must be at least 1x1, got {}x{}",
                self.lx, self.ly
            )));
        }
        for (name, v) in [("t", self.t), ("u", self.u), ("mu", self.mu)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
            }
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn layout(&self) -> ModeLayout {
        ModeLayout::new(self.sites(), 2)
    }

    /// The coefficient `μ'` in `- μ' Σ n`.
    pub fn mu_subtracted(&self) -> f64 {
        match self.mu_convention {
            MuConvention::Subtract => self.mu,
            MuConvention::Add => -self.mu,
        }
    }

    /// `ε(k) = -2t (cos kx + cos ky)`
    pub fn band(&self, kx: f64, ky: f64) -> f64 {
        let fx = if self.lx > 1 { kx.cos() } else { 0.0 };
        let fy = if self.ly > 1 { ky.cos() } else { 0.0 };
        -2.0 * self.t * (fx + fy)
    }

    pub fn site_index(&self, x: usize, y: usize) -> usize {
        (x % self.lx) + self.lx * (y % self.ly)
    }
}

/// The Dirac term list of the lattice Hamiltonian.
pub fn hubbard_terms(p: &HubbardParams) -> Result<DiracTermList> {
    p.validate()?;
    let layout = p.layout();
    let mut terms = DiracTermList::new();
    for y in 0..p.ly {
        for x in 0..p.lx {
            let s = p.site_index(x, y);
            let mut neighbours = Vec::new();
            if p.lx > 1 {
                neighbours.push(p.site_index(x + 1, y));
            }
            if p.ly > 1 {
                neighbours.push(p.site_index(x, y + 1));
            }
            for n in neighbours {
                for sigma in 0..2 {
                    terms.hop(layout.dirac_index(s, sigma), layout.dirac_index(n, sigma), p.t);
                }
            }
            let (up, dn) = (layout.dirac_index(s, 0), layout.dirac_index(s, 1));
            if p.u != 0.0 {
                terms.density(up, dn, p.u);
            }
            if p.mu != 0.0 {
                terms.number(up, -p.mu_subtracted());
                terms.number(dn, -p.mu_subtracted());
            }
        }
    }
    Ok(terms)
}

pub fn build_hubbard(p: &HubbardParams) -> Result<MajoranaHamiltonian> {
    compile_hamiltonian(p.layout(), &hubbard_terms(p)?)
}

/// The on-site part `u n↑ n↓ - μ' (n↑ + n↓)` on one site (4 Majoranas,
/// ordered `[c_↑, c_↓, c_{↑+2}, c_{↓+2}]`).
pub fn site_hamiltonian(p: &HubbardParams) -> Result<MajoranaHamiltonian> {
    let mut terms = DiracTermList::new();
    terms.density(0, 1, p.u).number(0, -p.mu_subtracted()).number(1, -p.mu_subtracted());
    compile_hamiltonian(ModeLayout::new(1, 2), &terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dirac_fock_matrix, fock_matrix};

    #[test]
    fn single_site_matches_fock() {
        let p = HubbardParams::new(1.0, -3.0, 0.4, 1, 1);
        let h = build_hubbard(&p).unwrap();
        let f = fock_matrix(&h).unwrap();
        // |↑↓> is basis state 3
        assert!((f.matrix()[(3, 3)].re - (p.u - 2.0 * p.mu)).abs() < 1e-13);
        assert!((f.matrix()[(1, 1)].re + p.mu).abs() < 1e-13);
        assert!(f.matrix()[(0, 0)].norm() < 1e-13);
        let direct = dirac_fock_matrix(p.layout(), &hubbard_terms(&p).unwrap()).unwrap();
        let diff = (f.matrix() - direct.matrix()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(diff < 1e-13);
    }

    #[test]
    fn no_bonds_means_onsite_only() {
        let p = HubbardParams::new(0.0, 2.0, 0.5, 3, 3);
        let h = build_hubbard(&p).unwrap();
        let m = p.layout().modes();
        for (k, l, _) in h.quadratic_entries() {
            assert_eq!(p.layout().site_flavor(k % m).0, p.layout().site_flavor(l % m).0);
        }
        for (idx, _) in h.quartic().iter() {
            let site = p.layout().site_flavor(idx[0] % m).0;
            assert!(idx.iter().all(|&i| p.layout().site_flavor(i % m).0 == site));
        }
    }

    #[test]
    fn conventions_flip_mu() {
        let p = HubbardParams::new(1.0, 1.0, 0.7, 2, 2);
        assert_eq!(p.mu_subtracted(), 0.7);
        assert_eq!(p.with_convention(MuConvention::Add).mu_subtracted(), -0.7);
        assert!(HubbardParams::new(1.0, 1.0, 0.0, 0, 2).validate().is_err());
    }
}
