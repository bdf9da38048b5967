//! Two-parameter BCS family, used to cross-check the translation-invariant flow.
//!
//! `Γ(Δ, μ_eff)` is the ground state of `Σ_k (ε_k - μ_eff) n_k + Δ Σ_k (a†_{k↑} a†_{-k↓} + h.c.)`,
//! evaluated with the full Hubbard energy functional.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::quadratic_ground_state;
use crate::linalg::Antisym;

use super::ti::{BlockState, Observables, TiModel};
use super::HubbardParams;

pub fn bcs_state(model: &TiModel, delta: f64, mu_eff: f64) -> Result<BlockState> {
    model
        .blocks
        .par_iter()
        .map(|b| {
            let nm = b.nm();
            let mut h = Antisym::zeros(2 * nm);
            for (a, m) in b.modes.iter().enumerate() {
                let (kx, ky) = model.grid.momentum(m.k);
                h.set(a, a + nm, -(model.params.band(kx, ky) - mu_eff) / 4.0);
            }
            let pairs: &[(usize, usize)] = if b.spec.self_paired { &[(0, 1)] } else { &[(0, 3), (2, 1)] };
            for &(i, j) in pairs {
                h.add(i, j + nm, delta / 4.0);
                h.add(i + nm, j, delta / 4.0);
            }
            Ok(quadratic_ground_state(&h)?.into_gamma())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BcsScan {
    pub deltas: Vec<f64>,
    pub mus: Vec<f64>,
    /// `energies[(i, j)]` at `(deltas[i], mus[j])`, on the initial grid.
    pub energies: Array2<f64>,
    pub delta: f64,
    pub mu_eff: f64,
    pub energy: f64,
    pub observables: Observables,
    #[serde(skip)]
    pub state: BlockState,
}

/// Evaluates the energy over the `deltas × mus` grid, then refines around
/// the minimizer `refinements` times by shrinking the grid spacing threefold.
pub fn bcs_parameter_scan(params: &HubbardParams, deltas: &[f64], mus: &[f64], refinements: usize) -> Result<BcsScan> {
    if deltas.is_empty() || mus.is_empty() {
        return Err(Error::InvalidParameter("empty BCS scan grid".into()));
    }
    let model = TiModel::new(params)?;
    let eval = |d: f64, m: f64| -> Result<f64> { Ok(model.energy(&bcs_state(&model, d, m)?)) };

    let mut energies = Array2::<f64>::zeros((deltas.len(), mus.len()));
    let mut best = (0usize, 0usize, f64::INFINITY);
    for (i, &d) in deltas.iter().enumerate() {
        for (j, &m) in mus.iter().enumerate() {
            let e = eval(d, m)?;
            energies[(i, j)] = e;
            if e < best.2 {
                best = (i, j, e);
            }
        }
    }
    let spacing = |v: &[f64], i: usize| -> f64 {
        let lo = if i > 0 { v[i] - v[i - 1] } else { 0.0 };
        let hi = if i + 1 < v.len() { v[i + 1] - v[i] } else { 0.0 };
        lo.abs().max(hi.abs())
    };
    let (mut d0, mut m0, mut e0) = (deltas[best.0], mus[best.1], best.2);
    let (mut sd, mut sm) = (spacing(deltas, best.0), spacing(mus, best.1));
    let delta_floor = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    for _ in 0..refinements {
        sd /= 3.0;
        sm /= 3.0;
        let (cd, cm) = (d0, m0);
        for a in -3i32..=3 {
            for b in -3i32..=3 {
                let d = (cd + a as f64 * sd).max(delta_floor);
                let m = cm + b as f64 * sm;
                let e = eval(d, m)?;
                if e < e0 {
                    (d0, m0, e0) = (d, m, e);
                }
            }
        }
    }
    let state = bcs_state(&model, d0, m0)?;
    let observables = model.observables(&state);
    Ok(BcsScan {
        deltas: deltas.to_vec(),
        mus: mus.to_vec(),
        energies,
        delta: d0,
        mu_eff: m0,
        energy: e0,
        observables,
        state,
    })
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_minimum_is_unpaired_fermi_sea() {
        let p = HubbardParams::new(1.0, 0.0, 0.5, 5, 5);
        let scan = bcs_parameter_scan(&p, &linspace(0.0, 1.0, 11), &linspace(-1.0, 2.0, 13), 2).unwrap();
        assert_eq!(scan.delta, 0.0);
        let model = TiModel::new(&p).unwrap();
        let mut want = 0.0;
        for k in model.grid.points() {
            let (kx, ky) = model.grid.momentum(k);
            let xi = p.band(kx, ky) - p.mu;
            if xi < 0.0 {
                want += 2.0 * xi;
            }
        }
        assert!((scan.energy - want).abs() < 1e-10, "{} vs {}", scan.energy, want);
        assert!(scan.observables.p < 1e-14);
    }
}
