//! Per-momentum linearized dynamics, dispersion relations and the
//! classification of excitation branches by order-parameter channel.
//!
//! The operator for a block is the compression of the lattice linearized map
//! onto perturbations supported on that block:
//! `X ↦ [h_b, X] + (6/N) [⟨W^T tr2(U_site, W X W^T) W⟩, G_b]`, where `⟨·⟩` is
//! the site average. Couplings to perturbations outside the block (which
//! connect different `(k, -k)` pairs at equal momentum transfer) are dropped.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::excitation::{
    antisymmetric_basis, normalize_perturbation, spectrum, ExcitationSpectrum, LinearizedOperator, SpectrumOptions,
};
use crate::gaussian::tr2_contract;
use crate::linalg::{eigh_hermitian, Antisym};

use super::ti::{perturbation_correlators, Block, BlockState, TiModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// `<a†_{k↑} a†_{-k↓}>`
    DeltaK0,
    /// `<a†_{k↑} a†_{k↓}>`
    DeltaK,
    /// `<a†_{k↑} a†_{-k↑}>`, `<a†_{k↓} a†_{-k↓}>`
    DeltaS,
    /// Spin flips `<a†_{k↑} a_{-k↓}>` together with `<a†_{±k↑} a_{±k↓}>` and
    /// their reverses: the transverse partners of `S_z` within a triplet.
    SpinT,
    /// `<n_{k↑} - n_{k↓}>`
    SpinZ,
    /// `<n_{k↑} + n_{k↓}>`
    Charge,
}

impl Channel {
    pub const ALL: [Channel; 6] =
        [Channel::DeltaK0, Channel::DeltaK, Channel::DeltaS, Channel::SpinT, Channel::SpinZ, Channel::Charge];

    pub fn name(self) -> &'static str {
        match self {
            Channel::DeltaK0 => "Delta_k0",
            Channel::DeltaK => "Delta_k",
            Channel::DeltaS => "Delta_S",
            Channel::SpinT => "S_T",
            Channel::SpinZ => "S_z",
            Channel::Charge => "C",
        }
    }
}

/// Channel magnitudes in the order of [`Channel::ALL`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Channels(pub [f64; 6]);

impl Channels {
    pub fn get(&self, c: Channel) -> f64 {
        self.0[c as usize]
    }

    pub fn max(&self) -> f64 {
        self.0.iter().cloned().fold(0.0, f64::max)
    }

    /// Channels exceeding `fraction` of the largest one.
    pub fn present(&self, fraction: f64) -> Vec<Channel> {
        let m = self.max();
        if m == 0.0 {
            return Vec::new();
        }
        Channel::ALL.into_iter().filter(|&c| self.get(c) > fraction * m).collect()
    }

    fn max_with(&self, other: &Channels) -> Channels {
        let mut out = *self;
        for (o, v) in out.0.iter_mut().zip(other.0) {
            *o = o.max(v);
        }
        out
    }
}

/// Channel magnitudes (root sum of squares over the components of each
/// channel) of a block perturbation.
pub fn channels(block: &Block, x: &Array2<Complex64>) -> Channels {
    let (f, n) = perturbation_correlators(x);
    let rss = |zs: &[Complex64]| zs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if block.spec.self_paired {
        let pair = rss(&[f[(0, 1)]]);
        Channels([
            pair,
            pair,
            0.0,
            rss(&[n[(0, 1)], n[(1, 0)]]),
            rss(&[n[(0, 0)] - n[(1, 1)]]),
            rss(&[n[(0, 0)] + n[(1, 1)]]),
        ])
    } else {
        Channels([
            rss(&[f[(0, 3)], f[(2, 1)]]),
            rss(&[f[(0, 1)], f[(2, 3)]]),
            rss(&[f[(0, 2)], f[(1, 3)]]),
            rss(&[n[(0, 3)], n[(2, 1)], n[(1, 2)], n[(3, 0)], n[(0, 1)], n[(1, 0)], n[(2, 3)], n[(3, 2)]]),
            rss(&[n[(0, 0)] - n[(1, 1)], n[(2, 2)] - n[(3, 3)]]),
            rss(&[n[(0, 0)] + n[(1, 1)], n[(2, 2)] + n[(3, 3)]]),
        ])
    }
}

fn block_apply(block: &Block, site_u: &crate::majorana::Quartic, scale: f64, h: &Antisym, g: &Antisym, x: &Antisym) -> Antisym {
    let mut acc = Array2::<f64>::zeros((block.dim(), block.dim()));
    for w in &block.samples {
        let xs = Antisym::antisymmetrize(&w.dot(x.as_array()).dot(&w.t()).view());
        let d = tr2_contract(site_u, &xs).expect("site dimensions");
        acc += &w.t().dot(d.as_array()).dot(w);
    }
    let s = Antisym::antisymmetrize(&(acc * (scale / block.samples.len() as f64)).view());
    h.commutator(x).plus(&s.commutator(g))
}

fn block_operator(model: &TiModel, bi: usize, h: &Antisym, g: &Antisym) -> LinearizedOperator {
    let block = &model.blocks[bi];
    let n = block.dim();
    let basis = antisymmetric_basis(n);
    let d = basis.len();
    let scale = 6.0 / model.sites() as f64;
    let mut m = Array2::<f64>::zeros((d, d));
    for (col, &(a, b)) in basis.iter().enumerate() {
        let mut x = Antisym::zeros(n);
        x.set(a, b, 1.0);
        let y = block_apply(block, model.site.quartic(), scale, h, g, &x);
        for (row, v) in y.upper_vec().into_iter().enumerate() {
            m[(row, col)] = v;
        }
    }
    LinearizedOperator { n, matrix: m }
}

/// The compressed linearized operator of the block containing `k`
/// (28-dimensional, or 6-dimensional at a self-paired momentum).
pub fn momentum_block(model: &TiModel, state: &BlockState, k: (usize, usize)) -> Result<LinearizedOperator> {
    let bi = model.grid.block_of(k)?;
    let (_, hb) = model.mean_fields(state);
    Ok(block_operator(model, bi, &hb[bi], &state[bi]))
}

/// One excitation branch at one momentum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Branch {
    pub omega: f64,
    pub real_residual: f64,
    /// Channels of the member vector after diagonalizing `S_z` inside its multiplet.
    pub channels: Channels,
    /// Basis-independent channels of the whole multiplet (RMS over an
    /// orthonormal basis of it).
    pub multiplet_channels: Channels,
    /// `ΔS_z` carried by the member vector, defined up to an overall sign.
    pub spin_z: f64,
    /// Index of the multiplet among this momentum's nontrivial multiplets.
    pub multiplet: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockAnalysis {
    pub k: (usize, usize),
    pub self_paired: bool,
    /// Nontrivial branches, ascending.
    pub branches: Vec<Branch>,
    /// Positive frequencies dropped for carrying no channel weight.
    pub trivial: usize,
    pub zero_modes: usize,
    pub max_real_residual: f64,
    pub pairing_defect: f64,
    pub scale: f64,
    pub zero_tol: f64,
}

fn inner(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn orthonormalize(vs: &[Array2<Complex64>]) -> Vec<Array2<Complex64>> {
    let mut out: Vec<Array2<Complex64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = inner(q, &w);
                w = &w - &q.mapv(|z| z * c);
            }
        }
        let norm = inner(&w, &w).re.sqrt();
        if norm > 1e-8 {
            out.push(w.mapv(|z| z / norm));
        }
    }
    out
}

/// The Majorana generator of `S_z = ½ Σ_a s_a n_a` on a block.
fn spin_z_generator(block: &Block) -> Antisym {
    let nm = block.nm();
    let mut h = Antisym::zeros(2 * nm);
    for (a, m) in block.modes.iter().enumerate() {
        let s = if m.spin == 0 { 1.0 } else { -1.0 };
        h.set(a, a + nm, -s / 8.0);
    }
    h
}

fn complex_commutator(h: &Antisym, x: &Array2<Complex64>) -> Array2<Complex64> {
    let hc = h.as_array().mapv(|v| Complex64::new(v, 0.0));
    hc.dot(x) - x.dot(&hc)
}

/// Classifies the nontrivial excitations of a block spectrum.
pub fn classify(block: &Block, spec: &ExcitationSpectrum) -> Result<(Vec<Branch>, usize)> {
    let sz = spin_z_generator(block);
    let mut branches = Vec::new();
    let mut trivial = 0;
    let mut multiplet = 0;
    for m in &spec.multiplets {
        let members: Vec<Array2<Complex64>> =
            m.members.iter().map(|&i| spec.excitations[i].vector.clone()).collect();
        let basis = orthonormalize(&members);
        let rms = {
            let mut acc = [0.0; 6];
            for v in &basis {
                for (a, c) in acc.iter_mut().zip(channels(block, v).0) {
                    *a += c * c;
                }
            }
            Channels(acc.map(|a| (a / basis.len().max(1) as f64).sqrt()))
        };
        // Diagonalize ΔS_z = -4i ad_{h_sz} inside the multiplet.
        let d = basis.len();
        let mut hm = Array2::<Complex64>::zeros((d, d));
        for j in 0..d {
            let y = complex_commutator(&sz, &basis[j]);
            for i in 0..d {
                hm[(i, j)] = inner(&basis[i], &y) * Complex64::new(0.0, -4.0);
            }
        }
        let herm = (&hm + &hm.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let (vals, vecs) = eigh_hermitian(&herm)?;
        let mut kept = Vec::new();
        for c in 0..d {
            let mut v = Array2::<Complex64>::zeros(basis[0].raw_dim());
            for (j, b) in basis.iter().enumerate() {
                v = v + b.mapv(|z| z * vecs[(j, c)]);
            }
            normalize_perturbation(&mut v);
            let ch = channels(block, &v);
            if ch.max() < 1e-8 {
                trivial += 1;
                continue;
            }
            kept.push(Branch {
                omega: m.omega,
                real_residual: m.real_residual,
                channels: ch,
                multiplet_channels: rms,
                spin_z: vals[c],
                multiplet,
})
        }
        if kept.is_empty() {
            continue;
        }
        multiplet += 1;
        branches.extend(kept);
        // Members lost to linear dependence are counted as trivial.
        trivial += m.multiplicity.saturating_sub(d);
    }
    Ok((branches, trivial))
}

/// Which momenta to evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KSet {
    Grid,
    Path,
    Points(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionOptions {
    pub spectrum: SpectrumOptions,
    /// Fraction of a branch's largest channel above which a channel counts as present.
    pub presence_threshold: f64,
    /// Branches whose standard deviation over momenta is at most this fraction
    /// of the spectral scale are flat.
    pub flat_tol: f64,
    /// Gapless if the gap is below `max(gap_threshold · |t|, 10 · zero_tol)`.
    pub gap_threshold: f64,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        DispersionOptions { spectrum: SpectrumOptions::default(), presence_threshold: 0.01, flat_tol: 1e-6, gap_threshold: 5e-3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KPoint {
    pub k: (usize, usize),
    pub momentum: (f64, f64),
    /// Index into [`DispersionData::blocks`].
    pub block: usize,
}

/// One row of the classification table: a group of branches degenerate at
/// (almost) every momentum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassRow {
    /// 1-based branch indices.
    pub branches: Vec<usize>,
    /// Largest multiplet channel magnitudes over momenta.
    pub magnitudes: Channels,
    pub present: Vec<Channel>,
    /// Largest relative splitting inside the group over momenta.
    pub max_splitting: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersionData {
    pub points: Vec<KPoint>,
    pub blocks: Vec<BlockAnalysis>,
    /// Number of nontrivial branches at generic (not self-paired) momenta.
    pub branch_count: usize,
    /// Smallest nontrivial frequency over all momenta.
    pub gap: f64,
    pub gap_threshold: f64,
    pub gapless: bool,
    /// 0-based indices of flat branches.
    pub flat_branches: Vec<usize>,
    /// Standard deviation over momenta of each branch.
    pub branch_std: Vec<f64>,
    pub scale: f64,
    pub max_real_residual: f64,
    pub pairing_defect: f64,
    pub table: Vec<ClassRow>,
}

impl DispersionData {
    pub fn analysis(&self, p: &KPoint) -> &BlockAnalysis {
        &self.blocks[p.block]
    }

    /// Frequencies of branch `j` at every point that has it.
    pub fn branch(&self, j: usize) -> Vec<f64> {
        self.points
            .iter()
            .filter_map(|p| self.blocks[p.block].branches.get(j).map(|b| b.omega))
            .collect()
    }
}

pub fn analyze_block(model: &TiModel, bi: usize, h: &Antisym, g: &Antisym, opts: &SpectrumOptions) -> Result<BlockAnalysis> {
    let op = block_operator(model, bi, h, g);
    let spec = spectrum(&op, opts)?;
    let block = &model.blocks[bi];
    let (branches, trivial) = classify(block, &spec)?;
    Ok(BlockAnalysis {
        k: block.spec.k,
        self_paired: block.spec.self_paired,
        branches,
        trivial,
        zero_modes: spec.zero_modes,
        max_real_residual: spec.max_real_residual,
        pairing_defect: spec.pairing_defect,
        scale: spec.scale,
        zero_tol: spec.zero_tol,
    })
}

/// Dispersion relations and branch classification over a set of momenta.
pub fn dispersion(model: &TiModel, state: &BlockState, kset: &KSet, opts: &DispersionOptions) -> Result<DispersionData> {
    let ks: Vec<(usize, usize)> = match kset {
        KSet::Grid => model.grid.points().collect(),
        KSet::Path => model.grid.k_path(),
        KSet::Points(p) => p.clone(),
    };
    let block_ids = ks.iter().map(|&k| model.grid.block_of(k)).collect::<Result<Vec<_>>>()?;
    let mut used: Vec<usize> = block_ids.clone();
    used.sort_unstable();
    used.dedup();

    let (_, hb) = model.mean_fields(state);
    let blocks: Vec<BlockAnalysis> = used
        .par_iter()
        .map(|&bi| analyze_block(model, bi, &hb[bi], &state[bi], &opts.spectrum))
        .collect::<Result<_>>()?;
    let points: Vec<KPoint> = ks
        .iter()
        .zip(&block_ids)
        .map(|(&k, bi)| KPoint {
            k,
            momentum: model.grid.momentum(k),
            block: used.binary_search(bi).expect("block was analyzed"),
        })
        .collect();

    let generic: Vec<&BlockAnalysis> = points.iter().map(|p| &blocks[p.block]).filter(|b| !b.self_paired).collect();
    let counted: Vec<&BlockAnalysis> =
        if generic.is_empty() { points.iter().map(|p| &blocks[p.block]).collect() } else { generic };
    let branch_count = counted.iter().map(|b| b.branches.len()).max().unwrap_or(0);

    let scale = blocks.iter().flat_map(|b| b.branches.iter().map(|x| x.omega)).fold(0.0, f64::max);
    let gap = points
        .iter()
        .filter_map(|p| blocks[p.block].branches.first().map(|b| b.omega))
        .fold(f64::INFINITY, f64::min);
    let zero_tol = blocks.iter().map(|b| b.zero_tol).fold(0.0, f64::max);
    let gap_threshold = (opts.gap_threshold * model.params.t.abs()).max(10.0 * zero_tol);

    let mut branch_std = Vec::new();
    let mut flat_branches = Vec::new();
    for j in 0..branch_count {
        let vals: Vec<f64> = counted.iter().filter_map(|b| b.branches.get(j).map(|x| x.omega)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        if std <= opts.flat_tol * scale {
            flat_branches.push(j);
        }
        branch_std.push(std);
    }

    let table = classification_table(&counted, branch_count, opts.presence_threshold, opts.spectrum.degeneracy_tol);

    Ok(DispersionData {
        branch_count,
        gap: if gap.is_finite() { gap } else { 0.0 },
        gap_threshold,
        gapless: !(gap >= gap_threshold),
        flat_branches,
        branch_std,
        scale,
        max_real_residual: blocks.iter().map(|b| b.max_real_residual).fold(0.0, f64::max),
        pairing_defect: blocks.iter().map(|b| b.pairing_defect).fold(0.0, f64::max),
        table,
        points,
        blocks,
    })
}

/// Groups branches `j, j+1` that sit in a common multiplet at the majority of
/// momenta, and merges their multiplet channels over momenta.
fn classification_table(blocks: &[&BlockAnalysis], count: usize, threshold: f64, deg_tol: f64) -> Vec<ClassRow> {
    let full: Vec<&&BlockAnalysis> = blocks.iter().filter(|b| b.branches.len() == count).collect();
    if count == 0 || full.is_empty() {
        return Vec::new();
    }
    let mut rows: Vec<ClassRow> = Vec::new();
    let mut j = 0;
    while j < count {
        let mut group = vec![j];
        while j + 1 < count {
            let together = full
                .iter()
                .filter(|b| b.branches[j].multiplet == b.branches[j + 1].multiplet)
                .count();
            if 2 * together > full.len() {
                j += 1;
                group.push(j);
            } else {
                break;
            }
        }
        let mut mags = Channels::default();
        let mut split = 0.0f64;
        for b in &full {
            for &g in &group {
                mags = mags.max_with(&b.branches[g].multiplet_channels);
            }
            let lo = b.branches[group[0]].omega;
            let hi = b.branches[*group.last().unwrap()].omega;
            split = split.max((hi - lo) / hi.max(deg_tol));
        }
        rows.push(ClassRow {
            branches: group.iter().map(|g| g + 1).collect(),
            present: mags.present(threshold),
            magnitudes: mags,
            max_splitting: split,
        });
        j += 1;
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hubbard::ti::{ground_state_of, TiOptions};
    use crate::hubbard::HubbardParams;

    #[test]
    fn density_only_vector_is_pure_charge() {
        let p = HubbardParams::new(1.0, -2.0, 0.5, 3, 3);
        let m = TiModel::new(&p).unwrap();
        let b = m.blocks.iter().find(|b| !b.spec.self_paired).unwrap();
        let nm = b.nm();
        // δn_a = -X_{a,a+nm} / 2 for a = k↑, k↓
        let mut x = Array2::<Complex64>::zeros((2 * nm, 2 * nm));
        for a in 0..2 {
            x[(a, a + nm)] = Complex64::new(-2.0, 0.0);
            x[(a + nm, a)] = Complex64::new(2.0, 0.0);
        }
        let c = channels(b, &x);
        assert!((c.get(Channel::Charge) - 2.0).abs() < 1e-14);
        for ch in [Channel::DeltaK0, Channel::DeltaK, Channel::DeltaS, Channel::SpinT, Channel::SpinZ] {
            assert_eq!(c.get(ch), 0.0, "{ch:?}");
        }
        assert_eq!(c.present(0.01), vec![Channel::Charge]);
    }

    #[test]
    fn free_blocks_match_quasiparticle_combinations() {
        let p = HubbardParams::new(1.0, 0.0, 0.3, 5, 5);
        let m = TiModel::new(&p).unwrap();
        let gs = ground_state_of(&m, &TiOptions::default()).unwrap();
        for (bi, b) in m.blocks.iter().enumerate() {
            let op = momentum_block(&m, &gs.blocks, b.spec.k).unwrap();
            let s = spectrum(&op, &SpectrumOptions { zero_tol: Some(1e-9), ..Default::default() }).unwrap();
            // Free frequencies in these units are (|ξ_a| + |ξ_b|)/4 for
            // pairs of block modes with distinct indices, ξ = ε - μ'.
            let xi: Vec<f64> = b
                .modes
                .iter()
                .map(|md| {
                    let (kx, ky) = m.grid.momentum(md.k);
                    p.band(kx, ky) - p.mu_subtracted()
                })
                .collect();
            let mut want = Vec::new();
            for i in 0..xi.len() {
                for j in (i + 1)..xi.len() {
                    let w = (xi[i].abs() + xi[j].abs()) / 4.0;
                    if w > 1e-9 {
                        want.push(w);
                    }
                }
            }
            // Differences of quasiparticle energies are also frequencies.
            let mut diffs = Vec::new();
            for i in 0..xi.len() {
                for j in 0..xi.len() {
                    let w = (xi[i].abs() - xi[j].abs()) / 4.0;
                    if w > 1e-9 {
                        diffs.push(w);
                    }
                }
            }
            want.extend(diffs);
            want.sort_by(f64::total_cmp);
            let got = s.omegas();
            assert_eq!(got.len(), want.len(), "block {bi}");
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "block {bi}: {g} vs {w}");
            }
        }
    }
}
