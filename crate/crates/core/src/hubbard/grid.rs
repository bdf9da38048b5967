//! Momentum grid `k = 2π (nx/Lx, ny/Ly)` and its `k ↔ -k` pairing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub lx: usize,
    pub ly: usize,
}

/// One `(k, -k)` pair, or a single self-paired momentum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub k: (usize, usize),
    pub partner: (usize, usize),
    pub self_paired: bool,
}

impl BlockSpec {
    /// Dirac modes in the block: `[k↑, k↓, -k↑, -k↓]`, or `[k↑, k↓]`.
    pub fn modes(&self) -> usize {
        if self.self_paired {
            2
        } else {
            4
        }
    }

    /// Block momenta with their sign relative to `k`.
    pub fn momenta(&self) -> Vec<((usize, usize), f64)> {
        if self.self_paired {
            vec![(self.k, 1.0)]
        } else {
            vec![(self.k, 1.0), (self.partner, -1.0)]
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl MomentumGrid {
    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::InvalidParameter("empty momentum grid".into()));
        }
        Ok(MomentumGrid { lx, ly })
    }

    pub fn len(&self) -> usize {
        self.lx * self.ly
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, k: (usize, usize)) -> bool {
        k.0 < self.lx && k.1 < self.ly
    }

    pub fn check(&self, k: (usize, usize)) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::NotOnGrid(k.0, k.1))
        }
    }

    pub fn momentum(&self, k: (usize, usize)) -> (f64, f64) {
        (2.0 * PI * k.0 as f64 / self.lx as f64, 2.0 * PI * k.1 as f64 / self.ly as f64)
    }

    pub fn partner(&self, k: (usize, usize)) -> (usize, usize) {
        ((self.lx - k.0) % self.lx, (self.ly - k.1) % self.ly)
    }

    pub fn is_self_paired(&self, k: (usize, usize)) -> bool {
        self.partner(k) == k
    }

    /// Order of `k` in the group of lattice translations' characters: the
    /// smallest `g > 0` with `g k ≡ 0`.
    pub fn order(&self, k: (usize, usize)) -> usize {
        let ox = self.lx / gcd(k.0, self.lx);
        let oy = self.ly / gcd(k.1, self.ly);
        ox / gcd(ox, oy) * oy
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ly).flat_map(move |y| (0..self.lx).map(move |x| (x, y)))
    }

    /// One block per `(k, -k)` pair, represented by whichever of the two comes
    /// first in row-major order.
    pub fn blocks(&self) -> Vec<BlockSpec> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for k in self.points() {
            let idx = k.0 + self.lx * k.1;
            if seen[idx] {
                continue;
            }
            let p = self.partner(k);
            seen[idx] = true;
            seen[p.0 + self.lx * p.1] = true;
            out.push(BlockSpec { k, partner: p, self_paired: p == k });
        }
        out
    }

    /// Index into [`MomentumGrid::blocks`] of the block containing `k`.
    pub fn block_of(&self, k: (usize, usize)) -> Result<usize> {
        self.check(k)?;
        self.blocks()
            .iter()
            .position(|b| b.k == k || b.partner == k)
            .ok_or(Error::NotOnGrid(k.0, k.1))
    }

    /// Grid points along `(0,0) → (π,0) → (π,π) → (0,0)`. For odd sizes the
    /// zone boundary is represented by the index `L/2` (rounded down).
    pub fn k_path(&self) -> Vec<(usize, usize)> {
        let hx = self.lx / 2;
        let hy = self.ly / 2;
        let mut path = Vec::new();
        for x in 0..=hx {
            path.push((x, 0));
        }
        for y in 1..=hy {
            path.push((hx, y));
        }
        let steps = hx.max(hy);
        for s in (0..steps).rev() {
            let x = (s * hx + steps / 2) / steps.max(1);
            let y = (s * hy + steps / 2) / steps.max(1);
            if path.last() != Some(&(x, y)) {
                path.push((x, y));
            }
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_is_an_involution() {
        for (lx, ly) in [(3, 3), (4, 6), (5, 2), (31, 31)] {
            let g = MomentumGrid::new(lx, ly).unwrap();
            let mut self_paired = 0;
            for k in g.points() {
                assert_eq!(g.partner(g.partner(k)), k);
                if g.is_self_paired(k) {
                    self_paired += 1;
                }
            }
            let expect = (2 - lx % 2) * (2 - ly % 2);
            assert_eq!(self_paired, expect);
            let modes: usize = g.blocks().iter().map(|b| b.modes()).sum();
            assert_eq!(modes, 2 * g.len());
        }
    }

    #[test]
    fn odd_grid_has_only_origin_self_paired() {
        let g = MomentumGrid::new(5, 7).unwrap();
        let sp: Vec<_> = g.blocks().into_iter().filter(|b| b.self_paired).collect();
        assert_eq!(sp.len(), 1);
        assert_eq!(sp[0].k, (0, 0));
    }

    #[test]
    fn orders() {
        let g = MomentumGrid::new(6, 4).unwrap();
        assert_eq!(g.order((0, 0)), 1);
        assert_eq!(g.order((3, 0)), 2);
        assert_eq!(g.order((2, 2)), 6);
        assert_eq!(g.order((1, 1)), 12);
    }

    #[test]
    fn path_runs_around_the_triangle() {
        let g = MomentumGrid::new(5, 5).unwrap();
        let p = g.k_path();
        assert_eq!(p.first(), Some(&(0, 0)));
        assert_eq!(p.last(), Some(&(0, 0)));
        assert!(p.contains(&(2, 0)) && p.contains(&(2, 2)));
        assert!(matches!(g.check((5, 0)), Err(Error::NotOnGrid(5, 0))));
    }
}
