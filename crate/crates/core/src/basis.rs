//! Hard-core bare-state basis of the `M`-excitation sector.
//!
//! Bare states are `M`-element subsets of the `N` dense site indices, listed
//! in lexicographic order of their sorted index tuples. Ranking uses a
//! precomputed table of partial binomial sums, so both directions cost `O(M)`.

use crate::error::{Error, Result};

/// Largest chain the bitmask representation supports.
pub const MAX_SITES: usize = 64;

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// One step of the hop adjacency: moving the excitation at `from` onto the
/// empty site `to` turns the current state into `neighbor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hop {
    pub neighbor: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone)]
pub struct BasisIndex {
    n_sites: usize,
    n_excitations: usize,
    /// Row-major `dim × M` table of occupied sites.
    sites: Vec<u16>,
    masks: Vec<u64>,
    /// `rank_table[i * (N + 1) + v]` = number of subsets whose `i`-th entry is
    /// below `v` given the first `i` entries are fixed below `v`.
    rank_table: Vec<u64>,
}

impl BasisIndex {
    pub fn new(n_sites: usize, n_excitations: usize) -> Result<Self> {
        if n_excitations == 0 {
            return Err(Error::config("n_excitations", "must be at least 1"));
        }
        if n_excitations > n_sites {
            return Err(Error::config(
                "n_excitations",
                format!("{n_excitations} excitations do not fit on {n_sites} sites"),
            ));
        }
        if n_sites > MAX_SITES {
            return Err(Error::config(
                "n_sites",
                format!("at most {MAX_SITES} sites are supported, got {n_sites}"),
            ));
        }
        let dim = binomial(n_sites, n_excitations);
        if dim > u32::MAX as u64 {
            return Err(Error::config("n_excitations", format!("basis of size {dim} is too large")));
        }
        let dim = dim as usize;

        let (n, m) = (n_sites, n_excitations);
        let mut rank_table = vec![0u64; m * (n + 1)];
        for i in 0..m {
            let mut acc = 0;
            for v in 0..=n {
                rank_table[i * (n + 1) + v] = acc;
                if v < n {
                    acc += binomial(n - 1 - v, m - 1 - i);
                }
            }
        }

        let mut sites = Vec::with_capacity(dim * m);
        let mut masks = Vec::with_capacity(dim);
        let mut combo: Vec<usize> = (0..m).collect();
        loop {
            sites.extend(combo.iter().map(|&c| c as u16));
            masks.push(combo.iter().fold(0u64, |acc, &c| acc | (1 << c)));
            // advance to the next combination in lexicographic order
            let Some(pivot) = (0..m).rev().find(|&i| combo[i] < n - m + i) else {
                break;
            };
            combo[pivot] += 1;
            for i in pivot + 1..m {
                combo[i] = combo[i - 1] + 1;
            }
        }
        debug_assert_eq!(masks.len(), dim);

        Ok(Self {
            n_sites,
            n_excitations,
            sites,
            masks,
            rank_table,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    /// Sorted occupied sites of a bare state.
    pub fn state(&self, index: usize) -> &[u16] {
        let m = self.n_excitations;
        &self.sites[index * m..(index + 1) * m]
    }

    /// Occupation bitmask of a bare state (bit `i` set when site `i` is excited).
    pub fn mask(&self, index: usize) -> u64 {
        self.masks[index]
    }

    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    /// Rank of a strictly increasing site tuple; `None` if it is not a valid state.
    pub fn rank(&self, sites: &[usize]) -> Option<usize> {
        if sites.len() != self.n_excitations {
            return None;
        }
        let n = self.n_sites;
        let mut rank = 0u64;
        let mut lower = 0usize;
        for (i, &c) in sites.iter().enumerate() {
            if c < lower || c >= n {
                return None;
            }
            let row = &self.rank_table[i * (n + 1)..(i + 1) * (n + 1)];
            rank += row[c] - row[lower];
            lower = c + 1;
        }
        Some(rank as usize)
    }

    /// Rank of an occupation bitmask.
    pub fn rank_mask(&self, mask: u64) -> Option<usize> {
        if mask.count_ones() as usize != self.n_excitations || (self.n_sites < 64 && mask >> self.n_sites != 0) {
            return None;
        }
        let n = self.n_sites;
        let mut rank = 0u64;
        let mut lower = 0usize;
        let mut rest = mask;
        let mut i = 0;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let row = &self.rank_table[i * (n + 1)..(i + 1) * (n + 1)];
            rank += row[c] - row[lower];
            lower = c + 1;
            i += 1;
        }
        Some(rank as usize)
    }

    /// All states reachable by moving one excitation to an empty site,
    /// ordered by `(from, to)`. There are exactly `M (N - M)` of them.
    pub fn hop_neighbors(&self, index: usize) -> Vec<Hop> {
        let mask = self.masks[index];
        let mut out = Vec::with_capacity(self.n_excitations * (self.n_sites - self.n_excitations));
        for &from in self.state(index) {
            let from = from as usize;
            let without = mask & !(1u64 << from);
            for to in (0..self.n_sites).filter(|&t| mask & (1 << t) == 0) {
                let neighbor = self
                    .rank_mask(without | (1 << to))
                    .expect("hop keeps the excitation count");
                out.push(Hop { neighbor, from, to });
            }
        }
        out
    }
}
