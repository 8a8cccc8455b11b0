//! Chain geometry with a clean zone on the left and a disordered zone on the right.
//!
//! Sites carry integer labels `m`. Clean sites are `-N_c+1 ..= 0`, disordered
//! sites are `1 ..= N_d`, so the interface sits between `m = 0` and `m = 1`.
//! Internally every site is addressed by a dense index `0..N` running left to
//! right; [`LatticeGeometry::label`] and [`LatticeGeometry::index_of`] convert.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Clean,
    Disordered,
}

/// Immutable chain layout and base optical phases.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGeometry {
    n_clean: usize,
    n_disordered: usize,
    xi_clean: f64,
    xi_disordered: f64,
    base_phases: Vec<f64>,
}

impl LatticeGeometry {
    /// Lays out `n_clean + n_disordered` sites.
    ///
    /// The base phase of the leftmost site is 0. Each step whose destination
    /// is a clean site adds `xi_clean`; each step whose destination is a
    /// disordered site adds `xi_disordered`, including the step across the
    /// interface.
    pub fn new(n_clean: usize, n_disordered: usize, xi_clean: f64, xi_disordered: f64) -> Result<Self> {
        if n_clean == 0 {
            return Err(Error::config("n_clean", "must be at least 1"));
        }
        if n_disordered == 0 {
            return Err(Error::config("n_disordered", "must be at least 1"));
        }
        check_spacing("xi_clean", xi_clean)?;
        check_spacing("xi_disordered", xi_disordered)?;

        let n = n_clean + n_disordered;
        let mut base_phases = Vec::with_capacity(n);
        let mut phase = 0.0;
        base_phases.push(phase);
        for idx in 1..n {
            phase += if idx < n_clean { xi_clean } else { xi_disordered };
            base_phases.push(phase);
        }
        Ok(Self {
            n_clean,
            n_disordered,
            xi_clean,
            xi_disordered,
            base_phases,
        })
    }

    pub fn n_clean(&self) -> usize {
        self.n_clean
    }

    pub fn n_disordered(&self) -> usize {
        self.n_disordered
    }

    pub fn n_sites(&self) -> usize {
        self.n_clean + self.n_disordered
    }

    pub fn xi_clean(&self) -> f64 {
        self.xi_clean
    }

    pub fn xi_disordered(&self) -> f64 {
        self.xi_disordered
    }

    /// Base phases indexed by dense site index.
    pub fn base_phases(&self) -> &[f64] {
        &self.base_phases
    }

    /// Site label `m` of a dense index.
    pub fn label(&self, index: usize) -> i64 {
        index as i64 - self.n_clean as i64 + 1
    }

    /// Dense index of a site label, if the label lies on the chain.
    pub fn index_of(&self, label: i64) -> Option<usize> {
        let idx = label + self.n_clean as i64 - 1;
        (0..self.n_sites() as i64).contains(&idx).then_some(idx as usize)
    }

    pub fn zone(&self, index: usize) -> Zone {
        if index < self.n_clean {
            Zone::Clean
        } else {
            Zone::Disordered
        }
    }

    pub fn clean_indices(&self) -> std::ops::Range<usize> {
        0..self.n_clean
    }

    pub fn disordered_indices(&self) -> std::ops::Range<usize> {
        self.n_clean..self.n_sites()
    }

    pub fn labels(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.n_sites()).map(|i| self.label(i))
    }
}

fn check_spacing(field: &str, xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi <= TAU) {
        return Err(Error::config(field, format!("spacing must lie in (0, 2π], got {xi}")));
    }
    Ok(())
}
