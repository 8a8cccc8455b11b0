//! Entanglement entropy across the clean/disordered interface and the
//! binary entropy per particle.
//!
//! Partition A is the clean zone and B the disordered zone. Since `|Ψ⟩` has a
//! fixed number of excitations, `ρ_A` is block diagonal in the number `k` of
//! excitations on the A side. Block `k` equals `Ψ_k Ψ_k†`, where `Ψ_k` is the
//! matrix of amplitudes with rows indexed by A patterns with `k` excitations
//! and columns by B patterns with `M - k`. Its nonzero spectrum is read off
//! whichever of `Ψ_k Ψ_k†` and `Ψ_k† Ψ_k` is smaller.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisIndex;
use crate::dynamics::AmplitudeState;
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;

/// Eigenvalues at or below this are dropped before `λ ln λ`.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// How the norm lost from the excitation sector enters the density matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    /// `ρ = |Ψ⟩⟨Ψ| + (1 - ‖Ψ‖²) |0⟩⟨0|`, so `Tr ρ = 1`.
    #[default]
    GroundCompleted,
    /// `ρ = |Ψ⟩⟨Ψ| / ‖Ψ‖²`.
    Conditional,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    block: usize,
    row: usize,
    col: usize,
}

/// Precomputed split of every bare state into its A and B patterns.
#[derive(Debug, Clone)]
pub struct InterfaceCut {
    basis: Arc<BasisIndex>,
    slots: Vec<Slot>,
    /// `(rows, cols)` of each block `Ψ_k`, indexed by `k`.
    shapes: Vec<(usize, usize)>,
}

impl InterfaceCut {
    pub fn new(basis: Arc<BasisIndex>, geometry: &LatticeGeometry) -> Result<Self> {
        if basis.n_sites() != geometry.n_sites() {
            return Err(Error::Dimension("basis and geometry disagree on the site count".into()));
        }
        let m = basis.n_excitations();
        let a_mask: u64 = geometry.clean_indices().fold(0, |acc, i| acc | (1 << i));
        let mut rows: Vec<HashMap<u64, usize>> = vec![HashMap::new(); m + 1];
        let mut cols: Vec<HashMap<u64, usize>> = vec![HashMap::new(); m + 1];
        let mut slots = Vec::with_capacity(basis.dim());
        // lexicographic basis order makes pattern numbering deterministic
        for &mask in basis.masks() {
            let (a, b) = (mask & a_mask, mask & !a_mask);
            let k = a.count_ones() as usize;
            let nr = rows[k].len();
            let row = *rows[k].entry(a).or_insert(nr);
            let nc = cols[k].len();
            let col = *cols[k].entry(b).or_insert(nc);
            slots.push(Slot { block: k, row, col });
        }
        let shapes = rows.iter().zip(&cols).map(|(r, c)| (r.len(), c.len())).collect();
        Ok(Self { basis, slots, shapes })
    }

    /// Eigenvalues of `ρ_A`, block by block, including zeros.
    pub fn reduced_spectrum(&self, state: &AmplitudeState, mode: EntropyMode) -> Vec<f64> {
        assert_eq!(state.amplitudes().len(), self.basis.dim(), "state does not match the cut");
        let norm = state.norm_sqr();
        let scale = match mode {
            EntropyMode::GroundCompleted => 1.0,
            EntropyMode::Conditional if norm > 0.0 => 1.0 / norm.sqrt(),
            EntropyMode::Conditional => 0.0,
        };
        let mut blocks: Vec<DMatrix<Complex64>> = self
            .shapes
            .iter()
            .map(|&(r, c)| DMatrix::zeros(r, c))
            .collect();
        for (slot, a) in self.slots.iter().zip(state.amplitudes()) {
            blocks[slot.block][(slot.row, slot.col)] = a * scale;
        }

        let mut spectrum = Vec::new();
        for (k, psi) in blocks.iter().enumerate() {
            if psi.is_empty() {
                continue;
            }
            let gram = if psi.nrows() <= psi.ncols() {
                psi * psi.adjoint()
            } else {
                psi.adjoint() * psi
            };
            let mut eig: Vec<f64> = if gram.nrows() == 1 {
                vec![gram[(0, 0)].re]
            } else {
                gram.symmetric_eigenvalues().iter().copied().collect()
            };
            if k == 0 && mode == EntropyMode::GroundCompleted {
                // the all-ground configuration lives in the empty-A, empty-B slot
                debug_assert_eq!(eig.len(), 1);
                eig[0] += (1.0 - norm).max(0.0);
            }
            spectrum.extend(eig);
        }
        if mode == EntropyMode::GroundCompleted && self.shapes.first().is_none_or(|s| s.0 == 0) {
            spectrum.push((1.0 - norm).max(0.0));
        }
        spectrum
    }

    /// `S_A = -Tr ρ_A ln ρ_A` in nats.
    pub fn entropy(&self, state: &AmplitudeState, mode: EntropyMode) -> f64 {
        von_neumann(&self.reduced_spectrum(state, mode))
    }
}

pub(crate) fn von_neumann(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > EIGENVALUE_FLOOR)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Binary occupation entropy divided by the mean occupation `p`.
/// `None` when `p = 0`, where the ratio is undefined.
pub fn entropy_per_particle(p: f64) -> Option<f64> {
    if !(p > 0.0) {
        return None;
    }
    let p = p.min(1.0);
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    Some((h(p) + h(1.0 - p)) / p)
}
