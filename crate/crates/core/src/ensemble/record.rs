//! Flat per-realization measurement records.
//!
//! One record holds `times × width` values. Per time the fields are, in
//! order: norm, total, clean-zone and disordered-zone populations, site
//! populations, then the optional entropy and clean-mean `G⁽²⁾` blocks. This
//! prefix is the "summary" that kept realizations retain. Full `G⁽²⁾`
//! (upper triangle), `G⁽³⁾` clean means, their distance profile and, in
//! averaged-moment mode, the raw moments follow.

use serde::{Deserialize, Serialize};

use crate::dynamics::AmplitudeState;
use crate::error::Result;
use crate::lattice::LatticeGeometry;
use crate::observables::{
    disordered_pairs, distance_bins, g2, CumulantMode, CumulantRecord, InterfaceCut, SiteMoments,
};

use super::ObservableSelection;

/// Offsets of the summary prefix; copied into every kept realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryLayout {
    pub n_sites: usize,
    pub n_disordered: usize,
    pub entropy: bool,
    pub g2_clean: bool,
}

impl SummaryLayout {
    pub const NORM: usize = 0;
    pub const TOTAL: usize = 1;
    pub const CLEAN: usize = 2;
    pub const DISORDERED: usize = 3;
    pub const SITES: usize = 4;

    pub fn entropy_offset(&self) -> Option<usize> {
        self.entropy.then_some(Self::SITES + self.n_sites)
    }

    pub fn g2_clean_offset(&self) -> Option<usize> {
        self.g2_clean
            .then_some(Self::SITES + self.n_sites + usize::from(self.entropy))
    }

    pub fn width(&self) -> usize {
        Self::SITES + self.n_sites + usize::from(self.entropy) + if self.g2_clean { self.n_disordered } else { 0 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub summary: SummaryLayout,
    pub n_clean: usize,
    pub third_order: bool,
    pub averaged: bool,
    pub pairs: Vec<(usize, usize)>,
    pub n_bins: usize,
    pub g2_upper: usize,
    pub g3_clean: usize,
    pub g3_profile: usize,
    pub m2_upper: usize,
    pub m3: usize,
    pub width: usize,
}

impl Layout {
    pub fn new(geometry: &LatticeGeometry, sel: &ObservableSelection) -> Self {
        let n = geometry.n_sites();
        let correlations = sel.correlations || sel.third_order;
        let summary = SummaryLayout {
            n_sites: n,
            n_disordered: geometry.n_disordered(),
            entropy: sel.entropy,
            g2_clean: correlations,
        };
        let pairs = if sel.third_order { disordered_pairs(geometry) } else { Vec::new() };
        let n_bins = if sel.third_order { distance_bins(geometry).len() } else { 0 };
        let averaged = sel.cumulant_mode == CumulantMode::AveragedMoments;
        let upper = n * (n + 1) / 2;

        let mut at = summary.width();
        let mut take = |len: usize| {
            let off = at;
            at += len;
            off
        };
        let g2_upper = take(if correlations { upper } else { 0 });
        let g3_clean = take(pairs.len());
        let g3_profile = take(n_bins);
        let m2_upper = take(if averaged && correlations { upper } else { 0 });
        let m3 = take(if averaged { pairs.len() * geometry.n_clean() } else { 0 });
        Self {
            summary,
            n_clean: geometry.n_clean(),
            third_order: sel.third_order,
            averaged,
            pairs,
            n_bins,
            g2_upper,
            g3_clean,
            g3_profile,
            m2_upper,
            m3,
            width: at,
        }
    }

    /// Fills one time slice of a record.
    pub fn measure(
        &self,
        state: &AmplitudeState,
        geometry: &LatticeGeometry,
        cut: Option<&InterfaceCut>,
        sel: &ObservableSelection,
        out: &mut [f64],
    ) -> Result<()> {
        debug_assert_eq!(out.len(), self.width);
        let s = &self.summary;
        let mom = SiteMoments::from_state(state, self.third_order)?;
        let pop = mom.populations();
        out[SummaryLayout::NORM] = state.norm_sqr();
        out[SummaryLayout::TOTAL] = pop.iter().sum();
        out[SummaryLayout::CLEAN] = geometry.clean_indices().map(|i| pop[i]).sum();
        out[SummaryLayout::DISORDERED] = geometry.disordered_indices().map(|i| pop[i]).sum();
        out[SummaryLayout::SITES..SummaryLayout::SITES + s.n_sites].copy_from_slice(pop);
        if let (Some(off), Some(cut)) = (s.entropy_offset(), cut) {
            out[off] = cut.entropy(state, sel.entropy_mode);
        }
        if !s.g2_clean {
            return Ok(());
        }
        let rec = CumulantRecord::new(&mom, geometry)?;
        let off = s.g2_clean_offset().expect("correlations enabled");
        out[off..off + s.n_disordered].copy_from_slice(&rec.g2_clean_mean);

        let n = s.n_sites;
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                out[self.g2_upper + k] = g2(&mom, i, j);
                if self.averaged {
                    out[self.m2_upper + k] = mom.second(i, j);
                }
                k += 1;
            }
        }
        if self.third_order {
            out[self.g3_clean..self.g3_clean + self.pairs.len()].copy_from_slice(&rec.g3_clean_mean);
            out[self.g3_profile..self.g3_profile + self.n_bins].copy_from_slice(&rec.g3_by_mean_distance);
            if self.averaged {
                let mut k = 0;
                for &(i, j) in &self.pairs {
                    for c in geometry.clean_indices() {
                        out[self.m3 + k] = mom.third(i, j, c)?;
                        k += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Index of `(i, j)`, `i ≤ j`, in the row-major upper triangle.
pub(crate) fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}
