use serde::{Deserialize, Serialize};

use crate::dynamics::TimeGrid;
use crate::observables::entropy_per_particle;

use super::record::{upper_index, Layout, SummaryLayout};
use super::stats::RunningStats;
use super::{EnsembleConfig, SystemConfig};

/// Disorder-averaged values on the time grid, `times × width`, row major.
/// Standard errors are `NaN` where no per-realization sample exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub width: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Series {
    fn gather(times: usize, width: usize, stats: &RunningStats, stride: usize, offset: usize) -> Self {
        let se = stats.standard_error();
        let mut mean = Vec::with_capacity(times * width);
        let mut stderr = Vec::with_capacity(times * width);
        for t in 0..times {
            let at = t * stride + offset;
            mean.extend_from_slice(&stats.mean()[at..at + width]);
            stderr.extend_from_slice(&se[at..at + width]);
        }
        Self { width, mean, stderr }
    }

    pub fn times(&self) -> usize {
        self.mean.len() / self.width.max(1)
    }

    pub fn mean_at(&self, t: usize) -> &[f64] {
        &self.mean[t * self.width..(t + 1) * self.width]
    }

    pub fn stderr_at(&self, t: usize) -> &[f64] {
        &self.stderr[t * self.width..(t + 1) * self.width]
    }

    /// Time trace of one column.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.times()).map(|t| self.mean[t * self.width + c]).collect()
    }

    pub fn value(&self, t: usize, c: usize) -> f64 {
        self.mean[t * self.width + c]
    }
}

/// Summary series of one realization, kept on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: u64,
    pub seed: u64,
    pub layout: SummaryLayout,
    /// `times × layout.width()`.
    pub values: Vec<f64>,
}

impl RealizationRecord {
    fn row(&self, t: usize) -> &[f64] {
        let w = self.layout.width();
        &self.values[t * w..(t + 1) * w]
    }

    pub fn norm(&self, t: usize) -> f64 {
        self.row(t)[SummaryLayout::NORM]
    }

    pub fn total(&self, t: usize) -> f64 {
        self.row(t)[SummaryLayout::TOTAL]
    }

    pub fn site_populations(&self, t: usize) -> &[f64] {
        &self.row(t)[SummaryLayout::SITES..SummaryLayout::SITES + self.layout.n_sites]
    }

    pub fn entropy(&self, t: usize) -> Option<f64> {
        self.layout.entropy_offset().map(|o| self.row(t)[o])
    }

    pub fn g2_clean_mean(&self, t: usize) -> Option<&[f64]> {
        self.layout
            .g2_clean_offset()
            .map(|o| &self.row(t)[o..o + self.layout.n_disordered])
    }
}

/// Disorder-averaged observables of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub system: SystemConfig,
    pub ensemble: EnsembleConfig,
    pub grid: TimeGrid,
    /// Site labels `m` by dense index.
    pub site_labels: Vec<i64>,
    pub n_clean: usize,
    pub n_realizations: u64,
    pub disorder_stream: String,
    pub wall_time_seconds: f64,

    pub norm: Series,
    pub total_population: Series,
    pub clean_population: Series,
    pub disordered_population: Series,
    pub site_populations: Series,
    /// `S_i` from the averaged populations, `None` where the population is zero.
    pub site_entropy: Vec<Option<f64>>,
    pub interface_entropy: Option<Series>,
    /// Full `N × N` matrix per time.
    pub g2: Option<Series>,
    /// One column per disordered site.
    pub g2_clean_mean: Option<Series>,
    /// One column per entry of [`pair_labels`](Self::pair_labels).
    pub g3_clean_mean: Option<Series>,
    /// One column per entry of [`distance_bins`](Self::distance_bins).
    pub g3_by_mean_distance: Option<Series>,
    pub pair_labels: Vec<(i64, i64)>,
    pub distance_bins: Vec<f64>,
    pub realizations: Vec<RealizationRecord>,
}

impl EnsembleResult {
    pub fn n_sites(&self) -> usize {
        self.site_labels.len()
    }

    /// Grid index of `t`, which must be a grid point up to `1e-9` relative.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let k = self.grid.nearest(t);
        let s = self.grid.times()[k];
        ((s - t).abs() <= 1e-9 * t.abs().max(1.0)).then_some(k)
    }

    /// Labels of the disordered sites, left to right.
    pub fn disordered_labels(&self) -> &[i64] {
        &self.site_labels[self.n_clean..]
    }

    pub fn clean_labels(&self) -> &[i64] {
        &self.site_labels[..self.n_clean]
    }
}

pub(crate) struct Finalize<'a> {
    pub system: &'a SystemConfig,
    pub ensemble: &'a EnsembleConfig,
    pub layout: &'a Layout,
    pub site_labels: Vec<i64>,
    pub pair_labels: Vec<(i64, i64)>,
    pub distance_bins: Vec<f64>,
    pub wall_time_seconds: f64,
}

impl Finalize<'_> {
    pub fn build(self, stats: &RunningStats, realizations: Vec<RealizationRecord>) -> EnsembleResult {
        let l = self.layout;
        let s = &l.summary;
        let grid = self.system.grid.clone();
        let times = grid.len();
        let w = l.width;
        let n = s.n_sites;
        let one = |off| Series::gather(times, 1, stats, w, off);
        let sites = Series::gather(times, n, stats, w, SummaryLayout::SITES);
        let site_entropy = sites.mean.iter().map(|&p| entropy_per_particle(p)).collect();

        let mut g2 = None;
        let mut g2_clean = None;
        if s.g2_clean {
            let upper = Series::gather(times, n * (n + 1) / 2, stats, w, l.g2_upper);
            let clean_off = s.g2_clean_offset().expect("correlations enabled");
            let mut clean = Series::gather(times, s.n_disordered, stats, w, clean_off);
            let mut full = expand_upper(&upper, n);
            if l.averaged {
                let m2 = Series::gather(times, n * (n + 1) / 2, stats, w, l.m2_upper);
                for t in 0..times {
                    let p = sites.mean_at(t);
                    for i in 0..n {
                        for j in 0..n {
                            full.mean[t * n * n + i * n + j] = m2.value(t, upper_index(n, i, j)) - p[i] * p[j];
                        }
                    }
                    for (c, j) in (l.n_clean..n).enumerate() {
                        let acc: f64 = (0..l.n_clean).map(|i| full.mean[t * n * n + i * n + j]).sum();
                        clean.mean[t * s.n_disordered + c] = acc / l.n_clean as f64;
                    }
                }
                full.stderr.fill(f64::NAN);
                clean.stderr.fill(f64::NAN);
            }
            g2 = Some(full);
            g2_clean = Some(clean);
        }

        let (mut g3c, mut g3p) = (None, None);
        if l.third_order {
            let mut pairs = Series::gather(times, l.pairs.len(), stats, w, l.g3_clean);
            let mut profile = Series::gather(times, l.n_bins, stats, w, l.g3_profile);
            if l.averaged {
                let m2 = Series::gather(times, n * (n + 1) / 2, stats, w, l.m2_upper);
                let m3 = Series::gather(times, l.pairs.len() * l.n_clean, stats, w, l.m3);
                for t in 0..times {
                    let p = sites.mean_at(t);
                    let sec = |a: usize, b: usize| {
                        if a == b {
                            p[a]
                        } else {
                            m2.value(t, upper_index(n, a, b))
                        }
                    };
                    for (q, &(i, j)) in l.pairs.iter().enumerate() {
                        let mut acc = 0.0;
                        for k in 0..l.n_clean {
                            acc += m3.value(t, q * l.n_clean + k) - p[i] * sec(j, k) - p[j] * sec(k, i) - p[k] * sec(i, j)
                                + 2.0 * p[i] * p[j] * p[k];
                        }
                        pairs.mean[t * l.pairs.len() + q] = acc / l.n_clean as f64;
                    }
                    let mut sum = vec![0.0; l.n_bins];
                    let mut cnt = vec![0usize; l.n_bins];
                    for (q, &(a, b)) in self.pair_labels.iter().enumerate() {
                        let bin = (a + b) as usize - 3;
                        sum[bin] += pairs.mean[t * l.pairs.len() + q];
                        cnt[bin] += 1;
                    }
                    for b in 0..l.n_bins {
                        profile.mean[t * l.n_bins + b] = sum[b] / cnt[b] as f64;
                    }
                }
                pairs.stderr.fill(f64::NAN);
                profile.stderr.fill(f64::NAN);
            }
            g3c = Some(pairs);
            g3p = Some(profile);
        }

        EnsembleResult {
            system: self.system.clone(),
            ensemble: self.ensemble.clone(),
            grid,
            site_labels: self.site_labels,
            n_clean: l.n_clean,
            n_realizations: stats.count(),
            disorder_stream: crate::disorder::DISORDER_STREAM.to_string(),
            wall_time_seconds: self.wall_time_seconds,
            norm: one(SummaryLayout::NORM),
            total_population: one(SummaryLayout::TOTAL),
            clean_population: one(SummaryLayout::CLEAN),
            disordered_population: one(SummaryLayout::DISORDERED),
            site_populations: sites,
            site_entropy,
            interface_entropy: s.entropy_offset().map(one),
            g2,
            g2_clean_mean: g2_clean,
            g3_clean_mean: g3c,
            g3_by_mean_distance: g3p,
            pair_labels: self.pair_labels,
            distance_bins: self.distance_bins,
            realizations,
        }
    }
}

fn expand_upper(upper: &Series, n: usize) -> Series {
    let times = upper.times();
    let mut mean = vec![0.0; times * n * n];
    let mut stderr = vec![0.0; times * n * n];
    for t in 0..times {
        for i in 0..n {
            for j in 0..n {
                let k = upper_index(n, i, j);
                mean[t * n * n + i * n + j] = upper.value(t, k);
                stderr[t * n * n + i * n + j] = upper.stderr_at(t)[k];
            }
        }
    }
    Series {
        width: n * n,
        mean,
        stderr,
    }
}
