//! Populations, occupation moments, Kubo cumulants and entropies of an
//! amplitude state. Sites are addressed by dense index throughout.

mod entropy;

use serde::{Deserialize, Serialize};

use crate::dynamics::AmplitudeState;
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;

pub use entropy::{entropy_per_particle, EntropyMode, InterfaceCut, EIGENVALUE_FLOOR};

/// Whether cumulants are formed per realization and then averaged, or formed
/// once from disorder-averaged moments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CumulantMode {
    #[default]
    PerRealization,
    AveragedMoments,
}

/// `P_m = Σ_{s ∋ m} |a_s|²`.
pub fn site_populations(state: &AmplitudeState) -> Vec<f64> {
    let basis = state.basis();
    let mut pop = vec![0.0; basis.n_sites()];
    for (s, a) in state.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        for &i in basis.state(s) {
            pop[i as usize] += w;
        }
    }
    pop
}

/// First, second and (optionally) third occupation moments.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteMoments {
    n_sites: usize,
    first: Vec<f64>,
    /// Full symmetric `N × N` matrix with `⟨n_i⟩` on the diagonal.
    second: Vec<f64>,
    /// Dense `N³` tensor, filled for every ordering of distinct sites.
    third: Option<Vec<f64>>,
}

impl SiteMoments {
    /// Accumulates moments from the amplitude weights. Third moments need at
    /// least three excitations.
    pub fn from_state(state: &AmplitudeState, with_third: bool) -> Result<Self> {
        let basis = state.basis();
        let (n, m) = (basis.n_sites(), basis.n_excitations());
        if with_third && m < 3 {
            return Err(Error::Capability(format!(
                "third-order moments need at least 3 excitations, sector has {m}"
            )));
        }
        let mut first = vec![0.0; n];
        let mut second = vec![0.0; n * n];
        let mut third = with_third.then(|| vec![0.0; n * n * n]);
        for (s, a) in state.amplitudes().iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let occ = basis.state(s);
            for (x, &i) in occ.iter().enumerate() {
                let i = i as usize;
                first[i] += w;
                for &j in &occ[x + 1..] {
                    second[i * n + j as usize] += w;
                }
                if let Some(t) = third.as_mut() {
                    for (y, &j) in occ.iter().enumerate().skip(x + 1) {
                        for &k in &occ[y + 1..] {
                            t[(i * n + j as usize) * n + k as usize] += w;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            second[i * n + i] = first[i];
            for j in i + 1..n {
                second[j * n + i] = second[i * n + j];
            }
        }
        if let Some(t) = third.as_mut() {
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let v = t[(i * n + j) * n + k];
                        for (a, b, c) in [(i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                            t[(a * n + b) * n + c] = v;
                        }
                    }
                }
            }
        }
        Ok(Self {
            n_sites: n,
            first,
            second,
            third,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn has_third(&self) -> bool {
        self.third.is_some()
    }

    /// `⟨n_i⟩`.
    pub fn first(&self, i: usize) -> f64 {
        self.first[i]
    }

    pub fn populations(&self) -> &[f64] {
        &self.first
    }

    /// `⟨n_i n_j⟩`; equals `⟨n_i⟩` when `i = j`.
    pub fn second(&self, i: usize, j: usize) -> f64 {
        self.second[i * self.n_sites + j]
    }

    /// `⟨n_i n_j n_k⟩`, reducing repeated sites through `n² = n`.
    pub fn third(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        let t = self
            .third
            .as_ref()
            .ok_or_else(|| Error::Capability("third-order moments were not computed".into()))?;
        Ok(if i == j {
            self.second(i, k)
        } else if i == k || j == k {
            self.second(i, j)
        } else {
            t[(i * self.n_sites + j) * self.n_sites + k]
        })
    }

    /// Moments from explicit arrays, e.g. disorder-averaged ones.
    pub fn from_parts(first: Vec<f64>, second: Vec<f64>, third: Option<Vec<f64>>) -> Result<Self> {
        let n = first.len();
        if second.len() != n * n || third.as_ref().is_some_and(|t| t.len() != n * n * n) {
            return Err(Error::Dimension("moment arrays do not match the site count".into()));
        }
        Ok(Self {
            n_sites: n,
            first,
            second,
            third,
        })
    }
}

/// `G⁽²⁾(i, j) = ⟨n_i n_j⟩ - ⟨n_i⟩⟨n_j⟩`.
pub fn g2(moments: &SiteMoments, i: usize, j: usize) -> f64 {
    moments.second(i, j) - moments.first(i) * moments.first(j)
}

/// Mean of `G⁽²⁾(i, j)` over every clean site `i`.
pub fn g2_clean_mean(moments: &SiteMoments, geometry: &LatticeGeometry, j: usize) -> f64 {
    let clean = geometry.clean_indices();
    let n = clean.len() as f64;
    clean.map(|i| g2(moments, i, j)).sum::<f64>() / n
}

/// Third-order Kubo cumulant.
pub fn g3(moments: &SiteMoments, i: usize, j: usize, k: usize) -> Result<f64> {
    let (ni, nj, nk) = (moments.first(i), moments.first(j), moments.first(k));
    Ok(moments.third(i, j, k)?
        - ni * moments.second(j, k)
        - nj * moments.second(k, i)
        - nk * moments.second(i, j)
        + 2.0 * ni * nj * nk)
}

/// Mean of `G⁽³⁾(i, j, k)` over every clean site `k`, for two distinct
/// disordered sites `i` and `j`.
pub fn g3_clean_mean(moments: &SiteMoments, geometry: &LatticeGeometry, i: usize, j: usize) -> Result<f64> {
    if !moments.has_third() {
        return Err(Error::Capability("G3 needs third-order moments (M ≥ 3)".into()));
    }
    let dis = geometry.disordered_indices();
    if !dis.contains(&i) || !dis.contains(&j) || i == j {
        return Err(Error::config("g3", "i and j must be distinct disordered sites"));
    }
    let clean = geometry.clean_indices();
    let n = clean.len() as f64;
    let mut acc = 0.0;
    for k in clean {
        acc += g3(moments, i, j, k)?;
    }
    Ok(acc / n)
}

/// Ordered disordered-site pairs `(i, j)` with `i < j`, as dense indices.
pub fn disordered_pairs(geometry: &LatticeGeometry) -> Vec<(usize, usize)> {
    let dis = geometry.disordered_indices();
    dis.clone()
        .flat_map(|i| dis.clone().filter(move |&j| j > i).map(move |j| (i, j)))
        .collect()
}

/// Half-integer bins of the mean pair label `d = (m_i + m_j)/2` over the
/// disordered pairs, from `1.5` to `N_d - 0.5`.
pub fn distance_bins(geometry: &LatticeGeometry) -> Vec<f64> {
    let nd = geometry.n_disordered();
    if nd < 2 {
        return Vec::new();
    }
    (3..=2 * nd - 1).map(|twice| twice as f64 / 2.0).collect()
}

/// Averages per-pair values (ordered as [`disordered_pairs`]) inside each
/// bin of [`distance_bins`].
pub fn profile_by_mean_distance(geometry: &LatticeGeometry, pair_values: &[f64]) -> Vec<f64> {
    let bins = distance_bins(geometry);
    let mut sum = vec![0.0; bins.len()];
    let mut count = vec![0usize; bins.len()];
    for (&(i, j), v) in disordered_pairs(geometry).iter().zip(pair_values) {
        let twice = (geometry.label(i) + geometry.label(j)) as usize;
        sum[twice - 3] += v;
        count[twice - 3] += 1;
    }
    sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect()
}

/// All cumulant summaries of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantRecord {
    /// Full `N × N` matrix of `G⁽²⁾`.
    pub g2: Vec<f64>,
    /// `G⁽²⁾(j)_clean` for every disordered `j`, left to right.
    pub g2_clean_mean: Vec<f64>,
    /// `G⁽³⁾(i, j)_clean` over [`disordered_pairs`]; empty unless third moments exist.
    pub g3_clean_mean: Vec<f64>,
    /// [`g3_clean_mean`](Self::g3_clean_mean) averaged inside [`distance_bins`].
    pub g3_by_mean_distance: Vec<f64>,
}

impl CumulantRecord {
    pub fn new(moments: &SiteMoments, geometry: &LatticeGeometry) -> Result<Self> {
        let n = moments.n_sites();
        let mut g2m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g2m[i * n + j] = g2(moments, i, j);
            }
        }
        let g2_clean = geometry
            .disordered_indices()
            .map(|j| g2_clean_mean(moments, geometry, j))
            .collect();
        let (g3c, profile) = if moments.has_third() {
            let vals = disordered_pairs(geometry)
                .into_iter()
                .map(|(i, j)| g3_clean_mean(moments, geometry, i, j))
                .collect::<Result<Vec<_>>>()?;
            let profile = profile_by_mean_distance(geometry, &vals);
            (vals, profile)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self {
            g2: g2m,
            g2_clean_mean: g2_clean,
            g3_clean_mean: g3c,
            g3_by_mean_distance: profile,
        })
    }
}
