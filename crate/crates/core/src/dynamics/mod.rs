//! Initial states, time grids and propagation of the amplitude equations
//! `da/dt = V a` in the `M`-excitation sector.

mod krylov;
mod oracle;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{binomial, BasisIndex};
use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, Zone};

pub use krylov::{evolve, evolve_with, IntegrationStats, IntegratorOptions};
pub use oracle::{dense_oracle_evolve, ORACLE_MAX_DIM};

/// How the excitations are placed at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialStateSpec {
    /// Equal superposition of every bare state inside the disordered zone.
    HalfDickeDisordered,
    /// Same amplitudes as [`InitialStateSpec::HalfDickeDisordered`] for any `M`.
    DickeDisordered,
    /// A single bare state given by site labels in each zone.
    Quenched {
        clean_sites: Vec<i64>,
        disordered_sites: Vec<i64>,
    },
}

impl InitialStateSpec {
    /// Excitations initially in the clean zone.
    pub fn p(&self) -> usize {
        match self {
            InitialStateSpec::Quenched { clean_sites, .. } => clean_sites.len(),
            _ => 0,
        }
    }

    /// Excitations initially in the disordered zone, given `M`.
    pub fn q(&self, n_excitations: usize) -> usize {
        match self {
            InitialStateSpec::Quenched { disordered_sites, .. } => disordered_sites.len(),
            _ => n_excitations,
        }
    }
}

/// Complex amplitudes over the bare-state basis at one instant.
#[derive(Debug, Clone)]
pub struct AmplitudeState {
    basis: Arc<BasisIndex>,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl AmplitudeState {
    pub fn new(basis: Arc<BasisIndex>, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(Self {
            basis,
            amplitudes,
            time,
        })
    }

    pub fn basis(&self) -> &Arc<BasisIndex> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Squared norm, i.e. the probability of still being in the sector.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<Complex64>, time: f64) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            amplitudes,
            time,
        }
    }
}

/// Strictly increasing sample times in units of `1/γ`, starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::config("time", "grid must start at 0"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("time", "grid must be finite and strictly increasing"));
        }
        Ok(Self(times))
    }

    /// `samples` evenly spaced points on `[0, t_max]`.
    pub fn linear(t_max: f64, samples: usize) -> Result<Self> {
        if samples < 2 || !(t_max > 0.0) {
            return Err(Error::config("time", "linear grid needs t_max > 0 and at least 2 samples"));
        }
        let dt = t_max / (samples - 1) as f64;
        let mut t: Vec<f64> = (0..samples).map(|k| k as f64 * dt).collect();
        t[samples - 1] = t_max;
        Self::new(t)
    }

    /// Zero followed by `samples - 1` log-spaced points from `10^-2` to `t_max`.
    pub fn log(t_max: f64, samples: usize) -> Result<Self> {
        const T_MIN: f64 = 1e-2;
        if samples < 3 || !(t_max > T_MIN) {
            return Err(Error::config("time", "log grid needs t_max > 0.01 and at least 3 samples"));
        }
        let (lo, hi) = (T_MIN.ln(), t_max.ln());
        let k = samples - 2;
        let mut t = vec![0.0];
        t.extend((0..=k).map(|i| (lo + (hi - lo) * i as f64 / k as f64).exp()));
        t[samples - 1] = t_max;
        Self::new(t)
    }

    /// Union of two grids; points closer than `1e-12` relative are merged.
    pub fn union(&self, other: &TimeGrid) -> TimeGrid {
        let mut all: Vec<f64> = self.0.iter().chain(&other.0).copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1.0));
        TimeGrid(all)
    }

    /// Linear grid of 41 points joined with the decades below `t_max`.
    pub fn standard(t_max: f64) -> Result<Self> {
        let linear = Self::linear(t_max, 41)?;
        let mut decades = vec![0.0];
        let mut t = 1e-2;
        while t < t_max {
            for f in [1.0, 2.0, 5.0] {
                if t * f < t_max {
                    decades.push(t * f);
                }
            }
            t *= 10.0;
        }
        Ok(linear.union(&Self::new(decades)?))
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.0.last().expect("grid is never empty")
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.0.iter().enumerate() {
            if (s - t).abs() < (self.0[best] - t).abs() {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(value: TimeGrid) -> Self {
        value.0
    }
}

/// Builds the `t = 0` amplitudes for `spec`.
pub fn prepare_initial_state(
    basis: &Arc<BasisIndex>,
    geometry: &LatticeGeometry,
    spec: &InitialStateSpec,
) -> Result<AmplitudeState> {
    if basis.n_sites() != geometry.n_sites() {
        return Err(Error::Dimension(format!(
            "basis has {} sites, geometry has {}",
            basis.n_sites(),
            geometry.n_sites()
        )));
    }
    let m = basis.n_excitations();
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
    match spec {
        InitialStateSpec::HalfDickeDisordered | InitialStateSpec::DickeDisordered => {
            let nd = geometry.n_disordered();
            if m > nd {
                return Err(Error::config(
                    "excitations.m",
                    format!("{m} excitations do not fit in {nd} disordered sites"),
                ));
            }
            let clean_mask: u64 = geometry.clean_indices().fold(0, |acc, i| acc | (1 << i));
            let amp = 1.0 / (binomial(nd, m) as f64).sqrt();
            for (a, &mask) in amps.iter_mut().zip(basis.masks()) {
                if mask & clean_mask == 0 {
                    *a = Complex64::new(amp, 0.0);
                }
            }
        }
        InitialStateSpec::Quenched {
            clean_sites,
            disordered_sites,
        } => {
            if clean_sites.len() + disordered_sites.len() != m {
                return Err(Error::config(
                    "excitations.quench",
                    format!(
                        "p + q = {} + {} does not match M = {m}",
                        clean_sites.len(),
                        disordered_sites.len()
                    ),
                ));
            }
            let mut sites = Vec::with_capacity(m);
            for (labels, zone, field) in [
                (clean_sites, Zone::Clean, "excitations.quench.clean_sites"),
                (disordered_sites, Zone::Disordered, "excitations.quench.disordered_sites"),
            ] {
                for &label in labels {
                    let idx = geometry
                        .index_of(label)
                        .ok_or_else(|| Error::config(field, format!("site {label} is not on the chain")))?;
                    if geometry.zone(idx) != zone {
                        return Err(Error::config(field, format!("site {label} lies in the other zone")));
                    }
                    sites.push(idx);
                }
            }
            sites.sort_unstable();
            if sites.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::config("excitations.quench", "duplicate quench site"));
            }
            let s = basis.rank(&sites).expect("distinct in-range sites form a bare state");
            amps[s] = Complex64::new(1.0, 0.0);
        }
    }
    AmplitudeState::new(Arc::clone(basis), amps, 0.0)
}
