//! Streaming mean and variance plus a bootstrap helper.

use crate::disorder::{rng_from_seed, unit_f64};

/// Welford accumulator over fixed-width samples.
#[derive(Debug, Clone)]
pub struct RunningStats {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningStats {
    pub fn new(width: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; width],
            m2: vec![0.0; width],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.mean.len(), "sample width mismatch");
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    /// Chan et al. merge. The delta form keeps equal means exact.
    pub fn merge(&mut self, other: &RunningStats) {
        assert_eq!(other.mean.len(), self.mean.len(), "sample width mismatch");
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let d = (self.count - 1) as f64;
        self.m2.iter().map(|s| (s / d).max(0.0)).collect()
    }

    /// Standard error of the mean, `sqrt(var / n)`.
    pub fn standard_error(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.variance().into_iter().map(|v| (v / n).sqrt()).collect()
    }
}

/// Bootstrap standard error of the sample mean from `resamples` draws with
/// replacement, seeded deterministically.
pub fn bootstrap_standard_error(samples: &[f64], resamples: usize, seed: u64) -> f64 {
    let n = samples.len();
    if n < 2 || resamples < 2 {
        return 0.0;
    }
    let mut rng = rng_from_seed(seed);
    let mut stats = RunningStats::new(1);
    for _ in 0..resamples {
        let mut acc = 0.0;
        for _ in 0..n {
            let k = ((unit_f64(&mut rng) * n as f64) as usize).min(n - 1);
            acc += samples[k];
        }
        stats.push(&[acc / n as f64]);
    }
    stats.variance()[0].sqrt()
}
