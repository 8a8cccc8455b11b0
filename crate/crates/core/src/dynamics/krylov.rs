//! Adaptive Krylov exponential stepping.
//!
//! Each step builds an `m`-dimensional Arnoldi basis of the current vector,
//! exponentiates the small Hessenberg matrix and accepts the step when the
//! a-posteriori error estimate of the truncated Krylov expansion stays below
//! `tolerance × step`. Grid samples that fall inside an accepted step are read
//! off the same Arnoldi basis, so steps never have to land on grid points.
//! Only matrix-vector products with the sparse generator are needed.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{AmplitudeState, TimeGrid};
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Allowed growth of the absolute amplitude error per unit time.
    pub tolerance: f64,
    /// Largest Krylov subspace dimension.
    pub krylov_dim: usize,
    /// Rejected step attempts tolerated before giving up.
    pub max_rejections: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            krylov_dim: 30,
            max_rejections: 20,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub steps: usize,
    pub rejections: usize,
    pub matvecs: usize,
    /// Sum of accepted local error estimates.
    pub error_estimate: f64,
}

/// Samples the solution of `da/dt = V a` at every grid time not earlier than
/// the state's own time.
pub fn evolve(
    state: &AmplitudeState,
    coupling: &CouplingMatrix,
    grid: &TimeGrid,
    tolerance: f64,
) -> Result<Vec<AmplitudeState>> {
    evolve_with(state, coupling, grid, &IntegratorOptions::with_tolerance(tolerance)).map(|(s, _)| s)
}

pub fn evolve_with(
    state: &AmplitudeState,
    coupling: &CouplingMatrix,
    grid: &TimeGrid,
    opts: &IntegratorOptions,
) -> Result<(Vec<AmplitudeState>, IntegrationStats)> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::config("tolerance", "must be positive"));
    }
    let n = coupling.dim();
    if state.amplitudes().len() != n {
        return Err(Error::Dimension(format!(
            "state of dimension {} against generator of dimension {n}",
            state.amplitudes().len()
        )));
    }

    let mut stats = IntegrationStats::default();
    let mut out = Vec::with_capacity(grid.len());
    let targets: Vec<f64> = grid.times().iter().copied().filter(|&t| t >= state.time()).collect();
    let Some(&t_end) = targets.last() else {
        return Ok((out, stats));
    };

    let tol = opts.tolerance;
    let m = opts.krylov_dim.clamp(1, n);
    let anorm = coupling.norm_inf().max(f64::MIN_POSITIVE);
    let breakdown_tol = 1e-13 * anorm.max(1.0);
    let roundoff = anorm * f64::EPSILON;
    // steps shorter than this cannot make progress in double precision
    let min_step = 1e-10 * t_end.abs().max(1.0 / anorm).max(f64::MIN_POSITIVE);

    let mut w = state.amplitudes().to_vec();
    let mut t_now = state.time();
    let mut next = 0;

    // Arnoldi workspace: m + 1 basis vectors
    let mut basis = vec![Complex64::new(0.0, 0.0); (m + 1) * n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];

    let mut beta = norm(&w);
    // initial step from the a-priori bound of the truncated expansion
    let fact = ((m + 1) as f64 / std::f64::consts::E).powi(m as i32 + 1) * (2.0 * std::f64::consts::PI * (m + 1) as f64).sqrt();
    let mut t_new = if beta > 0.0 && m < n {
        (1.0 / anorm) * ((fact * tol) / (4.0 * beta * anorm)).powf(1.0 / m as f64)
    } else {
        t_end - t_now
    };
    t_new = round_step(t_new);

    loop {
        while next < targets.len() && targets[next] <= t_now {
            out.push(state.with_amplitudes(w.clone(), targets[next]));
            next += 1;
        }
        if next == targets.len() {
            break;
        }
        if beta == 0.0 {
            // nothing left to propagate
            for &t in &targets[next..] {
                out.push(state.with_amplitudes(w.clone(), t));
            }
            break;
        }

        stats.steps += 1;
        let remaining = t_end - t_now;
        let mut t_step = remaining.min(t_new);
        if t_step < min_step && t_step < remaining {
            return Err(Error::Integration {
                time: t_now,
                achieved: stats.error_estimate / (t_now - state.time()).max(f64::MIN_POSITIVE),
                tolerance: tol,
            });
        }

        // Arnoldi with modified Gram-Schmidt
        let mut h = DMatrix::<Complex64>::zeros(m + 2, m + 2);
        for (b, x) in basis[..n].iter_mut().zip(&w) {
            *b = x / beta;
        }
        let mut dim = m;
        let mut happy = false;
        for j in 0..m {
            let (done, rest) = basis.split_at_mut((j + 1) * n);
            coupling.apply(&done[j * n..], &mut scratch);
            stats.matvecs += 1;
            for i in 0..=j {
                let vi = &done[i * n..(i + 1) * n];
                let hij = dot(vi, &scratch);
                h[(i, j)] = hij;
                for (p, v) in scratch.iter_mut().zip(vi) {
                    *p -= hij * v;
                }
            }
            let s = norm(&scratch);
            if s < breakdown_tol {
                // invariant subspace: the projection is exact
                dim = j + 1;
                happy = true;
                t_step = remaining;
                break;
            }
            h[(j + 1, j)] = Complex64::new(s, 0.0);
            for (b, p) in rest[..n].iter_mut().zip(&scratch) {
                *b = p / s;
            }
        }

        let mut avnorm = 0.0;
        if !happy {
            h[(m + 1, m)] = Complex64::new(1.0, 0.0);
            coupling.apply(&basis[m * n..(m + 1) * n], &mut scratch);
            stats.matvecs += 1;
            avnorm = norm(&scratch);
        }
        let mx = if happy { dim } else { m + 2 };
        let small = h.view((0, 0), (mx, mx)).into_owned();

        let mut rejections = 0;
        let (f, err_loc, order) = loop {
            let f = (&small * Complex64::new(t_step, 0.0)).exp();
            if happy {
                break (f, breakdown_tol * t_step, 1.0 / m as f64);
            }
            let phi1 = (beta * f[(m, 0)]).norm();
            let phi2 = (beta * f[(m + 1, 0)] * avnorm).norm();
            let (err, order) = if phi1 > 10.0 * phi2 {
                (phi2, 1.0 / m as f64)
            } else if phi1 > phi2 {
                (phi1 * phi2 / (phi1 - phi2), 1.0 / m as f64)
            } else {
                (phi1, 1.0 / (m as f64 - 1.0).max(1.0))
            };
            if err <= 1.2 * t_step * tol {
                break (f, err, order);
            }
            if rejections >= opts.max_rejections || t_step < min_step {
                return Err(Error::Integration {
                    time: t_now,
                    achieved: err / t_step,
                    tolerance: tol,
                });
            }
            t_step = round_step(0.9 * t_step * (t_step * tol / err).powf(order));
            rejections += 1;
            stats.rejections += 1;
        };

        let used = if happy { dim } else { m + 1 };
        // dense output for grid points strictly inside the step
        let t_next = t_now + t_step;
        while next < targets.len() && targets[next] < t_next {
            let tau = targets[next] - t_now;
            let fg = (&small * Complex64::new(tau, 0.0)).exp();
            let v = combine(&basis, n, used, beta, |i| fg[(i, 0)]);
            out.push(state.with_amplitudes(v, targets[next]));
            next += 1;
        }

        w = combine(&basis, n, used, beta, |i| f[(i, 0)]);
        beta = norm(&w);
        t_now = if t_step == remaining { t_end } else { t_next };
        stats.error_estimate += err_loc.max(roundoff);
        t_new = round_step(0.9 * t_step * (t_step * tol / err_loc.max(f64::MIN_POSITIVE)).powf(order));
        if happy {
            t_new = t_new.max(t_end - t_now);
        }
    }
    Ok((out, stats))
}

/// `beta × Σ_i coeff(i) v_i` over the first `used` Arnoldi vectors.
fn combine(
    basis: &[Complex64],
    n: usize,
    used: usize,
    beta: f64,
    coeff: impl Fn(usize) -> Complex64,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..used {
        let c = coeff(i) * beta;
        for (o, v) in out.iter_mut().zip(&basis[i * n..(i + 1) * n]) {
            *o += c * v;
        }
    }
    out
}

/// Rounds a step up to two significant digits.
fn round_step(t: f64) -> f64 {
    if !(t.is_finite() && t > 0.0) {
        return t;
    }
    let s = 10f64.powf(t.log10().floor() - 1.0);
    (t / s).ceil() * s
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
