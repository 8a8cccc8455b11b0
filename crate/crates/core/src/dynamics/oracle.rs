//! Dense reference propagator: `a(t) = exp(V t) a(0)` with the matrix
//! exponential computed by Taylor expansion plus scaling and squaring.
//! Shares nothing with the Krylov path beyond dense matrix products.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{AmplitudeState, TimeGrid};
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

pub const ORACLE_MAX_DIM: usize = 5000;

pub fn dense_oracle_evolve(
    state: &AmplitudeState,
    coupling: &CouplingMatrix,
    grid: &TimeGrid,
) -> Result<Vec<AmplitudeState>> {
    let n = coupling.dim();
    if n > ORACLE_MAX_DIM {
        return Err(Error::OracleTooLarge {
            dim: n,
            cap: ORACLE_MAX_DIM,
        });
    }
    let v = coupling.to_dense();
    let a0 = DVector::from_column_slice(state.amplitudes());
    let t0 = state.time();
    Ok(grid
        .times()
        .iter()
        .filter(|&&t| t >= t0)
        .map(|&t| {
            let a = if t == t0 { a0.clone() } else { expm_taylor(&v, t - t0) * &a0 };
            state.with_amplitudes(a.as_slice().to_vec(), t)
        })
        .collect())
}

/// `exp(a t)`.
fn expm_taylor(a: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    // scale until the norm is at most 1/2
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * Complex64::new(t / 2f64.powi(squarings), 0.0);

    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
        if term.iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisIndex;
    use crate::coupling::{assemble_generator, single_excitation_coupling, PhysicalParams};
    use crate::disorder::DisorderRealization;
    use crate::lattice::LatticeGeometry;
    use std::sync::Arc;

    #[test]
    fn scalar_decay() {
        let geo = LatticeGeometry::new(1, 1, 1.0, 1.0).unwrap();
        let basis = Arc::new(BasisIndex::new(2, 2).unwrap());
        let v = assemble_generator(
            &basis,
            &single_excitation_coupling(&DisorderRealization::clean(&geo), &PhysicalParams::reciprocal()),
        )
        .unwrap();
        // both atoms excited: the only state decays at rate γ in amplitude
        let s = AmplitudeState::new(basis, vec![Complex64::new(1.0, 0.0)], 0.0).unwrap();
        let out = dense_oracle_evolve(&s, &v, &TimeGrid::linear(3.0, 4).unwrap()).unwrap();
        for st in out {
            assert!((st.amplitudes()[0].re - (-st.time()).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn identity_at_time_zero() {
        let geo = LatticeGeometry::new(2, 2, 0.4, 0.4).unwrap();
        let basis = Arc::new(BasisIndex::new(4, 2).unwrap());
        let v = assemble_generator(
            &basis,
            &single_excitation_coupling(&DisorderRealization::clean(&geo), &PhysicalParams::reciprocal()),
        )
        .unwrap();
        let amps: Vec<Complex64> = (0..6).map(|k| Complex64::new(k as f64, -1.0)).collect();
        let s = AmplitudeState::new(basis, amps.clone(), 0.0).unwrap();
        let out = dense_oracle_evolve(&s, &v, &TimeGrid::new(vec![0.0]).unwrap()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].amplitudes(), &amps[..]);
    }

    #[test]
    fn taylor_matches_diagonal_exponential() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(-3.0, 1.0),
            Complex64::new(-0.1, -2.0),
            Complex64::new(0.0, 5.0),
        ]));
        let e = expm_taylor(&a, 7.0);
        for i in 0..3 {
            assert!((e[(i, i)] - (a[(i, i)] * 7.0).exp()).norm() < 1e-11);
        }
    }

    #[test]
    fn refuses_large_dimension() {
        let geo = LatticeGeometry::new(20, 20, 1.0, 1.0).unwrap();
        let basis = Arc::new(BasisIndex::new(40, 3).unwrap());
        let v = assemble_generator(
            &basis,
            &single_excitation_coupling(&DisorderRealization::clean(&geo), &PhysicalParams::reciprocal()),
        )
        .unwrap();
        let s = AmplitudeState::new(basis.clone(), vec![Complex64::new(0.0, 0.0); basis.dim()], 0.0).unwrap();
        let err = dense_oracle_evolve(&s, &v, &TimeGrid::new(vec![0.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::OracleTooLarge { dim: 9880, cap: 5000 }));
    }
}
