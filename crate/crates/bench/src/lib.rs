//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;
use std::sync::Arc;

use wqed_core::coupling::single_excitation_coupling;
use wqed_core::dynamics::prepare_initial_state;
use wqed_core::{
    AmplitudeState, BasisIndex, CouplingMatrix, DisorderRealization, HopPattern, InitialStateSpec, LatticeGeometry,
    PhysicalParams,
};

pub struct Fixture {
    pub geometry: LatticeGeometry,
    pub pattern: Arc<HopPattern>,
    pub coupling: CouplingMatrix,
    pub initial: AmplitudeState,
}

/// Half-Dicke start in an `n_clean + n_disordered` chain at `ξ = π/4`,
/// `w̄ = 0.8π`, seed 7.
pub fn fixture(n_clean: usize, n_disordered: usize, m: usize) -> Fixture {
    let geometry = LatticeGeometry::new(n_clean, n_disordered, PI / 4.0, PI / 4.0).unwrap();
    let basis = Arc::new(BasisIndex::new(geometry.n_sites(), m).unwrap());
    let pattern = Arc::new(HopPattern::new(&basis));
    let disorder = DisorderRealization::sample(&geometry, 0.8 * PI, 7).unwrap();
    let g = single_excitation_coupling(&disorder, &PhysicalParams::reciprocal());
    let coupling = CouplingMatrix::assemble(pattern.clone(), &g).unwrap();
    let initial = prepare_initial_state(&basis, &geometry, &InitialStateSpec::HalfDickeDisordered).unwrap();
    Fixture {
        geometry,
        pattern,
        coupling,
        initial,
    }
}
