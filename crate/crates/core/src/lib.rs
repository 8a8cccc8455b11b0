//! Open-system multi-excitation dynamics of a one-dimensional atomic chain
//! coupled to a waveguide, split into a clean and a disordered zone.

pub mod basis;
pub mod coupling;
pub mod disorder;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod observables;

pub use basis::BasisIndex;
pub use coupling::{CouplingMatrix, HopPattern, PhysicalParams};
pub use disorder::{DisorderRealization, DisorderScope};
pub use dynamics::{AmplitudeState, InitialStateSpec, TimeGrid};
pub use ensemble::{
    diff_metric, run_ensemble, sweep, EnsembleConfig, EnsembleResult, ObservableSelection, SweepAxis, SystemConfig,
};
pub use error::{Error, Result};
pub use lattice::{LatticeGeometry, Zone};
pub use observables::{CumulantMode, CumulantRecord, EntropyMode, InterfaceCut, SiteMoments};
