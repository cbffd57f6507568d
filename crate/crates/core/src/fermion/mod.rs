//! Mode tables, model Hamiltonians and generator pools.

mod fh;
mod generator;
mod hamiltonian;
mod modes;
mod nsm;
mod pool;

pub use fh::build_fh;
pub use generator::ExcitationGenerator;
pub use hamiltonian::Hamiltonian;
pub use modes::{parity_phase, Mode, ModeKind, ModeTable, SectorKey, SectorSpec, Side, Spin};
pub use nsm::build_nsm;
pub use pool::build_pool;
