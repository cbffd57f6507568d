//! Statevector ADAPT-VQE with entanglement forging.
//!
//! The crate is organised bottom-up:
//!
//! * [`statevector`] holds dense Jordan–Wigner amplitude vectors and the exact
//!   action of fermionic excitation exponentials on them.
//! * [`fermion`] defines mode tables, the Fermi–Hubbard and shell-model
//!   Hamiltonians, and symmetry-conserving operator pools.
//! * [`oracle`] diagonalises Hamiltonians inside particle-number sectors and is
//!   the exact reference for every metric.
//! * [`schmidt`] analyses bipartitions (singular values, entropy, truncation
//!   infidelity).
//! * [`adapt`] is the plain single-register ADAPT-VQE loop and its metrics.
//! * [`forge`] builds forged states (one or two cuts), keeps their terms
//!   orthogonal, and runs the forged ADAPT loop.
//! * [`resources`] counts CNOTs for Jordan–Wigner excitation exponentials.
//!
//! Basis convention used everywhere: basis index = bitmask of occupied modes,
//! mode `i` is bit `i`, and creation operators act in ascending mode order.

pub mod adapt;
pub mod error;
pub mod fermion;
pub mod forge;
pub mod optimize;
pub mod oracle;
pub mod resources;
pub mod schmidt;
pub mod statevector;
pub mod tolerance;

pub use adapt::{AdaptOptions, AnsatzCircuit, IterationRecord, Metrics, RunSummary};
pub use error::{Error, Result};
pub use fermion::{ExcitationGenerator, Hamiltonian, Mode, ModeKind, ModeTable, SectorSpec, Side, Spin};
pub use forge::{ForgeOptions, ForgedState, LambdaMode};
pub use oracle::{GroundState, SectorBasis};
pub use schmidt::{Bipartition, SchmidtDecomposition};
pub use statevector::{ModePermutation, Statevector};

pub use num_complex::Complex64;
