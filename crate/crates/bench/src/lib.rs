//! Shared fixtures for the kernel benchmarks.

use forge_core::fermion::build_fh;
use forge_core::forge::build_forged;
use forge_core::oracle::{ground_state, GroundState};
use forge_core::{ForgedState, Hamiltonian, SectorBasis, SectorSpec};

/// Half-filled Hubbard chain with `t_m = U = t`.
pub fn hubbard(sites: usize) -> (Hamiltonian, SectorBasis) {
    let h = build_fh(sites, 1.0, 1.0, 1.0).expect("valid chain");
    let half = sites / 2;
    let basis = SectorBasis::new(h.modes(), &SectorSpec::new(half, half)).expect("valid sector");
    (h, basis)
}

/// Ground state and 1-cut forged state of the 4-site chain.
pub fn forged_fixture() -> (Hamiltonian, GroundState, ForgedState) {
    let (h, basis) = hubbard(4);
    let g = ground_state(&h, &basis).expect("ground state");
    let st = build_forged(&h, &g, 1).expect("forged state");
    (h, g, st)
}
