//! CNOT counts of Jordan–Wigner excitation exponentials.
//!
//! Convention: a one-body generator expands into 2 Pauli strings, a two-body
//! one into 8. A string of weight `w` costs `2(w − 1)` CNOTs with a staircase.
//! The weight counts the acted qubits plus the Z chain strictly between each
//! sorted index pair. A two-body generator whose pairs share a mode is a hop
//! conditioned on that mode's occupation: 4 strings, weight = the three acted
//! qubits plus the chain strictly between the two hopping modes, not counting
//! the shared one.

use std::collections::HashMap;

use crate::adapt::AnsatzCircuit;
use crate::fermion::ExcitationGenerator;
use crate::forge::ForgedState;

pub fn generator_cnots(gen: &ExcitationGenerator) -> u64 {
    match *gen {
        ExcitationGenerator::OneBody { r, s } => {
            let w = r.abs_diff(s) as u64 + 1;
            2 * 2 * (w - 1)
        }
        ExcitationGenerator::TwoBody { p, q, r, s } if gen.shared_mode().is_some() => {
            let m = gen.shared_mode().expect("checked");
            let a = if p == m { q } else { p };
            let b = if r == m { s } else { r };
            let (lo, hi) = (a.min(b), a.max(b));
            let chain = (hi - lo - 1) as u64 - u64::from(m > lo && m < hi);
            let w = 3 + chain;
            4 * 2 * (w - 1)
        }
        ExcitationGenerator::TwoBody { p, q, r, s } => {
            let mut i = [p, q, r, s];
            i.sort_unstable();
            let w = 4 + (i[1] - i[0] - 1) as u64 + (i[3] - i[2] - 1) as u64;
            8 * 2 * (w - 1)
        }
    }
}

/// Cached counts under the staircase convention.
#[derive(Clone, Debug, Default)]
pub struct CnotModel {
    cache: HashMap<ExcitationGenerator, u64>,
}

impl CnotModel {
    pub const CONVENTION: &'static str = "jw-staircase";

    pub fn count(&mut self, gen: &ExcitationGenerator) -> u64 {
        *self.cache.entry(*gen).or_insert_with(|| generator_cnots(gen))
    }
}

pub fn ops_cnots(ops: &[ExcitationGenerator]) -> u64 {
    ops.iter().map(generator_cnots).sum()
}

pub fn circuit_cnots(circuit: &AnsatzCircuit) -> u64 {
    circuit.ops.iter().map(|(g, _)| generator_cnots(g)).sum()
}

/// Deepest simulated circuit of a forged (or single-block) state.
pub fn max_circuit_cnots(state: &ForgedState) -> u64 {
    state
        .circuits
        .iter()
        .map(|c| ops_cnots(&state.groups[c.group].ops))
        .max()
        .unwrap_or(0)
}

/// Count for a local generator once its modes are mapped to global indices.
pub fn global_cnots(gen: &ExcitationGenerator, block: &[usize]) -> u64 {
    gen.map_modes(block).map_or(0, |g| generator_cnots(&g))
}
