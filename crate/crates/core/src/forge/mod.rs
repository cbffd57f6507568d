//! Forged ansätze: block-product terms, their symmetry images, and the
//! ADAPT loop that grows one circuit at a time.

mod build;
mod engine;
mod state;

pub use build::{
    build_forged, fh_one_cut, lowest_determinants, nsm_one_cut, nsm_two_cut, occupied_modes, single_block,
};
pub use engine::{Engine, Evaluation, ForgeOptions, StopReason};
pub use state::{
    available_distributions, expand_second_layer, symmetry_transform, AngleFactor, Circuit, Derivation, Factor,
    ForgedState, LambdaMode, SecondLayerTerm, SignGroup, Symmetry, Term, TieGroup,
};
