//! Pronunciation-variant graph compiler and lattice-free MMI toolkit.
//!
//! The pipeline ties an L2 phoneme inventory into an L1 inventory by
//! articulatory features, expands pronunciations through phonological
//! transfer rules into variant acceptors, compiles them to HMM-state
//! graphs over context-dependent classes, and computes the LF-MMI
//! objective with exact gradients. A toy trainer demonstrates that the
//! objective learns the spoken variant from multi-candidate supervision.
//!
//! Numeric code is generic over the scalar via [`num::Real`]; the `*64`
//! aliases below are the defaults used by the CLI and tests.

pub mod error;
pub mod graph;
pub mod inventory;
pub mod lexicon;
pub mod lfmmi;
pub mod num;
pub mod rules;
pub mod symbols;
pub mod train;
pub mod wfst;

pub use error::{Error, Result};

pub type Fst64 = wfst::Fst<f64>;
pub type Fst32 = wfst::Fst<f32>;
pub type CompiledGraph64 = graph::CompiledGraph<f64>;
pub type CompiledGraph32 = graph::CompiledGraph<f32>;
pub type AcousticScores64 = lfmmi::AcousticScores<f64>;
pub type AcousticScores32 = lfmmi::AcousticScores<f32>;
pub type ToyModel64 = train::ToyModel<f64>;
pub type ToyModel32 = train::ToyModel<f32>;
