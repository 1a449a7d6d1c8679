//! Toy block-based encoder.
//!
//! Pictures are coded in 64x64 CTUs split by a quad-tree down to 8x8 CUs.
//! Each leaf is predicted (four intra directions or integer-pel motion from
//! the previous reconstruction), its pixel-domain residual is quantized with
//! a dead-zone quantizer, and a closed-form rate model stands in for entropy
//! coding. Decisions minimise `D + lambda * R`.
//!
//! Decisions can be constrained by analysis from another encode through
//! [`crate::share::ReusePolicy`].

mod encoder;
mod predict;
pub mod quant;
pub mod rate;
pub mod ratecontrol;
mod recon;
mod search;
mod types;

pub use encoder::{
    colocated_mv, encode_sequence, encode_sequence_with, Candidate, CodedFrame, CuPlan, EncodeOutput, FrameCoder,
    FrameStat, MvSource,
};
pub use predict::{inter_predict, intra_predict};
pub use recon::reconstruct_sequence;
pub use search::{motion_search, SearchArea, SearchResult};
pub use types::*;

#[cfg(test)]
mod tests;
