//! Block cost kernels, a toy block-based encoder, and the machinery for
//! sharing encoder analysis across the rungs of an adaptive-bitrate ladder.
//!
//! The crate is `no_std` with `alloc`. The `std` feature (on by default)
//! only switches CPU feature detection from compile-time target features to
//! runtime detection.
//!
//! Layout:
//!
//! * [`kernels`]: SAD, SATD and memory kernels with scalar and vector tiers.
//! * [`frame`]: planar 4:2:0 picture storage.
//! * [`codec`]: the encoder, its rate model, quantizer and rate control.
//! * [`share`]: analysis archives, dyadic scaling and reuse/refinement rules.
//! * [`ladder`]: master selection, sharing DAGs, ladder runs and makespan.
//! * [`metrics`]: PSNR and Bjøntegaard deltas.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_op_in_unsafe_fn)]

extern crate alloc;

pub mod codec;
pub mod error;
pub mod frame;
pub mod kernels;
pub mod ladder;
pub mod metrics;
pub mod share;

pub use error::{Error, Result};
