//! Host-side companion to `abrshare-core`: raw video IO, synthetic
//! sequences, the kernel lab, a threaded ladder executor, TOML ladder
//! configs and report output.

pub mod cli;
pub mod config;
pub mod downscale;
pub mod error;
pub mod exec;
pub mod lab;
pub mod report;
pub mod synth;
pub mod yuv;

pub use abrshare_core::{codec, frame, kernels, ladder, metrics, share};
pub use error::{Error, Result};
