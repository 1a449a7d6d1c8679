//! Closed-form rate model standing in for entropy coding.

use super::types::{CuMode, MotionVector};

pub const SKIP_BITS: u64 = 1;
pub const MERGE_HEADER_BITS: u64 = 2;
pub const INTER_HEADER_BITS: u64 = 3;
pub const INTRA_HEADER_BITS: u64 = 3 + 2;
pub const CBF_BITS: u64 = 1;
pub const SPLIT_FLAG_BITS: u64 = 1;

fn ceil_log2(v: u32) -> u32 {
    if v <= 1 {
        0
    } else {
        32 - (v - 1).leading_zeros()
    }
}

/// Bits for one level: `2 * ceil(log2(|l| + 1)) + 1`.
#[inline]
pub fn level_bits(level: i32) -> u64 {
    u64::from(2 * ceil_log2(level.unsigned_abs() + 1) + 1)
}

/// Residual bits; zero when every level is zero (signalled by the cbf).
pub fn residual_bits(levels: &[i32]) -> u64 {
    if levels.iter().all(|&l| l == 0) {
        0
    } else {
        levels.iter().map(|&l| level_bits(l)).sum()
    }
}

/// Signed Exp-Golomb length.
pub fn se_bits(v: i32) -> u64 {
    let code = if v > 0 { 2 * v.unsigned_abs() - 1 } else { 2 * v.unsigned_abs() };
    let k = 31 - (code + 1).leading_zeros();
    u64::from(2 * k + 1)
}

pub fn mvd_bits(mvd: MotionVector) -> u64 {
    se_bits(mvd.dx) + se_bits(mvd.dy)
}

/// Bits for a leaf CU: mode header, motion vector difference and residual.
/// `mvd` is ignored except for [`CuMode::Inter`].
pub fn rate_model(levels: &[i32], mode: &CuMode, mvd: MotionVector) -> u64 {
    match mode {
        CuMode::Skip(_) => SKIP_BITS,
        CuMode::Merge(_) => MERGE_HEADER_BITS + CBF_BITS + residual_bits(levels),
        CuMode::Inter(_) => INTER_HEADER_BITS + mvd_bits(mvd) + CBF_BITS + residual_bits(levels),
        CuMode::Intra(_) => INTRA_HEADER_BITS + CBF_BITS + residual_bits(levels),
    }
}
