//! Block cost and memory kernels.
//!
//! Each kernel exists as a scalar reference and, where the geometry allows,
//! as 128-bit and 256-bit vector variants. Tiers are chosen at runtime from
//! detected CPU capabilities through [`Registry`].

mod registry;
pub mod scalar;
mod view;
#[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
mod x86;

pub use registry::{
    kernel_name, parse_kernel_name, CostFn, CostKernels, CpuCaps, Kernel, KernelFn, KernelOp, Registry, Tier,
    TierRequest,
};
pub use scalar::{hadamard4, BITS_PER_SUM};
pub use view::{BlockView, BlockViewMut, ResidualViewMut, BLOCK_HEIGHTS, BLOCK_WIDTHS};

use crate::error::{invalid, Result};

fn check_pair(a: &BlockView<'_>, b: &BlockView<'_>) -> Result<()> {
    if !a.same_shape(b) {
        return Err(invalid!(
            "block mismatch: {}x{}@{} vs {}x{}@{}",
            a.width(),
            a.height(),
            a.bit_depth(),
            b.width(),
            b.height(),
            b.bit_depth()
        ));
    }
    Ok(())
}

/// Sum of absolute differences (scalar reference).
pub fn compute_sad(a: &BlockView<'_>, b: &BlockView<'_>) -> Result<u64> {
    check_pair(a, b)?;
    Ok(scalar::sad(a, b))
}

pub fn satd_8x4(a: &BlockView<'_>, b: &BlockView<'_>) -> Result<u64> {
    check_pair(a, b)?;
    if a.width() != 8 || a.height() != 4 {
        return Err(invalid!("satd_8x4 needs 8x4 blocks, got {}x{}", a.width(), a.height()));
    }
    Ok(scalar::satd_8x4_at(a, b, 0, 0))
}

pub fn satd_supported(width: usize, height: usize) -> bool {
    BLOCK_WIDTHS.contains(&width) && height >= 4 && height.is_multiple_of(4) && height <= 64
}

/// Hadamard-domain cost (scalar reference): 8x4 tiles, or 4x4 tiles for
/// 4-wide blocks.
pub fn compute_satd(a: &BlockView<'_>, b: &BlockView<'_>) -> Result<u64> {
    check_pair(a, b)?;
    if !satd_supported(a.width(), a.height()) {
        return Err(invalid!("satd does not support {}x{}", a.width(), a.height()));
    }
    Ok(scalar::satd(a, b))
}

pub fn block_copy(dst: &mut BlockViewMut<'_>, src: &BlockView<'_>) -> Result<()> {
    check_pair(&dst.as_view(), src)?;
    scalar::block_copy(dst, src);
    Ok(())
}

pub fn block_zero(dst: &mut BlockViewMut<'_>) -> Result<()> {
    scalar::block_zero(dst);
    Ok(())
}

pub fn subtract_res(dst: &mut ResidualViewMut<'_>, a: &BlockView<'_>, b: &BlockView<'_>) -> Result<()> {
    check_pair(a, b)?;
    if dst.width() != a.width() || dst.height() != a.height() {
        return Err(invalid!("residual view {}x{} does not match blocks", dst.width(), dst.height()));
    }
    scalar::subtract_res(dst, a, b);
    Ok(())
}

#[cfg(test)]
mod tests;
