//! Dead-zone scalar quantizer on pixel-domain residuals.

use super::types::MAX_QP;

/// Rounding offset; below one half, which widens the zero bin.
pub const DEADZONE_OFFSET: f64 = 0.4;

/// `max(1, 2^((qp - 4) / 6))`: the step doubles every six QP and is 1 at QP 4.
pub fn qstep(qp: u8) -> f64 {
    let qp = qp.min(MAX_QP);
    libm::pow(2.0, (f64::from(qp) - 4.0) / 6.0).max(1.0)
}

pub fn quantize(residual: i32, qp: u8) -> i32 {
    quantize_with_step(residual, qstep(qp))
}

#[inline]
pub fn quantize_with_step(residual: i32, step: f64) -> i32 {
    let level = libm::floor(f64::from(residual.abs()) / step + DEADZONE_OFFSET) as i32;
    if residual < 0 {
        -level
    } else {
        level
    }
}

pub fn dequantize(level: i32, qp: u8) -> i32 {
    dequantize_with_step(level, qstep(qp))
}

#[inline]
pub fn dequantize_with_step(level: i32, step: f64) -> i32 {
    libm::round(f64::from(level) * step) as i32
}
