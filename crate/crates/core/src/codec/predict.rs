use crate::frame::Plane;

use super::types::{IntraMode, MotionVector};

/// Fills `out` (`size * size`, packed) with the intra prediction for the
/// block at `(x, y)` from already reconstructed neighbours in `recon`.
///
/// Missing neighbours are substituted from the other side, or mid-grey at
/// the picture corner.
pub fn intra_predict(recon: &Plane, x: usize, y: usize, size: usize, mode: IntraMode, bit_depth: u8, out: &mut [u16]) {
    debug_assert!(out.len() >= size * size);
    debug_assert!(x + size <= recon.width() && y + size <= recon.height());
    let mut top = [0u16; 64];
    let mut left = [0u16; 64];
    let (top, left) = (&mut top[..size], &mut left[..size]);
    match (y > 0, x > 0) {
        (true, true) => {
            top.copy_from_slice(&recon.row(y - 1)[x..x + size]);
            for (j, l) in left.iter_mut().enumerate() {
                *l = recon.get(x - 1, y + j);
            }
        }
        (true, false) => {
            top.copy_from_slice(&recon.row(y - 1)[x..x + size]);
            left.fill(top[0]);
        }
        (false, true) => {
            for (j, l) in left.iter_mut().enumerate() {
                *l = recon.get(x - 1, y + j);
            }
            top.fill(left[0]);
        }
        (false, false) => {
            top.fill(1 << (bit_depth - 1));
            left.fill(1 << (bit_depth - 1));
        }
    }

    match mode {
        IntraMode::Dc => {
            let sum: u32 = top.iter().chain(left.iter()).map(|&v| u32::from(v)).sum();
            let dc = ((sum + size as u32) / (2 * size as u32)) as u16;
            out[..size * size].fill(dc);
        }
        IntraMode::Planar => {
            let s = size as u32;
            let shift = s.trailing_zeros() + 1;
            let tr = u32::from(top[size - 1]);
            let bl = u32::from(left[size - 1]);
            for j in 0..size {
                for i in 0..size {
                    let (iu, ju) = (i as u32, j as u32);
                    let v = (s - 1 - iu) * u32::from(left[j])
                        + (iu + 1) * tr
                        + (s - 1 - ju) * u32::from(top[i])
                        + (ju + 1) * bl
                        + s;
                    out[j * size + i] = (v >> shift) as u16;
                }
            }
        }
        IntraMode::Horizontal => {
            for (j, row) in out[..size * size].chunks_exact_mut(size).enumerate() {
                row.fill(left[j]);
            }
        }
        IntraMode::Vertical => {
            for row in out[..size * size].chunks_exact_mut(size) {
                row.copy_from_slice(top);
            }
        }
    }
}

/// Copies the `w`x`h` reference block displaced by `mv` into `out`.
/// The displaced block must lie inside `reference`.
pub fn inter_predict(reference: &Plane, x: usize, y: usize, w: usize, h: usize, mv: MotionVector, out: &mut [u16]) {
    let rx = (x as i64 + i64::from(mv.dx)) as usize;
    let ry = (y as i64 + i64::from(mv.dy)) as usize;
    debug_assert!(rx + w <= reference.width() && ry + h <= reference.height());
    for (j, row) in out[..w * h].chunks_exact_mut(w).enumerate() {
        row.copy_from_slice(&reference.row(ry + j)[rx..rx + w]);
    }
}

/// Chroma displacement for a luma vector (floor of half).
#[inline]
pub(crate) fn chroma_mv(mv: MotionVector) -> MotionVector {
    MotionVector::new(mv.dx >> 1, mv.dy >> 1)
}

/// Whether `mv` keeps a `size` block at `(x, y)` inside a `w`x`h` picture.
#[inline]
pub(crate) fn mv_in_picture(x: usize, y: usize, size: usize, w: usize, h: usize, mv: MotionVector) -> bool {
    let rx = x as i64 + i64::from(mv.dx);
    let ry = y as i64 + i64::from(mv.dy);
    rx >= 0 && ry >= 0 && rx + size as i64 <= w as i64 && ry + size as i64 <= h as i64
}

/// Clamps `mv` componentwise to `[-range, range]` and to the picture.
pub(crate) fn clamp_mv(x: usize, y: usize, size: usize, w: usize, h: usize, range: i32, mv: MotionVector) -> MotionVector {
    let lo_x = (-range).max(-(x as i32));
    let hi_x = range.min((w - x - size) as i32);
    let lo_y = (-range).max(-(y as i32));
    let hi_y = range.min((h - y - size) as i32);
    MotionVector::new(mv.dx.clamp(lo_x, hi_x), mv.dy.clamp(lo_y, hi_y))
}
