//! Scalar reference kernels. Every vector tier is checked against these.

use super::view::{BlockView, BlockViewMut, ResidualViewMut};

/// Lane width of the packed-pair SATD arithmetic: two signed lanes share one
/// `u64`, the upper lane starting at this bit.
pub const BITS_PER_SUM: u32 = 32;

pub fn sad(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
    let mut sum = 0u64;
    for y in 0..a.height() {
        let (ra, rb) = (a.row(y), b.row(y));
        for x in 0..a.width() {
            sum += (i32::from(ra[x]) - i32::from(rb[x])).unsigned_abs() as u64;
        }
    }
    sum
}

/// The 4-point butterfly used for both passes of the SATD transform.
#[inline(always)]
pub fn hadamard4(s0: i32, s1: i32, s2: i32, s3: i32) -> (i32, i32, i32, i32) {
    let t0 = s0 + s1;
    let t1 = s0 - s1;
    let t2 = s2 + s3;
    let t3 = s2 - s3;
    (t0 + t2, t1 + t3, t0 - t2, t1 - t3)
}

#[inline(always)]
fn hadamard4_packed(s0: u64, s1: u64, s2: u64, s3: u64) -> (u64, u64, u64, u64) {
    let t0 = s0.wrapping_add(s1);
    let t1 = s0.wrapping_sub(s1);
    let t2 = s2.wrapping_add(s3);
    let t3 = s2.wrapping_sub(s3);
    (t0.wrapping_add(t2), t1.wrapping_add(t3), t0.wrapping_sub(t2), t1.wrapping_sub(t3))
}

/// Per-lane absolute value of a packed pair.
///
/// Builds an all-ones mask in every lane whose sign bit is set, then applies
/// `(a + s) ^ s`. The carry out of a negative low lane restores the borrow it
/// took from the upper lane when the pair was packed.
#[inline(always)]
fn abs2(a: u64) -> u64 {
    let lane_sign_bits = (a >> (BITS_PER_SUM - 1)) & ((1u64 << BITS_PER_SUM) + 1);
    let s = lane_sign_bits.wrapping_mul(u64::from(u32::MAX));
    a.wrapping_add(s) ^ s
}

#[inline(always)]
fn packed_diff(a: &[u16], b: &[u16], x: usize) -> u64 {
    let lo = (i32::from(a[x]) - i32::from(b[x])) as i64 as u64;
    let hi = (i32::from(a[x + 4]) - i32::from(b[x + 4])) as i64 as u64;
    lo.wrapping_add(hi << BITS_PER_SUM)
}

/// SATD of one 8x4 tile. Columns `c` and `c + 4` travel as a packed pair
/// through the row pass and the column pass; the two lane sums are folded
/// and halved at the end.
pub fn satd_8x4_at(a: &BlockView<'_>, b: &BlockView<'_>, x0: usize, y0: usize) -> u64 {
    let mut tmp = [[0u64; 4]; 4];
    for (i, t) in tmp.iter_mut().enumerate() {
        let ra = &a.row(y0 + i)[x0..x0 + 8];
        let rb = &b.row(y0 + i)[x0..x0 + 8];
        let (d0, d1, d2, d3) = hadamard4_packed(
            packed_diff(ra, rb, 0),
            packed_diff(ra, rb, 1),
            packed_diff(ra, rb, 2),
            packed_diff(ra, rb, 3),
        );
        *t = [d0, d1, d2, d3];
    }
    let mut sum = 0u64;
    for i in 0..4 {
        let (a0, a1, a2, a3) = hadamard4_packed(tmp[0][i], tmp[1][i], tmp[2][i], tmp[3][i]);
        sum = sum
            .wrapping_add(abs2(a0))
            .wrapping_add(abs2(a1))
            .wrapping_add(abs2(a2))
            .wrapping_add(abs2(a3));
    }
    (u64::from(sum as u32) + (sum >> BITS_PER_SUM)) >> 1
}

/// SATD of one 4x4 tile: the same row-then-column butterflies on unpacked
/// lanes, halved.
pub fn satd_4x4_at(a: &BlockView<'_>, b: &BlockView<'_>, x0: usize, y0: usize) -> u64 {
    let mut tmp = [[0i32; 4]; 4];
    for (i, t) in tmp.iter_mut().enumerate() {
        let ra = &a.row(y0 + i)[x0..x0 + 4];
        let rb = &b.row(y0 + i)[x0..x0 + 4];
        let d = |k: usize| i32::from(ra[k]) - i32::from(rb[k]);
        let (d0, d1, d2, d3) = hadamard4(d(0), d(1), d(2), d(3));
        *t = [d0, d1, d2, d3];
    }
    let mut sum = 0u64;
    for i in 0..4 {
        let (a0, a1, a2, a3) = hadamard4(tmp[0][i], tmp[1][i], tmp[2][i], tmp[3][i]);
        sum += u64::from(a0.unsigned_abs() + a1.unsigned_abs() + a2.unsigned_abs() + a3.unsigned_abs());
    }
    sum >> 1
}

/// Tiled SATD: 8x4 tiles for widths of 8 and up, 4x4 tiles for 4-wide blocks.
pub fn satd(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
    let mut total = 0u64;
    if a.width() == 4 {
        for y in (0..a.height()).step_by(4) {
            total += satd_4x4_at(a, b, 0, y);
        }
    } else {
        for y in (0..a.height()).step_by(4) {
            for x in (0..a.width()).step_by(8) {
                total += satd_8x4_at(a, b, x, y);
            }
        }
    }
    total
}

pub fn block_copy(dst: &mut BlockViewMut<'_>, src: &BlockView<'_>) {
    for y in 0..src.height() {
        dst.row_mut(y).copy_from_slice(src.row(y));
    }
}

pub fn block_zero(dst: &mut BlockViewMut<'_>) {
    for y in 0..dst.height() {
        dst.row_mut(y).fill(0);
    }
}

pub fn subtract_res(dst: &mut ResidualViewMut<'_>, a: &BlockView<'_>, b: &BlockView<'_>) {
    for y in 0..a.height() {
        let (ra, rb) = (a.row(y), b.row(y));
        for (x, d) in dst.row_mut(y).iter_mut().enumerate() {
            *d = (i32::from(ra[x]) - i32::from(rb[x])) as i16;
        }
    }
}
