//! SSE4.1 (`Vec128`) and AVX2 (`Vec256`) kernels.
//!
//! All functions here are `unsafe` because they require the matching CPU
//! feature; the registry only hands them out after detection. Geometry has
//! already been validated by the caller.
//!
//! SATD note: the sum of absolute coefficients of a 4x4 Hadamard block is
//! always even (its parity equals that of the coefficient sum, which is 16
//! times the first residual). Halving each 8x4 tile and halving the grand
//! total therefore agree, so the vector paths accumulate every tile and
//! shift once.

#[cfg(target_arch = "x86")]
use core::arch::x86::*;
#[cfg(target_arch = "x86_64")]
use core::arch::x86_64::*;

use super::view::{BlockView, BlockViewMut, ResidualViewMut};

#[inline(always)]
unsafe fn load128(p: *const u16) -> __m128i {
    unsafe { _mm_loadu_si128(p as *const __m128i) }
}

#[inline(always)]
unsafe fn load256(p: *const u16) -> __m256i {
    unsafe { _mm256_loadu_si256(p as *const __m256i) }
}

#[inline]
#[target_feature(enable = "sse4.1")]
unsafe fn hsum_epi32_128(v: __m128i) -> u64 {
    let hi = _mm_unpackhi_epi64(v, v);
    let s = _mm_add_epi32(v, hi);
    let s = _mm_add_epi32(s, _mm_shuffle_epi32(s, 0b01));
    _mm_cvtsi128_si32(s) as u32 as u64
}

#[inline]
#[target_feature(enable = "avx2")]
unsafe fn hsum_epi32_256(v: __m256i) -> u64 {
    let lo = _mm256_castsi256_si128(v);
    let hi = _mm256_extracti128_si256(v, 1);
    unsafe { hsum_epi32_128(_mm_add_epi32(lo, hi)) }
}

#[target_feature(enable = "sse4.1")]
pub unsafe fn sad_vec128(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
    let (w, h) = (a.width(), a.height());
    let (pa, pb) = (a.as_ptr(), b.as_ptr());
    let (sa, sb) = (a.stride(), b.stride());
    let ones = _mm_set1_epi16(1);
    let mut acc = _mm_setzero_si128();
    unsafe {
        if w == 4 {
            for y in (0..h).step_by(2) {
                let va = _mm_unpacklo_epi64(
                    _mm_loadl_epi64(pa.add(y * sa) as *const __m128i),
                    _mm_loadl_epi64(pa.add((y + 1) * sa) as *const __m128i),
                );
                let vb = _mm_unpacklo_epi64(
                    _mm_loadl_epi64(pb.add(y * sb) as *const __m128i),
                    _mm_loadl_epi64(pb.add((y + 1) * sb) as *const __m128i),
                );
                let d = _mm_abs_epi16(_mm_sub_epi16(va, vb));
                acc = _mm_add_epi32(acc, _mm_madd_epi16(d, ones));
            }
        } else {
            for y in 0..h {
                let (ra, rb) = (pa.add(y * sa), pb.add(y * sb));
                for x in (0..w).step_by(8) {
                    let d = _mm_abs_epi16(_mm_sub_epi16(load128(ra.add(x)), load128(rb.add(x))));
                    acc = _mm_add_epi32(acc, _mm_madd_epi16(d, ones));
                }
            }
        }
        hsum_epi32_128(acc)
    }
}

#[target_feature(enable = "avx2")]
pub unsafe fn sad_vec256(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
    let (w, h) = (a.width(), a.height());
    let (pa, pb) = (a.as_ptr(), b.as_ptr());
    let (sa, sb) = (a.stride(), b.stride());
    let ones = _mm256_set1_epi16(1);
    let mut acc = _mm256_setzero_si256();
    unsafe {
        if w == 8 {
            for y in (0..h).step_by(2) {
                let va = _mm256_inserti128_si256(
                    _mm256_castsi128_si256(load128(pa.add(y * sa))),
                    load128(pa.add((y + 1) * sa)),
                    1,
                );
                let vb = _mm256_inserti128_si256(
                    _mm256_castsi128_si256(load128(pb.add(y * sb))),
                    load128(pb.add((y + 1) * sb)),
                    1,
                );
                let d = _mm256_abs_epi16(_mm256_sub_epi16(va, vb));
                acc = _mm256_add_epi32(acc, _mm256_madd_epi16(d, ones));
            }
        } else {
            for y in 0..h {
                let (ra, rb) = (pa.add(y * sa), pb.add(y * sb));
                for x in (0..w).step_by(16) {
                    let d = _mm256_abs_epi16(_mm256_sub_epi16(load256(ra.add(x)), load256(rb.add(x))));
                    acc = _mm256_add_epi32(acc, _mm256_madd_epi16(d, ones));
                }
            }
        }
        hsum_epi32_256(acc)
    }
}

macro_rules! satd_tile_body {
    ($r0:expr, $r1:expr, $r2:expr, $r3:expr,
     $add:ident, $sub:ident, $ulo16:ident, $uhi16:ident, $ulo32:ident, $uhi32:ident,
     $ulo64:ident, $uhi64:ident, $abs:ident, $madd:ident, $add32:ident, $ones:expr, $acc:expr) => {{
        // vertical pass
        let s0 = $add($r0, $r1);
        let d0 = $sub($r0, $r1);
        let s1 = $add($r2, $r3);
        let d1 = $sub($r2, $r3);
        let v0 = $add(s0, s1);
        let v1 = $add(d0, d1);
        let v2 = $sub(s0, s1);
        let v3 = $sub(d0, d1);
        // transpose each 4x4 quarter so columns line up lane-wise
        let t0 = $ulo16(v0, v1);
        let t1 = $uhi16(v0, v1);
        let t2 = $ulo16(v2, v3);
        let t3 = $uhi16(v2, v3);
        let u0 = $ulo32(t0, t2);
        let u1 = $uhi32(t0, t2);
        let u2 = $ulo32(t1, t3);
        let u3 = $uhi32(t1, t3);
        let c0 = $ulo64(u0, u2);
        let c1 = $uhi64(u0, u2);
        let c2 = $ulo64(u1, u3);
        let c3 = $uhi64(u1, u3);
        // horizontal pass
        let s0 = $add(c0, c1);
        let d0 = $sub(c0, c1);
        let s1 = $add(c2, c3);
        let d1 = $sub(c2, c3);
        let h0 = $abs($add(s0, s1));
        let h1 = $abs($add(d0, d1));
        let h2 = $abs($sub(s0, s1));
        let h3 = $abs($sub(d0, d1));
        $acc = $add32($acc, $madd(h0, $ones));
        $acc = $add32($acc, $madd(h1, $ones));
        $acc = $add32($acc, $madd(h2, $ones));
        $acc = $add32($acc, $madd(h3, $ones));
    }};
}

#[inline]
#[target_feature(enable = "sse4.1")]
unsafe fn satd_tiles_128(
    pa: *const u16,
    sa: usize,
    pb: *const u16,
    sb: usize,
    w: usize,
    rows: core::ops::Range<usize>,
    acc: &mut __m128i,
) {
    let ones = _mm_set1_epi16(1);
    let mut a = *acc;
    for y in rows.step_by(4) {
        for x in (0..w).step_by(8) {
            let r = |k: usize| unsafe {
                _mm_sub_epi16(load128(pa.add((y + k) * sa + x)), load128(pb.add((y + k) * sb + x)))
            };
            let (r0, r1, r2, r3) = (r(0), r(1), r(2), r(3));
            satd_tile_body!(
                r0, r1, r2, r3, _mm_add_epi16, _mm_sub_epi16, _mm_unpacklo_epi16,
                _mm_unpackhi_epi16, _mm_unpacklo_epi32, _mm_unpackhi_epi32, _mm_unpacklo_epi64,
                _mm_unpackhi_epi64, _mm_abs_epi16, _mm_madd_epi16, _mm_add_epi32, ones, a
            );
        }
    }
    *acc = a;
}

#[target_feature(enable = "sse4.1")]
pub unsafe fn satd_vec128(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
    let mut acc = _mm_setzero_si128();
    unsafe {
        satd_tiles_128(a.as_ptr(), a.stride(), b.as_ptr(), b.stride(), a.width(), 0..a.height(), &mut acc);
        hsum_epi32_128(acc) >> 1
    }
}

#[target_feature(enable = "avx2")]
pub unsafe fn satd_vec256(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
    let (w, h) = (a.width(), a.height());
    let (pa, pb) = (a.as_ptr(), b.as_ptr());
    let (sa, sb) = (a.stride(), b.stride());
    let ones = _mm256_set1_epi16(1);
    let mut acc = _mm256_setzero_si256();
    let mut tail = _mm_setzero_si128();
    unsafe {
        if w == 8 {
            // Two vertically adjacent 8x4 tiles per register, one per 128-bit lane.
            let paired = h - h % 8;
            for y in (0..paired).step_by(8) {
                let r = |k: usize| {
                    let lo = _mm_sub_epi16(load128(pa.add((y + k) * sa)), load128(pb.add((y + k) * sb)));
                    let hi = _mm_sub_epi16(
                        load128(pa.add((y + 4 + k) * sa)),
                        load128(pb.add((y + 4 + k) * sb)),
                    );
                    _mm256_inserti128_si256(_mm256_castsi128_si256(lo), hi, 1)
                };
                let (r0, r1, r2, r3) = (r(0), r(1), r(2), r(3));
                satd_tile_body!(
                    r0, r1, r2, r3, _mm256_add_epi16, _mm256_sub_epi16, _mm256_unpacklo_epi16,
                    _mm256_unpackhi_epi16, _mm256_unpacklo_epi32, _mm256_unpackhi_epi32,
                    _mm256_unpacklo_epi64, _mm256_unpackhi_epi64, _mm256_abs_epi16,
                    _mm256_madd_epi16, _mm256_add_epi32, ones, acc
                );
            }
            if paired < h {
                satd_tiles_128(pa, sa, pb, sb, 8, paired..h, &mut tail);
            }
        } else {
            for y in (0..h).step_by(4) {
                for x in (0..w).step_by(16) {
                    let r = |k: usize| {
                        _mm256_sub_epi16(
                            load256(pa.add((y + k) * sa + x)),
                            load256(pb.add((y + k) * sb + x)),
                        )
                    };
                    let (r0, r1, r2, r3) = (r(0), r(1), r(2), r(3));
                    satd_tile_body!(
                        r0, r1, r2, r3, _mm256_add_epi16, _mm256_sub_epi16, _mm256_unpacklo_epi16,
                        _mm256_unpackhi_epi16, _mm256_unpacklo_epi32, _mm256_unpackhi_epi32,
                        _mm256_unpacklo_epi64, _mm256_unpackhi_epi64, _mm256_abs_epi16,
                        _mm256_madd_epi16, _mm256_add_epi32, ones, acc
                    );
                }
            }
        }
        (hsum_epi32_256(acc) + hsum_epi32_128(tail)) >> 1
    }
}

#[target_feature(enable = "avx2")]
pub unsafe fn block_copy_vec256(dst: &mut BlockViewMut<'_>, src: &BlockView<'_>) {
    let (w, h) = (src.width(), src.height());
    let (ds, ss) = (dst.stride(), src.stride());
    let (pd, ps) = (dst.as_mut_ptr(), src.as_ptr());
    unsafe {
        for y in 0..h {
            let (rd, rs) = (pd.add(y * ds), ps.add(y * ss));
            if w == 8 {
                _mm_storeu_si128(rd as *mut __m128i, load128(rs));
            } else {
                for x in (0..w).step_by(16) {
                    _mm256_storeu_si256(rd.add(x) as *mut __m256i, load256(rs.add(x)));
                }
            }
        }
    }
}

#[target_feature(enable = "avx2")]
pub unsafe fn block_zero_vec256(dst: &mut BlockViewMut<'_>) {
    let (w, h, ds) = (dst.width(), dst.height(), dst.stride());
    let pd = dst.as_mut_ptr();
    let z = _mm256_setzero_si256();
    unsafe {
        for y in 0..h {
            let rd = pd.add(y * ds);
            if w == 8 {
                _mm_storeu_si128(rd as *mut __m128i, _mm_setzero_si128());
            } else {
                for x in (0..w).step_by(16) {
                    _mm256_storeu_si256(rd.add(x) as *mut __m256i, z);
                }
            }
        }
    }
}

#[target_feature(enable = "avx2")]
pub unsafe fn subtract_res_vec256(dst: &mut ResidualViewMut<'_>, a: &BlockView<'_>, b: &BlockView<'_>) {
    let (w, h) = (a.width(), a.height());
    let ds = dst.stride();
    let pd = dst.as_mut_ptr();
    let (pa, pb, sa, sb) = (a.as_ptr(), b.as_ptr(), a.stride(), b.stride());
    unsafe {
        for y in 0..h {
            let (rd, ra, rb) = (pd.add(y * ds), pa.add(y * sa), pb.add(y * sb));
            if w == 8 {
                _mm_storeu_si128(rd as *mut __m128i, _mm_sub_epi16(load128(ra), load128(rb)));
            } else {
                for x in (0..w).step_by(16) {
                    let d = _mm256_sub_epi16(load256(ra.add(x)), load256(rb.add(x)));
                    _mm256_storeu_si256(rd.add(x) as *mut __m256i, d);
                }
            }
        }
    }
}
