use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn random_block(rng: &mut ChaCha8Rng, w: usize, h: usize, stride: usize, depth: u8) -> Vec<u16> {
    let max = 1u16 << depth;
    (0..(h - 1) * stride + w).map(|_| rng.gen_range(0..max)).collect()
}

fn view(data: &[u16], w: usize, h: usize, stride: usize, depth: u8) -> BlockView<'_> {
    BlockView::new(data, w, h, stride, depth).unwrap()
}

fn sad_oracle(a: &[u16], b: &[u16], w: usize, h: usize, stride: usize) -> u64 {
    let mut s = 0i64;
    for y in 0..h {
        for x in 0..w {
            s += (a[y * stride + x] as i64 - b[y * stride + x] as i64).abs();
        }
    }
    s as u64
}

/// Plain 2D 4x4 Hadamard with matrix products, per 4x4 quarter.
fn had4x4_abs_sum(res: &[[i64; 4]; 4]) -> i64 {
    const H: [[i64; 4]; 4] = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]];
    let mut total = 0;
    for u in 0..4 {
        for v in 0..4 {
            let mut c = 0;
            for i in 0..4 {
                for j in 0..4 {
                    c += H[u][i] * res[i][j] * H[j][v];
                }
            }
            total += c.abs();
        }
    }
    total
}

fn satd_oracle(a: &[u16], b: &[u16], w: usize, h: usize, stride: usize) -> u64 {
    let mut total = 0u64;
    let tile_w = if w == 4 { 4 } else { 8 };
    for ty in (0..h).step_by(4) {
        for tx in (0..w).step_by(tile_w) {
            let mut tile = 0i64;
            for qx in (0..tile_w).step_by(4) {
                let mut r = [[0i64; 4]; 4];
                for (i, row) in r.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        let idx = (ty + i) * stride + tx + qx + j;
                        *v = a[idx] as i64 - b[idx] as i64;
                    }
                }
                tile += had4x4_abs_sum(&r);
            }
            total += (tile >> 1) as u64;
        }
    }
    total
}

#[test]
fn sad_identity_and_ramp() {
    let a: Vec<u16> = (0..16).collect();
    let z = vec![0u16; 16];
    assert_eq!(compute_sad(&view(&a, 4, 4, 4, 8), &view(&a, 4, 4, 4, 8)).unwrap(), 0);
    assert_eq!(compute_sad(&view(&a, 4, 4, 4, 8), &view(&z, 4, 4, 4, 8)).unwrap(), 120);
}

#[test]
fn sad_random_10bit_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let a = random_block(&mut rng, 16, 16, 24, 10);
        let b = random_block(&mut rng, 16, 16, 24, 10);
        let got = compute_sad(&view(&a, 16, 16, 24, 10), &view(&b, 16, 16, 24, 10)).unwrap();
        assert_eq!(got, sad_oracle(&a, &b, 16, 16, 24));
    }
}

#[test]
fn sad_mismatch_is_invalid_argument() {
    let a = vec![0u16; 64];
    let r = compute_sad(&view(&a, 8, 8, 8, 8), &view(&a, 4, 4, 8, 8));
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
    let r = compute_sad(&view(&a, 8, 8, 8, 8), &view(&a, 8, 8, 8, 10));
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
}

#[test]
fn view_rejects_bad_geometry() {
    let a = vec![0u16; 64];
    assert!(BlockView::new(&a, 8, 8, 4, 8).is_err());
    assert!(BlockView::new(&a, 12, 4, 12, 8).is_err());
    assert!(BlockView::new(&a, 8, 8, 8, 9).is_err());
    assert!(BlockView::new(&a, 16, 8, 16, 8).is_err());
}

#[test]
fn hadamard4_examples() {
    assert_eq!(hadamard4(5, 5, 5, 5), (20, 0, 0, 0));
    assert_eq!(hadamard4(1, 0, 0, 0), (1, 1, 1, 1));
    // d0 = 3 + 7, d1 = -1 + -1, d2 = 3 - 7, d3 = -1 - -1
    let (d0, d1, d2, d3) = hadamard4(1, 2, 3, 4);
    assert_eq!((d0, d2, d1, d3), (10, -4, -2, 0));
}

proptest! {
    #[test]
    fn hadamard4_twice_is_four_times(s in proptest::array::uniform4(-5000i32..5000)) {
        let (a, b, c, d) = hadamard4(s[0], s[1], s[2], s[3]);
        let (a, b, c, d) = hadamard4(a, b, c, d);
        prop_assert_eq!([a, b, c, d], [4 * s[0], 4 * s[1], 4 * s[2], 4 * s[3]]);
    }
}

#[test]
fn satd_8x4_examples() {
    let a = vec![5u16; 32];
    assert_eq!(satd_8x4(&view(&a, 8, 4, 8, 10), &view(&a, 8, 4, 8, 10)).unwrap(), 0);
    let b = vec![4u16; 32];
    assert_eq!(satd_8x4(&view(&a, 8, 4, 8, 10), &view(&b, 8, 4, 8, 10)).unwrap(), 16);
    let c = vec![0u16; 128];
    assert!(satd_8x4(&view(&c, 16, 4, 16, 10), &view(&c, 16, 4, 16, 10)).is_err());
}

#[test]
fn satd_8x4_random_matches_unpacked_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let a = random_block(&mut rng, 8, 4, 8, 10);
        let b = random_block(&mut rng, 8, 4, 8, 10);
        let got = satd_8x4(&view(&a, 8, 4, 8, 10), &view(&b, 8, 4, 8, 10)).unwrap();
        assert_eq!(got, satd_oracle(&a, &b, 8, 4, 8));
    }
}

#[test]
fn satd_extremes_do_not_overflow() {
    let max = vec![1023u16; 64 * 64];
    let zero = vec![0u16; 64 * 64];
    let s = compute_satd(&view(&max, 64, 64, 64, 10), &view(&zero, 64, 64, 64, 10)).unwrap();
    assert_eq!(s, satd_oracle(&max, &zero, 64, 64, 64));
    let s = compute_satd(&view(&zero, 64, 64, 64, 10), &view(&max, 64, 64, 64, 10)).unwrap();
    assert_eq!(s, satd_oracle(&zero, &max, 64, 64, 64));
    let sad = compute_sad(&view(&max, 64, 64, 64, 10), &view(&zero, 64, 64, 64, 10)).unwrap();
    assert_eq!(sad, 64 * 64 * 1023);
}

#[test]
fn satd_tiling() {
    let ones = vec![1u16; 16 * 8];
    let zeros = vec![0u16; 16 * 8];
    let tile = satd_8x4(&view(&ones, 8, 4, 16, 8), &view(&zeros, 8, 4, 16, 8)).unwrap();
    let whole = compute_satd(&view(&ones, 16, 8, 16, 8), &view(&zeros, 16, 8, 16, 8)).unwrap();
    assert_eq!(whole, 4 * tile);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_block(&mut rng, 32, 32, 32, 10);
    let b = random_block(&mut rng, 32, 32, 32, 10);
    let (va, vb) = (view(&a, 32, 32, 32, 10), view(&b, 32, 32, 32, 10));
    let mut sum = 0;
    for y in (0..32).step_by(4) {
        for x in (0..32).step_by(8) {
            sum += satd_8x4(&va.sub(x, y, 8, 4).unwrap(), &vb.sub(x, y, 8, 4).unwrap()).unwrap();
        }
    }
    assert_eq!(compute_satd(&va, &vb).unwrap(), sum);
    assert_eq!(sum, satd_oracle(&a, &b, 32, 32, 32));
}

#[test]
fn satd_geometry_errors() {
    let a = vec![0u16; 64 * 64];
    assert!(compute_satd(&view(&a, 16, 2, 16, 8), &view(&a, 16, 2, 16, 8)).is_err());
    assert_eq!(compute_satd(&view(&a, 64, 64, 64, 8), &view(&a, 64, 64, 64, 8)).unwrap(), 0);
}

#[test]
fn four_wide_satd_variant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for h in [4, 8, 16] {
        let a = random_block(&mut rng, 4, h, 4, 10);
        let b = random_block(&mut rng, 4, h, 4, 10);
        let got = compute_satd(&view(&a, 4, h, 4, 10), &view(&b, 4, h, 4, 10)).unwrap();
        assert_eq!(got, satd_oracle(&a, &b, 4, h, 4));
    }
}

#[test]
fn memory_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let src = random_block(&mut rng, 16, 16, 16, 10);
    let mut dst = vec![0u16; 16 * 16];
    {
        let mut d = BlockViewMut::new(&mut dst, 16, 16, 16, 10).unwrap();
        block_copy(&mut d, &view(&src, 16, 16, 16, 10)).unwrap();
    }
    assert_eq!(compute_sad(&view(&dst, 16, 16, 16, 10), &view(&src, 16, 16, 16, 10)).unwrap(), 0);
    {
        let mut d = BlockViewMut::new(&mut dst, 16, 16, 16, 10).unwrap();
        block_zero(&mut d).unwrap();
    }
    let zero = vec![0u16; 256];
    assert_eq!(compute_sad(&view(&dst, 16, 16, 16, 10), &view(&zero, 16, 16, 16, 10)).unwrap(), 0);

    let mut res = vec![7i16; 256];
    {
        let mut r = ResidualViewMut::new(&mut res, 16, 16, 16).unwrap();
        subtract_res(&mut r, &view(&src, 16, 16, 16, 10), &view(&src, 16, 16, 16, 10)).unwrap();
    }
    assert!(res.iter().all(|&v| v == 0));

    let mut small = vec![0u16; 64];
    let mut d = BlockViewMut::new(&mut small, 8, 8, 8, 10).unwrap();
    assert!(block_copy(&mut d, &view(&src, 16, 16, 16, 10)).is_err());
}

#[test]
fn select_impl_contract() {
    let reg = Registry::detect();
    let k = reg.select_impl("sad_16x16", TierRequest::Exact(Tier::Scalar)).unwrap();
    assert_eq!(k.tier(), Tier::Scalar);
    assert!(matches!(reg.select_impl("no_such", TierRequest::Auto), Err(Error::NotFound(_))));
    assert!(matches!(reg.select_impl("sad_12x12", TierRequest::Auto), Err(Error::NotFound(_))));
    let auto = reg.select_impl("sad_16x16", TierRequest::Auto).unwrap();
    assert_eq!(auto.tier(), reg.caps().best());

    let scalar = Registry::with_caps(CpuCaps::scalar_only());
    assert_eq!(scalar.select_impl("sad_16x16", TierRequest::Auto).unwrap().tier(), Tier::Scalar);
    assert!(matches!(
        scalar.select_impl("sad_16x16", TierRequest::Exact(Tier::Vec256)),
        Err(Error::Capability(_))
    ));
    // 4-wide SATD never has a vector tier
    assert!(matches!(
        reg.select_impl("satd_4x4", TierRequest::Exact(Tier::Vec128)),
        Err(Error::Capability(_))
    ));
}

#[test]
fn registry_names_are_unique() {
    let reg = Registry::detect();
    let names = reg.names();
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), names.len());
    assert!(names.iter().any(|n| n == "satd_32x16"));
    assert!(names.iter().any(|n| n == "subtract_res_64x64"));
}

fn cost_inputs(rng: &mut ChaCha8Rng, w: usize, h: usize, case: usize) -> (Vec<u16>, Vec<u16>) {
    let stride = w + 8;
    let n = (h - 1) * stride + w;
    match case {
        0 => (vec![0; n], vec![0; n]),
        1 => (vec![1023; n], vec![0; n]),
        2 => (vec![0; n], vec![1023; n]),
        3 => {
            let a = (0..n).map(|i| if (i + i / stride).is_multiple_of(2) { 1023 } else { 0 }).collect();
            let b = (0..n).map(|i| if (i + i / stride).is_multiple_of(2) { 0 } else { 1023 }).collect();
            (a, b)
        }
        _ => (random_block(rng, w, h, stride, 10), random_block(rng, w, h, stride, 10)),
    }
}

#[test]
fn every_cost_tier_matches_scalar() {
    let reg = Registry::detect();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for k in reg.kernels().iter().filter(|k| matches!(k.op(), KernelOp::Sad | KernelOp::Satd)) {
        let scalar = reg.select_impl(&k.name(), TierRequest::Exact(Tier::Scalar)).unwrap();
        let (w, h) = (k.width(), k.height());
        for case in 0..40 {
            let (a, b) = cost_inputs(&mut rng, w, h, case);
            let (va, vb) = (view(&a, w, h, w + 8, 10), view(&b, w, h, w + 8, 10));
            assert_eq!(k.cost(&va, &vb).unwrap(), scalar.cost(&va, &vb).unwrap(), "{} {}", k.name(), k.tier());
            if k.op() == KernelOp::Satd {
                assert_eq!(scalar.cost(&va, &vb).unwrap(), satd_oracle(&a, &b, w, h, w + 8));
            }
        }
    }
}

#[test]
fn cost_kernels_follow_best_tier() {
    let ck = CostKernels::detect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (w, h) in [(8, 8), (16, 16), (32, 32), (64, 64), (4, 4), (8, 4)] {
        let a = random_block(&mut rng, w, h, 64, 10);
        let b = random_block(&mut rng, w, h, 64, 10);
        let (va, vb) = (view(&a, w, h, 64, 10), view(&b, w, h, 64, 10));
        assert_eq!(ck.sad(&va, &vb), scalar::sad(&va, &vb));
        assert_eq!(ck.satd(&va, &vb), scalar::satd(&va, &vb));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn cost_symmetry_and_nonnegativity(seed in any::<u64>(), wi in 0usize..5, hi in 1usize..5) {
        let (w, h) = (BLOCK_WIDTHS[wi], [4, 8, 16, 32, 64][hi - 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_block(&mut rng, w, h, w, 10);
        let b = random_block(&mut rng, w, h, w, 10);
        let (va, vb) = (view(&a, w, h, w, 10), view(&b, w, h, w, 10));
        prop_assert_eq!(compute_sad(&va, &vb).unwrap(), compute_sad(&vb, &va).unwrap());
        prop_assert_eq!(compute_satd(&va, &vb).unwrap(), compute_satd(&vb, &va).unwrap());
        prop_assert_eq!(compute_satd(&va, &va).unwrap(), 0);
        prop_assert_eq!(compute_sad(&vb, &vb).unwrap(), 0);
    }
}
