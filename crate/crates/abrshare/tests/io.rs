use abrshare::downscale::downscale_dyadic;
use abrshare::frame::{Frame, Plane};
use abrshare::synth::{gen_synthetic, SynthKind};
use abrshare::yuv::{frame_count, read_frames, read_yuv, write_frames, write_yuv, RawVideoSpec};
use abrshare::Error;
use proptest::prelude::*;

fn frame_from(w: usize, h: usize, depth: u8, f: impl Fn(usize, usize, usize) -> u16) -> Frame {
    let plane = |p: usize, pw: usize, ph: usize| {
        let data = (0..pw * ph).map(|i| f(p, i % pw, i / pw)).collect();
        Plane::from_vec(pw, ph, depth, data).unwrap()
    };
    Frame::from_planes(plane(0, w, h), plane(1, w / 2, h / 2), plane(2, w / 2, h / 2), depth, 0).unwrap()
}

#[test]
fn yuv_round_trip_8_and_10_bit() {
    for depth in [8u8, 10] {
        let max = (1u16 << depth) - 1;
        let frames: Vec<Frame> = (0..3)
            .map(|t| frame_from(16, 8, depth, |p, x, y| ((x * 7 + y * 13 + p * 31 + t * 5) as u16 * 37) % (max + 1)))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.yuv");
        write_yuv(&frames, &path).unwrap();
        let expect_len = 3 * 16 * 8 * 3 / 2 * if depth == 8 { 1 } else { 2 };
        assert_eq!(std::fs::metadata(&path).unwrap().len(), expect_len as u64);
        let back = read_yuv(&RawVideoSpec::new(&path, 16, 8, depth)).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in frames.iter().zip(&back) {
            assert_eq!(a.planes().map(|p| p.data().to_vec()), b.planes().map(|p| p.data().to_vec()));
        }
    }
}

#[test]
fn ten_bit_samples_are_little_endian() {
    let frame = frame_from(2, 2, 10, |_, _, _| 0x0123);
    let mut bytes = Vec::new();
    write_frames(&mut bytes, &[frame]).unwrap();
    assert_eq!(&bytes[..2], &[0x23, 0x01]);
}

#[test]
fn frame_count_from_file_size() {
    assert_eq!(frame_count(2 * 6144, 64, 64, 8).unwrap(), 2);
    assert_eq!(frame_count(2 * 12288, 64, 64, 10).unwrap(), 2);
    assert!(matches!(frame_count(6144 + 100, 64, 64, 8), Err(Error::Format(_))));
}

#[test]
fn truncated_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.yuv");
    std::fs::write(&path, vec![0u8; 6144 + 17]).unwrap();
    assert!(matches!(read_yuv(&RawVideoSpec::new(&path, 64, 64, 8)), Err(Error::Format(_))));
    let mut short: &[u8] = &[0u8; 100];
    assert!(read_frames(&mut short, 64, 64, 8, Some(1)).is_err());
}

#[test]
fn static_frames_are_identical() {
    let frames = gen_synthetic(SynthKind::Static, 32, 16, 4, 7, 8).unwrap();
    for f in &frames[1..] {
        assert_eq!(f.y.data(), frames[0].y.data());
        assert_eq!(f.u.data(), frames[0].u.data());
    }
}

#[test]
fn pan_shifts_by_its_velocity() {
    let (w, h) = (32, 16);
    let frames = gen_synthetic(SynthKind::Pan { dx: 2, dy: 1 }, w, h, 3, 7, 8).unwrap();
    for t in 0..2 {
        for y in 0..h {
            for x in 0..w {
                assert_eq!(frames[t + 1].y.get(x, y), frames[t].y.get((x + 2) % w, (y + 1) % h));
            }
        }
    }
}

#[test]
fn synthetic_is_deterministic() {
    for kind in SynthKind::STANDARD {
        let a = gen_synthetic(kind, 32, 32, 3, 99, 10).unwrap();
        let b = gen_synthetic(kind, 32, 32, 3, 99, 10).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.y.data() == y.y.data() && x.v.data() == y.v.data()), "{kind}");
        assert!(a[0].y.data().iter().all(|&s| s < 1024));
    }
    assert!(gen_synthetic(SynthKind::Static, 31, 32, 1, 0, 8).is_err());
}

#[test]
fn synth_kind_parses() {
    assert_eq!("pan:3,-1".parse::<SynthKind>().unwrap(), SynthKind::Pan { dx: 3, dy: -1 });
    assert_eq!("static".parse::<SynthKind>().unwrap(), SynthKind::Static);
    assert!("wobble".parse::<SynthKind>().is_err());
}

#[test]
fn downscale_constant_and_checkerboard() {
    let flat = frame_from(8, 8, 8, |_, _, _| 77);
    let half = &downscale_dyadic(&[flat]).unwrap()[0];
    assert_eq!((half.width, half.height), (4, 4));
    assert!(half.y.data().iter().all(|&s| s == 77));

    let checker = frame_from(8, 8, 8, |_, x, y| if (x + y) % 2 == 0 { 0 } else { 2 });
    let half = &downscale_dyadic(&[checker]).unwrap()[0];
    assert!(half.y.data().iter().all(|&s| s == 1));
}

#[test]
fn downscale_odd_size_is_rejected() {
    let odd = Frame::blank(6, 5, 8, 0);
    assert!(downscale_dyadic(&[odd]).is_err());
}

proptest! {
    #[test]
    fn downscale_matches_box_filter(seed in any::<u64>(), depth in prop_oneof![Just(8u8), Just(10u8)]) {
        let max = 1u64 << depth;
        let f = frame_from(16, 8, depth, |p, x, y| {
            ((seed ^ (p as u64 * 1_000_003 + x as u64 * 7919 + y as u64 * 104_729)).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 40) as u16 % max as u16
        });
        let half = &downscale_dyadic(std::slice::from_ref(&f)).unwrap()[0];
        for (src, dst) in f.planes().into_iter().zip(half.planes()) {
            for y in 0..dst.height() {
                for x in 0..dst.width() {
                    let at = |dx: usize, dy: usize| {
                        u32::from(src.get((2 * x + dx).min(src.width() - 1), (2 * y + dy).min(src.height() - 1)))
                    };
                    let expect = (at(0, 0) + at(1, 0) + at(0, 1) + at(1, 1) + 2) / 4;
                    prop_assert_eq!(u32::from(dst.get(x, y)), expect);
                }
            }
        }
    }
}
