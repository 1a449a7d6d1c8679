use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::frame::{Frame, Plane};
use crate::kernels::CostKernels;
use crate::share::{RefineConfig, ReuseLevel, ReusePolicy};

/// Smooth texture with some noise, 10-bit.
fn base_plane(w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Plane::filled(w, h, 0);
    for y in 0..h {
        for x in 0..w {
            let fx = x as f64 / 9.0;
            let fy = y as f64 / 13.0;
            let v = 512.0 + 200.0 * libm::sin(fx) * libm::cos(fy) + 80.0 * libm::sin((x + 2 * y) as f64 / 5.0);
            p.set(x, y, (v as i32 + rng.gen_range(-6..=6)).clamp(0, 1023) as u16);
        }
    }
    p
}

fn chroma_of(p: &Plane) -> Plane {
    let mut c = Plane::filled(p.width() / 2, p.height() / 2, 0);
    for y in 0..c.height() {
        for x in 0..c.width() {
            c.set(x, y, (p.get(2 * x, 2 * y) / 2 + 256).min(1023));
        }
    }
    c
}

fn frame_from(y: Plane, index: usize) -> Frame {
    let u = chroma_of(&y);
    let v = chroma_of(&y);
    Frame::from_planes(y, u, v, 10, index).unwrap()
}

fn static_seq(w: usize, h: usize, n: usize) -> Vec<Frame> {
    let b = base_plane(w, h, 7);
    (0..n).map(|i| frame_from(b.clone(), i)).collect()
}

fn pan_seq(w: usize, h: usize, n: usize, dx: usize, dy: usize) -> Vec<Frame> {
    let b = base_plane(w, h, 11);
    (0..n)
        .map(|t| {
            let mut p = Plane::filled(w, h, 0);
            for y in 0..h {
                for x in 0..w {
                    p.set(x, y, b.get((x + dx * t) % w, (y + dy * t) % h));
                }
            }
            frame_from(p, t)
        })
        .collect()
}

fn noisy_seq(w: usize, h: usize, n: usize) -> Vec<Frame> {
    let b = base_plane(w, h, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    (0..n)
        .map(|t| {
            let mut p = b.clone();
            for v in p.data_mut() {
                *v = (i32::from(*v) + rng.gen_range(-20..=20)).clamp(0, 1023) as u16;
            }
            frame_from(p, t)
        })
        .collect()
}

fn skip_area(f: &FrameAnalysis) -> usize {
    let mut a = 0;
    for c in &f.ctus {
        c.for_each_leaf(0, 0, &mut |_, _, n, m| {
            if matches!(m, CuMode::Skip(_)) {
                a += n.size() * n.size();
            }
        });
    }
    a
}

#[test]
fn static_content_is_intra_then_skip() {
    let frames = static_seq(128, 64, 10);
    let out = encode_sequence(&frames, &EncodeConfig::cqp(30), None, &ReusePolicy::off()).unwrap();
    assert_eq!(out.analysis.frames[0].slice_type, SliceType::I);
    for f in &out.analysis.frames[1..] {
        assert_eq!(f.slice_type, SliceType::P);
        assert!(skip_area(f) * 10 >= 9 * 128 * 64, "skip area {}", skip_area(f));
    }
    assert!(out.frames[1].bits * 20 < out.frames[0].bits);
}

#[test]
fn bits_fall_as_qp_rises() {
    let frames = noisy_seq(64, 64, 3);
    let mut last = u64::MAX;
    let mut last_psnr = f64::INFINITY;
    for qp in [22u8, 26, 30, 34, 38] {
        let out = encode_sequence(&frames, &EncodeConfig::cqp(qp), None, &ReusePolicy::off()).unwrap();
        assert!(out.stats.bits <= last, "qp {qp}: {} > {last}", out.stats.bits);
        assert!(out.stats.psnr_y < last_psnr);
        last = out.stats.bits;
        last_psnr = out.stats.psnr_y;
    }
}

#[test]
fn pan_is_tracked_by_motion() {
    let frames = pan_seq(128, 64, 3, 2, 0);
    let out = encode_sequence(&frames, &EncodeConfig::cqp(26), None, &ReusePolicy::off()).unwrap();
    let mut matched = 0;
    let mut total = 0;
    for c in &out.analysis.frames[2].ctus {
        c.for_each_leaf(0, 0, &mut |_, _, n, m| {
            let a = n.size() * n.size();
            total += a;
            if m.mv() == Some(MotionVector::new(2, 0)) {
                matched += a;
            }
        });
    }
    // The right edge wraps around and cannot be predicted by motion.
    assert!(matched * 10 >= total * 8, "{matched}/{total}");
}

#[test]
fn decoder_reproduces_encoder_reconstruction() {
    let mut frames = pan_seq(128, 72, 4, 1, 1);
    frames.extend(noisy_seq(128, 72, 2).into_iter().map(|mut f| {
        f.index += 4;
        f
    }));
    for cfg in [EncodeConfig::cqp(24), EncodeConfig::cqp(37), EncodeConfig { gop: 3, ..EncodeConfig::cvbr(200.0, 1.5) }] {
        let out = encode_sequence(&frames, &cfg, None, &ReusePolicy::off()).unwrap();
        let dec = reconstruct_sequence(&out.analysis, &out.levels).unwrap();
        assert_eq!(dec.len(), out.recon.len());
        for (a, b) in dec.iter().zip(&out.recon) {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn decoder_rejects_bad_level_counts() {
    let frames = static_seq(64, 64, 2);
    let out = encode_sequence(&frames, &EncodeConfig::cqp(30), None, &ReusePolicy::off()).unwrap();
    let mut levels = out.levels.clone();
    levels[0].push(0);
    assert!(reconstruct_sequence(&out.analysis, &levels).is_err());
    levels[0].truncate(3);
    assert!(reconstruct_sequence(&out.analysis, &levels).is_err());
}

#[test]
fn rejects_bad_input() {
    let frames = static_seq(64, 64, 1);
    assert!(encode_sequence(&[], &EncodeConfig::cqp(30), None, &ReusePolicy::off()).is_err());
    assert!(encode_sequence(&frames, &EncodeConfig::cqp(52), None, &ReusePolicy::off()).is_err());
    let odd = vec![Frame::blank(60, 64, 10, 0)];
    assert!(encode_sequence(&odd, &EncodeConfig::cqp(30), None, &ReusePolicy::off()).is_err());
}

#[test]
fn single_candidate_costs_one_evaluation() {
    let frames = static_seq(64, 64, 1);
    let cfg = EncodeConfig::cqp(30);
    let mut fc = FrameCoder::new(CostKernels::detect(), &cfg, &frames[0], None, SliceType::I, 30);
    let (mode, cost) = fc.rdo_decide_cu(0, 0, 2, &[Candidate::Intra(IntraMode::Vertical)]).unwrap();
    assert_eq!(mode, CuMode::Intra(IntraMode::Vertical));
    assert!(cost > 0.0);
    assert_eq!(fc.evaluations(), 1);
}

#[test]
fn zero_distortion_skip_wins() {
    let frames = static_seq(64, 64, 2);
    let cfg = EncodeConfig::cqp(30);
    let mut fc = FrameCoder::new(CostKernels::detect(), &cfg, &frames[1], Some(&frames[0]), SliceType::P, 30);
    let cands = Candidate::standalone(SliceType::P, 4);
    let (mode, cost) = fc.rdo_decide_cu(16, 16, 2, &cands).unwrap();
    assert_eq!(mode, CuMode::Skip(MotionVector::ZERO));
    assert_eq!(cost, cfg.lambda(30) * 2.0);
}

#[test]
fn ties_go_to_the_first_candidate() {
    let flat = Frame::blank(64, 64, 10, 0);
    let cfg = EncodeConfig::cqp(30);
    let mut fc = FrameCoder::new(CostKernels::detect(), &cfg, &flat, None, SliceType::I, 30);
    let a = fc.rdo_decide_cu(8, 8, 3, &[Candidate::Intra(IntraMode::Planar), Candidate::Intra(IntraMode::Dc)]).unwrap();
    let b = fc.rdo_decide_cu(8, 8, 3, &[Candidate::Intra(IntraMode::Dc), Candidate::Intra(IntraMode::Planar)]).unwrap();
    assert_eq!(a.0, CuMode::Intra(IntraMode::Planar));
    assert_eq!(b.0, CuMode::Intra(IntraMode::Dc));
    assert_eq!(a.1, b.1);
}

#[test]
fn off_level_ignores_shared_analysis() {
    let frames = pan_seq(64, 64, 3, 1, 0);
    let cfg = EncodeConfig::cqp(30);
    let alone = encode_sequence(&frames, &cfg, None, &ReusePolicy::off()).unwrap();
    let other = encode_sequence(&frames, &EncodeConfig::cqp(22), None, &ReusePolicy::off()).unwrap();
    let with = encode_sequence(&frames, &cfg, Some(&other.analysis), &ReusePolicy::off()).unwrap();
    assert_eq!(alone.analysis, with.analysis);
    assert_eq!(alone.levels, with.levels);
    assert_eq!(alone.stats, with.stats);
}

#[test]
fn full_reuse_of_own_analysis_reproduces_the_encode() {
    let frames = pan_seq(128, 64, 4, 2, 1);
    let cfg = EncodeConfig::cqp(30);
    let alone = encode_sequence(&frames, &cfg, None, &ReusePolicy::off()).unwrap();
    let policy = ReusePolicy::new(ReuseLevel::Full, RefineConfig::OFF);
    let again = encode_sequence(&frames, &cfg, Some(&alone.analysis), &policy).unwrap();
    assert_eq!(again.analysis, alone.analysis);
    assert_eq!(again.stats.bits, alone.stats.bits);
    assert!(again.stats.mode_evaluations * 5 < alone.stats.mode_evaluations);
}

#[test]
fn structure_levels_agree() {
    let frames = pan_seq(64, 64, 3, 1, 0);
    let master = encode_sequence(&frames, &EncodeConfig::cqp(22), None, &ReusePolicy::off()).unwrap();
    let cfg = EncodeConfig::cqp(34);
    let r = RefineConfig::OFF;
    let a = encode_sequence(&frames, &cfg, Some(&master.analysis), &ReusePolicy::new(ReuseLevel::Structure, r)).unwrap();
    let b = encode_sequence(&frames, &cfg, Some(&master.analysis), &ReusePolicy::new(ReuseLevel::StructureExtended, r))
        .unwrap();
    assert_eq!(a.analysis, b.analysis);
    assert_eq!(a.stats, b.stats);
}

#[test]
fn shared_analysis_must_match_geometry() {
    let frames = static_seq(64, 64, 2);
    let other = encode_sequence(&static_seq(128, 64, 2), &EncodeConfig::cqp(30), None, &ReusePolicy::off()).unwrap();
    let policy = ReusePolicy::new(ReuseLevel::Full, RefineConfig::OFF);
    let e = encode_sequence(&frames, &EncodeConfig::cqp(30), Some(&other.analysis), &policy).unwrap_err();
    assert!(matches!(e, crate::Error::IncompatibleAnalysis(_)));
}

#[test]
fn colocated_lookup_descends_the_tree() {
    let mv = MotionVector::new(3, -1);
    let ctu = CuNode::split(
        0,
        [
            CuNode::leaf(1, CuMode::Intra(IntraMode::Dc)),
            CuNode::leaf(1, CuMode::Inter(mv)),
            CuNode::leaf(1, CuMode::Skip(MotionVector::ZERO)),
            CuNode::leaf(1, CuMode::Merge(mv)),
        ],
    );
    let f = FrameAnalysis { ctus: vec![ctu], slice_type: SliceType::P, qp: 30 };
    assert_eq!(colocated_mv(&f, 64, 5, 5), None);
    assert_eq!(colocated_mv(&f, 64, 40, 5), Some(mv));
    assert_eq!(colocated_mv(&f, 64, 5, 40), Some(MotionVector::ZERO));
}
