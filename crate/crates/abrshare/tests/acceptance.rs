//! Acceptance gate. Each test prints one `criterion N: PASS|FAIL|SKIP` line
//! with the measured values, then asserts.
//!
//! Tests share a lock so timing-sensitive criteria do not compete with the
//! encoder-heavy ones for cores.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use abrshare::exec::Threaded;
use abrshare::lab::{bench_kernel, check_kernel};
use abrshare::synth::{gen_synthetic, SynthKind};
use abrshare::downscale::downscale_dyadic;
use abrshare_core::codec::{
    coverage, ctu_grid, encode_sequence, AnalysisStream, Coverage, CuMode, CuNode, FrameAnalysis,
    IntraMode, MotionVector, SliceType, CTU_SIZE, MAX_DEPTH,
};
use abrshare_core::frame::Frame;
use abrshare_core::kernels::{compute_satd, BlockView, KernelOp, Registry, Tier, BITS_PER_SUM};
use abrshare_core::ladder::{
    run_ladder, run_ladder_with_baseline, EdgeKind, LadderReport, LadderSpec, Rung, RungRate, Scheme,
};
use abrshare_core::metrics::{bd_psnr, bd_rate, fit_cubic, RdPoint};
use abrshare_core::share::{
    load_analysis, save_analysis, scale_analysis, RefineConfig, ReuseLevel, ReusePolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes past the test harness's capture so the verdicts show in every run.
fn verdict(n: u32, ok: bool, detail: &str) {
    let line = format!("criterion {n}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).and_then(|()| out.flush()).expect("stdout");
}

const SEED: u64 = 2024;
const QPS: [u8; 5] = [22, 26, 30, 34, 38];

fn cqp_tier(w: usize, h: usize) -> Vec<Rung> {
    QPS.iter().map(|&qp| Rung::cqp(w, h, qp)).collect()
}

fn mixed(w: usize, h: usize, frames: usize) -> Vec<Frame> {
    gen_synthetic(SynthKind::Mixed, w, h, frames, SEED, 8).unwrap()
}

#[test]
fn c1_kernel_tiers_match_scalar() {
    let _g = serial();
    let t0 = Instant::now();
    let registry = Registry::detect();
    let mut kernels = 0;
    let mut bad = Vec::new();
    for name in registry.names() {
        let r = check_kernel(&registry, &name, 1000, SEED).unwrap();
        kernels += 1;
        if r.mismatches > 0 {
            bad.push(format!("{name}:{}", r.mismatches));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = bad.is_empty() && secs < 30.0;
    verdict(
        1,
        ok,
        &format!("{kernels} kernels x 1000 10-bit inputs, best tier {}, {secs:.2}s, mismatches {bad:?}", registry.caps().best()),
    );
    assert!(ok);
}

#[test]
fn c2_vector_tiers_are_faster() {
    let _g = serial();
    let registry = Registry::detect();
    if !registry.caps().supports(Tier::Vec256) {
        println!("criterion 2: SKIP no 256-bit vector tier on this machine");
        return;
    }
    let t0 = Instant::now();
    let mut worst = (String::new(), f64::INFINITY);
    let mut count = 0;
    for op in [KernelOp::Sad, KernelOp::Satd] {
        for &(w, h) in op.geometries() {
            if w < 16 {
                continue;
            }
            let name = abrshare_core::kernels::kernel_name(op, w, h);
            let r = bench_kernel(&registry, &name, 1000, SEED).unwrap();
            count += 1;
            if r.gain < worst.1 {
                worst = (name, r.gain);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = worst.1 >= 1.3 && secs < 60.0;
    verdict(2, ok, &format!("{count} kernels, lowest gain {:.2}x ({}), {secs:.2}s", worst.1, worst.0));
    assert!(ok);
}

/// Line-for-line rendering of the packed-pair C listing.
mod listing {
    pub fn abs2(a: u64, bits: u32) -> u64 {
        let s = ((a >> (bits - 1)) & ((1u64 << bits) + 1)).wrapping_mul(u64::from(u32::MAX));
        a.wrapping_add(s) ^ s
    }

    fn hadamard4(s0: u64, s1: u64, s2: u64, s3: u64) -> [u64; 4] {
        let t0 = s0.wrapping_add(s1);
        let t1 = s0.wrapping_sub(s1);
        let t2 = s2.wrapping_add(s3);
        let t3 = s2.wrapping_sub(s3);
        let d0 = t0.wrapping_add(t2);
        let d2 = t0.wrapping_sub(t2);
        let d1 = t1.wrapping_add(t3);
        let d3 = t1.wrapping_sub(t3);
        [d0, d1, d2, d3]
    }

    pub fn satd_8x4(pix1: &[u16], s1: usize, pix2: &[u16], s2: usize, bits: u32) -> u64 {
        let mut tmp = [[0u64; 4]; 4];
        let mut sum = 0u64;
        for (i, t) in tmp.iter_mut().enumerate() {
            let p1 = &pix1[i * s1..];
            let p2 = &pix2[i * s2..];
            let d = |k: usize| (i64::from(p1[k]) - i64::from(p2[k])) as u64;
            let a0 = d(0).wrapping_add(d(4) << bits);
            let a1 = d(1).wrapping_add(d(5) << bits);
            let a2 = d(2).wrapping_add(d(6) << bits);
            let a3 = d(3).wrapping_add(d(7) << bits);
            *t = hadamard4(a0, a1, a2, a3);
        }
        for i in 0..4 {
            let [a0, a1, a2, a3] = hadamard4(tmp[0][i], tmp[1][i], tmp[2][i], tmp[3][i]);
            sum = sum
                .wrapping_add(abs2(a0, bits))
                .wrapping_add(abs2(a1, bits))
                .wrapping_add(abs2(a2, bits))
                .wrapping_add(abs2(a3, bits));
        }
        (u64::from(sum as u32) + (sum >> bits)) >> 1
    }

    pub fn satd8(pix1: &[u16], s1: usize, pix2: &[u16], s2: usize, w: usize, h: usize, bits: u32) -> u64 {
        let mut satd = 0;
        for row in (0..h).step_by(4) {
            for col in (0..w).step_by(8) {
                satd += satd_8x4(&pix1[row * s1 + col..], s1, &pix2[row * s2 + col..], s2, bits);
            }
        }
        satd
    }
}

#[test]
fn c3_satd_matches_listing() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let widths = [8usize, 16, 32, 64];
    let heights = [4usize, 8, 16, 32, 64];
    let mut mismatches = 0;
    let n = 10_000;
    for _ in 0..n {
        let w = widths[rng.gen_range(0..widths.len())];
        let h = heights[rng.gen_range(0..heights.len())];
        let depth = if rng.gen_bool(0.5) { 8 } else { 10 };
        let max = (1u16 << depth) - 1;
        let (sa, sb) = (w + rng.gen_range(0..8), w + rng.gen_range(0..8));
        let a: Vec<u16> = (0..sa * h).map(|_| rng.gen_range(0..=max)).collect();
        let b: Vec<u16> = (0..sb * h).map(|_| rng.gen_range(0..=max)).collect();
        let va = BlockView::new(&a, w, h, sa, depth).unwrap();
        let vb = BlockView::new(&b, w, h, sb, depth).unwrap();
        let got = compute_satd(&va, &vb).unwrap();
        let want = listing::satd8(&a, sa, &b, sb, w, h, BITS_PER_SUM);
        mismatches += usize::from(got != want);
    }
    verdict(3, mismatches == 0, &format!("{n} random 8x4..64x64 blocks, {mismatches} mismatches"));
    assert_eq!(mismatches, 0);
}

fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(lo + i as f64 * h)).sum();
    h * (inner + 0.5 * (f(lo) + f(hi)))
}

#[test]
fn c4_bd_analytics() {
    let _g = serial();
    let a = vec![
        RdPoint::new(400.0, 32.1),
        RdPoint::new(750.0, 34.9),
        RdPoint::new(1400.0, 37.2),
        RdPoint::new(2600.0, 39.6),
        RdPoint::new(4800.0, 41.3),
    ];
    let b = vec![
        RdPoint::new(430.0, 31.8),
        RdPoint::new(800.0, 34.7),
        RdPoint::new(1500.0, 37.1),
        RdPoint::new(2700.0, 39.2),
        RdPoint::new(5000.0, 41.0),
    ];
    let same = bd_rate(&a, &a).unwrap();
    let scaled: Vec<RdPoint> = a.iter().map(|p| RdPoint::new(p.bitrate_kbps * 1.10, p.psnr_db)).collect();
    let offset = bd_rate(&a, &scaled).unwrap();
    let (ab, ba) = (bd_psnr(&a, &b).unwrap(), bd_psnr(&b, &a).unwrap());

    let xs: Vec<f64> = a.iter().map(|p| p.bitrate_kbps.log10()).collect();
    let ys: Vec<f64> = a.iter().map(|p| p.psnr_db).collect();
    let cubic = fit_cubic(&xs, &ys).unwrap();
    let (lo, hi) = (xs[0], xs[4]);
    let exact = cubic.integral(lo, hi);
    let numeric = trapezoid(|x| cubic.eval(x), lo, hi, 200_000);
    let integ_err = (exact - numeric).abs();

    let ok = same.abs() <= 1e-9 && (offset - 10.0).abs() <= 1e-6 && ab == -ba && integ_err <= 1e-6;
    verdict(
        4,
        ok,
        &format!("bd(A,A)={same:.3e}, x1.10 -> {offset:.9}%, bd_psnr {ab:+.6}/{ba:+.6}, integral err {integ_err:.2e}"),
    );
    assert!(ok);
}

fn tier_bd(report: &LadderReport, tier: usize) -> f64 {
    report.tiers[tier].bd_rate.expect("tier has a BD-rate")
}

#[test]
fn c5_level10_reuse_cuts_work() {
    let _g = serial();
    let t0 = Instant::now();
    let frames = mixed(128, 128, 32);
    let inputs = vec![frames.clone()];
    let spec = LadderSpec::new(cqp_tier(128, 128), Scheme::SotaIntra);
    let exec = Threaded::available();
    let shared = run_ladder(&inputs, &spec, &exec).unwrap();
    let reduction = shared.work_reduction_pct;
    let bd = tier_bd(&shared, 0);

    // Level 4 against level 6, fed the same master analysis.
    let master_rung = shared.masters()[0].expect("tier has a master");
    let master_cfg = spec.rung_config(&spec.rungs[master_rung]);
    let master = encode_sequence(&frames, &master_cfg, None, &ReusePolicy::off()).unwrap();
    let mut identical = true;
    for (id, rung) in spec.rungs.iter().enumerate() {
        if id == master_rung {
            continue;
        }
        let cfg = spec.rung_config(rung);
        let enc = |level| {
            encode_sequence(&frames, &cfg, Some(&master.analysis), &ReusePolicy::new(level, RefineConfig::OFF)).unwrap()
        };
        let (l4, l6) = (enc(ReuseLevel::Structure), enc(ReuseLevel::StructureExtended));
        identical &= l4.analysis == l6.analysis && l4.levels == l6.levels && l4.stats.bits == l6.stats.bits;
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = reduction >= 30.0 && identical && (-1.0..=40.0).contains(&bd) && secs < 120.0;
    verdict(
        5,
        ok,
        &format!(
            "work {} vs {} ({reduction:.2}% saved), levels 4/6 identical: {identical}, BD-rate {bd:+.2}%, {secs:.1}s",
            shared.total_work, shared.baseline_work
        ),
    );
    assert!(ok);
}

#[test]
fn c6_median_master() {
    let _g = serial();
    let exec = Threaded::available();
    let spec = LadderSpec::new(cqp_tier(128, 128), Scheme::SotaIntra);
    let mut spans = Vec::new();
    let mut bds = None;
    let mut ok = true;
    for kind in SynthKind::STANDARD {
        let n = if kind == SynthKind::Mixed { 32 } else { 16 };
        let inputs = vec![gen_synthetic(kind, 128, 128, n, SEED, 8).unwrap()];
        let sota = run_ladder(&inputs, &spec, &exec).unwrap();
        let baseline = run_ladder(&inputs, &spec.with_scheme(Scheme::Standalone), &exec).unwrap();
        let proposed = run_ladder_with_baseline(&inputs, &spec.with_scheme(Scheme::ProposedIntra), &baseline, &exec).unwrap();
        ok &= proposed.makespan <= sota.makespan;
        spans.push(format!("{kind} {}<={}", proposed.makespan, sota.makespan));
        if kind == SynthKind::Mixed {
            let (p, s) = (tier_bd(&proposed, 0), tier_bd(&sota, 0));
            ok &= p <= s;
            bds = Some((p, s));
        }
    }
    let (p, s) = bds.unwrap();
    verdict(6, ok, &format!("makespan {}; mixed BD-rate proposed {p:+.2}% vs sota {s:+.2}%", spans.join(", ")));
    assert!(ok);
}

#[test]
fn c7_refinement_trades_work_for_quality() {
    let _g = serial();
    let exec = Threaded::available();
    let big = gen_synthetic(SynthKind::Pan { dx: 2, dy: 0 }, 128, 128, 16, SEED, 8).unwrap();
    let small = downscale_dyadic(&big).unwrap();
    let inputs = vec![small, big];
    let rungs: Vec<Rung> = cqp_tier(64, 64).into_iter().chain(cqp_tier(128, 128)).collect();
    let base_spec = LadderSpec::new(rungs, Scheme::Standalone);
    let baseline = run_ladder(&inputs, &base_spec, &exec).unwrap();
    let run = |refine| {
        run_ladder_with_baseline(&inputs, &base_spec.with_scheme(Scheme::InterRes { refine }), &baseline, &exec).unwrap()
    };
    let refined = run(RefineConfig::new(3, 3, 2).unwrap());
    let forced = run(RefineConfig::OFF);
    let (bd_r, bd_f) = (tier_bd(&refined, 1), tier_bd(&forced, 1));
    let ok = bd_r < bd_f && forced.total_work < refined.total_work;
    verdict(
        7,
        ok,
        &format!(
            "128x128 BD-rate refined {bd_r:+.2}% vs forced {bd_f:+.2}%, work forced {} vs refined {}",
            forced.total_work, refined.total_work
        ),
    );
    assert!(ok);
}

/// Reference ladders in kbps, one per tier, smallest tier first.
const KBPS_LADDERS: [[f64; 5]; 3] = [
    [1000.0, 1750.0, 2500.0, 3000.0, 3500.0],
    [3500.0, 4500.0, 5500.0, 7500.0, 9000.0],
    [11000.0, 13000.0, 15000.0, 17000.0, 19000.0],
];

/// Edges as `(from tier, from kbps, to tier, to kbps)`.
fn edge_set(report: &LadderReport, label: &[(usize, f64)]) -> Vec<(usize, u32, usize, u32)> {
    let mut e: Vec<_> = report
        .plan
        .edges
        .iter()
        .map(|e| (label[e.from].0, label[e.from].1 as u32, label[e.to].0, label[e.to].1 as u32))
        .collect();
    e.sort_unstable();
    e
}

fn expected_edges(masters: [u32; 3]) -> Vec<(usize, u32, usize, u32)> {
    let mut e = Vec::new();
    for (t, ladder) in KBPS_LADDERS.iter().enumerate() {
        for &k in ladder {
            if k as u32 != masters[t] {
                e.push((t, masters[t], t, k as u32));
            }
        }
        if t > 0 {
            e.push((t - 1, masters[t - 1], t, masters[t]));
        }
    }
    e.sort_unstable();
    e
}

const RATE_CALIBRATION: f64 = 8.0;

#[test]
fn c8_multi_encoding_dags() {
    let _g = serial();
    let exec = Threaded::available();
    let top = mixed(128, 128, 8);
    let mid = downscale_dyadic(&top).unwrap();
    let low = downscale_dyadic(&mid).unwrap();
    let inputs = vec![low, mid, top];
    // Desk-scale targets keep the reference ladders' shape. The reference
    // ladders sit near 0.06 bpp while this codec's rate model spends about
    // 0.5 bpp at QP 30, so targets are lifted by that ratio.
    let dims = [(32usize, 32usize, 960.0 * 540.0), (64, 64, 1920.0 * 1080.0), (128, 128, 3840.0 * 2160.0)];
    let mut rungs = Vec::new();
    let mut label = Vec::new();
    for (t, &(w, h, area)) in dims.iter().enumerate() {
        for &k in &KBPS_LADDERS[t] {
            rungs.push(Rung::cvbr(w, h, RATE_CALIBRATION * k * (w * h) as f64 / area));
            label.push((t, k));
        }
    }
    let spec = LadderSpec::new(rungs, Scheme::Standalone);
    let baseline = run_ladder(&inputs, &spec, &exec).unwrap();
    let proposed = run_ladder_with_baseline(&inputs, &spec.with_scheme(Scheme::ProposedMulti), &baseline, &exec).unwrap();
    let sota = run_ladder_with_baseline(&inputs, &spec.with_scheme(Scheme::SotaMulti), &baseline, &exec).unwrap();

    let p_ok = edge_set(&proposed, &label) == expected_edges([2500, 5500, 15000]);
    let s_ok = edge_set(&sota, &label) == expected_edges([3500, 9000, 19000]);
    let kinds_ok = [&proposed, &sota].iter().all(|r| {
        r.plan.edges.iter().all(|e| (label[e.from].0 == label[e.to].0) == (e.kind == EdgeKind::IntraTier))
    });
    let rates_ok = proposed.rungs.iter().all(|r| matches!(r.rung.rate, RungRate::Cvbr { .. }));
    let work_ok = proposed.total_work < sota.total_work;
    let ok = p_ok && s_ok && kinds_ok && rates_ok && work_ok;
    verdict(
        8,
        ok,
        &format!(
            "proposed edges {p_ok}, sota edges {s_ok}, edge kinds {kinds_ok}, work proposed {} vs sota {}",
            proposed.total_work, sota.total_work
        ),
    );
    assert!(ok);
}

fn random_mode(rng: &mut ChaCha8Rng, intra_only: bool) -> CuMode {
    let mv = MotionVector::new(rng.gen_range(-64..=64), rng.gen_range(-64..=64));
    match if intra_only { 0 } else { rng.gen_range(0..4) } {
        0 => CuMode::Intra(IntraMode::ALL[rng.gen_range(0..4)]),
        1 => CuMode::Inter(mv),
        2 => CuMode::Skip(mv),
        _ => CuMode::Merge(mv),
    }
}

fn random_node(rng: &mut ChaCha8Rng, x: usize, y: usize, depth: u8, w: usize, h: usize, intra: bool) -> CuNode {
    let size = CTU_SIZE >> depth;
    match coverage(x, y, size, w, h) {
        Coverage::Outside => CuNode::outside(depth),
        cov if depth < MAX_DEPTH && (cov == Coverage::Partial || rng.gen_bool(0.5)) => {
            let half = size / 2;
            CuNode::split(
                depth,
                std::array::from_fn(|i| random_node(rng, x + (i % 2) * half, y + (i / 2) * half, depth + 1, w, h, intra)),
            )
        }
        _ => CuNode::leaf(depth, random_mode(rng, intra)),
    }
}

fn random_stream(rng: &mut ChaCha8Rng) -> AnalysisStream {
    let (w, h) = (8 * rng.gen_range(1..=20), 8 * rng.gen_range(1..=20));
    let mut s = AnalysisStream::new(w, h, if rng.gen_bool(0.5) { 8 } else { 10 });
    let (cols, rows) = ctu_grid(w, h);
    for i in 0..rng.gen_range(1..=3) {
        let intra = i == 0 || rng.gen_bool(0.2);
        let ctus = (0..cols * rows)
            .map(|c| random_node(rng, (c % cols) * CTU_SIZE, (c / cols) * CTU_SIZE, 0, w, h, intra))
            .collect();
        s.frames.push(FrameAnalysis {
            ctus,
            slice_type: if intra { SliceType::I } else { SliceType::P },
            qp: rng.gen_range(0..=51),
        });
    }
    s
}

/// Leaf area clipped to the picture and every leaf vector.
fn area_and_mvs(s: &AnalysisStream) -> (usize, Vec<MotionVector>) {
    let (cols, _) = ctu_grid(s.width, s.height);
    let mut area = 0;
    let mut mvs = Vec::new();
    for f in &s.frames {
        for (c, ctu) in f.ctus.iter().enumerate() {
            ctu.for_each_leaf((c % cols) * CTU_SIZE, (c / cols) * CTU_SIZE, &mut |x, y, n, m| {
                let sz = n.size();
                area += (s.width.min(x + sz) - x) * (s.height.min(y + sz) - y);
                mvs.extend(m.mv());
            });
        }
    }
    (area, mvs)
}

#[test]
fn c9_archive_and_scaling() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut round_trip, mut area_ok, mut mv_ok) = (0, 0, 0);
    let n = 1000;
    for _ in 0..n {
        let s = random_stream(&mut rng);
        let bytes = save_analysis(&s, ReuseLevel::Full).unwrap();
        let (back, level) = load_analysis(&bytes, ReuseLevel::Full).unwrap();
        round_trip += usize::from(back == s && level == ReuseLevel::Full);

        let up = scale_analysis(&s, 2 * s.width, 2 * s.height).unwrap();
        let (a0, mv0) = area_and_mvs(&s);
        let (a1, mv1) = area_and_mvs(&up);
        area_ok += usize::from(up.validate().is_ok() && a1 == 4 * a0);
        // Every upscaled vector is twice some source vector.
        mv_ok += usize::from(mv1.iter().all(|m| m.dx % 2 == 0 && m.dy % 2 == 0 && mv0.contains(&MotionVector::new(m.dx / 2, m.dy / 2))));
    }
    let ok = round_trip == n && area_ok == n && mv_ok == n;
    verdict(9, ok, &format!("{n} streams: round trip {round_trip}, area x4 {area_ok}, vectors doubled {mv_ok}"));
    assert!(ok);
}
