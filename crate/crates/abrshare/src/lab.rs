//! Correctness checker and cycle benchmark for the kernel registry.
//!
//! Every tier of a kernel is fed the same inputs as the scalar reference and
//! compared bit for bit. Timing uses the timestamp counter on x86 and
//! monotonic nanoseconds elsewhere; `KernelReport::clock` says which.

use std::hint::black_box;

use abrshare_core::kernels::{
    BlockView, BlockViewMut, Kernel, KernelFn, KernelOp, Registry, ResidualViewMut, Tier, TierRequest,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_CHECK_RUNS: usize = 100;
pub const DEFAULT_BENCH_RUNS: usize = 1000;
pub const WARMUP_CALLS: usize = 64;
pub const BATCHES: usize = 10;
/// Bit depth of generated inputs; 10-bit exercises the widest sums.
pub const CHECK_DEPTH: u8 = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub name: String,
    /// Highest tier compared against scalar, `None` for scalar-only kernels.
    pub vector_tier: Option<String>,
    pub correctness_runs: usize,
    pub mismatches: usize,
    pub scalar_cycles: Option<f64>,
    pub vector_cycles: Option<f64>,
    /// `scalar_cycles / vector_cycles`; 1.0 when there is nothing to compare.
    pub gain: f64,
    pub seed: u64,
    pub clock: String,
}

impl KernelReport {
    fn new(name: &str, seed: u64) -> Self {
        KernelReport {
            name: name.to_string(),
            vector_tier: None,
            correctness_runs: 0,
            mismatches: 0,
            scalar_cycles: None,
            vector_cycles: None,
            gain: 1.0,
            seed,
            clock: clock_name().to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Operand buffers for one call. Buffers are strided so kernels that write
/// past the block edge are caught.
#[derive(Clone, Debug)]
pub struct KernelInput {
    pub width: usize,
    pub height: usize,
    pub stride: usize,
    pub bit_depth: u8,
    pub a: Vec<u16>,
    pub b: Vec<u16>,
    dst: Vec<u16>,
    res: Vec<i16>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputCase {
    Zero,
    Max,
    /// Checkerboard of 0 and max in `a` against its inverse in `b`.
    Alternating,
    /// `a` all max, `b` all zero.
    Extremes,
    Random,
}

impl InputCase {
    /// Corner cases first, then random.
    pub fn for_run(run: usize) -> Self {
        match run {
            0 => InputCase::Zero,
            1 => InputCase::Max,
            2 => InputCase::Alternating,
            3 => InputCase::Extremes,
            _ => InputCase::Random,
        }
    }
}

impl KernelInput {
    pub fn generate(rng: &mut ChaCha8Rng, width: usize, height: usize, bit_depth: u8, case: InputCase) -> Self {
        let max = (1u16 << bit_depth) - 1;
        let stride = width + rng.gen_range(0..=8);
        let len = stride * height;
        let mut a = vec![0u16; len];
        let mut b = vec![0u16; len];
        for y in 0..height {
            for x in 0..stride {
                let i = y * stride + x;
                let (va, vb) = match case {
                    InputCase::Zero => (0, 0),
                    InputCase::Max => (max, max),
                    InputCase::Alternating if (x + y) % 2 == 0 => (max, 0),
                    InputCase::Alternating => (0, max),
                    InputCase::Extremes => (max, 0),
                    InputCase::Random => (rng.gen_range(0..=max), rng.gen_range(0..=max)),
                };
                a[i] = va;
                b[i] = vb;
            }
        }
        // Destinations start as garbage so untouched padding is detectable.
        let dst = (0..len).map(|_| rng.gen_range(0..=max)).collect();
        let res = (0..len).map(|_| rng.gen()).collect();
        KernelInput { width, height, stride, bit_depth, a, b, dst, res }
    }

    fn view<'a>(&self, data: &'a [u16]) -> BlockView<'a> {
        BlockView::new(data, self.width, self.height, self.stride, self.bit_depth).expect("generated geometry")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KernelOutput {
    Cost(u64),
    Samples(Vec<u16>),
    Residual(Vec<i16>),
}

/// Runs `kernel` once on `input`, returning everything it produced.
pub fn run_kernel(kernel: &Kernel, input: &KernelInput) -> Result<KernelOutput> {
    let (a, b) = (input.view(&input.a), input.view(&input.b));
    let (w, h, s, d) = (input.width, input.height, input.stride, input.bit_depth);
    Ok(match kernel.op() {
        KernelOp::Sad | KernelOp::Satd => KernelOutput::Cost(kernel.cost(&a, &b)?),
        KernelOp::BlockCopy => {
            let mut dst = input.dst.clone();
            kernel.copy(&mut BlockViewMut::new(&mut dst, w, h, s, d)?, &a)?;
            KernelOutput::Samples(dst)
        }
        KernelOp::BlockZero => {
            let mut dst = input.dst.clone();
            kernel.zero(&mut BlockViewMut::new(&mut dst, w, h, s, d)?)?;
            KernelOutput::Samples(dst)
        }
        KernelOp::SubtractRes => {
            let mut res = input.res.clone();
            kernel.subtract(&mut ResidualViewMut::new(&mut res, w, h, s)?, &a, &b)?;
            KernelOutput::Residual(res)
        }
    })
}

/// Mismatch count of every candidate against `reference` over `runs`
/// seeded inputs. Each input counts once however many tiers disagree.
pub fn check_tiers(reference: &Kernel, candidates: &[&Kernel], runs: usize, seed: u64, bit_depth: u8) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for run in 0..runs {
        let input = KernelInput::generate(&mut rng, reference.width(), reference.height(), bit_depth, InputCase::for_run(run));
        let expect = run_kernel(reference, &input)?;
        let mut bad = false;
        for k in candidates {
            bad |= run_kernel(k, &input)? != expect;
        }
        mismatches += usize::from(bad);
    }
    Ok(mismatches)
}

/// Compares every tier of `name` against scalar.
pub fn check_kernel(registry: &Registry, name: &str, runs: usize, seed: u64) -> Result<KernelReport> {
    let tiers = registry.tiers(name)?;
    let scalar = registry.select_impl(name, TierRequest::Exact(Tier::Scalar))?;
    let vector: Vec<&Kernel> = tiers.iter().copied().filter(|k| k.tier() != Tier::Scalar).collect();
    let mut report = KernelReport::new(name, seed);
    report.vector_tier = vector.last().map(|k| k.tier().to_string());
    report.correctness_runs = runs;
    report.mismatches = check_tiers(scalar, &vector, runs, seed, CHECK_DEPTH)?;
    Ok(report)
}

pub fn clock_name() -> &'static str {
    if cfg!(target_arch = "x86_64") {
        "tsc"
    } else {
        "ns"
    }
}

#[inline]
fn ticks() -> u64 {
    #[cfg(target_arch = "x86_64")]
    {
        // SAFETY: rdtsc is available on every x86_64 CPU.
        #[allow(unused_unsafe)]
        unsafe {
            core::arch::x86_64::_rdtsc()
        }
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        use std::sync::OnceLock;
        use std::time::Instant;
        static START: OnceLock<Instant> = OnceLock::new();
        START.get_or_init(Instant::now).elapsed().as_nanos() as u64
    }
}

/// Median over `BATCHES` of the mean ticks per call. Inputs cycle through
/// `pool`, so two kernels timed on the same pool see the same data.
fn time_kernel(kernel: &Kernel, pool: &[KernelInput], runs: usize) -> f64 {
    let per_batch = (runs / BATCHES).max(1);
    // Views are built up front so only the kernel body is timed.
    let views: Vec<_> = pool.iter().map(|p| (p.view(&p.a), p.view(&p.b))).collect();
    let mut dst: Vec<Vec<u16>> = pool.iter().map(|p| p.dst.clone()).collect();
    let mut res: Vec<Vec<i16>> = pool.iter().map(|p| p.res.clone()).collect();
    let mut dst_views: Vec<BlockViewMut<'_>> = dst
        .iter_mut()
        .zip(pool)
        .map(|(d, p)| BlockViewMut::new(d, p.width, p.height, p.stride, p.bit_depth).expect("pool geometry"))
        .collect();
    let mut res_views: Vec<ResidualViewMut<'_>> = res
        .iter_mut()
        .zip(pool)
        .map(|(r, p)| ResidualViewMut::new(r, p.width, p.height, p.stride).expect("pool geometry"))
        .collect();
    let func = kernel.func();
    let mut call = |i: usize| {
        let k = i % pool.len();
        let (a, b) = &views[k];
        match func {
            KernelFn::Cost(f) => {
                black_box(f(black_box(a), black_box(b)));
            }
            KernelFn::Copy(f) => f(black_box(&mut dst_views[k]), a),
            KernelFn::Zero(f) => f(black_box(&mut dst_views[k])),
            KernelFn::Subtract(f) => f(black_box(&mut res_views[k]), a, b),
        }
    };
    for i in 0..WARMUP_CALLS {
        call(i);
    }
    let mut means: Vec<f64> = (0..BATCHES)
        .map(|batch| {
            let t0 = ticks();
            for i in 0..per_batch {
                call(batch * per_batch + i);
            }
            (ticks() - t0) as f64 / per_batch as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    (means[BATCHES / 2 - 1] + means[BATCHES / 2]) / 2.0
}

fn input_pool(width: usize, height: usize, seed: u64) -> Vec<KernelInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..16).map(|_| KernelInput::generate(&mut rng, width, height, CHECK_DEPTH, InputCase::Random)).collect()
}

/// Times scalar against the best vector tier of `name`.
pub fn bench_kernel(registry: &Registry, name: &str, runs: usize, seed: u64) -> Result<KernelReport> {
    let best = registry.select_impl(name, TierRequest::Auto)?;
    if best.tier() == Tier::Scalar {
        return Err(Error::Core(abrshare_core::Error::Capability(format!("{name} has no vector tier"))));
    }
    let scalar = registry.select_impl(name, TierRequest::Exact(Tier::Scalar))?;
    let pool = input_pool(best.width(), best.height(), seed);
    let s = time_kernel(scalar, &pool, runs);
    let v = time_kernel(best, &pool, runs);
    let mut report = KernelReport::new(name, seed);
    report.vector_tier = Some(best.tier().to_string());
    report.scalar_cycles = Some(s);
    report.vector_cycles = Some(v);
    report.gain = if v > 0.0 { s / v } else { f64::INFINITY };
    Ok(report)
}

/// Kernel names matching a shell-style glob; `None` or `""` selects all.
pub fn select_names(registry: &Registry, filter: Option<&str>) -> Result<Vec<String>> {
    let pattern = match filter.filter(|f| !f.is_empty()) {
        Some(f) => Some(glob::Pattern::new(f).map_err(|e| Error::Config(format!("bad filter {f:?}: {e}")))?),
        None => None,
    };
    Ok(registry.names().into_iter().filter(|n| pattern.as_ref().is_none_or(|p| p.matches(n))).collect())
}

/// Checks and benchmarks every selected kernel, sorted by ascending gain.
/// Scalar-only kernels are timed once and report a gain of 1.
pub fn run_all(
    registry: &Registry,
    filter: Option<&str>,
    runs_check: usize,
    runs_bench: usize,
    seed: u64,
) -> Result<Vec<KernelReport>> {
    let mut out = Vec::new();
    for name in select_names(registry, filter)? {
        let mut report = check_kernel(registry, &name, runs_check, seed)?;
        if runs_bench > 0 {
            match bench_kernel(registry, &name, runs_bench, seed) {
                Ok(b) => {
                    report.scalar_cycles = b.scalar_cycles;
                    report.vector_cycles = b.vector_cycles;
                    report.gain = b.gain;
                }
                Err(Error::Core(abrshare_core::Error::Capability(_))) => {
                    let scalar = registry.select_impl(&name, TierRequest::Exact(Tier::Scalar))?;
                    report.scalar_cycles = Some(time_kernel(scalar, &input_pool(scalar.width(), scalar.height(), seed), runs_bench));
                }
                Err(e) => return Err(e),
            }
        }
        out.push(report);
    }
    sort_by_gain(&mut out);
    Ok(out)
}

pub fn sort_by_gain(reports: &mut [KernelReport]) {
    reports.sort_by(|a, b| a.gain.total_cmp(&b.gain));
}

pub fn to_table(reports: &[KernelReport]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18} {:>7} {:>5} {:>5} {:>12} {:>12} {:>7}",
        "kernel", "tier", "runs", "bad", "scalar", "vector", "gain"
    );
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |c| format!("{c:.1}"));
    for r in reports {
        let _ = writeln!(
            s,
            "{:<18} {:>7} {:>5} {:>5} {:>12} {:>12} {:>6.2}x",
            r.name,
            r.vector_tier.as_deref().unwrap_or("-"),
            r.correctness_runs,
            r.mismatches,
            cell(r.scalar_cycles),
            cell(r.vector_cycles),
            r.gain
        );
    }
    if let Some(r) = reports.first() {
        let _ = writeln!(s, "clock: {}, seed: {}", r.clock, r.seed);
    }
    s
}

pub fn to_csv(reports: &[KernelReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn to_json(reports: &[KernelReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}
