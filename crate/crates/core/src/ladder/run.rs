use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::codec::{encode_sequence, AnalysisStream, EncodeStats};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::metrics::{bd_metrics, RdPoint};
use crate::share::{scale_analysis, RefineConfig, ReusePolicy};

use super::plan::{plan_ladder, Edge, EdgeKind, LadderPlan};
use super::{LadderSpec, Rung, Scheme};

/// Runs independent jobs. Implementations may run them concurrently.
pub trait Executor {
    /// Runs `f(i)` for `i in 0..jobs` and returns the results in job order,
    /// each with its wall time in nanoseconds (0 when not measured).
    fn run<T: Send, F: Fn(usize) -> T + Sync>(&self, jobs: usize, f: F) -> Vec<(T, u64)>;
}

/// Runs jobs one after another without timing them.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run<T: Send, F: Fn(usize) -> T + Sync>(&self, jobs: usize, f: F) -> Vec<(T, u64)> {
        (0..jobs).map(|i| (f(i), 0)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RungReport {
    pub id: usize,
    pub rung: Rung,
    pub stats: EncodeStats,
    pub point: RdPoint,
    pub mean_qp: f64,
    /// Edge the rung's analysis came from.
    pub source: Option<Edge>,
}

/// One tier compared with encoding its rungs standalone.
#[derive(Clone, Debug, PartialEq)]
pub struct TierDelta {
    pub width: usize,
    pub height: usize,
    pub work: u64,
    pub baseline_work: u64,
    pub work_reduction_pct: f64,
    /// `None` when the tier has fewer than four rungs or the curves do not
    /// admit a fit.
    pub bd_rate: Option<f64>,
    pub bd_psnr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderReport {
    pub scheme: Scheme,
    pub plan: LadderPlan,
    /// Indexed by rung id.
    pub rungs: Vec<RungReport>,
    pub total_work: u64,
    /// Critical-path work with unlimited workers.
    pub makespan: u64,
    pub baseline_work: u64,
    pub baseline_makespan: u64,
    pub work_reduction_pct: f64,
    pub tiers: Vec<TierDelta>,
}

impl LadderReport {
    pub fn work(&self) -> Vec<u64> {
        self.rungs.iter().map(|r| r.stats.mode_evaluations).collect()
    }

    pub fn masters(&self) -> Vec<Option<usize>> {
        self.plan.masters()
    }

    pub fn points(&self, ids: &[usize]) -> Vec<RdPoint> {
        ids.iter().map(|&i| self.rungs[i].point).collect()
    }
}

/// Longest weighted path through the sharing DAG, `work` indexed by rung.
pub fn makespan(plan: &LadderPlan, work: &[u64]) -> u64 {
    let mut finish = vec![0u64; work.len()];
    for wave in &plan.waves {
        for &id in wave {
            let start = plan.source(id).map_or(0, |e| finish[e.from]);
            finish[id] = start + work[id];
        }
    }
    finish.into_iter().max().unwrap_or(0)
}

fn input_for<'a>(inputs: &'a [Vec<Frame>], rung: &Rung) -> Result<&'a [Frame]> {
    inputs
        .iter()
        .find(|f| f.first().is_some_and(|f| (f.width, f.height) == (rung.width, rung.height)))
        .map(Vec::as_slice)
        .ok_or_else(|| Error::Config(format!("no input frames for {}x{}", rung.width, rung.height)))
}

struct RungResult {
    stats: EncodeStats,
    point: RdPoint,
    mean_qp: f64,
    analysis: AnalysisStream,
}

fn encode_scheme<E: Executor>(inputs: &[Vec<Frame>], spec: &LadderSpec, exec: &E) -> Result<(LadderPlan, Vec<RungReport>)> {
    let plan = plan_ladder(spec)?;
    for r in &spec.rungs {
        input_for(inputs, r)?;
    }
    let needed: Vec<bool> = (0..spec.rungs.len()).map(|id| plan.edges.iter().any(|e| e.from == id)).collect();
    let mut analyses: Vec<Option<AnalysisStream>> = vec![None; spec.rungs.len()];
    let mut reports: Vec<Option<RungReport>> = vec![None; spec.rungs.len()];
    let cross_refine = match spec.scheme {
        Scheme::InterRes { refine } => refine,
        _ => spec.refine,
    };

    for wave in &plan.waves {
        let analyses_ref = &analyses;
        let plan_ref = &plan;
        let results = exec.run(wave.len(), |j| -> Result<RungResult> {
            let id = wave[j];
            let rung = &spec.rungs[id];
            let frames = input_for(inputs, rung)?;
            let cfg = spec.rung_config(rung);
            let source = plan_ref.source(id);
            let out = match source {
                None => encode_sequence(frames, &cfg, None, &ReusePolicy::off())?,
                Some(e) => {
                    let master = analyses_ref[e.from].as_ref().expect("master encoded in an earlier wave");
                    let (shared, refine) = match e.kind {
                        EdgeKind::IntraTier => (None, RefineConfig::OFF),
                        EdgeKind::CrossTier => (Some(scale_analysis(master, rung.width, rung.height)?), cross_refine),
                    };
                    let policy = ReusePolicy::new(spec.reuse_level, refine);
                    encode_sequence(frames, &cfg, Some(shared.as_ref().unwrap_or(master)), &policy)?
                }
            };
            let mean_qp = out.frames.iter().map(|f| f64::from(f.qp)).sum::<f64>() / out.frames.len() as f64;
            Ok(RungResult {
                point: RdPoint::new(cfg.kbps(out.stats.bits, out.stats.frames), out.stats.psnr_y),
                stats: out.stats,
                mean_qp,
                analysis: out.analysis,
            })
        });
        for (&id, (res, ns)) in wave.iter().zip(results) {
            let mut res = res?;
            res.stats.wall_ns = ns;
            reports[id] = Some(RungReport {
                id,
                rung: spec.rungs[id],
                stats: res.stats,
                point: res.point,
                mean_qp: res.mean_qp,
                source: plan.source(id).copied(),
            });
            if needed[id] {
                analyses[id] = Some(res.analysis);
            }
        }
    }
    Ok((plan, reports.into_iter().map(|r| r.expect("every rung is in a wave")).collect()))
}

fn pct_reduction(work: u64, base: u64) -> f64 {
    if base == 0 {
        0.0
    } else {
        (1.0 - work as f64 / base as f64) * 100.0
    }
}

fn assemble(scheme: Scheme, plan: LadderPlan, rungs: Vec<RungReport>, baseline: &LadderReport) -> LadderReport {
    let work: Vec<u64> = rungs.iter().map(|r| r.stats.mode_evaluations).collect();
    let total_work = work.iter().sum();
    let span = makespan(&plan, &work);
    let tiers = plan
        .tiers
        .iter()
        .map(|t| {
            let tw: u64 = t.rungs.iter().map(|&i| work[i]).sum();
            let bw: u64 = t.rungs.iter().map(|&i| baseline.rungs[i].stats.mode_evaluations).sum();
            let anchor: Vec<RdPoint> = t.rungs.iter().map(|&i| baseline.rungs[i].point).collect();
            let test: Vec<RdPoint> = t.rungs.iter().map(|&i| rungs[i].point).collect();
            let bd = bd_metrics(&anchor, &test).ok();
            TierDelta {
                width: t.width,
                height: t.height,
                work: tw,
                baseline_work: bw,
                work_reduction_pct: pct_reduction(tw, bw),
                bd_rate: bd.map(|b| b.bd_rate),
                bd_psnr: bd.map(|b| b.bd_psnr),
            }
        })
        .collect();
    LadderReport {
        scheme,
        plan,
        rungs,
        total_work,
        makespan: span,
        baseline_work: baseline.total_work,
        baseline_makespan: baseline.makespan,
        work_reduction_pct: pct_reduction(total_work, baseline.total_work),
        tiers,
    }
}

fn standalone_report<E: Executor>(inputs: &[Vec<Frame>], spec: &LadderSpec, exec: &E) -> Result<LadderReport> {
    let spec = spec.with_scheme(Scheme::Standalone);
    let (plan, rungs) = encode_scheme(inputs, &spec, exec)?;
    let work: Vec<u64> = rungs.iter().map(|r| r.stats.mode_evaluations).collect();
    let total_work = work.iter().sum();
    let span = makespan(&plan, &work);
    let shell = LadderReport {
        scheme: Scheme::Standalone,
        plan: plan.clone(),
        rungs: rungs.clone(),
        total_work,
        makespan: span,
        baseline_work: total_work,
        baseline_makespan: span,
        work_reduction_pct: 0.0,
        tiers: Vec::new(),
    };
    Ok(assemble(Scheme::Standalone, plan, rungs, &shell))
}

/// Runs the ladder under `spec.scheme` and compares it with a standalone
/// run of the same rungs. `inputs` holds one frame sequence per tier
/// resolution.
pub fn run_ladder<E: Executor>(inputs: &[Vec<Frame>], spec: &LadderSpec, exec: &E) -> Result<LadderReport> {
    let baseline = standalone_report(inputs, spec, exec)?;
    if spec.scheme == Scheme::Standalone {
        return Ok(baseline);
    }
    run_ladder_with_baseline(inputs, spec, &baseline, exec)
}

/// As [`run_ladder`], reusing an earlier standalone report of the same rungs.
pub fn run_ladder_with_baseline<E: Executor>(
    inputs: &[Vec<Frame>],
    spec: &LadderSpec,
    baseline: &LadderReport,
    exec: &E,
) -> Result<LadderReport> {
    if baseline.scheme != Scheme::Standalone
        || baseline.rungs.len() != spec.rungs.len()
        || baseline.rungs.iter().zip(&spec.rungs).any(|(b, r)| b.rung != *r)
    {
        return Err(Error::Config("baseline is not a standalone run of the same rungs".into()));
    }
    if spec.scheme == Scheme::Standalone {
        return Ok(baseline.clone());
    }
    let (plan, rungs) = encode_scheme(inputs, spec, exec)?;
    Ok(assemble(spec.scheme, plan, rungs, baseline))
}
