//! Command-line front end. Every flag is validated before any file is read
//! or any frame is encoded.

use std::io::Write;
use std::path::{Path, PathBuf};

use abrshare_core::codec::{encode_sequence, EncodeConfig, EncodeOutput, FrameStat, SliceType};
use abrshare_core::codec::{AnalysisStream, CuKind, CuMode, CuNode, IntraMode};
use abrshare_core::kernels::Registry;
use abrshare_core::ladder::run_ladder;
use abrshare_core::metrics::{bd_metrics, RdPoint};
use abrshare_core::share::{load_analysis, save_analysis, scale_analysis, RefineConfig, ReuseLevel, ReusePolicy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::LadderConfig;
use crate::error::{io_at, Error, Result};
use crate::exec::Threaded;
use crate::lab;
use crate::report;
use crate::synth::{gen_synthetic, SynthKind};
use crate::yuv::{read_yuv, write_yuv, RawVideoSpec};

#[derive(Debug, Parser)]
#[command(name = "abrshare", version, about = "Encoder analysis sharing across bitrate ladders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a raw 4:2:0 file, optionally reusing saved analysis.
    Encode(EncodeArgs),
    /// Run a ladder described by a TOML file.
    Ladder(LadderArgs),
    /// Check and time every kernel tier.
    Bench(BenchArgs),
    /// BD-rate and BD-PSNR between two `bitrate,psnr` CSV curves.
    Bdrate(BdrateArgs),
    /// Write a synthetic test sequence.
    Gen(GenArgs),
    /// Print the contents of an analysis archive.
    DumpAnalysis(DumpArgs),
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long, default_value_t = 8)]
    pub depth: u8,
    /// Encode only the first N frames.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, conflicts_with = "kbps", required_unless_present = "kbps")]
    pub qp: Option<u8>,
    #[arg(long)]
    pub kbps: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub cap_factor: f64,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 8)]
    pub search_range: i32,
    #[arg(long, default_value_t = 0)]
    pub gop: usize,
    #[arg(long)]
    pub save_analysis: Option<PathBuf>,
    /// Archive to reuse; a lower dyadic resolution is scaled up.
    #[arg(long)]
    pub load_analysis: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub reuse_level: u8,
    #[arg(long, default_value_t = 0)]
    pub refine_intra: u8,
    #[arg(long, default_value_t = 0)]
    pub refine_inter: u8,
    #[arg(long, default_value_t = 1)]
    pub refine_mv: u8,
    #[arg(long)]
    pub recon_out: Option<PathBuf>,
    /// Per-frame statistics as CSV.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LadderArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Per-rung CSV report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Concurrent encodes per wave; defaults to the core count.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Glob over kernel names, e.g. `sad_*`.
    #[arg(long)]
    pub filter: Option<String>,
    /// Timed calls per tier.
    #[arg(long, default_value_t = lab::DEFAULT_BENCH_RUNS)]
    pub runs: usize,
    /// Correctness inputs per kernel.
    #[arg(long, default_value_t = lab::DEFAULT_CHECK_RUNS)]
    pub check_runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BdrateArgs {
    #[arg(long)]
    pub anchor: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// `static`, `pan:dx,dy`, `noise:sigma` or `mixed`.
    #[arg(long)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 32)]
    pub frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub depth: u8,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    pub file: PathBuf,
    /// Print every CTU's quad-tree.
    #[arg(long)]
    pub trees: bool,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Encode(a) => encode(a, out),
        Command::Ladder(a) => ladder(a, out),
        Command::Bench(a) => bench(a, out),
        Command::Bdrate(a) => bdrate(a, out),
        Command::Gen(a) => gen(a, out),
        Command::DumpAnalysis(a) => dump(a, out),
    }
}

fn check_depth(depth: u8) -> Result<()> {
    if depth != 8 && depth != 10 {
        return Err(Error::Config(format!("--depth must be 8 or 10, got {depth}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct FrameRow {
    frame: usize,
    slice: &'static str,
    qp: u8,
    bits: u64,
    psnr_y: f64,
    mode_evaluations: u64,
    reencoded: bool,
}

fn frame_rows(stats: &[FrameStat]) -> Vec<FrameRow> {
    stats
        .iter()
        .enumerate()
        .map(|(i, f)| FrameRow {
            frame: i,
            slice: match f.slice_type {
                SliceType::I => "I",
                SliceType::P => "P",
            },
            qp: f.qp,
            bits: f.bits,
            psnr_y: f.psnr_y,
            mode_evaluations: f.mode_evaluations,
            reencoded: f.reencoded,
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(io_at(path))
}

fn encode(a: EncodeArgs, out: &mut dyn Write) -> Result<()> {
    check_depth(a.depth)?;
    let refine = RefineConfig::new(a.refine_intra, a.refine_inter, a.refine_mv)?;
    let level = ReuseLevel::from_u8(a.reuse_level)?;
    let mut cfg = match (a.qp, a.kbps) {
        (Some(qp), _) => EncodeConfig::cqp(qp),
        (None, Some(k)) => EncodeConfig::cvbr(k, a.cap_factor),
        (None, None) => return Err(Error::Config("one of --qp or --kbps is required".into())),
    };
    cfg.fps = a.fps;
    cfg.search_range = a.search_range;
    cfg.gop = a.gop;
    cfg.validate()?;

    let mut spec = RawVideoSpec::new(&a.input, a.width, a.height, a.depth);
    spec.frame_count = a.frames;
    let frames = read_yuv(&spec)?;

    let shared = match &a.load_analysis {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(io_at(path))?;
            let (stream, _) = load_analysis(&bytes, level)?;
            let stream = if (stream.width, stream.height) == (a.width, a.height) {
                stream
            } else {
                scale_analysis(&stream, a.width, a.height)?
            };
            Some(stream)
        }
        None => None,
    };
    let policy = if shared.is_some() { ReusePolicy::new(level, refine) } else { ReusePolicy::off() };
    let result: EncodeOutput = encode_sequence(&frames, &cfg, shared.as_ref(), &policy)?;

    if let Some(path) = &a.save_analysis {
        write_file(path, &save_analysis(&result.analysis, ReuseLevel::Full)?)?;
    }
    if let Some(path) = &a.recon_out {
        write_yuv(&result.recon, path)?;
    }
    if let Some(path) = &a.stats_out {
        let mut w = csv::Writer::from_path(path)?;
        for row in frame_rows(&result.frames) {
            w.serialize(row)?;
        }
        w.flush().map_err(io_at(path))?;
    }
    writeln!(
        out,
        "{} frames, {:.2} kbps, Y-PSNR {:.3} dB, {} mode evaluations",
        result.stats.frames,
        result.bitrate_kbps(cfg.fps),
        result.stats.psnr_y,
        result.stats.mode_evaluations
    )?;
    Ok(())
}

fn ladder(a: LadderArgs, out: &mut dyn Write) -> Result<()> {
    let config = LadderConfig::load(&a.config)?;
    let spec = config.to_spec()?;
    let exec = a.threads.map_or_else(Threaded::available, Threaded::new);
    let base = a.config.parent().unwrap_or(Path::new("."));
    let inputs = config.load_inputs(base)?;
    let result = run_ladder(&inputs, &spec, &exec)?;
    if let Some(path) = &a.report {
        write_file(path, report::to_csv(&result)?.as_bytes())?;
    }
    out.write_all(report::to_table(&result).as_bytes())?;
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let registry = Registry::detect();
    let names = lab::select_names(&registry, a.filter.as_deref())?;
    if names.is_empty() {
        return Err(Error::Config(format!("no kernel matches {:?}", a.filter.unwrap_or_default())));
    }
    let reports = lab::run_all(&registry, a.filter.as_deref(), a.check_runs, a.runs, a.seed)?;
    let text = match a.format {
        Format::Table => lab::to_table(&reports),
        Format::Csv => lab::to_csv(&reports)?,
        Format::Json => lab::to_json(&reports)? + "\n",
    };
    out.write_all(text.as_bytes())?;
    if let Some(bad) = reports.iter().find(|r| !r.passed()) {
        return Err(Error::Format(format!("{} disagrees with scalar on {} inputs", bad.name, bad.mismatches)));
    }
    Ok(())
}

/// Reads `bitrate,psnr` rows; a non-numeric first row is taken as a header.
pub fn read_rd_csv(path: &Path) -> Result<Vec<RdPoint>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).and_then(|v| v.parse::<f64>().ok());
        match (field(0), field(1)) {
            (Some(rate), Some(psnr)) => points.push(RdPoint::new(rate, psnr)),
            _ if i == 0 => continue,
            _ => return Err(Error::Format(format!("{}: row {} is not bitrate,psnr", path.display(), i + 1))),
        }
    }
    Ok(points)
}

fn bdrate(a: BdrateArgs, out: &mut dyn Write) -> Result<()> {
    let anchor = read_rd_csv(&a.anchor)?;
    let test = read_rd_csv(&a.test)?;
    let bd = bd_metrics(&anchor, &test)?;
    writeln!(out, "BD-rate {:+.4}%", bd.bd_rate)?;
    writeln!(out, "BD-PSNR {:+.4} dB", bd.bd_psnr)?;
    Ok(())
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<()> {
    check_depth(a.depth)?;
    let frames = gen_synthetic(a.kind, a.width, a.height, a.frames, a.seed, a.depth)?;
    write_yuv(&frames, &a.out)?;
    writeln!(out, "wrote {} {}x{} frames of {} to {}", frames.len(), a.width, a.height, a.kind, a.out.display())?;
    Ok(())
}

fn mode_name(m: &CuMode) -> String {
    match m {
        CuMode::Intra(IntraMode::Dc) => "dc".into(),
        CuMode::Intra(IntraMode::Planar) => "planar".into(),
        CuMode::Intra(IntraMode::Horizontal) => "hor".into(),
        CuMode::Intra(IntraMode::Vertical) => "ver".into(),
        CuMode::Inter(mv) => format!("inter({},{})", mv.dx, mv.dy),
        CuMode::Skip(mv) => format!("skip({},{})", mv.dx, mv.dy),
        CuMode::Merge(mv) => format!("merge({},{})", mv.dx, mv.dy),
    }
}

/// `[a b c d]` for splits, the mode for leaves and `-` outside the picture.
fn tree_string(node: &CuNode) -> String {
    match &node.kind {
        CuKind::Leaf(m) => mode_name(m),
        CuKind::Outside => "-".into(),
        CuKind::Split(children) => {
            let inner: Vec<String> = children.iter().map(tree_string).collect();
            format!("[{}]", inner.join(" "))
        }
    }
}

fn dump(a: DumpArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = std::fs::read(&a.file).map_err(io_at(&a.file))?;
    let (stream, level): (AnalysisStream, ReuseLevel) = load_analysis(&bytes, ReuseLevel::Off)?;
    writeln!(
        out,
        "{}x{} {}-bit, {} frames, level {}",
        stream.width,
        stream.height,
        stream.bit_depth,
        stream.frames.len(),
        level
    )?;
    for (i, f) in stream.frames.iter().enumerate() {
        let (mut intra, mut inter, mut skip, mut merge) = (0, 0, 0, 0);
        for ctu in &f.ctus {
            ctu.for_each_leaf(0, 0, &mut |_, _, _, m| match m {
                CuMode::Intra(_) => intra += 1,
                CuMode::Inter(_) => inter += 1,
                CuMode::Skip(_) => skip += 1,
                CuMode::Merge(_) => merge += 1,
            });
        }
        writeln!(
            out,
            "frame {i}: {:?} qp {} ctus {} leaves intra {intra} inter {inter} skip {skip} merge {merge}",
            f.slice_type,
            f.qp,
            f.ctus.len()
        )?;
        if a.trees {
            for (c, ctu) in f.ctus.iter().enumerate() {
                writeln!(out, "  ctu {c}: {}", tree_string(ctu))?;
            }
        }
    }
    Ok(())
}
