//! TOML ladder descriptions.
//!
//! ```toml
//! scheme = "proposed-multi"
//! reuse_level = 10
//! frames = 32
//!
//! [source]
//! kind = "mixed"
//!
//! [[tiers]]
//! width = 128
//! height = 128
//! qps = [22, 26, 30, 34, 38]
//! ```
//!
//! Only the largest tier needs source frames; smaller tiers are produced by
//! repeated halving unless they name their own `input`.

use std::path::{Path, PathBuf};

use abrshare_core::codec::EncodeConfig;
use abrshare_core::frame::Frame;
use abrshare_core::ladder::{LadderSpec, Rung, Scheme};
use abrshare_core::share::{RefineConfig, ReuseLevel};
use serde::Deserialize;

use crate::downscale::downscale_dyadic;
use crate::error::{io_at, Error, Result};
use crate::synth::{gen_synthetic, SynthKind};
use crate::yuv::{read_yuv, RawVideoSpec};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RefineSection {
    pub intra: u8,
    pub inter: u8,
    pub mv: u8,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Synthetic generator, e.g. `"mixed"` or `"pan:2,0"`.
    pub kind: Option<String>,
    /// Raw 4:2:0 file at the largest tier resolution.
    pub input: Option<PathBuf>,
    #[serde(default = "default_depth")]
    pub depth: u8,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TierSection {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub qps: Vec<u8>,
    #[serde(default)]
    pub kbps: Vec<f64>,
    pub input: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub scheme: String,
    #[serde(default = "default_level")]
    pub reuse_level: u8,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_range")]
    pub search_range: i32,
    #[serde(default = "default_lambda")]
    pub lambda_scale: f64,
    #[serde(default)]
    pub gop: usize,
    #[serde(default = "default_cap")]
    pub cap_factor: f64,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default)]
    pub seed: u64,
    pub refine: Option<RefineSection>,
    pub source: SourceSection,
    pub tiers: Vec<TierSection>,
}

fn default_depth() -> u8 {
    8
}
fn default_level() -> u8 {
    10
}
fn default_fps() -> f64 {
    EncodeConfig::default().fps
}
fn default_range() -> i32 {
    EncodeConfig::default().search_range
}
fn default_lambda() -> f64 {
    EncodeConfig::default().lambda_scale
}
fn default_cap() -> f64 {
    4.0
}
fn default_frames() -> usize {
    32
}

pub fn parse_scheme(name: &str, refine: RefineConfig) -> Result<Scheme> {
    Ok(match name {
        "standalone" => Scheme::Standalone,
        "sota-intra" => Scheme::SotaIntra,
        "proposed-intra" => Scheme::ProposedIntra,
        "inter-res" => Scheme::InterRes { refine },
        "sota-multi" => Scheme::SotaMulti,
        "proposed-multi" => Scheme::ProposedMulti,
        other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
    })
}

impl LadderConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        Self::parse(&text)
    }

    pub fn refine(&self) -> Result<RefineConfig> {
        match &self.refine {
            Some(r) => Ok(RefineConfig::new(r.intra, r.inter, r.mv)?),
            None => Ok(RefineConfig { intra: 3, inter: 3, mv: 2 }),
        }
    }

    pub fn to_spec(&self) -> Result<LadderSpec> {
        let refine = self.refine()?;
        let mut rungs = Vec::new();
        for t in &self.tiers {
            if t.qps.is_empty() == t.kbps.is_empty() {
                return Err(Error::Config(format!("tier {}x{} needs exactly one of qps or kbps", t.width, t.height)));
            }
            rungs.extend(t.qps.iter().map(|&qp| Rung::cqp(t.width, t.height, qp)));
            rungs.extend(t.kbps.iter().map(|&k| Rung::cvbr(t.width, t.height, k)));
        }
        let mut spec = LadderSpec::new(rungs, parse_scheme(&self.scheme, refine)?);
        spec.reuse_level = ReuseLevel::from_u8(self.reuse_level)?;
        spec.refine = refine;
        spec.cap_factor = self.cap_factor;
        spec.encoder = EncodeConfig {
            search_range: self.search_range,
            lambda_scale: self.lambda_scale,
            gop: self.gop,
            fps: self.fps,
            ..EncodeConfig::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Frames for every tier. Relative paths resolve against `base`.
    pub fn load_inputs(&self, base: &Path) -> Result<Vec<Vec<Frame>>> {
        let mut tiers: Vec<&TierSection> = self.tiers.iter().collect();
        tiers.sort_by_key(|t| std::cmp::Reverse(t.width * t.height));
        let top = tiers.first().ok_or_else(|| Error::Config("no tiers".into()))?;
        let depth = self.source.depth;
        let read = |path: &Path, w: usize, h: usize| {
            let mut spec = RawVideoSpec::new(base.join(path), w, h, depth);
            spec.frame_count = Some(self.frames);
            read_yuv(&spec)
        };
        let source = match (&top.input, &self.source.input, &self.source.kind) {
            (Some(p), _, _) | (None, Some(p), None) => read(p, top.width, top.height)?,
            (None, None, Some(kind)) => {
                gen_synthetic(kind.parse::<SynthKind>()?, top.width, top.height, self.frames, self.seed, depth)?
            }
            _ => return Err(Error::Config("[source] needs exactly one of kind or input".into())),
        };
        let mut out = vec![source];
        for t in &tiers[1..] {
            let prev = out.last().expect("nonempty");
            if (prev[0].width, prev[0].height) == (t.width, t.height) {
                continue;
            }
            let frames = match &t.input {
                Some(p) => read(p, t.width, t.height)?,
                None => {
                    let mut cur = prev.clone();
                    while cur[0].width > t.width && cur[0].width % 2 == 0 && cur[0].height % 2 == 0 {
                        cur = downscale_dyadic(&cur)?;
                    }
                    if (cur[0].width, cur[0].height) != (t.width, t.height) {
                        return Err(Error::Config(format!(
                            "tier {}x{} is not a dyadic reduction of {}x{}; give it an input",
                            t.width, t.height, prev[0].width, prev[0].height
                        )));
                    }
                    cur
                }
            };
            out.push(frames);
        }
        Ok(out)
    }
}
