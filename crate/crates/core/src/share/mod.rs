//! Reusing one encode's analysis in another.
//!
//! A master encode saves its decisions; dependent encodes load them, scale
//! them to their resolution if needed, and either take them as given or
//! refine them locally according to a [`ReusePolicy`].

mod archive;
mod scale;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::codec::{Candidate, CuKind, CuMode, CuNode, CuPlan, IntraMode, MotionVector, MvSource, SliceType, MAX_DEPTH};
use crate::error::{invalid, Result};

pub use archive::{load_analysis, save_analysis, ANALYSIS_MAGIC, ANALYSIS_VERSION};
pub use scale::{scale_analysis, scale_ctu};

/// How much of the shared analysis a dependent encode takes over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReuseLevel {
    /// Ignore the shared analysis.
    #[default]
    Off,
    /// Split flags and intra/inter class; directions and vectors re-derived.
    Structure,
    /// Same information as [`ReuseLevel::Structure`] for this encoder.
    StructureExtended,
    /// Split flags, modes and motion vectors, subject to [`RefineConfig`].
    Full,
}

impl ReuseLevel {
    pub fn as_u8(self) -> u8 {
        match self {
            ReuseLevel::Off => 0,
            ReuseLevel::Structure => 4,
            ReuseLevel::StructureExtended => 6,
            ReuseLevel::Full => 10,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(ReuseLevel::Off),
            4 => Ok(ReuseLevel::Structure),
            6 => Ok(ReuseLevel::StructureExtended),
            10 => Ok(ReuseLevel::Full),
            _ => Err(invalid!("reuse level {v} not one of 0, 4, 6, 10")),
        }
    }
}

impl fmt::Display for ReuseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Local refinement on top of fully reused analysis.
///
/// * `intra` 0..=4: 0 keeps the mode, 1 re-tries all directions at the
///   current and next depth for 16x16 CUs, 2 additionally re-tries all
///   directions for angular CUs, 3 re-tries all directions everywhere, 4
///   re-analyses intra CUs from scratch.
/// * `inter` 0..=3: 0 keeps mode and vector, 1 re-tries all inter modes at
///   the current and next depth for 16x16 CUs and refines vectors, 2
///   additionally re-tries all inter modes for skipped CUs, 3 re-tries all
///   inter modes everywhere.
/// * `mv` 1..=3: vector refinement centers when `inter >= 1`. 1 searches
///   around the shared vector, 2 adds the neighbour predictor, 3 adds the
///   co-located vector of the previous shared frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RefineConfig {
    pub intra: u8,
    pub inter: u8,
    pub mv: u8,
}

/// Search radius around each refinement center.
pub const REFINE_RADIUS: i32 = 2;

impl RefineConfig {
    pub const OFF: RefineConfig = RefineConfig { intra: 0, inter: 0, mv: 1 };

    pub fn new(intra: u8, inter: u8, mv: u8) -> Result<Self> {
        let r = RefineConfig { intra, inter, mv };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.intra > 4 {
            return Err(invalid!("intra refinement {} outside 0..=4", self.intra));
        }
        if self.inter > 3 {
            return Err(invalid!("inter refinement {} outside 0..=3", self.inter));
        }
        if !(1..=3).contains(&self.mv) {
            return Err(invalid!("mv refinement {} outside 1..=3", self.mv));
        }
        Ok(())
    }
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig::OFF
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ReusePolicy {
    pub level: ReuseLevel,
    pub refine: RefineConfig,
}

impl ReusePolicy {
    pub fn off() -> Self {
        ReusePolicy::default()
    }

    pub fn new(level: ReuseLevel, refine: RefineConfig) -> Self {
        ReusePolicy { level, refine }
    }
}

/// Depth of a 16x16 CU, one above the smallest size.
const REFINE_DEPTH: u8 = MAX_DEPTH - 1;

/// Plan for the CU described by shared `node`.
pub fn plan_cu<'a>(
    policy: &ReusePolicy,
    node: &'a CuNode,
    slice: SliceType,
    search_range: i32,
    colocated: Option<MotionVector>,
) -> CuPlan<'a> {
    match (&node.kind, policy.level) {
        (_, ReuseLevel::Off) | (CuKind::Outside, _) => CuPlan::Free,
        (CuKind::Split(c), _) => CuPlan::ForceSplit(c),
        (CuKind::Leaf(CuMode::Intra(_)), ReuseLevel::Structure | ReuseLevel::StructureExtended) => {
            CuPlan::Evaluate { candidates: Candidate::all_intra(), children: None }
        }
        (CuKind::Leaf(_), ReuseLevel::Structure | ReuseLevel::StructureExtended) => {
            if slice == SliceType::I {
                return CuPlan::Evaluate { candidates: Candidate::all_intra(), children: None };
            }
            CuPlan::Evaluate { candidates: Candidate::all_inter(Candidate::full_search(search_range)), children: None }
        }
        (CuKind::Leaf(CuMode::Intra(m)), ReuseLevel::Full) => refine_intra(policy.refine.intra, *m, node.depth),
        (CuKind::Leaf(mode), ReuseLevel::Full) => {
            if slice == SliceType::I {
                return CuPlan::Evaluate { candidates: Candidate::all_intra(), children: None };
            }
            refine_inter(policy.refine.inter, policy.refine.mv, mode, node.depth, colocated)
        }
    }
}

fn evaluate(candidates: Vec<Candidate>) -> CuPlan<'static> {
    CuPlan::Evaluate { candidates, children: None }
}

fn with_next_depth(candidates: Vec<Candidate>) -> CuPlan<'static> {
    CuPlan::Evaluate { children: Some(candidates.clone()), candidates }
}

pub fn refine_intra(level: u8, mode: IntraMode, depth: u8) -> CuPlan<'static> {
    match level {
        0 => evaluate(vec![Candidate::Intra(mode)]),
        1 | 2 if depth == REFINE_DEPTH => with_next_depth(Candidate::all_intra()),
        2 if mode.is_angular() => evaluate(Candidate::all_intra()),
        1 | 2 => evaluate(vec![Candidate::Intra(mode)]),
        3 => evaluate(Candidate::all_intra()),
        _ => CuPlan::Free,
    }
}

pub fn refine_inter(level: u8, mv_level: u8, mode: &CuMode, depth: u8, colocated: Option<MotionVector>) -> CuPlan<'static> {
    let mv = mode.mv().unwrap_or_default();
    // Skip and merge vectors are re-derived from neighbours, as a decoder
    // would, so the shared vector only matters for explicit inter.
    let forced = |src: MvSource| match mode {
        CuMode::Skip(_) => Candidate::Skip(MvSource::Predicted),
        CuMode::Merge(_) => Candidate::Merge(MvSource::Predicted),
        _ => Candidate::Inter(src),
    };
    if level == 0 {
        return evaluate(vec![forced(MvSource::Fixed(mv))]);
    }
    let search = refine_mv(mv_level, mv, colocated);
    match level {
        1 | 2 if depth == REFINE_DEPTH => with_next_depth(Candidate::all_inter(search)),
        2 if matches!(mode, CuMode::Skip(_)) => evaluate(Candidate::all_inter(search)),
        1 | 2 => evaluate(vec![forced(search)]),
        _ => evaluate(Candidate::all_inter(search)),
    }
}

/// Search centers for vector refinement around shared `mv`.
pub fn refine_mv(mv_level: u8, mv: MotionVector, colocated: Option<MotionVector>) -> MvSource {
    let mut centers = vec![mv];
    if mv_level >= 3 {
        if let Some(c) = colocated {
            centers.push(c);
        }
    }
    MvSource::Search { centers, with_predictor: mv_level >= 2, radius: REFINE_RADIUS }
}
