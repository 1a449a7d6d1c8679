//! Ladder runs: which rung's analysis feeds which, in what order, and what
//! it costs compared with encoding every rung on its own.

mod plan;
mod run;

pub use plan::{pick_master, plan_ladder, Edge, EdgeKind, LadderPlan, MasterChoice, TierPlan};
pub use run::{makespan, run_ladder, run_ladder_with_baseline, Executor, LadderReport, RungReport, Sequential, TierDelta};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::codec::EncodeConfig;
use crate::error::{Error, Result};
use crate::share::{RefineConfig, ReuseLevel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RungRate {
    Cqp { qp: u8 },
    Cvbr { kbps: f64 },
}

impl RungRate {
    /// Sort key increasing with expected bitrate.
    fn rate_key(&self) -> f64 {
        match *self {
            RungRate::Cqp { qp } => -f64::from(qp),
            RungRate::Cvbr { kbps } => kbps,
        }
    }

    fn same_kind(&self, o: &RungRate) -> bool {
        matches!((self, o), (RungRate::Cqp { .. }, RungRate::Cqp { .. }) | (RungRate::Cvbr { .. }, RungRate::Cvbr { .. }))
    }
}

impl fmt::Display for RungRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RungRate::Cqp { qp } => write!(f, "qp{qp}"),
            RungRate::Cvbr { kbps } => write!(f, "{kbps}kbps"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rung {
    pub width: usize,
    pub height: usize,
    pub rate: RungRate,
}

impl Rung {
    pub fn cqp(width: usize, height: usize, qp: u8) -> Self {
        Rung { width, height, rate: RungRate::Cqp { qp } }
    }

    pub fn cvbr(width: usize, height: usize, kbps: f64) -> Self {
        Rung { width, height, rate: RungRate::Cvbr { kbps } }
    }

    pub fn label(&self) -> String {
        alloc::format!("{}x{}@{}", self.width, self.height, self.rate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Every rung encoded on its own.
    Standalone,
    /// Per tier, the highest-quality rung is the master.
    SotaIntra,
    /// Per tier, the median rung is the master.
    ProposedIntra,
    /// Every rung of a tier consumes the scaled analysis of the previous
    /// tier's median rung; the lowest tier is encoded standalone.
    InterRes { refine: RefineConfig },
    /// Highest-quality masters, each tier master fed by the one below.
    SotaMulti,
    /// Median masters, each tier master fed by the one below.
    ProposedMulti,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Standalone => "standalone",
            Scheme::SotaIntra => "sota-intra",
            Scheme::ProposedIntra => "proposed-intra",
            Scheme::InterRes { .. } => "inter-res",
            Scheme::SotaMulti => "sota-multi",
            Scheme::ProposedMulti => "proposed-multi",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderSpec {
    pub rungs: Vec<Rung>,
    pub scheme: Scheme,
    /// Reuse level for every sharing edge.
    pub reuse_level: ReuseLevel,
    /// Refinement on cross-tier edges of the multi-tier schemes.
    pub refine: RefineConfig,
    /// Settings shared by all rungs; the rate mode is replaced per rung.
    pub encoder: EncodeConfig,
    /// Cap factor for CVBR rungs.
    pub cap_factor: f64,
}

impl LadderSpec {
    pub fn new(rungs: Vec<Rung>, scheme: Scheme) -> Self {
        LadderSpec {
            rungs,
            scheme,
            reuse_level: ReuseLevel::Full,
            refine: RefineConfig { intra: 3, inter: 3, mv: 2 },
            encoder: EncodeConfig::default(),
            cap_factor: 4.0,
        }
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Self {
        LadderSpec { scheme, ..self.clone() }
    }

    pub fn rung_config(&self, rung: &Rung) -> EncodeConfig {
        let rate = match rung.rate {
            RungRate::Cqp { qp } => crate::codec::RateMode::Cqp { qp },
            RungRate::Cvbr { kbps } => crate::codec::RateMode::Cvbr { target_kbps: kbps, cap_factor: self.cap_factor },
        };
        EncodeConfig { rate, ..self.encoder }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rungs.is_empty() {
            return Err(Error::Config("ladder has no rungs".into()));
        }
        self.refine.validate()?;
        if let Scheme::InterRes { refine } = self.scheme {
            refine.validate()?;
        }
        for r in &self.rungs {
            if r.width == 0 || r.height == 0 {
                return Err(Error::Config(alloc::format!("rung {} has an empty picture", r.label())));
            }
            self.rung_config(r).validate()?;
        }
        Ok(())
    }
}
