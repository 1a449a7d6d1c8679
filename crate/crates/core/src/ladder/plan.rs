use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

use super::{LadderSpec, RungRate, Scheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MasterChoice {
    /// Lowest QP or highest bitrate.
    Highest,
    /// Median in rate order; the lower one for even counts.
    Median,
}

/// Index of the master among `rates`, or `None` for an empty tier.
pub fn pick_master(rates: &[RungRate], choice: MasterChoice) -> Option<usize> {
    if rates.is_empty() {
        return None;
    }
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&a, &b| rates[a].rate_key().total_cmp(&rates[b].rate_key()).then(a.cmp(&b)));
    Some(match choice {
        MasterChoice::Highest => order[order.len() - 1],
        MasterChoice::Median => order[(order.len() - 1) / 2],
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TierPlan {
    pub width: usize,
    pub height: usize,
    /// Rung ids in increasing rate order.
    pub rungs: Vec<usize>,
    /// Rung whose analysis the tier (and the next tier) consumes.
    pub master: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Same resolution: analysis used as is.
    IntraTier,
    /// Next resolution up: analysis scaled and refined.
    CrossTier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LadderPlan {
    /// Tiers in increasing resolution.
    pub tiers: Vec<TierPlan>,
    pub edges: Vec<Edge>,
    /// Rungs grouped into waves; a wave only depends on earlier waves.
    pub waves: Vec<Vec<usize>>,
}

impl LadderPlan {
    /// Edge feeding `rung`, if it consumes shared analysis.
    pub fn source(&self, rung: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.to == rung)
    }

    pub fn masters(&self) -> Vec<Option<usize>> {
        self.tiers.iter().map(|t| t.master).collect()
    }
}

fn dyadic(lo: (usize, usize), hi: (usize, usize)) -> bool {
    hi.0.is_multiple_of(lo.0) && hi.1.is_multiple_of(lo.1) && hi.0 / lo.0 == hi.1 / lo.1 && (hi.0 / lo.0).is_power_of_two() && hi.0 > lo.0
}

/// Groups rungs into tiers, picks masters and lays out the sharing DAG.
pub fn plan_ladder(spec: &LadderSpec) -> Result<LadderPlan> {
    spec.validate()?;
    let mut tiers: Vec<TierPlan> = Vec::new();
    for (id, r) in spec.rungs.iter().enumerate() {
        match tiers.iter_mut().find(|t| (t.width, t.height) == (r.width, r.height)) {
            Some(t) => t.rungs.push(id),
            None => tiers.push(TierPlan { width: r.width, height: r.height, rungs: vec![id], master: None }),
        }
    }
    tiers.sort_by_key(|t| (t.width * t.height, t.width));
    for t in &mut tiers {
        let first = &spec.rungs[t.rungs[0]].rate;
        if let Some(&bad) = t.rungs.iter().find(|&&id| !spec.rungs[id].rate.same_kind(first)) {
            return Err(Error::Config(format!(
                "tier {}x{} mixes QP and bitrate rungs ({})",
                t.width,
                t.height,
                spec.rungs[bad].label()
            )));
        }
        t.rungs.sort_by(|&a, &b| {
            spec.rungs[a].rate.rate_key().total_cmp(&spec.rungs[b].rate.rate_key()).then(a.cmp(&b))
        });
    }

    let choice = match spec.scheme {
        Scheme::Standalone => None,
        Scheme::SotaIntra | Scheme::SotaMulti => Some(MasterChoice::Highest),
        Scheme::ProposedIntra | Scheme::ProposedMulti | Scheme::InterRes { .. } => Some(MasterChoice::Median),
    };
    if let Some(choice) = choice {
        for t in &mut tiers {
            let rates: Vec<RungRate> = t.rungs.iter().map(|&id| spec.rungs[id].rate).collect();
            t.master = pick_master(&rates, choice).map(|i| t.rungs[i]);
        }
    }

    let cross_tier = matches!(spec.scheme, Scheme::InterRes { .. } | Scheme::SotaMulti | Scheme::ProposedMulti);
    if cross_tier {
        for w in tiers.windows(2) {
            if !dyadic((w[0].width, w[0].height), (w[1].width, w[1].height)) {
                return Err(Error::UnsupportedScale {
                    from: (w[0].width as u32, w[0].height as u32),
                    to: (w[1].width as u32, w[1].height as u32),
                });
            }
        }
    }

    let mut edges = Vec::new();
    for (k, t) in tiers.iter().enumerate() {
        let below = k.checked_sub(1).and_then(|b| tiers[b].master);
        match spec.scheme {
            Scheme::Standalone => {}
            Scheme::SotaIntra | Scheme::ProposedIntra | Scheme::SotaMulti | Scheme::ProposedMulti => {
                let m = t.master.expect("master picked for every tier");
                if let (true, Some(b)) = (cross_tier, below) {
                    edges.push(Edge { from: b, to: m, kind: EdgeKind::CrossTier });
                }
                for &id in t.rungs.iter().filter(|&&id| id != m) {
                    edges.push(Edge { from: m, to: id, kind: EdgeKind::IntraTier });
                }
            }
            Scheme::InterRes { .. } => {
                if let Some(b) = below {
                    for &id in &t.rungs {
                        edges.push(Edge { from: b, to: id, kind: EdgeKind::CrossTier });
                    }
                }
            }
        }
    }

    // Longest-path depth gives the waves.
    let n = spec.rungs.len();
    let mut depth = vec![0usize; n];
    let mut changed = true;
    let mut rounds = 0;
    while changed {
        changed = false;
        for e in &edges {
            if depth[e.to] < depth[e.from] + 1 {
                depth[e.to] = depth[e.from] + 1;
                changed = true;
            }
        }
        rounds += 1;
        if rounds > n + 1 {
            return Err(Error::Config("sharing graph has a cycle".into()));
        }
    }
    let max_depth = depth.iter().copied().max().unwrap_or(0);
    let mut waves = vec![Vec::new(); max_depth + 1];
    for (id, &d) in depth.iter().enumerate() {
        waves[d].push(id);
    }
    Ok(LadderPlan { tiers, edges, waves })
}
