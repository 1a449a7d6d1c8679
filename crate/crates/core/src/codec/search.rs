use alloc::vec::Vec;

use crate::frame::Plane;
use crate::kernels::CostKernels;

use super::predict::{clamp_mv, mv_in_picture};
use super::rate::mvd_bits;
use super::types::MotionVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchResult {
    pub mv: MotionVector,
    /// `SATD + lambda * mvd_bits`.
    pub cost: f64,
    pub satd: u64,
    /// Distinct positions evaluated.
    pub points: u64,
}

/// Parameters shared by every search in a frame.
#[derive(Clone, Copy, Debug)]
pub struct SearchArea<'a> {
    pub src: &'a Plane,
    pub reference: &'a Plane,
    pub bit_depth: u8,
    /// Hard bound on each vector component.
    pub limit: i32,
    pub lambda: f64,
}

/// Integer full search of a square block over `(2 * radius + 1)^2` windows
/// around each center. Ties go to the smaller `|mv|`, then raster order.
#[allow(clippy::too_many_arguments)]
pub fn motion_search(
    kernels: &CostKernels,
    area: &SearchArea<'_>,
    x: usize,
    y: usize,
    size: usize,
    centers: &[MotionVector],
    radius: i32,
    pred: MotionVector,
) -> SearchResult {
    let (w, h) = (area.src.width(), area.src.height());
    let mut points: Vec<MotionVector> = Vec::with_capacity(centers.len() * ((2 * radius + 1) * (2 * radius + 1)) as usize);
    for &c in centers {
        let c = clamp_mv(x, y, size, w, h, area.limit, c);
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let mv = MotionVector::new(c.dx + dx, c.dy + dy);
                if mv.dx.abs() <= area.limit && mv.dy.abs() <= area.limit && mv_in_picture(x, y, size, w, h, mv) {
                    points.push(mv);
                }
            }
        }
    }
    if centers.len() > 1 {
        points.sort_unstable_by_key(|m| (m.dy, m.dx));
        points.dedup();
    }

    let cur = area.src.block(x, y, size, size, area.bit_depth);
    let mut best: Option<SearchResult> = None;
    for &mv in &points {
        let rx = (x as i64 + i64::from(mv.dx)) as usize;
        let ry = (y as i64 + i64::from(mv.dy)) as usize;
        let satd = kernels.satd(&cur, &area.reference.block(rx, ry, size, size, area.bit_depth));
        let cost = satd as f64 + area.lambda * mvd_bits(mv - pred) as f64;
        let better = match &best {
            None => true,
            Some(b) => {
                cost < b.cost
                    || (cost == b.cost && (mv.l1(), mv.dy, mv.dx) < (b.mv.l1(), b.mv.dy, b.mv.dx))
            }
        };
        if better {
            best = Some(SearchResult { mv, cost, satd, points: 0 });
        }
    }
    let mut out = best.unwrap_or(SearchResult { mv: MotionVector::ZERO, cost: f64::INFINITY, satd: u64::MAX, points: 0 });
    out.points = points.len() as u64;
    out
}
