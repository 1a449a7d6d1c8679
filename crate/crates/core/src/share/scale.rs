use alloc::vec::Vec;

use crate::codec::{ctu_grid, AnalysisStream, CuKind, CuNode, FrameAnalysis};
use crate::error::{Error, Result};

/// Maps analysis to a resolution `2^k` times larger in both dimensions.
///
/// Every node keeps its decision and covers four times the area: a node at
/// depth `d` becomes one at depth `d - 1`, a depth-0 leaf becomes four CTU
/// leaves, and motion vectors scale with the picture.
pub fn scale_analysis(stream: &AnalysisStream, width: usize, height: usize) -> Result<AnalysisStream> {
    let unsupported = || Error::UnsupportedScale {
        from: (stream.width as u32, stream.height as u32),
        to: (width as u32, height as u32),
    };
    if stream.width == 0 || stream.height == 0 || !width.is_multiple_of(stream.width) || !height.is_multiple_of(stream.height) {
        return Err(unsupported());
    }
    let (fx, fy) = (width / stream.width, height / stream.height);
    if fx != fy || !fx.is_power_of_two() {
        return Err(unsupported());
    }
    let mut cur = stream.clone();
    let mut f = fx;
    while f > 1 {
        cur = double(&cur);
        f /= 2;
    }
    Ok(cur)
}

fn double(s: &AnalysisStream) -> AnalysisStream {
    let (w, h) = (s.width * 2, s.height * 2);
    let (cols, rows) = ctu_grid(w, h);
    let (half_cols, _) = ctu_grid(s.width, s.height);
    let frames = s
        .frames
        .iter()
        .map(|f| {
            let mut ctus = Vec::with_capacity(cols * rows);
            for cy in 0..rows {
                for cx in 0..cols {
                    let src = &f.ctus[(cy / 2) * half_cols + cx / 2];
                    ctus.push(scale_ctu(src, (cx % 2) + 2 * (cy % 2)));
                }
            }
            FrameAnalysis { ctus, slice_type: f.slice_type, qp: f.qp }
        })
        .collect();
    AnalysisStream { width: w, height: h, bit_depth: s.bit_depth, frames }
}

/// Full-resolution CTU covering quadrant `q` (z-order) of half-resolution
/// CTU `half`.
pub fn scale_ctu(half: &CuNode, q: usize) -> CuNode {
    debug_assert_eq!(half.depth, 0);
    match &half.kind {
        CuKind::Split(children) => lift(&children[q]),
        CuKind::Leaf(m) => CuNode::leaf(0, m.mv().map_or(*m, |mv| m.with_mv(mv.scaled(2)))),
        CuKind::Outside => CuNode::outside(0),
    }
}

fn lift(node: &CuNode) -> CuNode {
    let depth = node.depth - 1;
    match &node.kind {
        CuKind::Split(c) => CuNode::split(depth, [lift(&c[0]), lift(&c[1]), lift(&c[2]), lift(&c[3])]),
        CuKind::Leaf(m) => CuNode::leaf(depth, m.mv().map_or(*m, |mv| m.with_mv(mv.scaled(2)))),
        CuKind::Outside => CuNode::outside(depth),
    }
}
