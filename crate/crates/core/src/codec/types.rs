use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

pub const CTU_SIZE: usize = 64;
pub const MAX_DEPTH: u8 = 3;
pub const MIN_CU_SIZE: usize = CTU_SIZE >> MAX_DEPTH;
pub const MAX_QP: u8 = 51;

#[inline]
pub fn cu_size(depth: u8) -> usize {
    CTU_SIZE >> depth
}

/// Integer-pel displacement; the reference block sits at `pos + mv`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        MotionVector { dx, dy }
    }

    pub fn l1(&self) -> i32 {
        self.dx.abs() + self.dy.abs()
    }

    pub fn scaled(&self, factor: i32) -> Self {
        MotionVector { dx: self.dx * factor, dy: self.dy * factor }
    }
}

impl core::ops::Sub for MotionVector {
    type Output = MotionVector;
    fn sub(self, o: MotionVector) -> MotionVector {
        MotionVector { dx: self.dx - o.dx, dy: self.dy - o.dy }
    }
}

/// Intra directions in canonical (tie-break) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntraMode {
    Dc = 0,
    Planar = 1,
    Horizontal = 2,
    Vertical = 3,
}

impl IntraMode {
    pub const ALL: [IntraMode; 4] = [IntraMode::Dc, IntraMode::Planar, IntraMode::Horizontal, IntraMode::Vertical];

    /// Horizontal and vertical play the role of angular modes.
    pub fn is_angular(self) -> bool {
        matches!(self, IntraMode::Horizontal | IntraMode::Vertical)
    }

    pub fn from_index(i: u8) -> Option<Self> {
        IntraMode::ALL.get(usize::from(i)).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CuMode {
    Intra(IntraMode),
    Inter(MotionVector),
    /// Merge-derived motion, no residual.
    Skip(MotionVector),
    /// Merge-derived motion with residual.
    Merge(MotionVector),
}

impl CuMode {
    pub fn is_intra(&self) -> bool {
        matches!(self, CuMode::Intra(_))
    }

    pub fn mv(&self) -> Option<MotionVector> {
        match *self {
            CuMode::Intra(_) => None,
            CuMode::Inter(mv) | CuMode::Skip(mv) | CuMode::Merge(mv) => Some(mv),
        }
    }

    pub fn with_mv(self, mv: MotionVector) -> Self {
        match self {
            CuMode::Intra(m) => CuMode::Intra(m),
            CuMode::Inter(_) => CuMode::Inter(mv),
            CuMode::Skip(_) => CuMode::Skip(mv),
            CuMode::Merge(_) => CuMode::Merge(mv),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CuKind {
    Leaf(CuMode),
    Split(Box<[CuNode; 4]>),
    /// Entirely outside the picture; carries no decision.
    Outside,
}

/// Quad-tree node. Children of a split are in z-order
/// (top-left, top-right, bottom-left, bottom-right).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CuNode {
    pub depth: u8,
    pub kind: CuKind,
}

impl CuNode {
    pub fn leaf(depth: u8, mode: CuMode) -> Self {
        CuNode { depth, kind: CuKind::Leaf(mode) }
    }

    pub fn outside(depth: u8) -> Self {
        CuNode { depth, kind: CuKind::Outside }
    }

    pub fn split(depth: u8, children: [CuNode; 4]) -> Self {
        CuNode { depth, kind: CuKind::Split(Box::new(children)) }
    }

    pub fn size(&self) -> usize {
        cu_size(self.depth)
    }

    pub fn is_split(&self) -> bool {
        matches!(self.kind, CuKind::Split(_))
    }

    pub fn mode(&self) -> Option<&CuMode> {
        match &self.kind {
            CuKind::Leaf(m) => Some(m),
            _ => None,
        }
    }

    pub fn children(&self) -> Option<&[CuNode; 4]> {
        match &self.kind {
            CuKind::Split(c) => Some(c),
            _ => None,
        }
    }

    /// Visits leaves in z-order with their luma position relative to `(x, y)`.
    pub fn for_each_leaf(&self, x: usize, y: usize, f: &mut impl FnMut(usize, usize, &CuNode, &CuMode)) {
        match &self.kind {
            CuKind::Leaf(m) => f(x, y, self, m),
            CuKind::Split(children) => {
                let h = self.size() / 2;
                for (i, c) in children.iter().enumerate() {
                    c.for_each_leaf(x + (i % 2) * h, y + (i / 2) * h, f);
                }
            }
            CuKind::Outside => {}
        }
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.for_each_leaf(0, 0, &mut |_, _, _, _| n += 1);
        n
    }

    /// Structural invariants: depths increase by one per level, no split at
    /// the maximum depth.
    pub fn validate(&self) -> Result<()> {
        if self.depth > MAX_DEPTH {
            return Err(invalid!("CU depth {} beyond {}", self.depth, MAX_DEPTH));
        }
        if let CuKind::Split(children) = &self.kind {
            if self.depth == MAX_DEPTH {
                return Err(invalid!("split at maximum depth"));
            }
            for c in children.iter() {
                if c.depth != self.depth + 1 {
                    return Err(invalid!("child depth {} under parent depth {}", c.depth, self.depth));
                }
                c.validate()?;
            }
        }
        Ok(())
    }
}

pub type CtuAnalysis = CuNode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SliceType {
    I,
    P,
}

/// Per-frame decisions: CTUs in raster order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FrameAnalysis {
    pub ctus: Vec<CtuAnalysis>,
    pub slice_type: SliceType,
    pub qp: u8,
}

pub fn ctu_grid(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(CTU_SIZE), height.div_ceil(CTU_SIZE))
}

/// Where a square region sits relative to the picture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    Inside,
    Partial,
    Outside,
}

pub fn coverage(x: usize, y: usize, size: usize, width: usize, height: usize) -> Coverage {
    if x >= width || y >= height {
        Coverage::Outside
    } else if x + size <= width && y + size <= height {
        Coverage::Inside
    } else {
        Coverage::Partial
    }
}

/// A sequence of frame analyses for one picture geometry.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AnalysisStream {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub frames: Vec<FrameAnalysis>,
}

impl AnalysisStream {
    pub fn new(width: usize, height: usize, bit_depth: u8) -> Self {
        AnalysisStream { width, height, bit_depth, frames: Vec::new() }
    }

    /// Checks CTU counts and that every tree agrees with the picture
    /// boundary: partial nodes split, outside nodes marked outside.
    pub fn validate(&self) -> Result<()> {
        let (cols, rows) = ctu_grid(self.width, self.height);
        for (i, f) in self.frames.iter().enumerate() {
            if f.ctus.len() != cols * rows {
                return Err(invalid!("frame {i}: {} CTUs for a {cols}x{rows} grid", f.ctus.len()));
            }
            if f.qp > MAX_QP {
                return Err(invalid!("frame {i}: qp {} out of range", f.qp));
            }
            for (c, ctu) in f.ctus.iter().enumerate() {
                if ctu.depth != 0 {
                    return Err(invalid!("frame {i} CTU {c}: root depth {}", ctu.depth));
                }
                ctu.validate()?;
                check_boundary(ctu, (c % cols) * CTU_SIZE, (c / cols) * CTU_SIZE, self.width, self.height)
                    .map_err(|e| invalid!("frame {i} CTU {c}: {e}"))?;
                if f.slice_type == SliceType::I {
                    let mut inter = false;
                    ctu.for_each_leaf(0, 0, &mut |_, _, _, m| inter |= !m.is_intra());
                    if inter {
                        return Err(invalid!("frame {i}: inter CU in an I slice"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_boundary(node: &CuNode, x: usize, y: usize, w: usize, h: usize) -> Result<()> {
    let size = node.size();
    match (coverage(x, y, size, w, h), &node.kind) {
        (Coverage::Outside, CuKind::Outside) => Ok(()),
        (Coverage::Outside, _) => Err(invalid!("node at ({x},{y}) lies outside the picture")),
        (_, CuKind::Outside) => Err(invalid!("node at ({x},{y}) marked outside but covers the picture")),
        (Coverage::Partial, CuKind::Leaf(_)) => Err(invalid!("leaf at ({x},{y}) crosses the picture edge")),
        (_, CuKind::Leaf(_)) => Ok(()),
        (_, CuKind::Split(children)) => {
            let half = size / 2;
            for (i, c) in children.iter().enumerate() {
                check_boundary(c, x + (i % 2) * half, y + (i / 2) * half, w, h)?;
            }
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateMode {
    Cqp { qp: u8 },
    Cvbr { target_kbps: f64, cap_factor: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncodeConfig {
    pub rate: RateMode,
    /// Full-search radius in integer pels; also bounds every motion vector.
    pub search_range: i32,
    /// Multiplier on `2^((qp - 12) / 3)`.
    pub lambda_scale: f64,
    /// Intra period in frames; 0 means only the first frame is intra.
    pub gop: usize,
    /// Frame rate used to convert bits to kbps.
    pub fps: f64,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        EncodeConfig { rate: RateMode::Cqp { qp: 30 }, search_range: 8, lambda_scale: 0.57, gop: 0, fps: 30.0 }
    }
}

impl EncodeConfig {
    pub fn cqp(qp: u8) -> Self {
        EncodeConfig { rate: RateMode::Cqp { qp }, ..Default::default() }
    }

    pub fn cvbr(target_kbps: f64, cap_factor: f64) -> Self {
        EncodeConfig { rate: RateMode::Cvbr { target_kbps, cap_factor }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.rate {
            RateMode::Cqp { qp } if qp > MAX_QP => return Err(invalid!("qp {qp} outside [0, {MAX_QP}]")),
            RateMode::Cvbr { target_kbps, cap_factor } => {
                if !(target_kbps > 0.0 && target_kbps.is_finite()) {
                    return Err(invalid!("target bitrate must be positive"));
                }
                if !(cap_factor >= 1.0) {
                    return Err(invalid!("cap factor must be >= 1"));
                }
            }
            _ => {}
        }
        if self.search_range < 0 {
            return Err(invalid!("search range must be >= 0"));
        }
        if !(self.lambda_scale > 0.0 && self.lambda_scale.is_finite()) {
            return Err(invalid!("lambda scale must be positive"));
        }
        if !(self.fps > 0.0) {
            return Err(invalid!("fps must be positive"));
        }
        Ok(())
    }

    /// Rate-distortion multiplier for SSE distortion.
    pub fn lambda(&self, qp: u8) -> f64 {
        self.lambda_scale * libm::pow(2.0, (f64::from(qp) - 12.0) / 3.0)
    }

    pub fn slice_type(&self, index: usize) -> SliceType {
        if index == 0 || (self.gop > 0 && index.is_multiple_of(self.gop)) {
            SliceType::I
        } else {
            SliceType::P
        }
    }

    /// Rate in kbps for `bits` spread over `frames` frames.
    pub fn kbps(&self, bits: u64, frames: usize) -> f64 {
        if frames == 0 {
            return 0.0;
        }
        bits as f64 * self.fps / frames as f64 / 1000.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EncodeStats {
    /// Wall-clock time, filled in by callers that own a clock.
    pub wall_ns: u64,
    /// RD-cost evaluations: one per mode candidate and per motion-search point.
    pub mode_evaluations: u64,
    pub bits: u64,
    /// Mean per-frame luma PSNR.
    pub psnr_y: f64,
    pub frames: usize,
}
