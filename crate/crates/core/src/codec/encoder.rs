use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::frame::{Frame, Plane};
use crate::kernels::CostKernels;
use crate::metrics::psnr_y;
use crate::share::{plan_cu, ReuseLevel, ReusePolicy};

use super::predict::{chroma_mv, clamp_mv, inter_predict, intra_predict};
use super::quant::{dequantize_with_step, qstep, quantize_with_step};
use super::rate::{rate_model, residual_bits, SKIP_BITS, SPLIT_FLAG_BITS};
use super::ratecontrol::RateController;
use super::search::{motion_search, SearchArea};
use super::types::*;

/// Where a candidate's motion vector comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MvSource {
    Fixed(MotionVector),
    /// Lower median of the left, top and top-right neighbours.
    Predicted,
    /// Full search of `radius` around each center, optionally also around
    /// the neighbour predictor.
    Search { centers: Vec<MotionVector>, with_predictor: bool, radius: i32 },
}

/// One RD candidate at a fixed CU position and size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Candidate {
    Skip(MvSource),
    Merge(MvSource),
    Inter(MvSource),
    Intra(IntraMode),
}

impl Candidate {
    pub fn all_intra() -> Vec<Candidate> {
        IntraMode::ALL.iter().map(|&m| Candidate::Intra(m)).collect()
    }

    pub fn all_inter(search: MvSource) -> Vec<Candidate> {
        vec![Candidate::Skip(MvSource::Predicted), Candidate::Merge(MvSource::Predicted), Candidate::Inter(search)]
    }

    pub fn full_search(range: i32) -> MvSource {
        MvSource::Search { centers: vec![MotionVector::ZERO], with_predictor: false, radius: range }
    }

    /// Candidate set of an unconstrained encode, in tie-break order.
    pub fn standalone(slice: SliceType, search_range: i32) -> Vec<Candidate> {
        let mut c = Vec::with_capacity(7);
        if slice == SliceType::P {
            c.extend(Candidate::all_inter(Candidate::full_search(search_range)));
        }
        c.extend(Candidate::all_intra());
        c
    }
}

/// How a CU is analysed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CuPlan<'a> {
    /// Unconstrained: standalone candidates, free split decision.
    Free,
    /// Split, children follow the given shared nodes.
    ForceSplit(&'a [CuNode; 4]),
    /// Leaf candidates; `children`, when present, are also tried one depth
    /// down and the cheaper of the two kept.
    Evaluate { candidates: Vec<Candidate>, children: Option<Vec<Candidate>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum MvCell {
    Pending,
    Intra,
    Inter(MotionVector),
}

#[derive(Clone, Debug)]
struct LeafCoded {
    mvd: MotionVector,
    levels: Vec<i32>,
}

#[derive(Clone, Debug)]
struct CuResult {
    node: CuNode,
    cost: f64,
    leaves: Vec<LeafCoded>,
}

#[derive(Clone, Debug)]
struct Trial {
    mode: CuMode,
    mvd: MotionVector,
    cost: f64,
    levels: Vec<i32>,
    recon: Vec<u16>,
}

enum ChildPlans<'a> {
    Free,
    Shared(&'a [CuNode; 4]),
    Fixed(Vec<Candidate>),
}

/// Result of coding one frame.
#[derive(Clone, Debug)]
pub struct CodedFrame {
    pub analysis: FrameAnalysis,
    /// Quantized levels: per non-skip leaf in CTU z-order, luma then the two
    /// chroma blocks.
    pub levels: Vec<i32>,
    pub bits: u64,
    pub mode_evaluations: u64,
    pub recon: Frame,
}

/// Codes a single frame. Exposed so leaf decisions can be exercised in
/// isolation; [`encode_sequence`] drives it for whole sequences.
pub struct FrameCoder<'a> {
    kernels: CostKernels,
    src: &'a Frame,
    reference: Option<&'a Frame>,
    recon: Frame,
    slice: SliceType,
    qp: u8,
    step: f64,
    lambda: f64,
    lambda_me: f64,
    search_range: i32,
    mv_field: Vec<MvCell>,
    grid_w: usize,
    evaluations: u64,
    policy: ReusePolicy,
    shared: Option<&'a FrameAnalysis>,
    colocated: Option<&'a FrameAnalysis>,
    pred: Vec<u16>,
}

impl<'a> FrameCoder<'a> {
    /// P slices need a reference; without one the slice is coded as I.
    pub fn new(
        kernels: CostKernels,
        cfg: &EncodeConfig,
        src: &'a Frame,
        reference: Option<&'a Frame>,
        slice: SliceType,
        qp: u8,
    ) -> Self {
        let qp = qp.min(MAX_QP);
        let lambda = cfg.lambda(qp);
        let grid_w = src.width.div_ceil(MIN_CU_SIZE);
        let grid_h = src.height.div_ceil(MIN_CU_SIZE);
        let slice = if reference.is_none() { SliceType::I } else { slice };
        FrameCoder {
            kernels,
            src,
            reference,
            recon: Frame::blank(src.width, src.height, src.bit_depth, src.index),
            slice,
            qp,
            step: qstep(qp),
            lambda,
            lambda_me: libm::sqrt(lambda),
            search_range: cfg.search_range,
            mv_field: vec![MvCell::Pending; grid_w * grid_h],
            grid_w,
            evaluations: 0,
            policy: ReusePolicy::off(),
            shared: None,
            colocated: None,
            pred: vec![0; CTU_SIZE * CTU_SIZE],
        }
    }

    /// Constrains decisions by `shared` (already at this resolution).
    /// `colocated` is the shared analysis of the previous frame.
    pub fn with_shared(
        mut self,
        policy: ReusePolicy,
        shared: &'a FrameAnalysis,
        colocated: Option<&'a FrameAnalysis>,
    ) -> Self {
        self.policy = policy;
        self.shared = Some(shared);
        self.colocated = colocated;
        self
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn slice_type(&self) -> SliceType {
        self.slice
    }

    /// Evaluates `candidates` for the leaf at `(x, y)` and returns the
    /// cheapest mode and its RD cost, first candidate winning ties. Nothing
    /// is committed to the reconstruction.
    pub fn rdo_decide_cu(&mut self, x: usize, y: usize, depth: u8, candidates: &[Candidate]) -> Result<(CuMode, f64)> {
        let size = cu_size(depth);
        if depth > MAX_DEPTH || coverage(x, y, size, self.src.width, self.src.height) != Coverage::Inside {
            return Err(invalid!("CU {size}x{size} at ({x},{y}) is not inside the picture"));
        }
        if candidates.is_empty() {
            return Err(invalid!("no candidates"));
        }
        if self.reference.is_none() && candidates.iter().any(|c| !matches!(c, Candidate::Intra(_))) {
            return Err(invalid!("inter candidate without a reference frame"));
        }
        let t = self.evaluate_leaf(x, y, depth, candidates);
        Ok((t.mode, t.cost))
    }

    pub fn encode(mut self) -> CodedFrame {
        let (cols, rows) = ctu_grid(self.src.width, self.src.height);
        let mut ctus = Vec::with_capacity(cols * rows);
        let mut levels = Vec::new();
        let mut bits = 0;
        for cy in 0..rows {
            for cx in 0..cols {
                let (x, y) = (cx * CTU_SIZE, cy * CTU_SIZE);
                let res = match self.shared {
                    Some(f) => {
                        let node = &f.ctus[cy * cols + cx];
                        let plan = self.plan_for(node, x, y);
                        self.code_cu(x, y, 0, plan)
                    }
                    None => self.code_cu(x, y, 0, CuPlan::Free),
                };
                bits += self.finish_ctu(&res, x, y, &mut levels);
                ctus.push(res.node);
            }
        }
        CodedFrame {
            analysis: FrameAnalysis { ctus, slice_type: self.slice, qp: self.qp },
            levels,
            bits,
            mode_evaluations: self.evaluations,
            recon: self.recon,
        }
    }

    fn plan_for(&self, node: &'a CuNode, x: usize, y: usize) -> CuPlan<'a> {
        let colocated = if self.policy.level == ReuseLevel::Full && self.policy.refine.mv >= 3 {
            self.colocated.and_then(|f| colocated_mv(f, self.src.width, x + node.size() / 2, y + node.size() / 2))
        } else {
            None
        };
        plan_cu(&self.policy, node, self.slice, self.search_range, colocated)
    }

    fn code_cu(&mut self, x: usize, y: usize, depth: u8, plan: CuPlan<'a>) -> CuResult {
        let size = cu_size(depth);
        match coverage(x, y, size, self.src.width, self.src.height) {
            Coverage::Outside => return CuResult { node: CuNode::outside(depth), cost: 0.0, leaves: Vec::new() },
            Coverage::Partial => {
                let children = match plan {
                    CuPlan::ForceSplit(c) => ChildPlans::Shared(c),
                    CuPlan::Evaluate { children: Some(c), .. } => ChildPlans::Fixed(c),
                    _ => ChildPlans::Free,
                };
                return self.code_split(x, y, depth, children, 0);
            }
            Coverage::Inside => {}
        }
        let split_bits = if depth < MAX_DEPTH { SPLIT_FLAG_BITS } else { 0 };
        match plan {
            CuPlan::ForceSplit(c) if depth < MAX_DEPTH => self.code_split(x, y, depth, ChildPlans::Shared(c), split_bits),
            CuPlan::ForceSplit(_) | CuPlan::Free => {
                let candidates = Candidate::standalone(self.slice, self.search_range);
                let leaf = self.evaluate_leaf(x, y, depth, &candidates);
                let early_skip = matches!(leaf.mode, CuMode::Skip(_));
                if depth < MAX_DEPTH && !early_skip {
                    let split = self.code_split(x, y, depth, ChildPlans::Free, split_bits);
                    self.choose(x, y, depth, leaf, split)
                } else {
                    self.commit_leaf(x, y, depth, leaf)
                }
            }
            CuPlan::Evaluate { candidates, children } => {
                let leaf = self.evaluate_leaf(x, y, depth, &candidates);
                match children {
                    Some(c) if depth < MAX_DEPTH => {
                        let split = self.code_split(x, y, depth, ChildPlans::Fixed(c), split_bits);
                        self.choose(x, y, depth, leaf, split)
                    }
                    _ => self.commit_leaf(x, y, depth, leaf),
                }
            }
        }
    }

    fn choose(&mut self, x: usize, y: usize, depth: u8, leaf: Trial, split: CuResult) -> CuResult {
        if split.cost < leaf.cost {
            split
        } else {
            self.commit_leaf(x, y, depth, leaf)
        }
    }

    fn code_split(&mut self, x: usize, y: usize, depth: u8, plans: ChildPlans<'a>, split_bits: u64) -> CuResult {
        let half = cu_size(depth) / 2;
        let mut cost = self.lambda * split_bits as f64;
        let mut leaves = Vec::new();
        let mut nodes: [CuNode; 4] = core::array::from_fn(|_| CuNode::outside(depth + 1));
        for (i, slot) in nodes.iter_mut().enumerate() {
            let (cx, cy) = (x + (i % 2) * half, y + (i / 2) * half);
            let plan = match &plans {
                ChildPlans::Free => CuPlan::Free,
                ChildPlans::Shared(c) => self.plan_for(&c[i], cx, cy),
                ChildPlans::Fixed(c) => CuPlan::Evaluate { candidates: c.clone(), children: None },
            };
            let r = self.code_cu(cx, cy, depth + 1, plan);
            cost += r.cost;
            leaves.extend(r.leaves);
            *slot = r.node;
        }
        CuResult { node: CuNode::split(depth, nodes), cost, leaves }
    }

    fn evaluate_leaf(&mut self, x: usize, y: usize, depth: u8, candidates: &[Candidate]) -> Trial {
        let split_bits = if depth < MAX_DEPTH { SPLIT_FLAG_BITS } else { 0 };
        let mut best: Option<Trial> = None;
        for cand in candidates {
            let Some(mut t) = self.try_candidate(x, y, cu_size(depth), cand) else { continue };
            t.cost += self.lambda * split_bits as f64;
            if best.as_ref().is_none_or(|b| t.cost < b.cost) {
                best = Some(t);
            }
        }
        // Intra DC is always codable; only reached for inter-only lists
        // without a reference.
        best.unwrap_or_else(|| {
            let mut t = self.try_candidate(x, y, cu_size(depth), &Candidate::Intra(IntraMode::Dc)).unwrap();
            t.cost += self.lambda * split_bits as f64;
            t
        })
    }

    fn try_candidate(&mut self, x: usize, y: usize, size: usize, cand: &Candidate) -> Option<Trial> {
        let mut pred = core::mem::take(&mut self.pred);
        let n = size * size;
        let result = match cand {
            Candidate::Intra(m) => {
                self.evaluations += 1;
                intra_predict(&self.recon.y, x, y, size, *m, self.src.bit_depth, &mut pred);
                Some(self.code_luma(x, y, size, CuMode::Intra(*m), MotionVector::ZERO, &pred[..n]))
            }
            Candidate::Skip(src) | Candidate::Merge(src) | Candidate::Inter(src) => {
                let reference = self.reference?;
                let mvp = self.mv_predictor(x, y, size);
                let mv = self.resolve_mv(x, y, size, src, mvp);
                self.evaluations += 1;
                inter_predict(&reference.y, x, y, size, size, mv, &mut pred);
                Some(match cand {
                    Candidate::Skip(_) => {
                        let sse = sse(&self.src.y, x, y, size, &pred[..n]);
                        Trial {
                            mode: CuMode::Skip(mv),
                            mvd: MotionVector::ZERO,
                            cost: sse as f64 + self.lambda * SKIP_BITS as f64,
                            levels: Vec::new(),
                            recon: pred[..n].to_vec(),
                        }
                    }
                    Candidate::Merge(_) => self.code_luma(x, y, size, CuMode::Merge(mv), MotionVector::ZERO, &pred[..n]),
                    _ => self.code_luma(x, y, size, CuMode::Inter(mv), mv - mvp, &pred[..n]),
                })
            }
        };
        self.pred = pred;
        result
    }

    fn resolve_mv(&mut self, x: usize, y: usize, size: usize, src: &MvSource, mvp: MotionVector) -> MotionVector {
        let (w, h) = (self.src.width, self.src.height);
        match src {
            MvSource::Fixed(mv) => clamp_mv(x, y, size, w, h, i32::MAX / 2, *mv),
            MvSource::Predicted => clamp_mv(x, y, size, w, h, self.search_range, mvp),
            MvSource::Search { centers, with_predictor, radius } => {
                let reference = self.reference.expect("inter candidate without reference");
                let mut c = centers.clone();
                if *with_predictor {
                    c.push(mvp);
                }
                let area = SearchArea {
                    src: &self.src.y,
                    reference: &reference.y,
                    bit_depth: self.src.bit_depth,
                    limit: self.search_range,
                    lambda: self.lambda_me,
                };
                let r = motion_search(&self.kernels, &area, x, y, size, &c, *radius, mvp);
                self.evaluations += r.points;
                if r.points == 0 {
                    clamp_mv(x, y, size, w, h, self.search_range, MotionVector::ZERO)
                } else {
                    r.mv
                }
            }
        }
    }

    /// Componentwise lower median of the available left, top and top-right
    /// inter neighbours; zero when none is available.
    fn mv_predictor(&self, x: usize, y: usize, size: usize) -> MotionVector {
        let mut dx = [0i32; 3];
        let mut dy = [0i32; 3];
        let mut n = 0;
        let mut take = |px: usize, py: usize| {
            if px < self.src.width && py < self.src.height {
                if let MvCell::Inter(mv) = self.mv_field[(py / MIN_CU_SIZE) * self.grid_w + px / MIN_CU_SIZE] {
                    dx[n] = mv.dx;
                    dy[n] = mv.dy;
                    n += 1;
                }
            }
        };
        if x > 0 {
            take(x - 1, y);
        }
        if y > 0 {
            take(x, y - 1);
            take(x + size, y - 1);
        }
        if n == 0 {
            return MotionVector::ZERO;
        }
        dx[..n].sort_unstable();
        dy[..n].sort_unstable();
        MotionVector::new(dx[(n - 1) / 2], dy[(n - 1) / 2])
    }

    fn code_luma(&self, x: usize, y: usize, size: usize, mode: CuMode, mvd: MotionVector, pred: &[u16]) -> Trial {
        let mut levels = vec![0i32; size * size];
        let mut recon = vec![0u16; size * size];
        let coded = code_block(&self.src.y, x, y, size, pred, self.step, self.src.max_value(), &mut levels, &mut recon);
        let (dist, bits) = zero_if_cheaper(
            &self.src.y,
            (x, y, size),
            pred,
            self.lambda,
            (coded, rate_model(&levels, &mode, mvd)),
            rate_model(&[], &mode, mvd),
            &mut levels,
            &mut recon,
        );
        Trial { mode, mvd, cost: dist as f64 + self.lambda * bits as f64, levels, recon }
    }

    fn commit_leaf(&mut self, x: usize, y: usize, depth: u8, t: Trial) -> CuResult {
        let size = cu_size(depth);
        for (j, row) in t.recon.chunks_exact(size).enumerate() {
            let o = (y + j) * self.recon.y.stride() + x;
            self.recon.y.data_mut()[o..o + size].copy_from_slice(row);
        }
        let cell = match t.mode.mv() {
            Some(mv) => MvCell::Inter(mv),
            None => MvCell::Intra,
        };
        let cells = size / MIN_CU_SIZE;
        for j in 0..cells {
            let o = (y / MIN_CU_SIZE + j) * self.grid_w + x / MIN_CU_SIZE;
            self.mv_field[o..o + cells].fill(cell);
        }
        CuResult {
            node: CuNode::leaf(depth, t.mode),
            cost: t.cost,
            leaves: vec![LeafCoded { mvd: t.mvd, levels: t.levels }],
        }
    }

    /// Codes chroma for the final tree and returns the CTU's bits.
    fn finish_ctu(&mut self, res: &CuResult, x0: usize, y0: usize, out: &mut Vec<i32>) -> u64 {
        let mut bits = split_flag_bits(&res.node, x0, y0, self.src.width, self.src.height);
        let mut leaves = res.leaves.iter();
        let mut pred = core::mem::take(&mut self.pred);
        let bd = self.src.bit_depth;
        let max = self.src.max_value();
        res.node.for_each_leaf(x0, y0, &mut |x, y, node, mode| {
            let leaf = leaves.next().expect("leaf count mismatch");
            let (cx, cy, cs) = (x / 2, y / 2, node.size() / 2);
            let n = cs * cs;
            if let CuMode::Skip(_) = mode {
                for plane in 1..3 {
                    predict_chroma(&self.recon, self.reference, plane, cx, cy, cs, mode, bd, &mut pred);
                    write_block(self.recon.planes_mut()[plane], cx, cy, cs, &pred[..n]);
                }
                bits += SKIP_BITS;
                return;
            }
            let mut all = leaf.levels.clone();
            for plane in 1..3 {
                predict_chroma(&self.recon, self.reference, plane, cx, cy, cs, mode, bd, &mut pred);
                let mut levels = vec![0i32; n];
                let mut recon = vec![0u16; n];
                let src = self.src.planes()[plane];
                let coded = code_block(src, cx, cy, cs, &pred[..n], self.step, max, &mut levels, &mut recon);
                let rate = residual_bits(&levels);
                zero_if_cheaper(src, (cx, cy, cs), &pred[..n], self.lambda, (coded, rate), 0, &mut levels, &mut recon);
                write_block(self.recon.planes_mut()[plane], cx, cy, cs, &recon);
                all.extend_from_slice(&levels);
            }
            bits += rate_model(&all, mode, leaf.mvd);
            out.extend_from_slice(&all);
        });
        self.pred = pred;
        bits
    }
}

fn sse(src: &Plane, x: usize, y: usize, size: usize, block: &[u16]) -> u64 {
    let mut acc = 0u64;
    for (j, row) in block.chunks_exact(size).enumerate() {
        let s = &src.row(y + j)[x..x + size];
        for (&a, &b) in s.iter().zip(row) {
            let d = i64::from(a) - i64::from(b);
            acc += (d * d) as u64;
        }
    }
    acc
}

/// Quantizes `src - pred` into `levels`, writes the reconstruction and
/// returns its SSE against `src`.
#[allow(clippy::too_many_arguments)]
fn code_block(
    src: &Plane,
    x: usize,
    y: usize,
    size: usize,
    pred: &[u16],
    step: f64,
    max: u16,
    levels: &mut [i32],
    recon: &mut [u16],
) -> u64 {
    let mut acc = 0u64;
    for j in 0..size {
        let s = &src.row(y + j)[x..x + size];
        for i in 0..size {
            let k = j * size + i;
            let r = i32::from(s[i]) - i32::from(pred[k]);
            let l = quantize_with_step(r, step);
            levels[k] = l;
            recon[k] = reconstruct_sample(pred[k], l, step, max);
            let d = i64::from(s[i]) - i64::from(recon[k]);
            acc += (d * d) as u64;
        }
    }
    acc
}

/// Replaces a coded residual by none (cbf 0) when that costs less, and
/// returns the resulting `(sse, bits)`. `coded` is the coded pair, `flat_bits`
/// the rate without residual.
#[allow(clippy::too_many_arguments)]
fn zero_if_cheaper(
    src: &Plane,
    (x, y, size): (usize, usize, usize),
    pred: &[u16],
    lambda: f64,
    coded: (u64, u64),
    flat_bits: u64,
    levels: &mut [i32],
    recon: &mut [u16],
) -> (u64, u64) {
    if levels.iter().all(|&l| l == 0) {
        return coded;
    }
    let flat = sse(src, x, y, size, pred);
    if flat as f64 + lambda * flat_bits as f64 <= coded.0 as f64 + lambda * coded.1 as f64 {
        levels.fill(0);
        recon.copy_from_slice(pred);
        (flat, flat_bits)
    } else {
        coded
    }
}

#[inline]
pub(crate) fn reconstruct_sample(pred: u16, level: i32, step: f64, max: u16) -> u16 {
    (i32::from(pred) + dequantize_with_step(level, step)).clamp(0, i32::from(max)) as u16
}

pub(crate) fn write_block(plane: &mut Plane, x: usize, y: usize, size: usize, block: &[u16]) {
    let stride = plane.stride();
    for (j, row) in block.chunks_exact(size).enumerate() {
        let o = (y + j) * stride + x;
        plane.data_mut()[o..o + size].copy_from_slice(row);
    }
}

/// Chroma prediction for plane 1 or 2 following the luma decision.
#[allow(clippy::too_many_arguments)]
pub(crate) fn predict_chroma(
    recon: &Frame,
    reference: Option<&Frame>,
    plane: usize,
    cx: usize,
    cy: usize,
    cs: usize,
    mode: &CuMode,
    bit_depth: u8,
    out: &mut [u16],
) {
    match (mode, reference) {
        (CuMode::Intra(m), _) => intra_predict(recon.planes()[plane], cx, cy, cs, *m, bit_depth, out),
        (_, Some(r)) => inter_predict(r.planes()[plane], cx, cy, cs, cs, chroma_mv(mode.mv().unwrap()), out),
        (_, None) => unreachable!("inter mode without a reference"),
    }
}

pub(crate) fn split_flag_bits(node: &CuNode, x: usize, y: usize, w: usize, h: usize) -> u64 {
    let size = node.size();
    let cov = coverage(x, y, size, w, h);
    if cov == Coverage::Outside {
        return 0;
    }
    let own = if cov == Coverage::Inside && node.depth < MAX_DEPTH { SPLIT_FLAG_BITS } else { 0 };
    match node.children() {
        Some(children) => {
            let half = size / 2;
            own + children
                .iter()
                .enumerate()
                .map(|(i, c)| split_flag_bits(c, x + (i % 2) * half, y + (i / 2) * half, w, h))
                .sum::<u64>()
        }
        None => own,
    }
}

/// Motion vector of the inter leaf covering luma sample `(x, y)`, if any.
pub fn colocated_mv(frame: &FrameAnalysis, width: usize, x: usize, y: usize) -> Option<MotionVector> {
    let cols = width.div_ceil(CTU_SIZE);
    let mut node = frame.ctus.get((y / CTU_SIZE) * cols + x / CTU_SIZE)?;
    let (mut lx, mut ly) = (x % CTU_SIZE, y % CTU_SIZE);
    loop {
        match &node.kind {
            CuKind::Leaf(m) => return m.mv(),
            CuKind::Outside => return None,
            CuKind::Split(c) => {
                let half = node.size() / 2;
                let q = usize::from(lx >= half) + 2 * usize::from(ly >= half);
                lx %= half;
                ly %= half;
                node = &c[q];
            }
        }
    }
}

/// Per-frame outcome of [`encode_sequence`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameStat {
    pub slice_type: SliceType,
    pub qp: u8,
    pub bits: u64,
    pub psnr_y: f64,
    pub mode_evaluations: u64,
    /// Rate control re-encoded the frame after it exceeded its cap.
    pub reencoded: bool,
}

#[derive(Clone, Debug)]
pub struct EncodeOutput {
    pub analysis: AnalysisStream,
    pub recon: Vec<Frame>,
    /// Per-frame quantized levels, as consumed by
    /// [`super::reconstruct_sequence`].
    pub levels: Vec<Vec<i32>>,
    pub stats: EncodeStats,
    pub frames: Vec<FrameStat>,
}

impl EncodeOutput {
    pub fn bitrate_kbps(&self, fps: f64) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.stats.bits as f64 * fps / self.frames.len() as f64 / 1000.0
    }
}

fn check_input(frames: &[Frame], cfg: &EncodeConfig) -> Result<()> {
    cfg.validate()?;
    let first = frames.first().ok_or_else(|| invalid!("no frames to encode"))?;
    if first.width == 0 || first.height == 0 || first.width % MIN_CU_SIZE != 0 || first.height % MIN_CU_SIZE != 0 {
        return Err(invalid!("frame size {}x{} must be a non-zero multiple of {MIN_CU_SIZE}", first.width, first.height));
    }
    if first.bit_depth != 8 && first.bit_depth != 10 {
        return Err(invalid!("bit depth {} not supported", first.bit_depth));
    }
    if let Some(f) = frames.iter().find(|f| !f.same_geometry(first)) {
        return Err(invalid!("frame {} differs in geometry from frame 0", f.index));
    }
    Ok(())
}

/// Encodes `frames`, optionally constrained by `shared` analysis that is
/// already at this resolution. With a reuse level other than off, slice
/// types follow the shared stream.
pub fn encode_sequence(
    frames: &[Frame],
    cfg: &EncodeConfig,
    shared: Option<&AnalysisStream>,
    policy: &ReusePolicy,
) -> Result<EncodeOutput> {
    encode_sequence_with(CostKernels::detect(), frames, cfg, shared, policy)
}

pub fn encode_sequence_with(
    kernels: CostKernels,
    frames: &[Frame],
    cfg: &EncodeConfig,
    shared: Option<&AnalysisStream>,
    policy: &ReusePolicy,
) -> Result<EncodeOutput> {
    check_input(frames, cfg)?;
    policy.refine.validate()?;
    let first = &frames[0];
    let shared = match shared {
        Some(s) if policy.level != ReuseLevel::Off => {
            if (s.width, s.height) != (first.width, first.height) {
                return Err(Error::IncompatibleAnalysis(format!(
                    "analysis is {}x{}, frames are {}x{}",
                    s.width, s.height, first.width, first.height
                )));
            }
            if s.frames.len() != frames.len() {
                return Err(Error::IncompatibleAnalysis(format!(
                    "analysis has {} frames, input has {}",
                    s.frames.len(),
                    frames.len()
                )));
            }
            s.validate().map_err(|e| Error::IncompatibleAnalysis(format!("{e}")))?;
            Some(s)
        }
        _ => None,
    };

    let mut controller = match cfg.rate {
        RateMode::Cvbr { target_kbps, cap_factor } => Some(RateController::new(
            target_kbps,
            cfg.fps,
            cap_factor,
            RateController::initial_qp(target_kbps, cfg.fps, first.width, first.height),
        )),
        RateMode::Cqp { .. } => None,
    };

    let mut analysis = AnalysisStream::new(first.width, first.height, first.bit_depth);
    let mut recon: Vec<Frame> = Vec::with_capacity(frames.len());
    let mut levels = Vec::with_capacity(frames.len());
    let mut stats = EncodeStats::default();
    let mut frame_stats = Vec::with_capacity(frames.len());
    let mut psnr_sum = 0.0;

    for (i, src) in frames.iter().enumerate() {
        let slice = match shared {
            Some(s) => s.frames[i].slice_type,
            None => cfg.slice_type(i),
        };
        let qp = match (&controller, cfg.rate) {
            (Some(c), _) => c.qp(),
            (None, RateMode::Cqp { qp }) => qp,
            (None, _) => unreachable!(),
        };
        let reference = recon.last();
        let code = |qp: u8| {
            let mut coder = FrameCoder::new(kernels, cfg, src, reference, slice, qp);
            if let Some(s) = shared {
                coder = coder.with_shared(*policy, &s.frames[i], i.checked_sub(1).map(|p| &s.frames[p]));
            }
            coder.encode()
        };
        let mut coded = code(qp);
        let mut evaluations = coded.mode_evaluations;
        let mut reencoded = false;
        if let Some(c) = controller.as_mut() {
            let mut used = qp;
            if let Some(q2) = c.requant_qp(qp, coded.bits) {
                coded = code(q2);
                evaluations += coded.mode_evaluations;
                reencoded = true;
                used = q2;
            }
            c.update(used, coded.bits);
        }
        let psnr = psnr_y(src, &coded.recon)?;
        psnr_sum += psnr;
        stats.bits += coded.bits;
        stats.mode_evaluations += evaluations;
        frame_stats.push(FrameStat {
            slice_type: coded.analysis.slice_type,
            qp: coded.analysis.qp,
            bits: coded.bits,
            psnr_y: psnr,
            mode_evaluations: evaluations,
            reencoded,
        });
        analysis.frames.push(coded.analysis);
        levels.push(coded.levels);
        recon.push(coded.recon);
    }
    stats.frames = frames.len();
    stats.psnr_y = psnr_sum / frames.len() as f64;
    Ok(EncodeOutput { analysis, recon, levels, stats, frames: frame_stats })
}
