use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::scalar;
use super::view::{BlockView, BlockViewMut, ResidualViewMut};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Scalar,
    Vec128,
    Vec256,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Scalar, Tier::Vec128, Tier::Vec256];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Scalar => "scalar",
            Tier::Vec128 => "vec128",
            Tier::Vec256 => "vec256",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TierRequest {
    Auto,
    Exact(Tier),
}

/// Vector capabilities of the executing CPU.
///
/// Fields are private: a value can only be obtained by detection and then
/// narrowed, never widened, so vector kernels are only reachable on CPUs
/// that run them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CpuCaps {
    vec128: bool,
    vec256: bool,
}

impl CpuCaps {
    #[allow(unreachable_code)]
    pub fn detect() -> Self {
        #[cfg(all(feature = "std", any(target_arch = "x86", target_arch = "x86_64")))]
        {
            let vec128 = std::is_x86_feature_detected!("sse4.1");
            return CpuCaps { vec128, vec256: vec128 && std::is_x86_feature_detected!("avx2") };
        }
        #[cfg(all(not(feature = "std"), any(target_arch = "x86", target_arch = "x86_64")))]
        {
            let vec128 = cfg!(target_feature = "sse4.1");
            return CpuCaps { vec128, vec256: vec128 && cfg!(target_feature = "avx2") };
        }
        CpuCaps { vec128: false, vec256: false }
    }

    pub fn scalar_only() -> Self {
        CpuCaps { vec128: false, vec256: false }
    }

    /// Drops every tier above `max`.
    pub fn limit(self, max: Tier) -> Self {
        CpuCaps {
            vec128: self.vec128 && max >= Tier::Vec128,
            vec256: self.vec256 && max >= Tier::Vec256,
        }
    }

    pub fn supports(&self, tier: Tier) -> bool {
        match tier {
            Tier::Scalar => true,
            Tier::Vec128 => self.vec128,
            Tier::Vec256 => self.vec256,
        }
    }

    pub fn best(&self) -> Tier {
        if self.vec256 {
            Tier::Vec256
        } else if self.vec128 {
            Tier::Vec128
        } else {
            Tier::Scalar
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelOp {
    Sad,
    Satd,
    BlockCopy,
    BlockZero,
    SubtractRes,
}

impl KernelOp {
    pub const ALL: [KernelOp; 5] =
        [KernelOp::Sad, KernelOp::Satd, KernelOp::BlockCopy, KernelOp::BlockZero, KernelOp::SubtractRes];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelOp::Sad => "sad",
            KernelOp::Satd => "satd",
            KernelOp::BlockCopy => "block_copy",
            KernelOp::BlockZero => "block_zero",
            KernelOp::SubtractRes => "subtract_res",
        }
    }

    /// Geometries registered for this op, as `(width, height)`.
    pub fn geometries(self) -> &'static [(usize, usize)] {
        match self {
            KernelOp::Sad => &[
                (4, 4), (4, 8), (4, 16), (4, 32),
                (8, 4), (8, 8), (8, 16), (8, 32), (8, 64),
                (16, 2), (16, 4), (16, 8), (16, 16), (16, 32), (16, 64),
                (32, 4), (32, 8), (32, 16), (32, 32), (32, 64),
                (64, 8), (64, 16), (64, 32), (64, 64),
            ],
            KernelOp::Satd => &[
                (4, 4), (4, 8), (4, 16),
                (8, 4), (8, 8), (8, 16), (8, 32), (8, 64),
                (16, 4), (16, 8), (16, 16), (16, 32), (16, 64),
                (32, 4), (32, 8), (32, 16), (32, 32), (32, 64),
                (64, 8), (64, 16), (64, 32), (64, 64),
            ],
            KernelOp::BlockCopy | KernelOp::BlockZero | KernelOp::SubtractRes => {
                &[(8, 8), (16, 16), (32, 32), (64, 64)]
            }
        }
    }

    /// Tiers implemented for a geometry, ignoring CPU support.
    pub fn tiers_for(self, width: usize) -> &'static [Tier] {
        const SCALAR: &[Tier] = &[Tier::Scalar];
        const MEM: &[Tier] = &[Tier::Scalar, Tier::Vec256];
        const ALL: &[Tier] = &[Tier::Scalar, Tier::Vec128, Tier::Vec256];
        const NARROW_SAD: &[Tier] = &[Tier::Scalar, Tier::Vec128];
        if cfg!(not(any(target_arch = "x86", target_arch = "x86_64"))) {
            return SCALAR;
        }
        match (self, width) {
            (KernelOp::Sad, 4) => NARROW_SAD,
            (KernelOp::Sad | KernelOp::Satd, w) if w >= 8 => ALL,
            (KernelOp::Satd, _) => SCALAR,
            (_, w) if w >= 8 => MEM,
            _ => SCALAR,
        }
    }
}

pub type CostFn = fn(&BlockView<'_>, &BlockView<'_>) -> u64;
pub type CopyFn = fn(&mut BlockViewMut<'_>, &BlockView<'_>);
pub type ZeroFn = fn(&mut BlockViewMut<'_>);
pub type SubtractFn = fn(&mut ResidualViewMut<'_>, &BlockView<'_>, &BlockView<'_>);

#[derive(Clone, Copy)]
pub enum KernelFn {
    Cost(CostFn),
    Copy(CopyFn),
    Zero(ZeroFn),
    Subtract(SubtractFn),
}

impl fmt::Debug for KernelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFn::Cost(_) => "Cost",
            KernelFn::Copy(_) => "Copy",
            KernelFn::Zero(_) => "Zero",
            KernelFn::Subtract(_) => "Subtract",
        })
    }
}

/// One implementation of a named kernel at one tier.
#[derive(Clone, Debug)]
pub struct Kernel {
    op: KernelOp,
    width: usize,
    height: usize,
    tier: Tier,
    func: KernelFn,
}

impl Kernel {
    /// Wraps an arbitrary implementation, e.g. an experimental tier under test.
    pub fn custom(op: KernelOp, width: usize, height: usize, tier: Tier, func: KernelFn) -> Self {
        Kernel { op, width, height, tier, func }
    }

    pub fn name(&self) -> String {
        kernel_name(self.op, self.width, self.height)
    }
    pub fn op(&self) -> KernelOp {
        self.op
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn tier(&self) -> Tier {
        self.tier
    }
    pub fn func(&self) -> KernelFn {
        self.func
    }

    fn check(&self, w: usize, h: usize) -> Result<()> {
        if w != self.width || h != self.height {
            return Err(invalid!("{} called with a {}x{} block", self.name(), w, h));
        }
        Ok(())
    }

    pub fn cost(&self, a: &BlockView<'_>, b: &BlockView<'_>) -> Result<u64> {
        self.check(a.width(), a.height())?;
        if !a.same_shape(b) {
            return Err(invalid!("{}: operand shapes differ", self.name()));
        }
        match self.func {
            KernelFn::Cost(f) => Ok(f(a, b)),
            _ => Err(invalid!("{} is not a cost kernel", self.name())),
        }
    }

    pub fn copy(&self, dst: &mut BlockViewMut<'_>, src: &BlockView<'_>) -> Result<()> {
        self.check(src.width(), src.height())?;
        self.check(dst.width(), dst.height())?;
        match self.func {
            KernelFn::Copy(f) => {
                f(dst, src);
                Ok(())
            }
            _ => Err(invalid!("{} is not a copy kernel", self.name())),
        }
    }

    pub fn zero(&self, dst: &mut BlockViewMut<'_>) -> Result<()> {
        self.check(dst.width(), dst.height())?;
        match self.func {
            KernelFn::Zero(f) => {
                f(dst);
                Ok(())
            }
            _ => Err(invalid!("{} is not a zero kernel", self.name())),
        }
    }

    pub fn subtract(&self, dst: &mut ResidualViewMut<'_>, a: &BlockView<'_>, b: &BlockView<'_>) -> Result<()> {
        self.check(a.width(), a.height())?;
        self.check(dst.width(), dst.height())?;
        if !a.same_shape(b) {
            return Err(invalid!("{}: operand shapes differ", self.name()));
        }
        match self.func {
            KernelFn::Subtract(f) => {
                f(dst, a, b);
                Ok(())
            }
            _ => Err(invalid!("{} is not a subtract kernel", self.name())),
        }
    }
}

pub fn kernel_name(op: KernelOp, width: usize, height: usize) -> String {
    format!("{}_{}x{}", op.as_str(), width, height)
}

/// Parses `"<op>_<w>x<h>"`.
pub fn parse_kernel_name(name: &str) -> Option<(KernelOp, usize, usize)> {
    let (op_str, dims) = name.rsplit_once('_')?;
    let op = KernelOp::ALL.into_iter().find(|op| op.as_str() == op_str)?;
    let (w, h) = dims.split_once('x')?;
    Some((op, w.parse().ok()?, h.parse().ok()?))
}

#[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
mod vector {
    //! Safe wrappers. Only installed into a registry whose caps report the
    //! feature, which is what makes the inner calls sound.
    use super::super::x86;
    use super::*;

    pub fn sad128(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
        unsafe { x86::sad_vec128(a, b) }
    }
    pub fn sad256(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
        unsafe { x86::sad_vec256(a, b) }
    }
    pub fn satd128(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
        unsafe { x86::satd_vec128(a, b) }
    }
    pub fn satd256(a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
        unsafe { x86::satd_vec256(a, b) }
    }
    pub fn copy256(d: &mut BlockViewMut<'_>, s: &BlockView<'_>) {
        unsafe { x86::block_copy_vec256(d, s) }
    }
    pub fn zero256(d: &mut BlockViewMut<'_>) {
        unsafe { x86::block_zero_vec256(d) }
    }
    pub fn sub256(d: &mut ResidualViewMut<'_>, a: &BlockView<'_>, b: &BlockView<'_>) {
        unsafe { x86::subtract_res_vec256(d, a, b) }
    }
}

fn kernel_fn(op: KernelOp, tier: Tier) -> Option<KernelFn> {
    match tier {
        Tier::Scalar => Some(match op {
            KernelOp::Sad => KernelFn::Cost(scalar::sad),
            KernelOp::Satd => KernelFn::Cost(scalar::satd),
            KernelOp::BlockCopy => KernelFn::Copy(scalar::block_copy),
            KernelOp::BlockZero => KernelFn::Zero(scalar::block_zero),
            KernelOp::SubtractRes => KernelFn::Subtract(scalar::subtract_res),
        }),
        #[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
        Tier::Vec128 => match op {
            KernelOp::Sad => Some(KernelFn::Cost(vector::sad128)),
            KernelOp::Satd => Some(KernelFn::Cost(vector::satd128)),
            _ => None,
        },
        #[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
        Tier::Vec256 => Some(match op {
            KernelOp::Sad => KernelFn::Cost(vector::sad256),
            KernelOp::Satd => KernelFn::Cost(vector::satd256),
            KernelOp::BlockCopy => KernelFn::Copy(vector::copy256),
            KernelOp::BlockZero => KernelFn::Zero(vector::zero256),
            KernelOp::SubtractRes => KernelFn::Subtract(vector::sub256),
        }),
        #[allow(unreachable_patterns)]
        _ => None,
    }
}

/// Every registered kernel at every tier the CPU supports.
#[derive(Clone, Debug)]
pub struct Registry {
    caps: CpuCaps,
    kernels: Vec<Kernel>,
}

impl Registry {
    pub fn detect() -> Self {
        Self::with_caps(CpuCaps::detect())
    }

    pub fn with_caps(caps: CpuCaps) -> Self {
        let mut kernels = Vec::new();
        for op in KernelOp::ALL {
            for &(w, h) in op.geometries() {
                for &tier in op.tiers_for(w) {
                    if !caps.supports(tier) {
                        continue;
                    }
                    if let Some(func) = kernel_fn(op, tier) {
                        kernels.push(Kernel { op, width: w, height: h, tier, func });
                    }
                }
            }
        }
        Registry { caps, kernels }
    }

    pub fn caps(&self) -> CpuCaps {
        self.caps
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    /// Distinct kernel names in registration order.
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for k in &self.kernels {
            let n = k.name();
            if out.last() != Some(&n) {
                out.push(n);
            }
        }
        out
    }

    /// All available tiers of one kernel, lowest first.
    pub fn tiers(&self, name: &str) -> Result<Vec<&Kernel>> {
        let (op, w, h) = parse_kernel_name(name).ok_or_else(|| Error::NotFound(name.into()))?;
        let found: Vec<&Kernel> = self
            .kernels
            .iter()
            .filter(|k| k.op == op && k.width == w && k.height == h)
            .collect();
        if found.is_empty() {
            return Err(Error::NotFound(name.into()));
        }
        Ok(found)
    }

    pub fn select_impl(&self, name: &str, requested: TierRequest) -> Result<&Kernel> {
        let tiers = self.tiers(name)?;
        match requested {
            TierRequest::Auto => Ok(tiers.into_iter().max_by_key(|k| k.tier).expect("nonempty")),
            TierRequest::Exact(t) => tiers
                .into_iter()
                .find(|k| k.tier == t)
                .ok_or_else(|| Error::Capability(format!("{name} has no {t} tier on this CPU"))),
        }
    }
}

/// Cost functions for the encoder's inner loops, fixed to the best tier
/// allowed by `caps`. Geometry checks are the caller's job.
#[derive(Clone, Copy, Debug)]
pub struct CostKernels {
    caps: CpuCaps,
}

impl CostKernels {
    pub fn new(caps: CpuCaps) -> Self {
        CostKernels { caps }
    }

    pub fn detect() -> Self {
        Self::new(CpuCaps::detect())
    }

    pub fn tier(&self) -> Tier {
        self.caps.best()
    }

    #[inline]
    pub fn sad(&self, a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
        debug_assert!(a.same_shape(b));
        #[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
        {
            if self.caps.vec256 && a.width() >= 8 {
                return vector::sad256(a, b);
            }
            if self.caps.vec128 {
                return vector::sad128(a, b);
            }
        }
        scalar::sad(a, b)
    }

    #[inline]
    pub fn satd(&self, a: &BlockView<'_>, b: &BlockView<'_>) -> u64 {
        debug_assert!(a.same_shape(b));
        #[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
        {
            if a.width() >= 8 {
                if self.caps.vec256 {
                    return vector::satd256(a, b);
                }
                if self.caps.vec128 {
                    return vector::satd128(a, b);
                }
            }
        }
        scalar::satd(a, b)
    }
}
