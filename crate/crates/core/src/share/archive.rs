//! Binary analysis archive, little-endian.
//!
//! ```text
//! magic "LDRANLZ1" | version u8 | reuse level u8 | bit depth u8 | reserved u8
//! width u32 | height u32 | frame count u32
//! per frame: slice type u8 (0 = I, 1 = P) | qp u8 | CTU count u32 | CTU trees
//! ```
//!
//! Trees are written depth-first. Node tags: 0 outside, 1 split (followed
//! by four children), 2 intra (direction u8), 3 inter, 4 skip, 5 merge
//! (each followed by dx, dy as i16).

use alloc::format;
use alloc::vec::Vec;

use crate::codec::{
    AnalysisStream, CuKind, CuMode, CuNode, FrameAnalysis, IntraMode, MotionVector, SliceType, MAX_DEPTH,
};
use crate::error::{invalid, Error, Result};

use super::ReuseLevel;

pub const ANALYSIS_MAGIC: [u8; 8] = *b"LDRANLZ1";
pub const ANALYSIS_VERSION: u8 = 1;

const TAG_OUTSIDE: u8 = 0;
const TAG_SPLIT: u8 = 1;
const TAG_INTRA: u8 = 2;
const TAG_INTER: u8 = 3;
const TAG_SKIP: u8 = 4;
const TAG_MERGE: u8 = 5;

/// Serializes `stream` tagged with the reuse level it was saved for.
pub fn save_analysis(stream: &AnalysisStream, level: ReuseLevel) -> Result<Vec<u8>> {
    stream.validate()?;
    let mut out = Vec::with_capacity(64 + stream.frames.len() * 256);
    out.extend_from_slice(&ANALYSIS_MAGIC);
    out.extend_from_slice(&[ANALYSIS_VERSION, level.as_u8(), stream.bit_depth, 0]);
    for v in [stream.width, stream.height, stream.frames.len()] {
        out.extend_from_slice(&u32::try_from(v).map_err(|_| invalid!("{v} does not fit the archive header"))?.to_le_bytes());
    }
    for f in &stream.frames {
        out.push(match f.slice_type {
            SliceType::I => 0,
            SliceType::P => 1,
        });
        out.push(f.qp);
        out.extend_from_slice(&(f.ctus.len() as u32).to_le_bytes());
        for ctu in &f.ctus {
            write_node(&mut out, ctu)?;
        }
    }
    Ok(out)
}

fn write_mv(out: &mut Vec<u8>, mv: MotionVector) -> Result<()> {
    for c in [mv.dx, mv.dy] {
        let v = i16::try_from(c).map_err(|_| invalid!("motion vector component {c} exceeds 16 bits"))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

fn write_node(out: &mut Vec<u8>, node: &CuNode) -> Result<()> {
    match &node.kind {
        CuKind::Outside => out.push(TAG_OUTSIDE),
        CuKind::Split(children) => {
            out.push(TAG_SPLIT);
            for c in children.iter() {
                write_node(out, c)?;
            }
        }
        CuKind::Leaf(CuMode::Intra(m)) => out.extend_from_slice(&[TAG_INTRA, *m as u8]),
        CuKind::Leaf(CuMode::Inter(mv)) => {
            out.push(TAG_INTER);
            write_mv(out, *mv)?;
        }
        CuKind::Leaf(CuMode::Skip(mv)) => {
            out.push(TAG_SKIP);
            write_mv(out, *mv)?;
        }
        CuKind::Leaf(CuMode::Merge(mv)) => {
            out.push(TAG_MERGE);
            write_mv(out, *mv)?;
        }
    }
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i16(&mut self) -> Result<i16> {
        Ok(i16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn mv(&mut self) -> Result<MotionVector> {
        let dx = self.i16()?;
        let dy = self.i16()?;
        Ok(MotionVector::new(i32::from(dx), i32::from(dy)))
    }

    fn node(&mut self, depth: u8) -> Result<CuNode> {
        let kind = match self.u8()? {
            TAG_OUTSIDE => CuKind::Outside,
            TAG_SPLIT => {
                if depth >= MAX_DEPTH {
                    return Err(Error::Format(format!("split below depth {MAX_DEPTH}")));
                }
                let children = [self.node(depth + 1)?, self.node(depth + 1)?, self.node(depth + 1)?, self.node(depth + 1)?];
                return Ok(CuNode::split(depth, children));
            }
            TAG_INTRA => {
                let d = self.u8()?;
                CuKind::Leaf(CuMode::Intra(
                    IntraMode::from_index(d).ok_or_else(|| Error::Format(format!("intra direction {d}")))?,
                ))
            }
            TAG_INTER => CuKind::Leaf(CuMode::Inter(self.mv()?)),
            TAG_SKIP => CuKind::Leaf(CuMode::Skip(self.mv()?)),
            TAG_MERGE => CuKind::Leaf(CuMode::Merge(self.mv()?)),
            t => return Err(Error::Format(format!("unknown node tag {t}"))),
        };
        Ok(CuNode { depth, kind })
    }
}

/// Parses an archive for use at `requested` reuse level, which may not
/// exceed the level it was saved with. Returns the stream and saved level.
pub fn load_analysis(bytes: &[u8], requested: ReuseLevel) -> Result<(AnalysisStream, ReuseLevel)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != ANALYSIS_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u8()?;
    if version != ANALYSIS_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let saved = ReuseLevel::from_u8(r.u8()?).map_err(|e| Error::Format(format!("{e}")))?;
    if requested > saved {
        return Err(Error::IncompatibleAnalysis(format!(
            "archive saved at reuse level {saved}, cannot load at level {requested}"
        )));
    }
    let bit_depth = r.u8()?;
    let _reserved = r.u8()?;
    let width = r.u32()? as usize;
    let height = r.u32()? as usize;
    let frames = r.u32()? as usize;
    let mut stream = AnalysisStream::new(width, height, bit_depth);
    for _ in 0..frames {
        let slice_type = match r.u8()? {
            0 => SliceType::I,
            1 => SliceType::P,
            t => return Err(Error::Format(format!("slice type {t}"))),
        };
        let qp = r.u8()?;
        let n = r.u32()? as usize;
        // Each CTU needs at least one byte, which bounds the allocation.
        if n > bytes.len() - r.pos {
            return Err(Error::Truncated);
        }
        let mut ctus = Vec::with_capacity(n);
        for _ in 0..n {
            ctus.push(r.node(0)?);
        }
        stream.frames.push(FrameAnalysis { ctus, slice_type, qp });
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    stream.validate().map_err(|e| Error::Format(format!("{e}")))?;
    Ok((stream, saved))
}
