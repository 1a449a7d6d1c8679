//! Raw planar YUV 4:2:0 files: Y, then U, then V per frame. 8-bit samples
//! are single bytes, 10-bit samples little-endian 16-bit words.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use abrshare_core::frame::{chroma_dims, Frame, Plane};

use crate::error::{io_at, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawVideoSpec {
    pub path: PathBuf,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    /// Derived from the file size when `None`.
    pub frame_count: Option<usize>,
}

impl RawVideoSpec {
    pub fn new(path: impl Into<PathBuf>, width: usize, height: usize, bit_depth: u8) -> Self {
        RawVideoSpec { path: path.into(), width, height, bit_depth, frame_count: None }
    }
}

fn bytes_per_sample(bit_depth: u8) -> Result<usize> {
    match bit_depth {
        8 => Ok(1),
        10 => Ok(2),
        d => Err(Error::Format(format!("bit depth {d} not supported"))),
    }
}

/// Bytes per 4:2:0 frame.
pub fn frame_bytes(width: usize, height: usize, bit_depth: u8) -> Result<usize> {
    let (cw, ch) = chroma_dims(width, height);
    Ok((width * height + 2 * cw * ch) * bytes_per_sample(bit_depth)?)
}

/// Number of whole frames in `len` bytes; a partial frame is an error.
pub fn frame_count(len: u64, width: usize, height: usize, bit_depth: u8) -> Result<usize> {
    let fb = frame_bytes(width, height, bit_depth)? as u64;
    if fb == 0 || !len.is_multiple_of(fb) {
        return Err(Error::Format(format!(
            "{len} bytes is not a whole number of {width}x{height} {bit_depth}-bit frames ({fb} bytes each)"
        )));
    }
    Ok((len / fb) as usize)
}

fn read_plane(buf: &[u8], w: usize, h: usize, bit_depth: u8) -> Result<Plane> {
    let data = if bit_depth == 8 {
        buf.iter().map(|&b| u16::from(b)).collect()
    } else {
        buf.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()
    };
    Plane::from_vec(w, h, bit_depth, data).map_err(Error::from)
}

/// Reads `count` frames from `r`, or until a clean end of stream when
/// `count` is `None`.
pub fn read_frames(r: &mut impl Read, width: usize, height: usize, bit_depth: u8, count: Option<usize>) -> Result<Vec<Frame>> {
    let bps = bytes_per_sample(bit_depth)?;
    let (cw, ch) = chroma_dims(width, height);
    let fb = frame_bytes(width, height, bit_depth)?;
    let mut buf = vec![0u8; fb];
    let mut frames = Vec::new();
    while count.is_none_or(|n| frames.len() < n) {
        let mut filled = 0;
        while filled < fb {
            let n = r.read(&mut buf[filled..])?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        if filled == 0 && count.is_none() {
            break;
        }
        if filled < fb {
            return Err(Error::Format(format!("truncated frame {} ({filled} of {fb} bytes)", frames.len())));
        }
        let ys = width * height * bps;
        let cs = cw * ch * bps;
        let y = read_plane(&buf[..ys], width, height, bit_depth)?;
        let u = read_plane(&buf[ys..ys + cs], cw, ch, bit_depth)?;
        let v = read_plane(&buf[ys + cs..], cw, ch, bit_depth)?;
        frames.push(Frame::from_planes(y, u, v, bit_depth, frames.len())?);
    }
    Ok(frames)
}

pub fn read_yuv(spec: &RawVideoSpec) -> Result<Vec<Frame>> {
    let file = File::open(&spec.path).map_err(io_at(&spec.path))?;
    let len = file.metadata().map_err(io_at(&spec.path))?.len();
    let available = frame_count(len, spec.width, spec.height, spec.bit_depth)?;
    let count = match spec.frame_count {
        Some(n) if n > available => {
            return Err(Error::Format(format!("{} holds {available} frames, {n} requested", spec.path.display())))
        }
        Some(n) => n,
        None => available,
    };
    read_frames(&mut BufReader::new(file), spec.width, spec.height, spec.bit_depth, Some(count))
}

pub fn write_frames(w: &mut impl Write, frames: &[Frame]) -> Result<()> {
    for f in frames {
        for p in f.planes() {
            if f.bit_depth == 8 {
                let bytes: Vec<u8> = p.data().iter().map(|&s| s as u8).collect();
                w.write_all(&bytes)?;
            } else {
                let bytes: Vec<u8> = p.data().iter().flat_map(|s| s.to_le_bytes()).collect();
                w.write_all(&bytes)?;
            }
        }
    }
    Ok(())
}

pub fn write_yuv(frames: &[Frame], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut w = BufWriter::new(file);
    write_frames(&mut w, frames)?;
    w.flush().map_err(io_at(path))
}
