//! Planar 4:2:0 picture storage.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::kernels::BlockView;

/// One sample plane, rows packed (stride == width).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl Plane {
    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Plane { width, height, data: vec![value; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, bit_depth: u8, data: Vec<u16>) -> Result<Self> {
        if data.len() != width * height {
            return Err(invalid!("plane {width}x{height} needs {} samples, got {}", width * height, data.len()));
        }
        let max = 1u32 << bit_depth;
        if let Some(v) = data.iter().find(|&&v| u32::from(v) >= max) {
            return Err(invalid!("sample {v} exceeds {bit_depth}-bit range"));
        }
        Ok(Plane { width, height, data })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }
    #[inline]
    pub fn stride(&self) -> usize {
        self.width
    }
    #[inline]
    pub fn data(&self) -> &[u16] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        self.data[y * self.width + x] = v;
    }
    #[inline]
    pub fn row(&self, y: usize) -> &[u16] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Block view at `(x, y)`; the block must lie inside the plane and have a
    /// kernel-supported geometry.
    #[inline]
    pub fn block(&self, x: usize, y: usize, w: usize, h: usize, bit_depth: u8) -> BlockView<'_> {
        debug_assert!(x + w <= self.width && y + h <= self.height);
        BlockView::new_unchecked(&self.data[y * self.width + x..], w, h, self.width, bit_depth)
    }

    /// Copies a `w`x`h` region from `src` at the same position.
    pub fn copy_region_from(&mut self, src: &Plane, x: usize, y: usize, w: usize, h: usize) {
        for r in y..y + h {
            let o = r * self.width + x;
            self.data[o..o + w].copy_from_slice(&src.data[o..o + w]);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub y: Plane,
    pub u: Plane,
    pub v: Plane,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub index: usize,
}

pub fn chroma_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

impl Frame {
    /// Mid-grey frame.
    pub fn blank(width: usize, height: usize, bit_depth: u8, index: usize) -> Self {
        let mid = 1u16 << (bit_depth - 1);
        let (cw, ch) = chroma_dims(width, height);
        Frame {
            y: Plane::filled(width, height, mid),
            u: Plane::filled(cw, ch, mid),
            v: Plane::filled(cw, ch, mid),
            width,
            height,
            bit_depth,
            index,
        }
    }

    pub fn from_planes(y: Plane, u: Plane, v: Plane, bit_depth: u8, index: usize) -> Result<Self> {
        if bit_depth != 8 && bit_depth != 10 {
            return Err(invalid!("bit depth {bit_depth} not supported"));
        }
        let (width, height) = (y.width, y.height);
        let (cw, ch) = chroma_dims(width, height);
        if (u.width, u.height) != (cw, ch) || (v.width, v.height) != (cw, ch) {
            return Err(invalid!("chroma planes must be {cw}x{ch} for a {width}x{height} frame"));
        }
        let max = 1u32 << bit_depth;
        for p in [&y, &u, &v] {
            if p.data.iter().any(|&s| u32::from(s) >= max) {
                return Err(invalid!("sample exceeds {bit_depth}-bit range"));
            }
        }
        Ok(Frame { y, u, v, width, height, bit_depth, index })
    }

    pub fn planes(&self) -> [&Plane; 3] {
        [&self.y, &self.u, &self.v]
    }

    pub fn planes_mut(&mut self) -> [&mut Plane; 3] {
        [&mut self.y, &mut self.u, &mut self.v]
    }

    pub fn max_value(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    pub fn same_geometry(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height && self.bit_depth == other.bit_depth
    }
}
