use crate::error::{invalid, Result};

pub const BLOCK_WIDTHS: [usize; 5] = [4, 8, 16, 32, 64];
pub const BLOCK_HEIGHTS: [usize; 6] = [2, 4, 8, 16, 32, 64];

fn check_geometry(len: usize, width: usize, height: usize, stride: usize) -> Result<()> {
    if !BLOCK_WIDTHS.contains(&width) {
        return Err(invalid!("block width {width} not in {BLOCK_WIDTHS:?}"));
    }
    if !BLOCK_HEIGHTS.contains(&height) {
        return Err(invalid!("block height {height} not in {BLOCK_HEIGHTS:?}"));
    }
    if stride < width {
        return Err(invalid!("stride {stride} < width {width}"));
    }
    if len < (height - 1) * stride + width {
        return Err(invalid!(
            "{len} samples cannot hold a {width}x{height} block at stride {stride}"
        ));
    }
    Ok(())
}

fn check_depth(bit_depth: u8) -> Result<()> {
    match bit_depth {
        8 | 10 => Ok(()),
        _ => Err(invalid!("bit depth {bit_depth} not supported (8 or 10)")),
    }
}

/// Read-only rectangular window into a sample plane.
///
/// Samples are stored as `u16` for both bit depths and must stay below
/// `1 << bit_depth`; the owning plane enforces that.
#[derive(Clone, Copy, Debug)]
pub struct BlockView<'a> {
    data: &'a [u16],
    width: usize,
    height: usize,
    stride: usize,
    bit_depth: u8,
}

impl<'a> BlockView<'a> {
    pub fn new(
        data: &'a [u16],
        width: usize,
        height: usize,
        stride: usize,
        bit_depth: u8,
    ) -> Result<Self> {
        check_geometry(data.len(), width, height, stride)?;
        check_depth(bit_depth)?;
        Ok(Self { data, width, height, stride, bit_depth })
    }

    /// Caller guarantees the geometry invariants.
    pub(crate) fn new_unchecked(
        data: &'a [u16],
        width: usize,
        height: usize,
        stride: usize,
        bit_depth: u8,
    ) -> Self {
        debug_assert!(check_geometry(data.len(), width, height, stride).is_ok());
        Self { data, width, height, stride, bit_depth }
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
        self.stride
    }
    #[inline]
    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }
    #[inline]
    pub fn row(&self, y: usize) -> &'a [u16] {
        &self.data[y * self.stride..y * self.stride + self.width]
    }
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.stride + x]
    }
    #[inline]
    pub(crate) fn as_ptr(&self) -> *const u16 {
        self.data.as_ptr()
    }

    /// Sub-block at `(x, y)` of the given size.
    pub fn sub(&self, x: usize, y: usize, width: usize, height: usize) -> Result<BlockView<'a>> {
        if x + width > self.width || y + height > self.height {
            return Err(invalid!("sub-block outside parent view"));
        }
        BlockView::new(&self.data[y * self.stride + x..], width, height, self.stride, self.bit_depth)
    }

    pub fn same_shape(&self, other: &BlockView<'_>) -> bool {
        self.width == other.width && self.height == other.height && self.bit_depth == other.bit_depth
    }
}

/// Writable sample window.
#[derive(Debug)]
pub struct BlockViewMut<'a> {
    data: &'a mut [u16],
    width: usize,
    height: usize,
    stride: usize,
    bit_depth: u8,
}

impl<'a> BlockViewMut<'a> {
    pub fn new(
        data: &'a mut [u16],
        width: usize,
        height: usize,
        stride: usize,
        bit_depth: u8,
    ) -> Result<Self> {
        check_geometry(data.len(), width, height, stride)?;
        check_depth(bit_depth)?;
        Ok(Self { data, width, height, stride, bit_depth })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn stride(&self) -> usize {
        self.stride
    }
    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }
    pub fn row_mut(&mut self, y: usize) -> &mut [u16] {
        &mut self.data[y * self.stride..y * self.stride + self.width]
    }
    pub fn as_view(&self) -> BlockView<'_> {
        BlockView::new_unchecked(self.data, self.width, self.height, self.stride, self.bit_depth)
    }
    pub(crate) fn as_mut_ptr(&mut self) -> *mut u16 {
        self.data.as_mut_ptr()
    }
}

/// Writable signed residual window (`a - b` differences).
#[derive(Debug)]
pub struct ResidualViewMut<'a> {
    data: &'a mut [i16],
    width: usize,
    height: usize,
    stride: usize,
}

impl<'a> ResidualViewMut<'a> {
    pub fn new(data: &'a mut [i16], width: usize, height: usize, stride: usize) -> Result<Self> {
        check_geometry(data.len(), width, height, stride)?;
        Ok(Self { data, width, height, stride })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn stride(&self) -> usize {
        self.stride
    }
    pub fn row(&self, y: usize) -> &[i16] {
        &self.data[y * self.stride..y * self.stride + self.width]
    }
    pub fn row_mut(&mut self, y: usize) -> &mut [i16] {
        &mut self.data[y * self.stride..y * self.stride + self.width]
    }
    pub(crate) fn as_mut_ptr(&mut self) -> *mut i16 {
        self.data.as_mut_ptr()
    }
}
