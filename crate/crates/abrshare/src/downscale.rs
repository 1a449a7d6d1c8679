use abrshare_core::frame::{chroma_dims, Frame, Plane};

use crate::error::{Error, Result};

fn half_plane(p: &Plane, w: usize, h: usize) -> Plane {
    let mut out = Plane::filled(w, h, 0);
    let (sw, sh) = (p.width(), p.height());
    for y in 0..h {
        for x in 0..w {
            // Odd chroma edges repeat the last sample.
            let (x0, y0) = (2 * x, 2 * y);
            let (x1, y1) = ((x0 + 1).min(sw - 1), (y0 + 1).min(sh - 1));
            let sum = u32::from(p.get(x0, y0)) + u32::from(p.get(x1, y0)) + u32::from(p.get(x0, y1)) + u32::from(p.get(x1, y1));
            out.set(x, y, ((sum + 2) / 4) as u16);
        }
    }
    out
}

/// Halves each dimension with a 2x2 box filter, rounding half up.
pub fn downscale_dyadic(frames: &[Frame]) -> Result<Vec<Frame>> {
    frames
        .iter()
        .map(|f| {
            if f.width % 2 != 0 || f.height % 2 != 0 {
                return Err(Error::Core(abrshare_core::Error::InvalidArgument(format!(
                    "cannot halve odd size {}x{}",
                    f.width, f.height
                ))));
            }
            let (w, h) = (f.width / 2, f.height / 2);
            let (cw, ch) = chroma_dims(w, h);
            let y = half_plane(&f.y, w, h);
            let u = half_plane(&f.u, cw, ch);
            let v = half_plane(&f.v, cw, ch);
            Ok(Frame::from_planes(y, u, v, f.bit_depth, f.index)?)
        })
        .collect()
}
