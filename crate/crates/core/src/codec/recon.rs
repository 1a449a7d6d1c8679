use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::Frame;

use super::encoder::{predict_chroma, reconstruct_sample, write_block};
use super::predict::{inter_predict, intra_predict};
use super::quant::qstep;
use super::types::*;

/// Rebuilds the pictures from decisions and quantized levels alone, the way
/// a decoder would.
pub fn reconstruct_sequence(analysis: &AnalysisStream, levels: &[Vec<i32>]) -> Result<Vec<Frame>> {
    analysis.validate()?;
    if levels.len() != analysis.frames.len() {
        return Err(Error::Format(format!("{} level sets for {} frames", levels.len(), analysis.frames.len())));
    }
    let (w, h, bd) = (analysis.width, analysis.height, analysis.bit_depth);
    let (cols, _) = ctu_grid(w, h);
    let mut out: Vec<Frame> = Vec::with_capacity(analysis.frames.len());
    for (i, (fa, lv)) in analysis.frames.iter().zip(levels).enumerate() {
        let reference = out.last();
        if reference.is_none() && fa.slice_type == SliceType::P {
            return Err(Error::Format("first frame is not intra".into()));
        }
        let mut recon = Frame::blank(w, h, bd, i);
        let step = qstep(fa.qp);
        let max = recon.max_value();
        let mut pos = 0usize;
        let mut pred = [0u16; CTU_SIZE * CTU_SIZE];
        for (c, ctu) in fa.ctus.iter().enumerate() {
            let (x0, y0) = ((c % cols) * CTU_SIZE, (c / cols) * CTU_SIZE);
            // Level offsets per leaf: luma then both chroma blocks.
            let mut offsets = Vec::new();
            ctu.for_each_leaf(x0, y0, &mut |_, _, node, mode| {
                offsets.push(pos);
                if !matches!(mode, CuMode::Skip(_)) {
                    let s = node.size();
                    pos += s * s + 2 * (s / 2) * (s / 2);
                }
            });
            if pos > lv.len() {
                return Err(Error::Format(format!("frame {i}: levels exhausted")));
            }
            let mut k = 0;
            let mut bad_mv = false;
            ctu.for_each_leaf(x0, y0, &mut |x, y, node, mode| {
                let s = node.size();
                match (mode, reference) {
                    (CuMode::Intra(m), _) => intra_predict(&recon.y, x, y, s, *m, bd, &mut pred),
                    (_, Some(r)) => {
                        let mv = mode.mv().unwrap();
                        if !super::predict::mv_in_picture(x, y, s, w, h, mv) {
                            bad_mv = true;
                            return;
                        }
                        inter_predict(&r.y, x, y, s, s, mv, &mut pred)
                    }
                    (_, None) => unreachable!(),
                }
                let block = &mut pred[..s * s];
                if !matches!(mode, CuMode::Skip(_)) {
                    for (p, &l) in block.iter_mut().zip(&lv[offsets[k]..offsets[k] + s * s]) {
                        *p = reconstruct_sample(*p, l, step, max);
                    }
                }
                write_block(&mut recon.y, x, y, s, block);
                k += 1;
            });
            if bad_mv {
                return Err(Error::Format(format!("frame {i}: motion vector leaves the picture")));
            }
            let mut k = 0;
            ctu.for_each_leaf(x0, y0, &mut |x, y, node, mode| {
                let cs = node.size() / 2;
                let mut o = offsets[k] + 4 * cs * cs;
                for plane in 1..3 {
                    predict_chroma(&recon, reference, plane, x / 2, y / 2, cs, mode, bd, &mut pred);
                    let block = &mut pred[..cs * cs];
                    if !matches!(mode, CuMode::Skip(_)) {
                        for (p, &l) in block.iter_mut().zip(&lv[o..o + cs * cs]) {
                            *p = reconstruct_sample(*p, l, step, max);
                        }
                        o += cs * cs;
                    }
                    write_block(recon.planes_mut()[plane], x / 2, y / 2, cs, block);
                }
                k += 1;
            });
        }
        if pos != lv.len() {
            return Err(Error::Format(format!("frame {i}: {} trailing levels", lv.len() - pos)));
        }
        out.push(recon);
    }
    Ok(out)
}
