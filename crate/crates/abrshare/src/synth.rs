//! Deterministic synthetic test sequences.

use std::fmt;
use std::str::FromStr;

use abrshare_core::frame::{chroma_dims, Frame, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthKind {
    /// One textured picture repeated.
    Static,
    /// Textured picture translated by `(dx, dy)` per frame, wrapping.
    Pan { dx: i32, dy: i32 },
    /// Static texture plus fresh Gaussian noise of this sigma every frame.
    Noise { sigma: f64 },
    /// Static background, an object moving across it and light noise.
    Mixed,
}

impl SynthKind {
    /// The kinds used for desk-scale experiments.
    pub const STANDARD: [SynthKind; 4] =
        [SynthKind::Static, SynthKind::Pan { dx: 2, dy: 0 }, SynthKind::Noise { sigma: 8.0 }, SynthKind::Mixed];
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthKind::Static => f.write_str("static"),
            SynthKind::Pan { dx, dy } => write!(f, "pan:{dx},{dy}"),
            SynthKind::Noise { sigma } => write!(f, "noise:{sigma}"),
            SynthKind::Mixed => f.write_str("mixed"),
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    /// `static`, `mixed`, `pan[:dx,dy]` (default 2,0), `noise[:sigma]` (default 8).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown sequence kind {s:?}"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("static", None) => Ok(SynthKind::Static),
            ("mixed", None) => Ok(SynthKind::Mixed),
            ("pan", None) => Ok(SynthKind::Pan { dx: 2, dy: 0 }),
            ("pan", Some(a)) => {
                let (x, y) = a.split_once(',').ok_or_else(bad)?;
                Ok(SynthKind::Pan { dx: x.trim().parse().map_err(|_| bad())?, dy: y.trim().parse().map_err(|_| bad())? })
            }
            ("noise", None) => Ok(SynthKind::Noise { sigma: 8.0 }),
            ("noise", Some(a)) => {
                let sigma: f64 = a.trim().parse().map_err(|_| bad())?;
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(bad());
                }
                Ok(SynthKind::Noise { sigma })
            }
            _ => Err(bad()),
        }
    }
}

/// Smooth gradients, a few sinusoids and fine grain, in `[0, 1]`.
fn texture(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0.02..0.35),
                rng.gen_range(0.02..0.35),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.04..0.12),
            )
        })
        .collect();
    let grain = Normal::new(0.0, 0.015).expect("valid sigma");
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let mut v = 0.5 + 0.15 * (fx / w as f64 - 0.5) + 0.1 * (fy / h as f64 - 0.5);
            for &(kx, ky, ph, a) in &waves {
                v += a * (kx * fx + ky * fy + ph).sin();
            }
            v += grain.sample(rng);
            out.push(v.clamp(0.0, 1.0));
        }
    }
    out
}

fn quantize(v: f64, bit_depth: u8) -> u16 {
    let max = f64::from((1u32 << bit_depth) - 1);
    (v * max).round().clamp(0.0, max) as u16
}

struct Base {
    w: usize,
    h: usize,
    luma: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl Base {
    fn new(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Self {
        let luma = texture(w, h, rng);
        // Chroma follows luma loosely so the planes are not independent.
        let u = luma.iter().map(|&l| 0.5 + 0.25 * (l - 0.5)).collect();
        let v = luma.iter().map(|&l| 0.5 - 0.2 * (l - 0.5)).collect();
        Base { w, h, luma, u, v }
    }

    fn at(&self, plane: &[f64], x: i64, y: i64) -> f64 {
        let xx = x.rem_euclid(self.w as i64) as usize;
        let yy = y.rem_euclid(self.h as i64) as usize;
        plane[yy * self.w + xx]
    }
}

fn build_frame(
    w: usize,
    h: usize,
    bit_depth: u8,
    index: usize,
    mut sample: impl FnMut(usize, usize, usize) -> f64,
) -> Result<Frame> {
    let (cw, ch) = chroma_dims(w, h);
    let mut planes = Vec::with_capacity(3);
    for (p, (pw, ph)) in [(w, h), (cw, ch), (cw, ch)].into_iter().enumerate() {
        let mut data = Vec::with_capacity(pw * ph);
        for y in 0..ph {
            for x in 0..pw {
                data.push(quantize(sample(p, x, y), bit_depth));
            }
        }
        planes.push(Plane::from_vec(pw, ph, bit_depth, data)?);
    }
    let v = planes.pop().unwrap();
    let u = planes.pop().unwrap();
    let y = planes.pop().unwrap();
    Ok(Frame::from_planes(y, u, v, bit_depth, index)?)
}

/// `n` frames of `kind` at `w`x`h`; identical for identical arguments.
pub fn gen_synthetic(kind: SynthKind, w: usize, h: usize, n: usize, seed: u64, bit_depth: u8) -> Result<Vec<Frame>> {
    if w == 0 || h == 0 || !w.is_multiple_of(2) || !h.is_multiple_of(2) {
        return Err(Error::Config(format!("synthetic size {w}x{h} must be even and non-zero")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Base::new(w, h, &mut rng);
    let mut frames = Vec::with_capacity(n);
    match kind {
        SynthKind::Static => {
            for t in 0..n {
                frames.push(build_frame(w, h, bit_depth, t, |p, x, y| plane_sample(&base, p, x, y, 0, 0))?);
            }
        }
        SynthKind::Pan { dx, dy } => {
            for t in 0..n {
                let (ox, oy) = (i64::from(dx) * t as i64, i64::from(dy) * t as i64);
                frames.push(build_frame(w, h, bit_depth, t, |p, x, y| plane_sample(&base, p, x, y, ox, oy))?);
            }
        }
        SynthKind::Noise { sigma } => {
            let max = f64::from((1u32 << bit_depth) - 1);
            let noise = Normal::new(0.0, sigma / max).map_err(|e| Error::Config(e.to_string()))?;
            for t in 0..n {
                frames.push(build_frame(w, h, bit_depth, t, |p, x, y| {
                    plane_sample(&base, p, x, y, 0, 0) + noise.sample(&mut rng)
                })?);
            }
        }
        SynthKind::Mixed => {
            let object = Base::new(w, h, &mut rng);
            let (ow, oh) = ((w / 3).max(2) & !1, (h / 3).max(2) & !1);
            let max = f64::from((1u32 << bit_depth) - 1);
            let noise = Normal::new(0.0, 2.0 / max).expect("valid sigma");
            for t in 0..n {
                // The object enters at the left and crosses diagonally.
                let px = (t as i64 * 3).rem_euclid(w as i64);
                let py = (h as i64 / 4 + t as i64).rem_euclid(h as i64);
                frames.push(build_frame(w, h, bit_depth, t, |p, x, y| {
                    let s = if p == 0 { 1 } else { 2 };
                    let (lx, ly) = ((x * s) as i64, (y * s) as i64);
                    let inside = (lx - px).rem_euclid(w as i64) < ow as i64 && (ly - py).rem_euclid(h as i64) < oh as i64;
                    let v = if inside {
                        plane_sample(&object, p, x, y, -px, -py)
                    } else {
                        plane_sample(&base, p, x, y, 0, 0)
                    };
                    v + noise.sample(&mut rng)
                })?);
            }
        }
    }
    Ok(frames)
}

/// Base sample for plane `p` at plane coordinates `(x, y)`, with the luma
/// offset `(ox, oy)` applied.
fn plane_sample(base: &Base, p: usize, x: usize, y: usize, ox: i64, oy: i64) -> f64 {
    match p {
        0 => base.at(&base.luma, x as i64 + ox, y as i64 + oy),
        1 => base.at(&base.u, 2 * x as i64 + ox, 2 * y as i64 + oy),
        _ => base.at(&base.v, 2 * x as i64 + ox, 2 * y as i64 + oy),
    }
}
