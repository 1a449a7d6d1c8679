//! PSNR and Bjøntegaard-delta metrics.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::frame::{Frame, Plane};

/// PSNR reported for identical pictures.
pub const PSNR_CAP_DB: f64 = 100.0;

pub fn mse_plane(a: &Plane, b: &Plane) -> f64 {
    let sse: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    sse as f64 / a.data().len() as f64
}

pub fn psnr_from_mse(mse: f64, bit_depth: u8) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    let peak = f64::from((1u32 << bit_depth) - 1);
    (10.0 * libm::log10(peak * peak / mse)).min(PSNR_CAP_DB)
}

/// Luma PSNR in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr_y(orig: &Frame, recon: &Frame) -> Result<f64> {
    if !orig.same_geometry(recon) {
        return Err(invalid!(
            "psnr on {}x{}@{} vs {}x{}@{}",
            orig.width,
            orig.height,
            orig.bit_depth,
            recon.width,
            recon.height,
            recon.bit_depth
        ));
    }
    Ok(psnr_from_mse(mse_plane(&orig.y, &recon.y), orig.bit_depth))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    pub bitrate_kbps: f64,
    pub psnr_db: f64,
}

impl RdPoint {
    pub fn new(bitrate_kbps: f64, psnr_db: f64) -> Self {
        RdPoint { bitrate_kbps, psnr_db }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BdResult {
    /// Percent bitrate change at equal quality; positive is worse.
    pub bd_rate: f64,
    /// Mean PSNR change at equal rate in dB; negative is worse.
    pub bd_psnr: f64,
}

/// `c0 + c1 t + c2 t^2 + c3 t^3` with `t = (x - center) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cubic {
    pub coeffs: [f64; 4],
    pub center: f64,
    pub scale: f64,
}

impl Cubic {
    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.scale;
        let c = &self.coeffs;
        ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
    }

    fn antiderivative_t(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        (((c[3] / 4.0 * t + c[2] / 3.0) * t + c[1] / 2.0) * t + c[0]) * t
    }

    /// Exact integral over `[lo, hi]` in the original variable.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let tl = (lo - self.center) / self.scale;
        let th = (hi - self.center) / self.scale;
        self.scale * (self.antiderivative_t(th) - self.antiderivative_t(tl))
    }
}

/// Least-squares cubic through `(xs, ys)`; needs at least four points with
/// distinct abscissae.
pub fn fit_cubic(xs: &[f64], ys: &[f64]) -> Result<Cubic> {
    if xs.len() != ys.len() {
        return Err(invalid!("{} abscissae vs {} ordinates", xs.len(), ys.len()));
    }
    if xs.len() < 4 {
        return Err(Error::InsufficientData(xs.len()));
    }
    let n = xs.len() as f64;
    let center = xs.iter().sum::<f64>() / n;
    let scale = xs.iter().map(|x| libm::fabs(x - center)).fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err(invalid!("all abscissae are equal"));
    }
    // Normal equations on the centred, scaled variable.
    let mut m = [[0.0f64; 5]; 4];
    for (&x, &y) in xs.iter().zip(ys) {
        let t = (x - center) / scale;
        let pw = [1.0, t, t * t, t * t * t];
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] += pw[r] * pw[c];
            }
            m[r][4] += pw[r] * y;
        }
    }
    let coeffs = solve4(m).ok_or_else(|| invalid!("degenerate RD curve (fewer than 4 distinct points)"))?;
    Ok(Cubic { coeffs, center, scale })
}

fn solve4(mut m: [[f64; 5]; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&a, &b| libm::fabs(m[a][col]).total_cmp(&libm::fabs(m[b][col])))?;
        if libm::fabs(m[pivot][col]) < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for r in 0..4 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..5 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = [0.0; 4];
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = m[i][4] / m[i][i];
    }
    Some(x)
}

/// Sorted by bitrate, validated, and split into `(log10 rate, psnr)`.
fn prepare(curve: &[RdPoint]) -> Result<(Vec<f64>, Vec<f64>)> {
    if curve.len() < 4 {
        return Err(Error::InsufficientData(curve.len()));
    }
    let mut pts: Vec<RdPoint> = curve.to_vec();
    for p in &pts {
        if !(p.bitrate_kbps.is_finite() && p.bitrate_kbps > 0.0 && p.psnr_db.is_finite()) {
            return Err(invalid!("RD point {p:?} must have a finite positive bitrate and finite PSNR"));
        }
    }
    pts.sort_by(|a, b| a.bitrate_kbps.total_cmp(&b.bitrate_kbps));
    for w in pts.windows(2) {
        if w[1].bitrate_kbps <= w[0].bitrate_kbps {
            return Err(invalid!("duplicate bitrate {}", w[1].bitrate_kbps));
        }
        if w[1].psnr_db <= w[0].psnr_db {
            return Err(invalid!(
                "PSNR not strictly increasing with bitrate ({} kbps: {} dB, {} kbps: {} dB)",
                w[0].bitrate_kbps,
                w[0].psnr_db,
                w[1].bitrate_kbps,
                w[1].psnr_db
            ));
        }
    }
    Ok((
        pts.iter().map(|p| libm::log10(p.bitrate_kbps)).collect(),
        pts.iter().map(|p| p.psnr_db).collect(),
    ))
}

fn overlap(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let lo = a[0].max(b[0]);
    let hi = a[a.len() - 1].min(b[b.len() - 1]);
    if hi <= lo {
        return Err(Error::NoOverlap);
    }
    Ok((lo, hi))
}

/// Mean log10-rate difference (test minus anchor) over the shared PSNR span.
fn mean_log_rate_diff(anchor: &[RdPoint], test: &[RdPoint]) -> Result<f64> {
    let (ra, qa) = prepare(anchor)?;
    let (rt, qt) = prepare(test)?;
    let fa = fit_cubic(&qa, &ra)?;
    let ft = fit_cubic(&qt, &rt)?;
    let (lo, hi) = overlap(&qa, &qt)?;
    let ia = fa.integral(lo, hi);
    let it = ft.integral(lo, hi);
    Ok((it - ia) / (hi - lo))
}

/// Percent bitrate difference at equal PSNR (positive: test needs more bits).
pub fn bd_rate(anchor: &[RdPoint], test: &[RdPoint]) -> Result<f64> {
    let d = mean_log_rate_diff(anchor, test)?;
    Ok((libm::pow(10.0, d) - 1.0) * 100.0)
}

/// Mean PSNR difference in dB at equal bitrate (negative: test is worse).
pub fn bd_psnr(anchor: &[RdPoint], test: &[RdPoint]) -> Result<f64> {
    let (ra, qa) = prepare(anchor)?;
    let (rt, qt) = prepare(test)?;
    let fa = fit_cubic(&ra, &qa)?;
    let ft = fit_cubic(&rt, &qt)?;
    let (lo, hi) = overlap(&ra, &rt)?;
    let ia = fa.integral(lo, hi);
    let it = ft.integral(lo, hi);
    Ok((it - ia) / (hi - lo))
}

pub fn bd_metrics(anchor: &[RdPoint], test: &[RdPoint]) -> Result<BdResult> {
    Ok(BdResult { bd_rate: bd_rate(anchor, test)?, bd_psnr: bd_psnr(anchor, test)? })
}
