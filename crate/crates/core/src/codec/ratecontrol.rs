//! Capped variable bitrate control.
//!
//! An integrating controller moves QP by at most one step per frame so that
//! the cumulative rate tracks the target. A frame whose bits exceed
//! `cap_factor` times the per-frame budget is re-encoded once at a coarser QP.

use super::types::MAX_QP;

/// Relative cumulative error tolerated before QP moves.
pub const RATE_BAND: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct RateController {
    frame_budget: f64,
    cap_bits: f64,
    qp: u8,
    spent: u64,
    frames: u64,
}

/// Bits per luma sample this codec's rate model spends at [`ANCHOR_QP`] on
/// textured content with motion.
pub const ANCHOR_BPP: f64 = 0.5;
pub const ANCHOR_QP: u8 = 30;

impl RateController {
    pub fn new(target_kbps: f64, fps: f64, cap_factor: f64, initial_qp: u8) -> Self {
        let frame_budget = target_kbps * 1000.0 / fps;
        RateController { frame_budget, cap_bits: frame_budget * cap_factor, qp: initial_qp.min(MAX_QP), spent: 0, frames: 0 }
    }

    /// Starting QP from the budget in bits per luma sample, one QP step of
    /// six per doubling around [`ANCHOR_BPP`] at [`ANCHOR_QP`].
    pub fn initial_qp(target_kbps: f64, fps: f64, width: usize, height: usize) -> u8 {
        let bpp = target_kbps * 1000.0 / fps / (width * height) as f64;
        let qp = f64::from(ANCHOR_QP) - 6.0 * libm::log2(bpp / ANCHOR_BPP);
        libm::round(qp).clamp(12.0, 48.0) as u8
    }

    pub fn qp(&self) -> u8 {
        self.qp
    }

    pub fn frame_budget(&self) -> f64 {
        self.frame_budget
    }

    pub fn cap_bits(&self) -> f64 {
        self.cap_bits
    }

    /// QP for the single re-encode of a frame that produced `bits` at
    /// `qp`, or `None` when the frame is within its cap.
    pub fn requant_qp(&self, qp: u8, bits: u64) -> Option<u8> {
        if (bits as f64) <= self.cap_bits || qp >= MAX_QP {
            return None;
        }
        // Six QP steps halve the rate, roughly.
        let delta = libm::ceil(6.0 * libm::log2(bits as f64 / self.cap_bits)).max(1.0) as u8;
        Some(qp.saturating_add(delta).min(MAX_QP))
    }

    /// Accounts a finished frame coded at `coded_qp` and returns the QP for
    /// the next one. After a re-encode the next frame starts from the coarser
    /// QP, otherwise the controller would overshoot the cap again.
    pub fn update(&mut self, coded_qp: u8, bits: u64) -> u8 {
        self.spent += bits;
        self.frames += 1;
        self.qp = cvbr_control(self.frame_budget, coded_qp.max(self.qp), self.spent, self.frames);
        self.qp
    }

    /// Cumulative rate relative to the target (0 means on target).
    pub fn relative_error(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.spent as f64 / (self.frame_budget * self.frames as f64) - 1.0
        }
    }
}

/// One controller step from cumulative state: the QP after a frame given
/// `running_bits` spent over `frames` frames against `frame_budget` each.
pub fn cvbr_control(frame_budget: f64, qp: u8, running_bits: u64, frames: u64) -> u8 {
    if frames == 0 {
        return qp;
    }
    let err = running_bits as f64 / (frame_budget * frames as f64) - 1.0;
    if err > RATE_BAND {
        (qp + 1).min(MAX_QP)
    } else if err < -RATE_BAND {
        qp.saturating_sub(1)
    } else {
        qp
    }
}
