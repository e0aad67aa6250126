//! Match windows: the closed voltage interval stored by one ACAM cell.
//!
//! The upper bound of a window is the threshold voltage of the cell's NMOS
//! FeFET and the lower bound that of the PMOS FeFET. A search-line voltage
//! inside the window leaves both devices in cutoff (match); outside, one of
//! them turns on and discharges the match line (mismatch).

use serde::{Deserialize, Serialize};

use crate::device::{channel_current, CellParams, FefetParams, Polarity};
use crate::error::{Error, Result};
use crate::range::VoltageRange;

/// Closed interval `[lower, upper]` stored in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchWindow {
    lower: f64,
    upper: f64,
}

impl MatchWindow {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower > upper {
            return Err(Error::invalid(format!(
                "invalid match window [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// Build a window of the given `width` around `center`.
///
/// When `quant_bits` is set the center is first snapped to one of the
/// `2^bits` uniform levels over `range`; the width stays exact. Both
/// endpoints are clamped into the operating range.
pub fn make_window(
    center: f64,
    width: f64,
    quant_bits: Option<u8>,
    range: &VoltageRange,
) -> Result<MatchWindow> {
    if !width.is_finite() || width < 0.0 {
        return Err(Error::invalid(format!(
            "window width must be nonnegative, got {width}"
        )));
    }
    let center = match quant_bits {
        Some(bits) => range.quantize(center, bits)?,
        None => range.clamp(center),
    };
    MatchWindow::new(
        range.clamp(center - 0.5 * width),
        range.clamp(center + 0.5 * width),
    )
}

/// Match outcome of one cell: true iff `v_sl` lies in the closed window.
pub fn cell_match(window: &MatchWindow, v_sl: f64) -> bool {
    window.contains(v_sl)
}

/// Match-line discharge current of one cell.
///
/// Sum of the NMOS channel current (threshold at the upper bound) and the
/// PMOS channel current (threshold at the lower bound). Minimal at the
/// window center, rising to roughly `i_on` deep in mismatch.
pub fn cell_current(window: &MatchWindow, v_sl: f64, params: &CellParams) -> f64 {
    let nmos = FefetParams::with_cell(Polarity::Nmos, window.upper(), params);
    let pmos = FefetParams::with_cell(Polarity::Pmos, window.lower(), params);
    channel_current(&nmos, v_sl) + channel_current(&pmos, v_sl)
}
