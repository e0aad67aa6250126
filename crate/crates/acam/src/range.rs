//! Operating voltage ranges and level quantization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed voltage interval `[min, max]` used as an operating or embedding
/// range. Quantization snaps values onto equally spaced levels that include
/// both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageRange {
    min: f64,
    max: f64,
}

impl VoltageRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || min >= max {
            return Err(Error::invalid(format!(
                "invalid voltage range [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    /// The `i`th of `count` equally spaced levels. Endpoints are exact: level
    /// 0 is `min` and level `count - 1` is `max`.
    pub fn level(&self, i: usize, count: usize) -> f64 {
        debug_assert!(count >= 2 && i < count);
        let t = i as f64 / (count - 1) as f64;
        (1.0 - t) * self.min + t * self.max
    }

    pub fn levels(&self, count: usize) -> Vec<f64> {
        (0..count).map(|i| self.level(i, count)).collect()
    }

    /// Snap `v` (clamped into the range) to the nearest of `count` equally
    /// spaced levels. Ties round toward the upper level.
    pub fn snap_to_levels(&self, v: f64, count: usize) -> Result<f64> {
        if count < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 levels, got {count}"
            )));
        }
        let t = (self.clamp(v) - self.min) / self.width();
        let idx = (t * (count - 1) as f64).round();
        let idx = (idx as usize).min(count - 1);
        Ok(self.level(idx, count))
    }

    /// Snap `v` to the nearest of `2^bits` uniform levels over the range.
    pub fn quantize(&self, v: f64, bits: u8) -> Result<f64> {
        if bits == 0 || bits > 24 {
            return Err(Error::invalid(format!(
                "quantization bits must be in 1..=24, got {bits}"
            )));
        }
        self.snap_to_levels(v, 1usize << bits)
    }
}

/// Default operating range of the cells: thresholds are programmable within
/// [-0.3, 2.0] V.
impl Default for VoltageRange {
    fn default() -> Self {
        Self {
            min: -0.3,
            max: 2.0,
        }
    }
}
