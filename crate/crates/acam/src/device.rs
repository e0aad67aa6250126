//! FeFET threshold programming and channel current.
//!
//! The simulator reduces a FeFET to two properties:
//!
//! 1. **Programmable threshold voltage.** Gate pulses between 3 and 4 V move
//!    the ferroelectric polarization partially, which shifts the threshold
//!    voltage monotonically. We map pulse amplitude affinely onto the
//!    programmable threshold range and snap to a fixed number of levels.
//!
//! 2. **Clamped subthreshold conduction.** Above threshold (below, for PMOS)
//!    the channel carries the normalized on-current. Into cutoff the current
//!    falls by one decade per `subthreshold_swing` millivolts — the
//!    thermionic limit is about 60 mV/dec at room temperature — until it
//!    reaches a leakage floor:
//!
//!    ```text
//!    NMOS: I(v) = i_on                                    v >= v_th
//!                 max(i_floor, i_on * 10^((v - v_th)/s))  v <  v_th
//!    PMOS: mirror image around its threshold
//!    ```
//!
//! Everything is expressed in normalized current units (`i_on = 1`).

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::range::VoltageRange;

/// Channel polarity of a FeFET.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Nmos,
    Pmos,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Nmos => write!(f, "NMOS"),
            Polarity::Pmos => write!(f, "PMOS"),
        }
    }
}

/// Electrical parameters shared by the two FeFETs of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    /// Subthreshold swing in mV per decade of current.
    pub subthreshold_swing_mv: f64,
    /// Normalized on-current.
    pub i_on: f64,
    /// Leakage floor; currents never fall below this.
    pub i_floor: f64,
}

impl Default for CellParams {
    fn default() -> Self {
        Self {
            subthreshold_swing_mv: 60.0,
            i_on: 1.0,
            i_floor: 1e-9,
        }
    }
}

impl CellParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.subthreshold_swing_mv > 0.0) {
            return Err(Error::invalid(format!(
                "subthreshold swing must be positive, got {}",
                self.subthreshold_swing_mv
            )));
        }
        if !(self.i_floor > 0.0 && self.i_on > 0.0 && self.i_floor < self.i_on) {
            return Err(Error::invalid(format!(
                "need 0 < i_floor < i_on, got i_floor = {}, i_on = {}",
                self.i_floor, self.i_on
            )));
        }
        Ok(())
    }
}

/// A single FeFET: polarity, programmed threshold, and cell electricals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FefetParams {
    pub polarity: Polarity,
    pub v_th: f64,
    pub subthreshold_swing_mv: f64,
    pub i_on: f64,
    pub i_floor: f64,
}

impl FefetParams {
    pub fn new(polarity: Polarity, v_th: f64) -> Self {
        Self::with_cell(polarity, v_th, &CellParams::default())
    }

    pub fn with_cell(polarity: Polarity, v_th: f64, cell: &CellParams) -> Self {
        Self {
            polarity,
            v_th,
            subthreshold_swing_mv: cell.subthreshold_swing_mv,
            i_on: cell.i_on,
            i_floor: cell.i_floor,
        }
    }

    pub fn validate(&self, programmable: &VoltageRange) -> Result<()> {
        CellParams {
            subthreshold_swing_mv: self.subthreshold_swing_mv,
            i_on: self.i_on,
            i_floor: self.i_floor,
        }
        .validate()?;
        if !programmable.contains(self.v_th) {
            return Err(Error::invalid(format!(
                "threshold {} V outside programmable range [{}, {}] V",
                self.v_th,
                programmable.min(),
                programmable.max()
            )));
        }
        Ok(())
    }
}

/// Valid gate pulse amplitudes for partial polarization switching.
pub const PULSE_MIN_V: f64 = 3.0;
pub const PULSE_MAX_V: f64 = 4.0;

/// A programming pulse: amplitude in `[3, 4]` V plus the number of distinct
/// threshold levels the staircase programming resolves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseProgram {
    pub amplitude: f64,
    pub level_count: usize,
}

impl PulseProgram {
    pub fn new(amplitude: f64, level_count: usize) -> Result<Self> {
        let p = Self {
            amplitude,
            level_count,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite()
            || self.amplitude < PULSE_MIN_V
            || self.amplitude > PULSE_MAX_V
        {
            return Err(Error::invalid(format!(
                "pulse amplitude {} V outside [{PULSE_MIN_V}, {PULSE_MAX_V}] V",
                self.amplitude
            )));
        }
        if self.level_count < 2 {
            return Err(Error::invalid(format!(
                "level count must be at least 2, got {}",
                self.level_count
            )));
        }
        Ok(())
    }
}

impl Default for PulseProgram {
    /// Ten levels over the full amplitude span, matching the staircase
    /// programming demonstrated on the measured devices.
    fn default() -> Self {
        Self {
            amplitude: PULSE_MIN_V,
            level_count: 10,
        }
    }
}

/// Map a pulse onto a programmed threshold voltage.
///
/// The amplitude is taken affinely from `[3, 4]` V onto `device_range` and
/// snapped to the nearest of `level_count` equally spaced levels, so the map
/// is monotone nondecreasing in amplitude and idempotent on snapped values.
pub fn program_threshold(pulse: &PulseProgram, device_range: &VoltageRange) -> Result<f64> {
    pulse.validate()?;
    let t = (pulse.amplitude - PULSE_MIN_V) / (PULSE_MAX_V - PULSE_MIN_V);
    let v = (1.0 - t) * device_range.min() + t * device_range.max();
    device_range.snap_to_levels(v, pulse.level_count)
}

/// Channel current of one FeFET at search-line voltage `v_sl`.
///
/// Returns `i_on` in the on state and the clamped subthreshold exponential in
/// cutoff; continuous at the threshold and monotone in `v_sl` (nondecreasing
/// for NMOS, nonincreasing for PMOS).
pub fn channel_current(params: &FefetParams, v_sl: f64) -> f64 {
    // Volts into cutoff, negative when the device is off.
    let drive = match params.polarity {
        Polarity::Nmos => v_sl - params.v_th,
        Polarity::Pmos => params.v_th - v_sl,
    };
    if drive >= 0.0 {
        params.i_on
    } else {
        let decades = drive * 1000.0 / params.subthreshold_swing_mv;
        (params.i_on * 10f64.powf(decades)).max(params.i_floor)
    }
}

/// Device-level configuration, loadable from a `key = value` text file.
///
/// Recognized keys: `subthreshold_swing_mv`, `i_on`, `i_floor`, `v_min`,
/// `v_max`, `level_count`, and optionally `sense_offset_v` (see
/// [`crate::analysis`]). Lines starting with `#` are comments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceConfig {
    pub cell: CellParams,
    pub range: VoltageRange,
    pub level_count: usize,
    /// How far inside a window edge the worst-case distinguishable query
    /// sits; defaults to three subthreshold decades.
    pub sense_offset_v: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        let cell = CellParams::default();
        Self {
            cell,
            range: VoltageRange::default(),
            level_count: 10,
            sense_offset_v: 3.0 * cell.subthreshold_swing_mv / 1000.0,
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        if self.level_count < 2 {
            return Err(Error::invalid("level_count must be at least 2"));
        }
        if !(self.sense_offset_v > 0.0) {
            return Err(Error::invalid("sense_offset_v must be positive"));
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut explicit_offset = false;
        let (mut v_min, mut v_max) = (cfg.range.min(), cfg.range.max());
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, format!("expected `key = value`: {raw}")))?;
            let key = key.trim();
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(lineno, format!("not a number: {v}")))
            };
            match key {
                "subthreshold_swing_mv" => cfg.cell.subthreshold_swing_mv = num(value)?,
                "i_on" => cfg.cell.i_on = num(value)?,
                "i_floor" => cfg.cell.i_floor = num(value)?,
                "v_min" => v_min = num(value)?,
                "v_max" => v_max = num(value)?,
                "level_count" => {
                    cfg.level_count = value
                        .parse::<usize>()
                        .map_err(|_| Error::parse(lineno, format!("not an integer: {value}")))?
                }
                "sense_offset_v" => {
                    cfg.sense_offset_v = num(value)?;
                    explicit_offset = true;
                }
                other => {
                    return Err(Error::parse(lineno, format!("unknown key: {other}")));
                }
            }
        }
        cfg.range = VoltageRange::new(v_min, v_max)?;
        if !explicit_offset {
            cfg.sense_offset_v = 3.0 * cfg.cell.subthreshold_swing_mv / 1000.0;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
