//! ACAM arrays: an m x d grid of match windows with per-row drain weights.
//!
//! Arrays are immutable after construction; programming-side operations
//! (perturbation, re-quantization) return new values, and all query-side
//! operations are read-only.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::device::CellParams;
use crate::error::{Error, Result};
use crate::range::VoltageRange;
use crate::window::{cell_current, cell_match, MatchWindow};

/// Additive Gaussian perturbation applied to window bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub mean: f64,
    pub std: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(mean: f64, std: f64, seed: u64) -> Result<Self> {
        if !(std >= 0.0) || !mean.is_finite() {
            return Err(Error::invalid(format!(
                "noise std must be nonnegative, got {std}"
            )));
        }
        Ok(Self { mean, std, seed })
    }

    /// Zero noise with the given seed.
    pub fn none() -> Self {
        Self {
            mean: 0.0,
            std: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// An m x d grid of match windows plus a drain weight per row.
///
/// Drain weights scale each row's match-line contribution; they default to
/// 1.0 and carry the regression coefficients in the kernel pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct AcamArray {
    windows: Vec<Vec<MatchWindow>>,
    drain_weights: Vec<f64>,
    range: VoltageRange,
}

impl AcamArray {
    pub fn new(windows: Vec<Vec<MatchWindow>>, range: VoltageRange) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::invalid("array needs at least one row"));
        }
        let d = windows[0].len();
        for (i, row) in windows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::invalid(format!(
                    "row {i} has {} cells, expected {d}",
                    row.len()
                )));
            }
            for (j, w) in row.iter().enumerate() {
                if !range.contains(w.lower()) || !range.contains(w.upper()) {
                    return Err(Error::invalid(format!(
                        "window ({i}, {j}) [{}, {}] outside operating range",
                        w.lower(),
                        w.upper()
                    )));
                }
            }
        }
        let m = windows.len();
        Ok(Self {
            windows,
            drain_weights: vec![1.0; m],
            range,
        })
    }

    pub fn with_drain_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("drain weights must be finite"));
        }
        self.drain_weights = weights;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.windows.len()
    }

    pub fn cols(&self) -> usize {
        self.windows[0].len()
    }

    pub fn window(&self, row: usize, col: usize) -> &MatchWindow {
        &self.windows[row][col]
    }

    pub fn row(&self, row: usize) -> &[MatchWindow] {
        &self.windows[row]
    }

    pub fn drain_weights(&self) -> &[f64] {
        &self.drain_weights
    }

    pub fn operating_range(&self) -> &VoltageRange {
        &self.range
    }

    fn check_query(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                got: query.len(),
            });
        }
        Ok(())
    }

    fn check_row(&self, row: usize) -> Result<()> {
        if row >= self.rows() {
            return Err(Error::invalid(format!(
                "row {row} out of bounds for {} rows",
                self.rows()
            )));
        }
        Ok(())
    }

    /// Boolean row match: every cell of the row matches its query component.
    /// Vacuously true for d = 0.
    pub fn row_matches(&self, row: usize, query: &[f64]) -> Result<bool> {
        self.check_row(row)?;
        self.check_query(query)?;
        Ok(self.windows[row]
            .iter()
            .zip(query)
            .all(|(w, &v)| cell_match(w, v)))
    }

    /// Aggregate match-line discharge current of a row.
    pub fn row_mismatch_current(
        &self,
        row: usize,
        query: &[f64],
        params: &CellParams,
    ) -> Result<f64> {
        self.check_row(row)?;
        self.check_query(query)?;
        Ok(self.windows[row]
            .iter()
            .zip(query)
            .map(|(w, &v)| cell_current(w, v, params))
            .sum())
    }

    /// Serialize to CSV: a `m,d,v_min,v_max` header followed by one line per
    /// row of `lower:upper` cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{},{},{},{}\n",
            self.rows(),
            self.cols(),
            self.range.min(),
            self.range.max()
        ));
        for row in &self.windows {
            let line: Vec<String> = row
                .iter()
                .map(|w| format!("{}:{}", w.lower(), w.upper()))
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty array file"))?;
        let head: Vec<&str> = header.split(',').collect();
        if head.len() != 4 {
            return Err(Error::parse(1, "header must be `m,d,v_min,v_max`"));
        }
        let m: usize = head[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, format!("bad row count: {}", head[0])))?;
        let d: usize = head[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, format!("bad column count: {}", head[1])))?;
        let v_min: f64 = head[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, format!("bad v_min: {}", head[2])))?;
        let v_max: f64 = head[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, format!("bad v_max: {}", head[3])))?;
        let range = VoltageRange::new(v_min, v_max)?;

        let mut windows = Vec::with_capacity(m);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(d);
            for cell in line.split(',') {
                let (lo, hi) = cell.trim().split_once(':').ok_or_else(|| {
                    Error::parse(lineno, format!("cell must be `lower:upper`: {cell}"))
                })?;
                let lo: f64 = lo
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad lower bound: {lo}")))?;
                let hi: f64 = hi
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad upper bound: {hi}")))?;
                row.push(
                    MatchWindow::new(lo, hi).map_err(|e| Error::parse(lineno, e.to_string()))?,
                );
            }
            if row.len() != d {
                return Err(Error::parse(
                    lineno,
                    format!("expected {d} cells, got {}", row.len()),
                ));
            }
            windows.push(row);
        }
        if windows.len() != m {
            return Err(Error::parse(
                1,
                format!("header declares {m} rows, found {}", windows.len()),
            ));
        }
        Self::new(windows, range)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Perturb every window bound with an independent Gaussian sample.
///
/// Bounds are re-clamped into the operating range and re-ordered so that
/// `lower <= upper`. Deterministic for a given seed; zero std returns the
/// input unchanged.
pub fn perturb_windows(array: &AcamArray, noise: &NoiseSpec) -> AcamArray {
    if noise.std == 0.0 && noise.mean == 0.0 {
        return array.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(noise.mean, noise.std).expect("validated std");
    let range = array.range;
    let windows = array
        .windows
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| {
                    // lower bound drawn first, then upper
                    let lo = range.clamp(w.lower() + normal.sample(&mut rng));
                    let hi = range.clamp(w.upper() + normal.sample(&mut rng));
                    MatchWindow::new(lo.min(hi), lo.max(hi)).expect("clamped bounds")
                })
                .collect()
        })
        .collect();
    AcamArray {
        windows,
        drain_weights: array.drain_weights.clone(),
        range,
    }
}
