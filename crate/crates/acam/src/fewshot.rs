//! Episodic few-shot classification on top of the array search.
//!
//! An n-way k-shot episode stores the n*k support embeddings in an
//! (n*k x d) array — one embedding per row, one window per component, all
//! windows sharing a single width — and classifies the query by the label of
//! the row with the largest generalized Hamming score. Cosine similarity on
//! the raw embeddings is the software baseline.
//!
//! Embeddings come either from a CSV table (`label,e0,...,e63`) or from the
//! synthetic clustered generator; a table's global min/max is rescaled
//! affinely onto the embedding voltage range before programming.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::array::{perturb_windows, AcamArray, NoiseSpec};
use crate::error::{Error, Result};
use crate::range::VoltageRange;
use crate::search::{analog_hamming, cosine_similarity};
use crate::seeding::{mix, mix2};
use crate::window::make_window;

/// Labeled embedding rows. Class ids are indices into the sorted list of
/// distinct labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    labels: Vec<String>,
    features: Vec<Vec<f64>>,
    dim: usize,
}

impl EmbeddingTable {
    pub fn new(labels: Vec<String>, features: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != features.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: features.len(),
            });
        }
        let dim = features.first().map_or(0, |f| f.len());
        for (i, f) in features.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} features, expected {dim}",
                    f.len()
                )));
            }
        }
        Ok(Self {
            labels,
            features,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self, row: usize) -> &str {
        &self.labels[row]
    }

    pub fn features(&self, row: usize) -> &[f64] {
        &self.features[row]
    }

    /// Distinct labels, sorted; the index of a label here is its class id.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.labels.clone();
        names.sort();
        names.dedup();
        names
    }

    /// Row indices per class id, classes sorted by label.
    pub fn class_rows(&self) -> Vec<(String, Vec<usize>)> {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, label) in self.labels.iter().enumerate() {
            groups.entry(label).or_default().push(i);
        }
        groups
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    /// Affine rescale of the table's global min/max onto `range`. A table
    /// with a single distinct value maps onto the range center.
    pub fn rescaled_to(&self, range: &VoltageRange) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &self.features {
            for &v in row {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let map: Box<dyn Fn(f64) -> f64> = if !(hi > lo) {
            let mid = 0.5 * (range.min() + range.max());
            Box::new(move |_| mid)
        } else {
            let (rmin, rmax) = (range.min(), range.max());
            Box::new(move |v| {
                let t = (v - lo) / (hi - lo);
                (1.0 - t) * rmin + t * rmax
            })
        };
        Self {
            labels: self.labels.clone(),
            features: self
                .features
                .iter()
                .map(|row| row.iter().map(|&v| map(v)).collect())
                .collect(),
            dim: self.dim,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for j in 0..self.dim {
            out.push_str(&format!(",e{j}"));
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.features) {
            out.push_str(label);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty embedding file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "label" {
            return Err(Error::parse(1, "header must be `label,e0,...`"));
        }
        let dim = cols.len() - 1;
        for (j, c) in cols[1..].iter().enumerate() {
            if *c != format!("e{j}") {
                return Err(Error::parse(1, format!("expected column e{j}, got {c}")));
            }
        }
        let mut labels = Vec::new();
        let mut features = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(Error::parse(
                    lineno,
                    format!("expected {} fields, got {}", dim + 1, fields.len()),
                ));
            }
            let mut row = Vec::with_capacity(dim);
            for f in &fields[1..] {
                row.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("not a number: {}", f.trim())))?,
                );
            }
            labels.push(fields[0].trim().to_string());
            features.push(row);
        }
        let mut table = Self::new(labels, features)?;
        if table.is_empty() {
            table.dim = dim;
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Load a `label,e0,...,e63` CSV.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    EmbeddingTable::from_csv(&std::fs::read_to_string(path)?)
}

/// Synthetic clustered embeddings: per-class centroids drawn uniformly over
/// `range`, samples placed at centroid plus isotropic Gaussian jitter.
/// Deterministic per seed.
pub fn synth_embeddings(
    n_classes: usize,
    per_class: usize,
    d: usize,
    cluster_std: f64,
    seed: u64,
    range: &VoltageRange,
) -> Result<EmbeddingTable> {
    if n_classes == 0 || per_class == 0 || d == 0 {
        return Err(Error::invalid(
            "class, sample, and dimension counts must be at least 1",
        ));
    }
    if !(cluster_std >= 0.0) {
        return Err(Error::invalid(format!(
            "cluster std must be nonnegative, got {cluster_std}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, cluster_std).expect("validated std");
    let mut labels = Vec::with_capacity(n_classes * per_class);
    let mut features = Vec::with_capacity(n_classes * per_class);
    for c in 0..n_classes {
        let centroid: Vec<f64> = (0..d)
            .map(|_| rng.gen_range(range.min()..=range.max()))
            .collect();
        for _ in 0..per_class {
            let sample: Vec<f64> = centroid
                .iter()
                .map(|&v| v + jitter.sample(&mut rng))
                .collect();
            labels.push(format!("class_{c:03}"));
            features.push(sample);
        }
    }
    EmbeddingTable::new(labels, features)
}

/// Row/label indices of one sampled episode, independent of any feature view.
#[derive(Debug, Clone)]
pub struct EpisodeIndices {
    pub n_way: usize,
    pub k_shot: usize,
    pub support_rows: Vec<usize>,
    pub support_labels: Vec<usize>,
    pub query_row: usize,
    pub query_label: usize,
}

/// An n-way k-shot episode: n*k support embeddings (each class exactly k
/// times) plus one query.
#[derive(Debug, Clone)]
pub struct Episode {
    pub n_way: usize,
    pub k_shot: usize,
    pub support: Vec<Vec<f64>>,
    pub support_labels: Vec<usize>,
    pub query: Vec<f64>,
    pub query_label: usize,
}

impl Episode {
    pub fn from_indices(table: &EmbeddingTable, idx: &EpisodeIndices) -> Self {
        Self {
            n_way: idx.n_way,
            k_shot: idx.k_shot,
            support: idx
                .support_rows
                .iter()
                .map(|&r| table.features(r).to_vec())
                .collect(),
            support_labels: idx.support_labels.clone(),
            query: table.features(idx.query_row).to_vec(),
            query_label: idx.query_label,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.len() != self.n_way * self.k_shot
            || self.support_labels.len() != self.support.len()
        {
            return Err(Error::invalid("support set must hold n_way * k_shot rows"));
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &l in &self.support_labels {
            *counts.entry(l).or_default() += 1;
        }
        if counts.len() != self.n_way || counts.values().any(|&c| c != self.k_shot) {
            return Err(Error::invalid(
                "each of the n classes must appear exactly k times",
            ));
        }
        let d = self.query.len();
        if self.support.iter().any(|s| s.len() != d) {
            return Err(Error::invalid("support and query dimensions differ"));
        }
        Ok(())
    }
}

/// Sample episode row indices: `n_way` distinct classes with at least
/// `k_shot + 1` samples each, `k_shot` support rows per class, and a query
/// row never contained in the support set.
pub fn sample_episode_indices(
    table: &EmbeddingTable,
    n_way: usize,
    k_shot: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeIndices> {
    if n_way == 0 || k_shot == 0 {
        return Err(Error::invalid("n_way and k_shot must be at least 1"));
    }
    let groups = table.class_rows();
    let eligible: Vec<usize> = (0..groups.len())
        .filter(|&c| groups[c].1.len() >= k_shot + 1)
        .collect();
    if eligible.len() < n_way {
        return Err(Error::invalid(format!(
            "need {n_way} classes with at least {} samples, found {}",
            k_shot + 1,
            eligible.len()
        )));
    }
    let picked = rand::seq::index::sample(rng, eligible.len(), n_way);
    let classes: Vec<usize> = picked.into_iter().map(|i| eligible[i]).collect();
    let query_pos = rng.gen_range(0..n_way);

    let mut support_rows = Vec::with_capacity(n_way * k_shot);
    let mut support_labels = Vec::with_capacity(n_way * k_shot);
    let mut query_row = usize::MAX;
    for (pos, &class_id) in classes.iter().enumerate() {
        let rows = &groups[class_id].1;
        let take = if pos == query_pos { k_shot + 1 } else { k_shot };
        let chosen = rand::seq::index::sample(rng, rows.len(), take);
        let chosen: Vec<usize> = chosen.into_iter().map(|i| rows[i]).collect();
        for &r in chosen.iter().take(k_shot) {
            support_rows.push(r);
            support_labels.push(class_id);
        }
        if pos == query_pos {
            query_row = chosen[k_shot];
        }
    }
    Ok(EpisodeIndices {
        n_way,
        k_shot,
        support_rows,
        support_labels,
        query_row,
        query_label: classes[query_pos],
    })
}

/// Convenience wrapper materializing the episode from the same table.
pub fn sample_episode(
    table: &EmbeddingTable,
    n_way: usize,
    k_shot: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Episode> {
    let idx = sample_episode_indices(table, n_way, k_shot, rng)?;
    Ok(Episode::from_indices(table, &idx))
}

/// Whether support rows are stored per sample or collapsed to one class
/// centroid per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportMode {
    PerSample,
    Centroid,
}

/// Window programming parameters for the support array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FewshotConfig {
    pub window_size: f64,
    pub quant_bits: Option<u8>,
    pub noise: NoiseSpec,
    pub embed_range: VoltageRange,
    pub mode: SupportMode,
}

impl Default for FewshotConfig {
    fn default() -> Self {
        Self {
            window_size: 0.4,
            quant_bits: Some(4),
            noise: NoiseSpec::none(),
            embed_range: VoltageRange::default(),
            mode: SupportMode::PerSample,
        }
    }
}

impl FewshotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_size >= 0.0) {
            return Err(Error::invalid(format!(
                "window size must be nonnegative, got {}",
                self.window_size
            )));
        }
        Ok(())
    }
}

fn support_rows_and_labels(ep: &Episode, mode: SupportMode) -> (Vec<Vec<f64>>, Vec<usize>) {
    match mode {
        SupportMode::PerSample => (ep.support.clone(), ep.support_labels.clone()),
        SupportMode::Centroid => {
            let mut by_class: BTreeMap<usize, Vec<&Vec<f64>>> = BTreeMap::new();
            for (row, &label) in ep.support.iter().zip(&ep.support_labels) {
                by_class.entry(label).or_default().push(row);
            }
            let d = ep.query.len();
            let mut rows = Vec::with_capacity(by_class.len());
            let mut labels = Vec::with_capacity(by_class.len());
            for (label, members) in by_class {
                let mut centroid = vec![0.0; d];
                for m in &members {
                    for (c, v) in centroid.iter_mut().zip(m.iter()) {
                        *c += v;
                    }
                }
                for c in &mut centroid {
                    *c /= members.len() as f64;
                }
                rows.push(centroid);
                labels.push(label);
            }
            (rows, labels)
        }
    }
}

/// Program the episode's support set into an array: one row per support
/// sample (or class centroid), window centers at the quantized embedding
/// values, all widths equal to `window_size`, then the configured
/// perturbation.
pub fn build_support_array(ep: &Episode, cfg: &FewshotConfig) -> Result<AcamArray> {
    cfg.validate()?;
    ep.validate()?;
    let (rows, _) = support_rows_and_labels(ep, cfg.mode);
    let windows = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| make_window(v, cfg.window_size, cfg.quant_bits, &cfg.embed_range))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let array = AcamArray::new(windows, cfg.embed_range)?;
    Ok(perturb_windows(&array, &cfg.noise))
}

/// Classify the episode's query: label of the best-scoring support row under
/// the generalized Hamming similarity (lowest row index on ties).
pub fn classify(ep: &Episode, cfg: &FewshotConfig) -> Result<usize> {
    let array = build_support_array(ep, cfg)?;
    let (_, labels) = support_rows_and_labels(ep, cfg.mode);
    let result = analog_hamming(&array, &ep.query)?;
    Ok(labels[result.best_row])
}

/// Software baseline: label of the support row with the largest cosine
/// similarity to the query (lowest row index on ties).
pub fn classify_cosine(ep: &Episode) -> Result<usize> {
    ep.validate()?;
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (i, row) in ep.support.iter().enumerate() {
        let s = cosine_similarity(row, &ep.query)?;
        if s > best_score {
            best_score = s;
            best = i;
        }
    }
    Ok(ep.support_labels[best])
}

/// Mean accuracy for one (window size, noise std) grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyCell {
    pub window_size: f64,
    pub noise_std: f64,
    pub accuracy: f64,
    pub n_episodes: usize,
}

/// Episode-averaged accuracy over a (window size x noise std) grid.
///
/// Episodes are sampled once per index from a sub-seeded stream and reused
/// across all grid cells, so cells are paired and the grid is independent of
/// evaluation order. The query row is never part of its episode's support
/// set. Window perturbations draw from a per-episode stream shared across
/// cells, scaled by each cell's std.
pub fn sweep_accuracy(
    table: &EmbeddingTable,
    n_way: usize,
    k_shot: usize,
    n_episodes: usize,
    window_sizes: &[f64],
    noise_stds: &[f64],
    seed: u64,
    base: &FewshotConfig,
) -> Result<Vec<AccuracyCell>> {
    if n_episodes == 0 || window_sizes.is_empty() || noise_stds.is_empty() {
        return Err(Error::invalid("empty sweep grid"));
    }
    for &s in noise_stds {
        if !(s >= 0.0) {
            return Err(Error::invalid(format!(
                "noise std must be nonnegative, got {s}"
            )));
        }
    }
    let rescaled = table.rescaled_to(&base.embed_range);
    // fail fast on an impossible episode shape
    {
        let mut probe = ChaCha8Rng::seed_from_u64(seed);
        sample_episode_indices(table, n_way, k_shot, &mut probe)?;
    }

    let n_cells = window_sizes.len() * noise_stds.len();
    let hits: Vec<Vec<u32>> = (0..n_episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(e as u64 + 1);
            let idx =
                sample_episode_indices(table, n_way, k_shot, &mut rng).expect("validated above");
            let ep = Episode::from_indices(&rescaled, &idx);
            let noise_seed = mix2(seed, e as u64, 0xacab);
            let mut row = Vec::with_capacity(n_cells);
            for &w in window_sizes {
                for &std in noise_stds {
                    let cfg = FewshotConfig {
                        window_size: w,
                        noise: NoiseSpec {
                            mean: base.noise.mean,
                            std,
                            seed: noise_seed,
                        },
                        ..*base
                    };
                    let predicted = classify(&ep, &cfg).expect("validated episode");
                    row.push(u32::from(predicted == ep.query_label));
                }
            }
            row
        })
        .collect();

    let mut cells = Vec::with_capacity(n_cells);
    let mut cell_idx = 0;
    for &w in window_sizes {
        for &std in noise_stds {
            let correct: u32 = hits.iter().map(|h| h[cell_idx]).sum();
            cells.push(AccuracyCell {
                window_size: w,
                noise_std: std,
                accuracy: correct as f64 / n_episodes as f64,
                n_episodes,
            });
            cell_idx += 1;
        }
    }
    Ok(cells)
}

/// Episode-averaged accuracy of the cosine baseline on the raw embeddings,
/// over the same episode stream as [`sweep_accuracy`].
pub fn cosine_baseline_accuracy(
    table: &EmbeddingTable,
    n_way: usize,
    k_shot: usize,
    n_episodes: usize,
    seed: u64,
) -> Result<f64> {
    let _ = mix(seed, 0); // episode streams are keyed purely by index
    let correct: u32 = (0..n_episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(e as u64 + 1);
            let idx = sample_episode_indices(table, n_way, k_shot, &mut rng)?;
            let ep = Episode::from_indices(table, &idx);
            Ok(u32::from(classify_cosine(&ep)? == ep.query_label))
        })
        .collect::<Result<Vec<u32>>>()?
        .iter()
        .sum();
    Ok(correct as f64 / n_episodes as f64)
}
