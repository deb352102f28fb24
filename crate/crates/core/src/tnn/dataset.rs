use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    /// `None` picks the last column.
    pub label_column: Option<LabelColumn>,
    pub split_fraction: f64,
    pub seed: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            label_column: None,
            split_fraction: 0.7,
            seed: 0,
        }
    }
}

/// Per-feature normalization record, derived from training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub name: String,
    pub min: f64,
    pub max: f64,
    /// Median of the normalized training values; the default threshold.
    pub median: f64,
    /// Sample skewness of the normalized training values (informational).
    pub skew: f64,
    /// `min == max`: the feature binarizes to a constant 0.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryDataset {
    pub features: Vec<FeatureStats>,
    /// Class names in index order.
    pub classes: Vec<String>,
    /// `samples × features`, min-max normalized with training statistics.
    pub normalized: Vec<Vec<f64>>,
    /// `samples × features`.
    pub bits: Vec<Vec<bool>>,
    pub labels: Vec<usize>,
    pub split: Vec<Split>,
}

impl BinaryDataset {
    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Indices of the rows in `split`, or of all rows.
    pub fn rows(&self, split: Option<Split>) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| split.is_none_or(|s| self.split[i] == s))
            .collect()
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.median).collect()
    }

    /// Re-binarizes against other thresholds, e.g. the ones a model was
    /// trained with.
    pub fn rebinarize(&mut self, thresholds: &[f64]) -> Result<()> {
        if thresholds.len() != self.feature_count() {
            return Err(Error::Validation(format!(
                "{} thresholds for {} features",
                thresholds.len(),
                self.feature_count()
            )));
        }
        self.bits = binarize(&self.normalized, &self.features, thresholds);
        Ok(())
    }
}

fn binarize(normalized: &[Vec<f64>], stats: &[FeatureStats], thresholds: &[f64]) -> Vec<Vec<bool>> {
    normalized
        .iter()
        .map(|row| {
            row.iter()
                .zip(stats)
                .zip(thresholds)
                .map(|((&v, s), &t)| !s.constant && v >= t)
                .collect()
        })
        .collect()
}

pub fn ingest(path: &Path, opts: &IngestOptions) -> Result<BinaryDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, opts)
}

/// Reads a CSV with a header row, splits it reproducibly, and binarizes each
/// feature at the median of its normalized training values.
pub fn ingest_reader<R: Read>(reader: R, opts: &IngestOptions) -> Result<BinaryDataset> {
    if !(opts.split_fraction > 0.0 && opts.split_fraction <= 1.0) {
        return Err(Error::Config("split_fraction must lie in (0, 1]".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < 2 {
        return Err(Error::Csv("need at least one feature and a label column".into()));
    }
    let label_idx = match &opts.label_column {
        None => header.len() - 1,
        Some(LabelColumn::Index(i)) if *i < header.len() => *i,
        Some(LabelColumn::Index(i)) => return Err(Error::Csv(format!("label column {i} out of range"))),
        Some(LabelColumn::Name(n)) => header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Csv(format!("no column named {n:?}")))?,
    };

    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let mut row = Vec::with_capacity(header.len() - 1);
        for (c, field) in rec.iter().enumerate() {
            if c == label_idx {
                raw_labels.push(field.to_owned());
            } else {
                row.push(field.parse::<f64>().map_err(|_| {
                    Error::Csv(format!(
                        "row {}: column {:?} is not numeric: {field:?}",
                        line + 2,
                        header[c]
                    ))
                })?);
            }
        }
        values.push(row);
    }
    if values.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }

    let (classes, labels) = encode_labels(&raw_labels);
    if classes.len() < 2 {
        return Err(Error::Validation("dataset needs at least two classes".into()));
    }

    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let train_count = ((n as f64 * opts.split_fraction).round() as usize).clamp(1, n);
    let mut split = vec![Split::Test; n];
    for &i in &order[..train_count] {
        split[i] = Split::Train;
    }

    let names: Vec<&String> = header
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != label_idx)
        .map(|(_, h)| h)
        .collect();
    let train: Vec<usize> = (0..n).filter(|&i| split[i] == Split::Train).collect();
    let mut features = Vec::with_capacity(names.len());
    for (f, name) in names.iter().enumerate() {
        let col: Vec<f64> = train.iter().map(|&i| values[i][f]).collect();
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let constant = min == max;
        if constant {
            log::warn!("feature {name:?} is constant on the training split; it binarizes to 0");
        }
        let norm: Vec<f64> = col.iter().map(|&v| normalize(v, min, max)).collect();
        features.push(FeatureStats {
            name: (*name).clone(),
            min,
            max,
            median: median(&norm),
            skew: skewness(&norm),
            constant,
        });
    }
    let normalized: Vec<Vec<f64>> = values
        .iter()
        .map(|row| {
            row.iter()
                .zip(&features)
                .map(|(&v, s)| normalize(v, s.min, s.max))
                .collect()
        })
        .collect();
    let thresholds: Vec<f64> = features.iter().map(|f| f.median).collect();
    let bits = binarize(&normalized, &features, &thresholds);
    Ok(BinaryDataset {
        features,
        classes,
        normalized,
        bits,
        labels,
        split,
    })
}

/// Non-negative integer labels are used as class indices directly; anything
/// else is numbered in sorted order.
fn encode_labels(raw: &[String]) -> (Vec<String>, Vec<usize>) {
    let numeric: Option<Vec<usize>> = raw.iter().map(|s| s.parse::<usize>().ok()).collect();
    match numeric {
        Some(ids) => {
            let k = ids.iter().max().map_or(0, |m| m + 1);
            let present: BTreeSet<usize> = ids.iter().copied().collect();
            let classes = if present.len() < 2 {
                present.iter().map(|c| c.to_string()).collect()
            } else {
                (0..k).map(|c| c.to_string()).collect()
            };
            (classes, ids)
        }
        None => {
            let names: Vec<String> = raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            let labels = raw.iter().map(|s| names.binary_search(s).unwrap()).collect();
            (names, labels)
        }
    }
}

fn normalize(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (v - min) / (max - min)
    } else {
        0.0
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    if m2 > 0.0 {
        m3 / m2.powf(1.5)
    } else {
        0.0
    }
}
