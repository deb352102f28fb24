//! Ternary neural networks with one hidden layer, as realized in bespoke
//! logic: inputs are bits, hidden neurons are popcount-compare circuits,
//! output neurons count XNOR matches and an argmax picks the class.

mod dataset;
mod netgen;
pub mod toy;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{ingest, ingest_reader, BinaryDataset, FeatureStats, IngestOptions, LabelColumn, Split};
pub use netgen::{
    accuracy_model, accuracy_netlist, exact_selection, generate_netlist, predict_netlist, predictions_netlist,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnnModel {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub topology: Topology,
    /// `hidden × inputs`, entries in {-1, 0, 1}.
    pub hidden_weights: Vec<Vec<i8>>,
    /// `classes × hidden`, entries in {-1, 0, 1}.
    pub output_weights: Vec<Vec<i8>>,
    /// Per-feature binarization threshold on the normalized value.
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    /// Every output neuron must have the same number of zero weights.
    #[default]
    Strict,
    /// Unequal zero counts are compensated by a per-class score offset.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Zero-weight count `N` of every output neuron.
    pub zero_counts: Vec<usize>,
    pub equal_zero_counts: bool,
    /// `N_c / 2` per class: what each zero weight would add had it been
    /// counted as half a match. All zero when the counts are equal.
    pub offsets: Vec<f64>,
}

impl TnnModel {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
        let model: TnnModel = serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))?;
        model.check_shape()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_vec_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    fn check_shape(&self) -> Result<()> {
        let Topology {
            inputs,
            hidden,
            classes,
        } = self.topology;
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!("unsupported model version {}", self.version)));
        }
        if inputs == 0 || hidden == 0 || classes == 0 {
            return Err(Error::Validation("topology sizes must be positive".into()));
        }
        let rows_ok = |m: &Vec<Vec<i8>>, r: usize, c: usize| m.len() == r && m.iter().all(|row| row.len() == c);
        if !rows_ok(&self.hidden_weights, hidden, inputs) {
            return Err(Error::Validation(format!("hidden_weights must be {hidden}x{inputs}")));
        }
        if !rows_ok(&self.output_weights, classes, hidden) {
            return Err(Error::Validation(format!("output_weights must be {classes}x{hidden}")));
        }
        if self.thresholds.len() != inputs {
            return Err(Error::Validation(format!(
                "{} thresholds for {inputs} inputs",
                self.thresholds.len()
            )));
        }
        Ok(())
    }

    pub fn zero_counts(&self) -> Vec<usize> {
        self.output_weights
            .iter()
            .map(|row| row.iter().filter(|&&w| w == 0).count())
            .collect()
    }

    pub fn has_equal_zero_counts(&self) -> bool {
        let n = self.zero_counts();
        n.windows(2).all(|w| w[0] == w[1])
    }

    /// Hidden activations of one binary sample.
    pub fn hidden_bits(&self, sample: &[bool]) -> Result<Vec<bool>> {
        if sample.len() != self.topology.inputs {
            return Err(Error::Validation(format!(
                "sample has {} features, the model expects {}",
                sample.len(),
                self.topology.inputs
            )));
        }
        Ok(self
            .hidden_weights
            .iter()
            .map(|row| {
                let sum: i32 = row.iter().zip(sample).map(|(&w, &x)| w as i32 * x as i32).sum();
                sum >= 0
            })
            .collect())
    }

    /// Integer class scores `2·m_c + N_c`, where `m_c` counts the hidden bits
    /// matching the sign of a nonzero weight. Up to the constant hidden width
    /// this is the ±1-domain pre-activation, so its argmax is the network's.
    pub fn class_scores(&self, hidden: &[bool]) -> Vec<i64> {
        self.output_weights
            .iter()
            .map(|row| {
                let mut score = 0i64;
                for (&w, &h) in row.iter().zip(hidden) {
                    score += match w {
                        0 => 1,
                        w if (w > 0) == h => 2,
                        _ => 0,
                    };
                }
                score
            })
            .collect()
    }
}

/// Checks ternary weights, thresholds in `[0, 1]`, and the zero-count
/// property required for dropping the per-class correction term.
pub fn validate_model(model: &TnnModel, mode: ValidationMode) -> Result<ValidationReport> {
    model.check_shape()?;
    for (name, m) in [("hidden", &model.hidden_weights), ("output", &model.output_weights)] {
        for (r, row) in m.iter().enumerate() {
            if let Some(c) = row.iter().position(|w| !(-1..=1).contains(w)) {
                return Err(Error::Validation(format!(
                    "{name} weight [{r}][{c}] = {} is not ternary",
                    row[c]
                )));
            }
        }
    }
    if let Some(i) = model.thresholds.iter().position(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Validation(format!("threshold {i} lies outside [0, 1]")));
    }
    let zero_counts = model.zero_counts();
    let equal = model.has_equal_zero_counts();
    if !equal && mode == ValidationMode::Strict {
        return Err(Error::Validation(format!(
            "output neurons have differing zero-weight counts {zero_counts:?}"
        )));
    }
    let offsets = if equal {
        vec![0.0; zero_counts.len()]
    } else {
        zero_counts.iter().map(|&n| n as f64 / 2.0).collect()
    };
    Ok(ValidationReport {
        zero_counts,
        equal_zero_counts: equal,
        offsets,
    })
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax<T: PartialOrd>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Reference inference on one binary sample.
pub fn infer_exact(model: &TnnModel, sample: &[bool]) -> Result<usize> {
    let hidden = model.hidden_bits(sample)?;
    Ok(argmax(&model.class_scores(&hidden)))
}

/// One component position of the generated netlist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Slot {
    /// Popcount-compare over the +1 and -1 features of a hidden neuron.
    Hidden { neuron: usize, n_pos: usize, n_neg: usize },
    /// Popcount over the nonzero connections of an output neuron.
    Output { class: usize, width: usize },
}

/// Hidden slots first, then one output slot per class.
pub fn neuron_requirements(model: &TnnModel) -> Vec<Slot> {
    let count = |row: &[i8], v: i8| row.iter().filter(|&&w| w == v).count();
    let hidden = model
        .hidden_weights
        .iter()
        .enumerate()
        .map(|(neuron, row)| Slot::Hidden {
            neuron,
            n_pos: count(row, 1),
            n_neg: count(row, -1),
        });
    let outputs = model
        .output_weights
        .iter()
        .enumerate()
        .map(|(class, row)| Slot::Output {
            class,
            width: row.len() - count(row, 0),
        });
    hidden.chain(outputs).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn tiny() -> TnnModel {
        TnnModel {
            version: 1,
            name: Some("tiny".into()),
            topology: Topology {
                inputs: 3,
                hidden: 2,
                classes: 2,
            },
            hidden_weights: vec![vec![0, 1, -1], vec![-1, -1, 1]],
            output_weights: vec![vec![1, -1], vec![1, 1]],
            thresholds: vec![0.5; 3],
        }
    }

    #[test]
    fn worked_example() {
        let m = tiny();
        let s = [true, true, false];
        assert_eq!(m.hidden_bits(&s).unwrap(), vec![true, false]);
        // match counts 2 and 1
        assert_eq!(m.class_scores(&[true, false]), vec![4, 2]);
        assert_eq!(infer_exact(&m, &s).unwrap(), 0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut m = tiny();
        m.hidden_weights = vec![vec![1; 3]; 2];
        m.output_weights = vec![vec![1, 1]; 2];
        assert_eq!(infer_exact(&m, &[true; 3]).unwrap(), 0);
        assert_eq!(argmax(&[3, 5, 5, 1]), 1);
    }

    #[test]
    fn validation() {
        let m = tiny();
        let r = validate_model(&m, ValidationMode::Strict).unwrap();
        assert_eq!(r.zero_counts, vec![0, 0]);
        let mut bad = m.clone();
        bad.output_weights = vec![vec![1, 0], vec![1, 1]];
        assert!(validate_model(&bad, ValidationMode::Strict).is_err());
        let r = validate_model(&bad, ValidationMode::Lenient).unwrap();
        assert_eq!(r.offsets, vec![0.5, 0.0]);
        let mut nt = m.clone();
        nt.hidden_weights[0][0] = 2;
        assert!(validate_model(&nt, ValidationMode::Lenient).is_err());
        assert!(infer_exact(&m, &[true, false]).is_err());
    }

    #[test]
    fn requirements() {
        let slots = neuron_requirements(&tiny());
        assert_eq!(
            slots,
            vec![
                Slot::Hidden {
                    neuron: 0,
                    n_pos: 1,
                    n_neg: 1
                },
                Slot::Hidden {
                    neuron: 1,
                    n_pos: 1,
                    n_neg: 2
                },
                Slot::Output { class: 0, width: 2 },
                Slot::Output { class: 1, width: 2 },
            ]
        );
    }

    #[test]
    fn model_json_round_trip() {
        let m = tiny();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<TnnModel>(&text).unwrap(), m);
    }
}
