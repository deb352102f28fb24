//! Synthetic datasets and a tiny ternary-model fitter.
//!
//! This is scaffolding for examples and tests, not a training method: the
//! fitter flips single weights at random and keeps changes that do not lower
//! training accuracy. Output neurons keep a fixed zero-weight count.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{accuracy_model, BinaryDataset, Split, TnnModel, Topology, MODEL_FORMAT_VERSION};
use crate::error::{Error, Result};

/// CSV text of a Gaussian-blob style classification problem: every class has
/// a random prototype and samples scatter around it. Labels are `0..classes`
/// in the last column.
pub fn synthetic_csv(features: usize, classes: usize, rows: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protos: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..features).map(|_| rng.gen_range(0.15..0.85)).collect())
        .collect();
    let mut out = String::new();
    for f in 0..features {
        out.push_str(&format!("f{f},"));
    }
    out.push_str("label\n");
    for _ in 0..rows {
        let c = rng.gen_range(0..classes);
        for f in 0..features {
            // sum of three uniforms: a cheap bell-shaped spread
            let noise: f64 = (0..3).map(|_| rng.gen_range(-0.15..0.15)).sum();
            let v = (protos[c][f] + noise) * 100.0;
            out.push_str(&format!("{v:.2},"));
        }
        out.push_str(&format!("{c}\n"));
    }
    out
}

fn random_hidden_row(rng: &mut ChaCha8Rng, inputs: usize) -> Vec<i8> {
    loop {
        let row: Vec<i8> = (0..inputs).map(|_| rng.gen_range(-1..=1)).collect();
        if balanced(&row) {
            return row;
        }
    }
}

/// Has at least one +1 and one -1 (when there are two inputs to spare).
fn balanced(row: &[i8]) -> bool {
    row.len() < 2 || (row.contains(&1) && row.contains(&-1))
}

fn random_output_row(rng: &mut ChaCha8Rng, hidden: usize, zeros: usize) -> Vec<i8> {
    let mut row: Vec<i8> = (0..hidden).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    for i in index::sample(rng, hidden, zeros) {
        row[i] = 0;
    }
    row
}

/// Fits a `(features, hidden, classes)` model by stochastic hill climbing on
/// the training split. Every output neuron has exactly `zero_count` zero
/// weights; thresholds are the dataset's medians.
pub fn train_toy_model(
    data: &BinaryDataset,
    hidden: usize,
    zero_count: usize,
    iterations: usize,
    seed: u64,
) -> Result<TnnModel> {
    if hidden == 0 || zero_count >= hidden {
        return Err(Error::Config("need hidden >= 1 and zero_count < hidden".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = data.feature_count();
    let classes = data.classes.len();
    let mut model = TnnModel {
        version: MODEL_FORMAT_VERSION,
        name: Some(format!("toy_{inputs}x{hidden}x{classes}")),
        topology: Topology {
            inputs,
            hidden,
            classes,
        },
        hidden_weights: (0..hidden).map(|_| random_hidden_row(&mut rng, inputs)).collect(),
        output_weights: (0..classes)
            .map(|_| random_output_row(&mut rng, hidden, zero_count))
            .collect(),
        thresholds: data.thresholds(),
    };
    let mut best = accuracy_model(&model, data, Some(Split::Train))?;
    for _ in 0..iterations {
        let mut cand = model.clone();
        match rng.gen_range(0..3) {
            0 => {
                let (j, i) = (rng.gen_range(0..hidden), rng.gen_range(0..inputs));
                let old = cand.hidden_weights[j][i];
                cand.hidden_weights[j][i] = [-1, 0, 1]
                    .into_iter()
                    .filter(|&v| v != old)
                    .nth(rng.gen_range(0..2))
                    .unwrap();
                if !balanced(&cand.hidden_weights[j]) {
                    continue;
                }
            }
            1 => {
                let (c, j) = (rng.gen_range(0..classes), rng.gen_range(0..hidden));
                cand.output_weights[c][j] *= -1;
            }
            _ => {
                // move a zero within a row, keeping the count
                let c = rng.gen_range(0..classes);
                let row = &mut cand.output_weights[c];
                let zeros: Vec<usize> = (0..hidden).filter(|&j| row[j] == 0).collect();
                let nonzeros: Vec<usize> = (0..hidden).filter(|&j| row[j] != 0).collect();
                if zeros.is_empty() || nonzeros.is_empty() {
                    continue;
                }
                let z = zeros[rng.gen_range(0..zeros.len())];
                let nz = nonzeros[rng.gen_range(0..nonzeros.len())];
                row[z] = if rng.gen_bool(0.5) { 1 } else { -1 };
                row[nz] = 0;
            }
        }
        let acc = accuracy_model(&cand, data, Some(Split::Train))?;
        if acc >= best {
            best = acc;
            model = cand;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tnn::{ingest_reader, validate_model, IngestOptions, ValidationMode};

    #[test]
    fn fitted_model_is_valid_and_beats_chance() {
        let csv = synthetic_csv(6, 3, 300, 4);
        let data = ingest_reader(csv.as_bytes(), &IngestOptions::default()).unwrap();
        let m = train_toy_model(&data, 4, 1, 400, 2).unwrap();
        let r = validate_model(&m, ValidationMode::Strict).unwrap();
        assert_eq!(r.zero_counts, vec![1; 3]);
        assert!(m.hidden_weights.iter().all(|row| balanced(row)));
        assert!(accuracy_model(&m, &data, Some(Split::Train)).unwrap() > 0.5);
        let again = train_toy_model(&data, 4, 1, 400, 2).unwrap();
        assert_eq!(m, again);
    }
}
