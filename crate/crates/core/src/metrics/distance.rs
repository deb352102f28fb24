use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalMethod, EXHAUSTIVE_LIMIT};
use crate::circuit::sim::exhaustive_word;
use crate::circuit::{lane_mask, Simulator};
use crate::error::{Error, Result};
use crate::pcc::PccCircuit;

/// Signed distance between an exact and an approximate relational decision:
/// zero when they agree, otherwise `x - z`.
pub fn distance(x: i64, z: i64, exact_rel: bool, approx_rel: bool) -> i64 {
    if exact_rel == approx_rel {
        0
    } else {
        x - z
    }
}

/// How Monte-Carlo samples are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Uniform over input bit-vectors; `x` and `z` are then binomial.
    #[default]
    InputVectors,
    /// Uniform over `(x, z)` value pairs, each realized by a random vector
    /// with that many ones.
    ValuePairs,
}

/// Distance-error statistics of a popcount-compare circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceErrorReport {
    pub mde: f64,
    /// Observed maximum; a lower bound of the true value for Monte-Carlo runs.
    pub wcde: u64,
    pub sample_count: u64,
    pub error_free_fraction: f64,
    /// Fraction of samples whose decision differs from the exact one. Ties
    /// (`x == z`) score `D = 0`, so this can be positive while `mde` is 0.
    pub flip_fraction: f64,
    pub evaluated_via: EvalMethod,
    /// Sorted `(D, count)` pairs.
    #[serde(with = "histogram_pairs")]
    pub histogram: BTreeMap<i64, u64>,
}

mod histogram_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(h: &BTreeMap<i64, u64>, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(i64, u64)> = h.iter().map(|(&k, &v)| (k, v)).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<i64, u64>, D::Error> {
        let pairs = Vec::<(i64, u64)>::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

impl DistanceErrorReport {
    /// Mean |D| recomputed from the histogram alone.
    pub fn mde_from_histogram(&self) -> f64 {
        let total: u128 = self
            .histogram
            .iter()
            .map(|(&d, &c)| d.unsigned_abs() as u128 * c as u128)
            .sum();
        total as f64 / self.sample_count as f64
    }
}

#[derive(Default)]
struct Accumulator {
    histogram: BTreeMap<i64, u64>,
    count: u64,
    total_abs: u128,
    worst: u64,
    flips: u64,
}

impl Accumulator {
    fn push(&mut self, d: i64, flipped: bool) {
        *self.histogram.entry(d).or_insert(0) += 1;
        self.flips += flipped as u64;
        self.count += 1;
        self.total_abs += d.unsigned_abs() as u128;
        self.worst = self.worst.max(d.unsigned_abs());
    }

    fn finish(self, via: EvalMethod) -> DistanceErrorReport {
        let zero = self.histogram.get(&0).copied().unwrap_or(0);
        DistanceErrorReport {
            mde: self.total_abs as f64 / self.count as f64,
            wcde: self.worst,
            sample_count: self.count,
            error_free_fraction: zero as f64 / self.count as f64,
            flip_fraction: self.flips as f64 / self.count as f64,
            evaluated_via: via,
            histogram: self.histogram,
        }
    }

    /// Scores one word of lanes whose inputs are already loaded in `sim`.
    fn absorb_word(&mut self, sim: &Simulator<'_>, pcc: &PccCircuit, w: usize, mask: u64) {
        let mut xs = [0i64; 64];
        let mut zs = [0i64; 64];
        for i in 0..pcc.n_pos + pcc.n_neg {
            let counts = if i < pcc.n_pos { &mut xs } else { &mut zs };
            let mut bits = sim.signal(i)[w] & mask;
            while bits != 0 {
                counts[bits.trailing_zeros() as usize] += 1;
                bits &= bits - 1;
            }
        }
        let out = sim.output(0)[w];
        let mut lanes = mask;
        while lanes != 0 {
            let l = lanes.trailing_zeros() as usize;
            lanes &= lanes - 1;
            let (x, z) = (xs[l], zs[l]);
            let approx = (out >> l) & 1 == 1;
            self.push(distance(x, z, x >= z, approx), approx != (x >= z));
        }
    }
}

const BLOCK_WORDS: usize = 256;

/// Monte-Carlo distance error over `sample_count` uniform input vectors.
pub fn eval_pcc_mc(pcc: &PccCircuit, sample_count: u64, seed: u64) -> Result<DistanceErrorReport> {
    eval_pcc_mc_with(pcc, sample_count, seed, SamplingMode::InputVectors)
}

pub fn eval_pcc_mc_with(
    pcc: &PccCircuit,
    sample_count: u64,
    seed: u64,
    mode: SamplingMode,
) -> Result<DistanceErrorReport> {
    if sample_count == 0 {
        return Err(Error::Validation("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Accumulator::default();
    let total_words = (sample_count as usize).div_ceil(64);
    let inputs = pcc.n_pos + pcc.n_neg;
    for start in (0..total_words).step_by(BLOCK_WORDS) {
        let len = BLOCK_WORDS.min(total_words - start);
        let mut sim = Simulator::new(&pcc.assembled, len);
        match mode {
            SamplingMode::InputVectors => {
                for w in 0..len {
                    for i in 0..inputs {
                        sim.input_mut(i)[w] = rng.next_u64();
                    }
                }
            }
            SamplingMode::ValuePairs => {
                for w in 0..len {
                    for lane in 0..64 {
                        for (offset, width) in [(0, pcc.n_pos), (pcc.n_pos, pcc.n_neg)] {
                            let ones = rng.gen_range(0..=width);
                            for bit in index::sample(&mut rng, width.max(1), ones.min(width)) {
                                sim.input_mut(offset + bit)[w] |= 1 << lane;
                            }
                        }
                    }
                }
            }
        }
        sim.run();
        for w in 0..len {
            let mask = lane_mask(sample_count as usize, start + w);
            acc.absorb_word(&sim, pcc, w, mask);
        }
    }
    Ok(acc.finish(EvalMethod::MonteCarlo))
}

/// Exact distance error over every input vector.
pub fn eval_pcc_exhaustive(pcc: &PccCircuit) -> Result<DistanceErrorReport> {
    eval_pcc_exhaustive_with_limit(pcc, EXHAUSTIVE_LIMIT)
}

pub fn eval_pcc_exhaustive_with_limit(pcc: &PccCircuit, limit: usize) -> Result<DistanceErrorReport> {
    let inputs = pcc.n_pos + pcc.n_neg;
    if inputs > limit {
        return Err(Error::ExhaustiveLimit { inputs, limit });
    }
    let lanes = 1usize << inputs;
    let words = lanes.div_ceil(64);
    let mut acc = Accumulator::default();
    for start in (0..words).step_by(BLOCK_WORDS) {
        let len = BLOCK_WORDS.min(words - start);
        let mut sim = Simulator::new(&pcc.assembled, len);
        for i in 0..inputs {
            for (w, slot) in sim.input_mut(i).iter_mut().enumerate() {
                *slot = exhaustive_word(i, start + w);
            }
        }
        sim.run();
        for w in 0..len {
            acc.absorb_word(&sim, pcc, w, lane_mask(lanes, start + w));
        }
    }
    Ok(acc.finish(EvalMethod::Exhaustive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Netlist;
    use crate::pcc::assemble_pcc;
    use crate::popcount::{build_exact_pc, build_truncated_pc};

    #[test]
    fn worked_example_distances() {
        // 0 >= 1 and 0 >= 4 are both FALSE; an approximation saying TRUE
        // flips the same single output bit in both cases
        let d1 = distance(0, 1, 0 >= 1, true);
        let d4 = distance(0, 4, 0 >= 4, true);
        assert_eq!((d1, d4), (-1, -4));
        assert_eq!((d1.abs(), d4.abs()), (1, 4));
        assert_eq!(distance(3, 5, false, false), 0);
        assert_eq!(distance(5, 3, true, true), 0);
    }

    #[test]
    fn antisymmetric_on_disagreement() {
        for x in 0..6i64 {
            for z in 0..6i64 {
                let d = distance(x, z, x >= z, x < z);
                let e = distance(z, x, z >= x, z < x);
                if x != z {
                    assert_eq!(d, -e);
                }
            }
        }
    }

    #[test]
    fn exact_pcc_is_error_free() {
        let pcc = assemble_pcc(&build_exact_pc(3), &build_exact_pc(3));
        let r = eval_pcc_exhaustive(&pcc).unwrap();
        assert_eq!((r.mde, r.wcde, r.error_free_fraction), (0.0, 0, 1.0));
        assert_eq!(r.sample_count, 64);
        let mc = eval_pcc_mc(&pcc, 10_000, 1).unwrap();
        assert_eq!((mc.mde, mc.wcde), (0.0, 0));
        assert_eq!(mc.histogram.values().sum::<u64>(), 10_000);
    }

    #[test]
    fn constant_zero_positive_pc_matches_enumeration() {
        let zero = Netlist::new(
            "zero4",
            4,
            vec![4, 4, 4],
            vec![crate::circuit::Gate::new(crate::circuit::GateFn::Const0, 0, 0)],
        )
        .unwrap();
        let pcc = assemble_pcc(&zero, &build_exact_pc(4));
        // approx says 0 >= z, wrong exactly when x >= z but z > 0
        let mut total = 0i64;
        let mut worst = 0i64;
        for v in 0..256u32 {
            let x = (v & 0xF).count_ones() as i64;
            let z = (v >> 4).count_ones() as i64;
            let d = distance(x, z, x >= z, z == 0);
            total += d.abs();
            worst = worst.max(d.abs());
        }
        let r = eval_pcc_exhaustive(&pcc).unwrap();
        assert_eq!(r.mde, total as f64 / 256.0);
        assert_eq!(r.wcde, worst as u64);
        assert!(r.wcde <= 4);
        assert_eq!(r.mde, r.mde_from_histogram());
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let pcc = assemble_pcc(&build_truncated_pc(4, 1).unwrap(), &build_exact_pc(4));
        let a = eval_pcc_mc(&pcc, 1_000_000, 17).unwrap();
        let b = eval_pcc_mc(&pcc, 1_000_000, 17).unwrap();
        assert_eq!(a, b);
        let ex = eval_pcc_exhaustive(&pcc).unwrap();
        // |D| <= 4 so the per-sample standard deviation is at most 4
        let var: f64 = ex
            .histogram
            .iter()
            .map(|(&d, &c)| (d.abs() as f64 - ex.mde).powi(2) * c as f64)
            .sum::<f64>()
            / ex.sample_count as f64;
        let se = (var / 1e6).sqrt();
        assert!((a.mde - ex.mde).abs() <= 3.0 * se + 1e-12, "{} vs {}", a.mde, ex.mde);
        assert!(a.wcde <= ex.wcde);
    }

    #[test]
    fn value_pair_sampling_covers_extremes() {
        let pcc = assemble_pcc(&build_exact_pc(3), &build_exact_pc(3));
        let r = eval_pcc_mc_with(&pcc, 5000, 2, SamplingMode::ValuePairs).unwrap();
        assert_eq!(r.sample_count, 5000);
        assert_eq!(r.mde, 0.0);
    }

    #[test]
    fn zero_samples_rejected() {
        let pcc = assemble_pcc(&build_exact_pc(2), &build_exact_pc(2));
        assert!(eval_pcc_mc(&pcc, 0, 0).is_err());
    }
}
