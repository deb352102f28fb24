use serde::{Deserialize, Serialize};

use super::{GateFn, Netlist};
use crate::error::{Error, Result};

/// Bit-rows packed 64 lanes per word. Row `i` holds signal `i` for every
/// evaluated vector; lane `l` lives in bit `l % 64` of word `l / 64`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    pub lanes: usize,
    pub rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, lanes: usize) -> Self {
        BitMatrix {
            lanes,
            rows: vec![vec![0; words_for(lanes)]; rows],
        }
    }

    /// Packs a list of vectors (one `Vec<bool>` per lane).
    pub fn from_vectors(width: usize, vectors: &[Vec<bool>]) -> Self {
        let mut m = BitMatrix::zeros(width, vectors.len());
        for (lane, v) in vectors.iter().enumerate() {
            assert_eq!(v.len(), width, "vector width mismatch");
            for (row, &bit) in v.iter().enumerate() {
                m.set(row, lane, bit);
            }
        }
        m
    }

    pub fn words(&self) -> usize {
        words_for(self.lanes)
    }

    pub fn get(&self, row: usize, lane: usize) -> bool {
        (self.rows[row][lane / 64] >> (lane % 64)) & 1 == 1
    }

    pub fn set(&mut self, row: usize, lane: usize, bit: bool) {
        let word = &mut self.rows[row][lane / 64];
        let mask = 1u64 << (lane % 64);
        if bit {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    /// Column `lane` read back as an unsigned integer, row 0 least significant.
    pub fn lane_value(&self, lane: usize) -> u64 {
        (0..self.rows.len()).fold(0, |acc, r| acc | ((self.get(r, lane) as u64) << r))
    }
}

pub(crate) fn words_for(lanes: usize) -> usize {
    lanes.div_ceil(64)
}

/// Mask of valid lanes in word `word` when `lanes` vectors are packed.
pub fn lane_mask(lanes: usize, word: usize) -> u64 {
    let start = word * 64;
    if lanes >= start + 64 {
        !0
    } else if lanes <= start {
        0
    } else {
        (1u64 << (lanes - start)) - 1
    }
}

/// All `2^n` input vectors; lane index `v` carries input `i` as bit `i` of `v`.
pub fn exhaustive_inputs(n: usize) -> BitMatrix {
    assert!(n < 40, "exhaustive enumeration over {n} inputs is not sensible");
    let lanes = 1usize << n;
    let words = words_for(lanes);
    let rows = (0..n)
        .map(|i| (0..words).map(|w| exhaustive_word(i, w)).collect())
        .collect();
    BitMatrix { lanes, rows }
}

/// Word `w` of input row `i` in the exhaustive enumeration.
#[inline]
pub(crate) fn exhaustive_word(i: usize, w: usize) -> u64 {
    const PATTERNS: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    if i < 6 {
        PATTERNS[i]
    } else if (w >> (i - 6)) & 1 == 1 {
        !0
    } else {
        0
    }
}

/// Simulates every lane of `inputs` through `netlist` at once.
pub fn simulate(netlist: &Netlist, inputs: &BitMatrix) -> Result<BitMatrix> {
    if inputs.rows.len() != netlist.inputs {
        return Err(Error::Validation(format!(
            "input matrix has {} rows but netlist `{}` has {} inputs",
            inputs.rows.len(),
            netlist.name,
            netlist.inputs
        )));
    }
    let words = inputs.words();
    let mut sim = Simulator::new(netlist, words);
    for (i, row) in inputs.rows.iter().enumerate() {
        sim.input_mut(i).copy_from_slice(row);
    }
    sim.run();
    let rows = (0..netlist.outputs.len())
        .map(|k| {
            let mut row = sim.output(k).to_vec();
            // padding lanes are cleared so results compare cleanly
            if let Some(last) = row.last_mut() {
                *last &= lane_mask(inputs.lanes, words - 1);
            }
            row
        })
        .collect();
    Ok(BitMatrix {
        lanes: inputs.lanes,
        rows,
    })
}

/// Reusable bit-parallel evaluator over a fixed block of words.
///
/// Values are stored signal-major so that each gate touches two contiguous
/// operand slices.
pub struct Simulator<'a> {
    netlist: &'a Netlist,
    words: usize,
    values: Vec<u64>,
}

impl<'a> Simulator<'a> {
    pub fn new(netlist: &'a Netlist, words: usize) -> Self {
        Simulator {
            netlist,
            words,
            values: vec![0; netlist.signal_count() * words],
        }
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn input_mut(&mut self, i: usize) -> &mut [u64] {
        debug_assert!(i < self.netlist.inputs);
        &mut self.values[i * self.words..(i + 1) * self.words]
    }

    pub fn signal(&self, s: usize) -> &[u64] {
        &self.values[s * self.words..(s + 1) * self.words]
    }

    pub fn output(&self, k: usize) -> &[u64] {
        self.signal(self.netlist.outputs[k] as usize)
    }

    pub fn run(&mut self) {
        let words = self.words;
        let base = self.netlist.inputs;
        for (i, gate) in self.netlist.gates.iter().enumerate() {
            let (done, rest) = self.values.split_at_mut((base + i) * words);
            let out = &mut rest[..words];
            let f = gate.function;
            match f.arity() {
                0 => out.fill(if f == GateFn::Const1 { !0 } else { 0 }),
                1 => {
                    let a = &done[gate.a as usize * words..][..words];
                    for (o, &x) in out.iter_mut().zip(a) {
                        *o = f.eval_word(x, 0);
                    }
                }
                _ => {
                    let a = &done[gate.a as usize * words..][..words];
                    let b = &done[gate.b as usize * words..][..words];
                    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                        *o = f.eval_word(x, y);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn buffer_is_identity() {
        let n = Netlist::new("buf", 1, vec![1], vec![Gate::new(GateFn::Buf, 0, 0)]).unwrap();
        let input = BitMatrix {
            lanes: 128,
            rows: vec![vec![0xDEAD_BEEF_0123_4567, 0x0F0F_0000_FFFF_1234]],
        };
        assert_eq!(simulate(&n, &input).unwrap(), input);
    }

    #[test]
    fn and_gate_two_vectors() {
        let n = Netlist::new("and", 2, vec![2], vec![Gate::new(GateFn::And, 0, 1)]).unwrap();
        let input = BitMatrix::from_vectors(2, &[vec![true, true], vec![true, false]]);
        let out = simulate(&n, &input).unwrap();
        assert!(out.get(0, 0));
        assert!(!out.get(0, 1));
    }

    #[test]
    fn row_count_mismatch() {
        let n = Netlist::new("and", 2, vec![2], vec![Gate::new(GateFn::And, 0, 1)]).unwrap();
        assert!(simulate(&n, &BitMatrix::zeros(3, 10)).is_err());
    }

    #[test]
    fn exhaustive_lane_encodes_index() {
        let m = exhaustive_inputs(9);
        for lane in [0usize, 1, 63, 64, 200, 511] {
            assert_eq!(m.lane_value(lane), lane as u64);
        }
    }

    fn random_netlist(rng: &mut ChaCha8Rng, inputs: usize, gates: usize, outputs: usize) -> Netlist {
        let gate_list = (0..gates)
            .map(|i| {
                let avail = (inputs + i) as u32;
                Gate::new(
                    GateFn::ALL[rng.gen_range(0..10)],
                    rng.gen_range(0..avail),
                    rng.gen_range(0..avail),
                )
            })
            .collect();
        let total = (inputs + gates) as u32;
        let outs = (0..outputs).map(|_| rng.gen_range(0..total)).collect();
        Netlist::new("rand", inputs, outs, gate_list).unwrap()
    }

    #[test]
    fn packed_matches_single_vector_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = random_netlist(&mut rng, 7, 40, 4);
            let vectors: Vec<Vec<bool>> = (0..1000).map(|_| (0..7).map(|_| rng.gen()).collect()).collect();
            let out = simulate(&n, &BitMatrix::from_vectors(7, &vectors)).unwrap();
            for (lane, v) in vectors.iter().enumerate() {
                let expect = n.eval(v);
                for (k, &bit) in expect.iter().enumerate() {
                    assert_eq!(out.get(k, lane), bit);
                }
            }
        }
    }
}
