//! Popcount circuits: exact adder trees, the output-truncation baseline, the
//! CGP approximation search and the approximate-PC library.

mod library;
mod search;

use std::collections::VecDeque;

use crate::circuit::{Bit, Netlist, NetlistBuilder};
use crate::error::{Error, Result};

pub use library::{
    build_pc_library, Constraint, PcIndexRecord, PcLibrary, PcLibraryEntry, PcLibraryIndex, PcSizeFile, Provenance,
    LIBRARY_FORMAT_VERSION,
};
pub use search::{cgp_search, cgp_search_traced, CgpSearchConfig, Evaluator, SearchTrace};

/// Output width of an `n`-input popcount: `ceil(log2(n + 1))`.
pub fn pc_width(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Exact `n`-input popcount built from half and full adders.
///
/// Bits of equal weight are reduced first-in first-out: three bits feed a full
/// adder whose sum re-enters the same column and whose carry moves one column
/// up, a final pair uses a half adder. The FIFO order keeps the adder tree
/// balanced.
pub fn build_exact_pc(n: usize) -> Netlist {
    assert!(n >= 1, "popcount needs at least one input");
    let mut b = NetlistBuilder::new(format!("pc{n}"), n);
    let width = pc_width(n);
    let mut columns: Vec<VecDeque<Bit>> = vec![VecDeque::new(); width + 1];
    columns[0].extend(b.inputs());
    let mut outputs = Vec::with_capacity(width);
    for k in 0..width {
        while columns[k].len() >= 3 {
            let x = columns[k].pop_front().unwrap();
            let y = columns[k].pop_front().unwrap();
            let z = columns[k].pop_front().unwrap();
            let (s, c) = b.full_adder(x, y, z);
            columns[k].push_back(s);
            columns[k + 1].push_back(c);
        }
        if columns[k].len() == 2 {
            let x = columns[k].pop_front().unwrap();
            let y = columns[k].pop_front().unwrap();
            let (s, c) = b.half_adder(x, y);
            columns[k].push_back(s);
            columns[k + 1].push_back(c);
        }
        outputs.push(columns[k].pop_front().unwrap_or(Bit::ZERO));
    }
    debug_assert!(columns[width].is_empty());
    b.finish(&outputs)
}

/// A popcount over `n` inputs with no outputs, standing for the constant 0.
/// Used for the empty side of a neuron with no weights of one sign.
pub fn null_pc(n: usize) -> Netlist {
    Netlist {
        name: format!("pc{n}_null"),
        inputs: n,
        outputs: Vec::new(),
        gates: Vec::new(),
    }
}

/// Exact popcount with its `cut_bits` least-significant outputs tied to 0
/// and the logic feeding only those outputs removed.
pub fn build_truncated_pc(n: usize, cut_bits: usize) -> Result<Netlist> {
    let width = pc_width(n);
    if cut_bits >= width {
        return Err(Error::Validation(format!(
            "cut_bits {cut_bits} must be below the output width {width} of pc{n}"
        )));
    }
    let exact = build_exact_pc(n);
    if cut_bits == 0 {
        return Ok(exact);
    }
    let mut b = NetlistBuilder::new(format!("pc{n}_trunc{cut_bits}"), n);
    let ins = b.inputs();
    let mut outs = b.inline(&exact, &ins);
    for o in outs.iter_mut().take(cut_bits) {
        *o = Bit::ZERO;
    }
    Ok(b.finish(&outs).pruned())
}

/// Error thresholds for the library: geometric from 0.1 (MAE) or 1 (WCAE)
/// up to `0.5 * 2^m` with `m = ceil(log2 n)`, endpoints included.
pub fn tau_schedule(n: usize, points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(points >= 2, "a schedule needs both endpoints");
    let m = (n.max(1) as f64).log2().ceil();
    let hi = 0.5 * m.exp2();
    let geometric = |lo: f64| -> Vec<f64> {
        (0..points)
            .map(|k| match k {
                0 => lo,
                _ if k == points - 1 => hi,
                _ => lo * (hi / lo).powf(k as f64 / (points - 1) as f64),
            })
            .collect()
    };
    (geometric(0.1), geometric(1.0))
}
