//! Popcount-compare circuits: `popcount(pos) >= popcount(neg)`, the hidden
//! neuron of a ternary network.

mod library;

use serde::{Deserialize, Serialize};

use crate::circuit::{area, AreaTable, Netlist, NetlistBuilder};
use crate::error::{Error, Result};
use crate::metrics::{
    eval_pcc_exhaustive_with_limit, eval_pcc_mc_with, DistanceErrorReport, SamplingMode, EXHAUSTIVE_LIMIT,
};
use crate::pareto::{non_dominated, pareto_ranks};
use crate::popcount::{null_pc, pc_width, PcLibrary};
use crate::util::par_map;

pub use library::{build_pcc_library, PccBuildOptions, PccIndexRecord, PccLibrary, PccLibraryIndex};

/// Operand width of the comparator behind two popcounts: wide enough for the
/// larger count itself, so `n = 2^k` gets `k + 1` bits.
pub fn comparator_width(n_pos: usize, n_neg: usize) -> usize {
    pc_width(n_pos.max(n_neg)).max(1)
}

/// `x >= z` over two unsigned LSB-first operands; inputs are `x` then `z`.
pub fn build_comparator(width: usize) -> Netlist {
    assert!(width >= 1, "comparator width must be at least 1");
    let mut b = NetlistBuilder::new(format!("ge{width}"), 2 * width);
    let ins = b.inputs();
    let ge = b.greater_equal(&ins[..width], &ins[width..]);
    b.finish(&[ge])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PccCircuit {
    pub n_pos: usize,
    pub n_neg: usize,
    pub pc_pos: Netlist,
    pub pc_neg: Netlist,
    pub comparator_width: usize,
    /// Inputs: the `n_pos` positive bits, then the `n_neg` negative bits.
    pub assembled: Netlist,
}

/// Wires two popcounts into a comparator. A popcount with fewer outputs than
/// the comparator width is zero-extended.
pub fn assemble_pcc(pc_pos: &Netlist, pc_neg: &Netlist) -> PccCircuit {
    let (n_pos, n_neg) = (pc_pos.inputs, pc_neg.inputs);
    let width = comparator_width(n_pos, n_neg);
    let mut b = NetlistBuilder::new(format!("pcc{n_pos}x{n_neg}"), n_pos + n_neg);
    let ins = b.inputs();
    let x = b.inline(pc_pos, &ins[..n_pos]);
    let z = b.inline(pc_neg, &ins[n_pos..]);
    let ge = b.greater_equal(&x, &z);
    let assembled = b.finish(&[ge]).pruned();
    PccCircuit {
        n_pos,
        n_neg,
        pc_pos: pc_pos.clone(),
        pc_neg: pc_neg.clone(),
        comparator_width: width,
        assembled,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PccLibraryEntry {
    pub id: String,
    pub pos_id: String,
    pub neg_id: String,
    /// Sum of the two popcount areas.
    pub estimated_area: f64,
    /// Area of the whole assembled netlist, comparator included.
    pub synthesized_area: f64,
    pub mde: f64,
    pub wcde: u64,
    /// Rank among the candidates of its size pair; 0 is the Pareto front.
    pub pareto_rank: usize,
    /// Built from two functionally exact popcounts. `mde == 0` alone does not
    /// imply this: a decision flipped at `x == z` scores zero distance.
    pub exact: bool,
    pub error: DistanceErrorReport,
    pub pcc: PccCircuit,
}

impl PccLibraryEntry {
    pub fn n_pos(&self) -> usize {
        self.pcc.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.pcc.n_neg
    }
}

/// How candidate distance errors are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PccEvalOptions {
    pub samples: u64,
    pub seed: u64,
    pub sampling: SamplingMode,
    /// Pairs with at most this many inputs are enumerated exhaustively.
    pub exhaustive_limit: usize,
}

impl Default for PccEvalOptions {
    fn default() -> Self {
        PccEvalOptions {
            samples: 1_000_000,
            seed: 0,
            sampling: SamplingMode::InputVectors,
            exhaustive_limit: EXHAUSTIVE_LIMIT,
        }
    }
}

pub fn evaluate_pcc(pcc: &PccCircuit, opts: &PccEvalOptions) -> Result<DistanceErrorReport> {
    if pcc.n_pos + pcc.n_neg <= opts.exhaustive_limit {
        eval_pcc_exhaustive_with_limit(pcc, opts.exhaustive_limit)
    } else {
        // one sample stream per size pair: candidates see the same inputs
        let seed = opts.seed ^ ((pcc.n_pos as u64) << 32 | pcc.n_neg as u64);
        eval_pcc_mc_with(pcc, opts.samples, seed, opts.sampling)
    }
}

struct Component {
    id: String,
    area: f64,
    exact: bool,
    netlist: Netlist,
}

fn components(n: usize, lib: &PcLibrary) -> Result<Vec<Component>> {
    if n == 0 {
        return Ok(vec![Component {
            id: "pc0_null".into(),
            area: 0.0,
            exact: true,
            netlist: null_pc(0),
        }]);
    }
    let mut out: Vec<Component> = Vec::new();
    for e in lib.entries(n)? {
        // identical circuits would only produce duplicate candidates
        if out
            .iter()
            .all(|c| c.netlist.gates != e.netlist.gates || c.netlist.outputs != e.netlist.outputs)
        {
            out.push(Component {
                id: e.id.clone(),
                area: e.area,
                exact: e.wcae == 0,
                netlist: e.netlist.clone(),
            });
        }
    }
    Ok(out)
}

/// Every pairing of an `n_pos`-input and an `n_neg`-input library popcount,
/// with its distance error measured.
///
/// A neuron without negative weights always fires, so for `n_neg = 0` the
/// single candidate ignores its inputs entirely.
pub fn enumerate_pcc_candidates(
    n_pos: usize,
    n_neg: usize,
    pc_library: &PcLibrary,
    opts: &PccEvalOptions,
    table: &AreaTable,
) -> Result<Vec<PccLibraryEntry>> {
    let (pos, neg) = if n_neg == 0 {
        let null = |n: usize| Component {
            id: format!("pc{n}_null"),
            area: 0.0,
            exact: true,
            netlist: null_pc(n),
        };
        (vec![null(n_pos)], vec![null(0)])
    } else {
        (components(n_pos, pc_library)?, components(n_neg, pc_library)?)
    };
    let pairs: Vec<(&Component, &Component)> = pos.iter().flat_map(|p| neg.iter().map(move |q| (p, q))).collect();
    let built = par_map(&pairs, |(p, q)| -> Result<PccLibraryEntry> {
        let pcc = assemble_pcc(&p.netlist, &q.netlist);
        let error = evaluate_pcc(&pcc, opts)?;
        Ok(PccLibraryEntry {
            id: format!("pcc{n_pos}x{n_neg}_{}_{}", p.id, q.id),
            pos_id: p.id.clone(),
            neg_id: q.id.clone(),
            estimated_area: p.area + q.area,
            synthesized_area: area(&pcc.assembled, table)?,
            mde: error.mde,
            wcde: error.wcde,
            pareto_rank: 0,
            exact: p.exact && q.exact,
            error,
            pcc,
        })
    });
    let mut out: Vec<PccLibraryEntry> = built.into_iter().collect::<Result<_>>()?;
    let points: Vec<Vec<f64>> = out.iter().map(|c| vec![c.estimated_area, c.mde]).collect();
    for (e, r) in out.iter_mut().zip(pareto_ranks(&points)) {
        e.pareto_rank = r;
    }
    Ok(out)
}

/// Keeps the candidates no other candidate beats in both estimated area and
/// mean distance error. With `max_per_size`, the front is thinned to that
/// many entries spread evenly over its area range, always keeping the
/// smallest and the most accurate one.
///
/// The result is ordered by error, so index 0 is the most accurate entry.
pub fn pareto_filter(candidates: &[PccLibraryEntry], max_per_size: Option<usize>) -> Result<Vec<PccLibraryEntry>> {
    let first = candidates
        .first()
        .ok_or_else(|| Error::Validation("no PCC candidates to filter".into()))?;
    let key = (first.n_pos(), first.n_neg());
    if candidates.iter().any(|c| (c.n_pos(), c.n_neg()) != key) {
        return Err(Error::Validation("PCC candidates span several size pairs".into()));
    }
    if max_per_size.is_some_and(|m| m < 2) {
        return Err(Error::Validation(
            "max_per_size must keep at least both extremes".into(),
        ));
    }
    let points: Vec<Vec<f64>> = candidates.iter().map(|c| vec![c.estimated_area, c.mde]).collect();
    let mut front: Vec<PccLibraryEntry> = non_dominated(&points)
        .into_iter()
        .map(|i| {
            let mut e = candidates[i].clone();
            e.pareto_rank = 0;
            e
        })
        .collect();
    front.sort_by(|a, b| {
        a.estimated_area
            .total_cmp(&b.estimated_area)
            .then(b.mde.total_cmp(&a.mde))
            .then_with(|| a.id.cmp(&b.id))
    });
    if let Some(max) = max_per_size {
        if front.len() > max {
            front = thin_by_area(front, max);
        }
    }
    front.reverse();
    Ok(front)
}

/// `sorted` ascending by area; picks the entry nearest each of `max` evenly
/// spaced area targets, endpoints included.
fn thin_by_area(sorted: Vec<PccLibraryEntry>, max: usize) -> Vec<PccLibraryEntry> {
    let lo = sorted[0].estimated_area;
    let hi = sorted[sorted.len() - 1].estimated_area;
    let mut taken = vec![false; sorted.len()];
    taken[0] = true;
    *taken.last_mut().unwrap() = true;
    for k in 1..max - 1 {
        let target = lo + (hi - lo) * k as f64 / (max - 1) as f64;
        let pick = (0..sorted.len()).filter(|&i| !taken[i]).min_by(|&i, &j| {
            (sorted[i].estimated_area - target)
                .abs()
                .total_cmp(&(sorted[j].estimated_area - target).abs())
        });
        if let Some(i) = pick {
            taken[i] = true;
        }
    }
    sorted
        .into_iter()
        .zip(taken)
        .filter_map(|(e, t)| t.then_some(e))
        .collect()
}

/// Recomputes the full-netlist area of every entry, order preserved.
pub fn synthesize_and_annotate(entries: &mut [PccLibraryEntry], table: &AreaTable) -> Result<()> {
    for e in entries {
        e.synthesized_area = area(&e.pcc.assembled, table)?;
    }
    Ok(())
}
