use super::bdd::{Bdd, BddRef};
use super::{ArithmeticErrorReport, ErrorMetric, EvalMethod, BDD_NODE_BUDGET, EXHAUSTIVE_LIMIT};
use crate::circuit::sim::exhaustive_word;
use crate::circuit::{lane_mask, Netlist, Simulator};
use crate::error::{Error, Result};

const CHUNK_WORDS: usize = 512;

fn check_pair(approx: &Netlist, exact: &Netlist) -> Result<()> {
    if approx.inputs != exact.inputs {
        return Err(Error::Validation(format!(
            "input count mismatch: approximate circuit has {}, exact has {}",
            approx.inputs, exact.inputs
        )));
    }
    Ok(())
}

/// Bit-sliced `|a - e|` over one word of lanes; returns the magnitude planes
/// (LSB first) written into `out`.
fn abs_diff_planes(a: &[u64], e: &[u64], out: &mut Vec<u64>) {
    let width = a.len().max(e.len()) + 1;
    out.clear();
    let mut borrow = 0u64;
    for j in 0..width {
        let x = a.get(j).copied().unwrap_or(0);
        let y = e.get(j).copied().unwrap_or(0);
        out.push(x ^ y ^ borrow);
        borrow = (!x & y) | (!(x ^ y) & borrow);
    }
    // borrow out = sign; conditional two's complement negation
    let sign = borrow;
    let mut carry = sign;
    for d in out.iter_mut() {
        let t = *d ^ sign;
        *d = t ^ carry;
        carry &= t;
    }
}

/// Largest lane value among `mask` lanes of the planes.
fn max_lane(planes: &[u64], mut mask: u64) -> u64 {
    if mask == 0 {
        return 0;
    }
    let mut best = 0u64;
    for (j, &p) in planes.iter().enumerate().rev() {
        if mask & p != 0 {
            best |= 1 << j;
            mask &= p;
        }
    }
    best
}

/// Exhaustive arithmetic-error evaluator with the exact outputs cached.
pub struct ExhaustiveEvaluator {
    inputs: usize,
    lanes: usize,
    words: usize,
    /// exact output planes, `[output][word]`
    exact: Vec<Vec<u64>>,
}

impl ExhaustiveEvaluator {
    pub fn new(exact: &Netlist, limit: usize) -> Result<Self> {
        if exact.inputs > limit {
            return Err(Error::ExhaustiveLimit {
                inputs: exact.inputs,
                limit,
            });
        }
        let lanes = 1usize << exact.inputs;
        let words = lanes.div_ceil(64);
        let mut planes = vec![Vec::with_capacity(words); exact.outputs.len()];
        for start in (0..words).step_by(CHUNK_WORDS) {
            let len = CHUNK_WORDS.min(words - start);
            let mut sim = Simulator::new(exact, len);
            fill_exhaustive(&mut sim, exact.inputs, start);
            sim.run();
            for (k, plane) in planes.iter_mut().enumerate() {
                plane.extend_from_slice(sim.output(k));
            }
        }
        Ok(ExhaustiveEvaluator {
            inputs: exact.inputs,
            lanes,
            words,
            exact: planes,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn evaluate(&self, approx: &Netlist) -> Result<ArithmeticErrorReport> {
        Ok(self.run(approx, None)?.expect("unbounded evaluation always completes"))
    }

    /// Like [`evaluate`](Self::evaluate) but returns `Ok(None)` as soon as
    /// the error provably exceeds `tau` in `metric`.
    pub fn evaluate_within(
        &self,
        approx: &Netlist,
        metric: ErrorMetric,
        tau: f64,
    ) -> Result<Option<ArithmeticErrorReport>> {
        self.run(approx, Some((metric, tau)))
    }

    fn run(&self, approx: &Netlist, bound: Option<(ErrorMetric, f64)>) -> Result<Option<ArithmeticErrorReport>> {
        if approx.inputs != self.inputs {
            return Err(Error::Validation(format!(
                "input count mismatch: approximate circuit has {}, exact has {}",
                approx.inputs, self.inputs
            )));
        }
        // the total may not exceed tau * 2^n
        let total_cap = match bound {
            Some((ErrorMetric::Mae, tau)) => Some((tau * self.lanes as f64).floor() as u128),
            _ => None,
        };
        let max_cap = match bound {
            Some((ErrorMetric::Wcae, tau)) => Some(tau.floor() as u64),
            _ => None,
        };
        let mut total: u128 = 0;
        let mut worst: u64 = 0;
        let mut a_words = vec![0u64; approx.outputs.len()];
        let mut e_words = vec![0u64; self.exact.len()];
        let mut planes = Vec::new();
        for start in (0..self.words).step_by(CHUNK_WORDS) {
            let len = CHUNK_WORDS.min(self.words - start);
            let mut sim = Simulator::new(approx, len);
            fill_exhaustive(&mut sim, self.inputs, start);
            sim.run();
            for w in 0..len {
                for (k, slot) in a_words.iter_mut().enumerate() {
                    *slot = sim.output(k)[w];
                }
                for (k, slot) in e_words.iter_mut().enumerate() {
                    *slot = self.exact[k][start + w];
                }
                abs_diff_planes(&a_words, &e_words, &mut planes);
                let mask = lane_mask(self.lanes, start + w);
                for (j, &p) in planes.iter().enumerate() {
                    total += ((p & mask).count_ones() as u128) << j;
                }
                worst = worst.max(max_lane(&planes, mask));
            }
            if total_cap.is_some_and(|cap| total > cap) || max_cap.is_some_and(|cap| worst > cap) {
                return Ok(None);
            }
        }
        Ok(Some(ArithmeticErrorReport::from_totals(
            total,
            worst,
            self.inputs,
            EvalMethod::Exhaustive,
        )))
    }
}

fn fill_exhaustive(sim: &mut Simulator<'_>, inputs: usize, start_word: usize) {
    for i in 0..inputs {
        for (w, slot) in sim.input_mut(i).iter_mut().enumerate() {
            *slot = exhaustive_word(i, start_word + w);
        }
    }
}

/// Mean and worst-case absolute error over all `2^n` inputs.
pub fn eval_exhaustive(approx: &Netlist, exact: &Netlist) -> Result<ArithmeticErrorReport> {
    eval_exhaustive_with_limit(approx, exact, EXHAUSTIVE_LIMIT)
}

pub fn eval_exhaustive_with_limit(approx: &Netlist, exact: &Netlist, limit: usize) -> Result<ArithmeticErrorReport> {
    check_pair(approx, exact)?;
    ExhaustiveEvaluator::new(exact, limit)?.evaluate(approx)
}

/// Same quantities as [`eval_exhaustive`], computed symbolically: the
/// magnitude bits `d_j` of `|approx - exact|` are built as decision diagrams,
/// the mean follows from `sum_j 2^j * #SAT(d_j) / 2^n`, and the worst case
/// from a greedy most-significant-bit-first descent.
pub fn eval_bdd(approx: &Netlist, exact: &Netlist) -> Result<ArithmeticErrorReport> {
    eval_bdd_with_budget(approx, exact, BDD_NODE_BUDGET)
}

pub fn eval_bdd_with_budget(approx: &Netlist, exact: &Netlist, budget: usize) -> Result<ArithmeticErrorReport> {
    check_pair(approx, exact)?;
    let mut bdd = Bdd::new(exact.inputs, budget);
    let a = bdd.build_outputs(approx)?;
    let e = bdd.build_outputs(exact)?;

    let width = a.len().max(e.len()) + 1;
    let mut diff: Vec<BddRef> = Vec::with_capacity(width);
    let mut borrow = Bdd::FALSE;
    for j in 0..width {
        let x = a.get(j).copied().unwrap_or(Bdd::FALSE);
        let y = e.get(j).copied().unwrap_or(Bdd::FALSE);
        let xy = bdd.xor(x, y)?;
        diff.push(bdd.xor(xy, borrow)?);
        let nx = bdd.not(x)?;
        let gen = bdd.and(nx, y)?;
        let eq = bdd.not(xy)?;
        let keep = bdd.and(eq, borrow)?;
        borrow = bdd.or(gen, keep)?;
    }
    let sign = borrow;
    let mut carry = sign;
    let mut magnitude = Vec::with_capacity(width);
    for d in diff {
        let t = bdd.xor(d, sign)?;
        magnitude.push(bdd.xor(t, carry)?);
        carry = bdd.and(carry, t)?;
    }

    let mut total: u128 = 0;
    for (j, &m) in magnitude.iter().enumerate() {
        total += bdd.sat_count(m) << j;
    }
    let mut worst = 0u64;
    let mut reachable = Bdd::TRUE;
    for (j, &m) in magnitude.iter().enumerate().rev() {
        let t = bdd.and(reachable, m)?;
        if t != Bdd::FALSE {
            worst |= 1 << j;
            reachable = t;
        }
    }
    Ok(ArithmeticErrorReport::from_totals(
        total,
        worst,
        exact.inputs,
        EvalMethod::Bdd,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popcount::{build_exact_pc, build_truncated_pc};

    /// Direct enumeration, one vector at a time.
    fn brute(approx: &Netlist, exact: &Netlist) -> (f64, u64) {
        let n = exact.inputs;
        let mut total = 0u64;
        let mut worst = 0u64;
        for v in 0..(1u64 << n) {
            let d = approx.eval_u64(v).abs_diff(exact.eval_u64(v));
            total += d;
            worst = worst.max(d);
        }
        (total as f64 / (1u64 << n) as f64, worst)
    }

    #[test]
    fn identical_circuits_have_zero_error() {
        let pc = build_exact_pc(4);
        let r = eval_exhaustive(&pc, &pc).unwrap();
        assert_eq!((r.mae, r.wcae), (0.0, 0));
        let r = eval_bdd(&pc, &pc).unwrap();
        assert_eq!((r.mae, r.wcae), (0.0, 0));
    }

    #[test]
    fn lsb_forced_to_zero_pc4() {
        let exact = build_exact_pc(4);
        let approx = build_truncated_pc(4, 1).unwrap();
        assert_eq!(brute(&approx, &exact), (0.5, 1));
        let r = eval_exhaustive(&approx, &exact).unwrap();
        assert_eq!((r.mae, r.wcae), (0.5, 1));
        let b = eval_bdd(&approx, &exact).unwrap();
        assert_eq!((b.mae, b.wcae), (0.5, 1));
    }

    #[test]
    fn above_limit_refuses() {
        let pc = build_exact_pc(21);
        assert!(matches!(
            eval_exhaustive(&pc, &pc),
            Err(Error::ExhaustiveLimit { inputs: 21, limit: 20 })
        ));
    }

    #[test]
    fn node_budget_is_enforced() {
        let pc = build_exact_pc(24);
        assert!(matches!(
            eval_bdd_with_budget(&pc, &pc, 50),
            Err(Error::NodeBudget { .. })
        ));
    }

    #[test]
    fn bounded_evaluation_aborts() {
        let exact = build_exact_pc(8);
        let approx = build_truncated_pc(8, 2).unwrap();
        let ev = ExhaustiveEvaluator::new(&exact, 20).unwrap();
        let full = ev.evaluate(&approx).unwrap();
        assert!(ev
            .evaluate_within(&approx, ErrorMetric::Mae, full.mae - 0.01)
            .unwrap()
            .is_none());
        assert_eq!(
            ev.evaluate_within(&approx, ErrorMetric::Mae, full.mae).unwrap(),
            Some(full)
        );
        assert!(ev
            .evaluate_within(&approx, ErrorMetric::Wcae, (full.wcae - 1) as f64)
            .unwrap()
            .is_none());
    }

    #[test]
    fn sign_handling_both_directions() {
        // approx that over-counts: exact + 1 saturating in its width
        let exact = build_exact_pc(3);
        let mut b = crate::circuit::NetlistBuilder::new("plus1", 3);
        let ins = b.inputs();
        let e = b.inline(&exact, &ins);
        let out = b.add_const(&e, 1);
        let approx = b.finish(&out);
        let r = eval_exhaustive(&approx, &exact).unwrap();
        assert_eq!((r.mae, r.wcae), (1.0, 1));
        assert_eq!(eval_bdd(&approx, &exact).unwrap().mae, 1.0);
    }
}
