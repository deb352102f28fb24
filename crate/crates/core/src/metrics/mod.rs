//! Error measurement.
//!
//! Popcount circuits are arithmetic, so they are scored with the mean and
//! worst-case absolute error against the exact circuit, either by exhaustive
//! bit-parallel simulation or symbolically with decision diagrams. Popcount-
//! compare circuits produce one relational bit and are scored with the
//! distance error: a wrong decision costs `|x - z|`, so flipping `0 >= 4`
//! is four times worse than flipping `0 >= 1`.

mod arith;
pub mod bdd;
mod distance;

use serde::{Deserialize, Serialize};

pub use arith::{eval_bdd, eval_bdd_with_budget, eval_exhaustive, eval_exhaustive_with_limit, ExhaustiveEvaluator};
pub use distance::{
    distance, eval_pcc_exhaustive, eval_pcc_exhaustive_with_limit, eval_pcc_mc, eval_pcc_mc_with, DistanceErrorReport,
    SamplingMode,
};

/// Default cap on input count for exhaustive enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Default decision-diagram node budget per evaluation.
pub const BDD_NODE_BUDGET: usize = 8_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EvalMethod {
    Exhaustive,
    Bdd,
    MonteCarlo,
}

/// Arithmetic error of an approximate circuit against its exact reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticErrorReport {
    pub mae: f64,
    pub wcae: u64,
    pub evaluated_via: EvalMethod,
}

impl ArithmeticErrorReport {
    /// `total_abs / 2^n` with a single rounding step.
    pub(crate) fn from_totals(total_abs: u128, wcae: u64, inputs: usize, via: EvalMethod) -> Self {
        let mae = total_abs as f64 * (-(inputs as f64)).exp2();
        ArithmeticErrorReport {
            mae,
            wcae,
            evaluated_via: via,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.wcae == 0
    }
}

/// The error measure a search constraint is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorMetric {
    Mae,
    Wcae,
}

impl ErrorMetric {
    pub fn of(self, report: &ArithmeticErrorReport) -> f64 {
        match self {
            ErrorMetric::Mae => report.mae,
            ErrorMetric::Wcae => report.wcae as f64,
        }
    }
}
