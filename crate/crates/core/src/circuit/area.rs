use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{GateFn, Netlist};
use crate::error::{Error, Result};

/// Relative, technology-neutral cell costs.
///
/// Wires and tie cells are free in a hardwired circuit; the remaining costs
/// roughly follow static-CMOS transistor counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AreaTable {
    pub costs: BTreeMap<GateFn, f64>,
}

impl Default for AreaTable {
    fn default() -> Self {
        use GateFn::*;
        let costs = [
            (Const0, 0.0),
            (Const1, 0.0),
            (Buf, 0.0),
            (Not, 1.0),
            (And, 2.0),
            (Or, 2.0),
            (Nand, 2.0),
            (Nor, 2.0),
            (Xor, 3.0),
            (Xnor, 3.0),
        ]
        .into_iter()
        .collect();
        AreaTable { costs }
    }
}

impl AreaTable {
    pub fn cost(&self, f: GateFn) -> Result<f64> {
        self.costs
            .get(&f)
            .copied()
            .ok_or_else(|| Error::Config(format!("area table has no entry for {f:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        for (f, &c) in &self.costs {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Config(format!(
                    "area of {f:?} must be a finite non-negative number"
                )));
            }
        }
        Ok(())
    }
}

/// Sum of cell costs over the gates that reach an output.
pub fn area(netlist: &Netlist, table: &AreaTable) -> Result<f64> {
    let active = netlist.active_gates();
    let mut total = 0.0;
    for (gate, _) in netlist.gates.iter().zip(&active).filter(|(_, &a)| a) {
        total += table.cost(gate.function)?;
    }
    Ok(total)
}
