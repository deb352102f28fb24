//! Gate-level netlists and everything that operates directly on them.
//!
//! A [`Netlist`] is a feed-forward list of two-input gates. Signals are plain
//! integer addresses: primary inputs occupy `0..inputs` and gate `i` drives
//! address `inputs + i`. Because operands may only reference lower addresses,
//! every netlist is acyclic and already in topological order.

mod area;
mod builder;
pub mod cgp;
pub(crate) mod sim;
mod verilog;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use area::{area, AreaTable};
pub use builder::{Bit, NetlistBuilder};
pub use cgp::CgpGenotype;
pub use sim::{exhaustive_inputs, lane_mask, simulate, BitMatrix, Simulator};
pub use verilog::to_verilog;

/// Signal address inside a netlist.
pub type Signal = u32;

/// The fixed cell set. The discriminant doubles as the CGP function gene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateFn {
    Const0 = 0,
    Const1 = 1,
    Buf = 2,
    Not = 3,
    And = 4,
    Or = 5,
    Xor = 6,
    Nand = 7,
    Nor = 8,
    Xnor = 9,
}

impl GateFn {
    pub const ALL: [GateFn; 10] = [
        GateFn::Const0,
        GateFn::Const1,
        GateFn::Buf,
        GateFn::Not,
        GateFn::And,
        GateFn::Or,
        GateFn::Xor,
        GateFn::Nand,
        GateFn::Nor,
        GateFn::Xnor,
    ];

    pub fn from_index(index: u32) -> Option<GateFn> {
        GateFn::ALL.get(index as usize).copied()
    }

    pub fn index(self) -> u32 {
        self as u32
    }

    /// Number of operands the function actually reads.
    pub fn arity(self) -> usize {
        match self {
            GateFn::Const0 | GateFn::Const1 => 0,
            GateFn::Buf | GateFn::Not => 1,
            _ => 2,
        }
    }

    /// Word-wide evaluation; 64 independent lanes per call.
    #[inline(always)]
    pub fn eval_word(self, a: u64, b: u64) -> u64 {
        match self {
            GateFn::Const0 => 0,
            GateFn::Const1 => !0,
            GateFn::Buf => a,
            GateFn::Not => !a,
            GateFn::And => a & b,
            GateFn::Or => a | b,
            GateFn::Xor => a ^ b,
            GateFn::Nand => !(a & b),
            GateFn::Nor => !(a | b),
            GateFn::Xnor => !(a ^ b),
        }
    }

    pub fn eval_bool(self, a: bool, b: bool) -> bool {
        self.eval_word(a as u64, b as u64) & 1 == 1
    }
}

/// One gate; `b` is ignored by unary functions, both operands by constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    #[serde(rename = "fn")]
    pub function: GateFn,
    pub a: Signal,
    pub b: Signal,
}

impl Gate {
    pub fn new(function: GateFn, a: Signal, b: Signal) -> Self {
        Gate { function, a, b }
    }

    /// Operands the function reads.
    pub fn operands(&self) -> impl Iterator<Item = Signal> {
        [self.a, self.b].into_iter().take(self.function.arity())
    }
}

/// A combinational netlist with named primary inputs and ordered outputs.
///
/// Arithmetic outputs are least-significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawNetlist")]
pub struct Netlist {
    pub name: String,
    pub inputs: usize,
    pub outputs: Vec<Signal>,
    pub gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct RawNetlist {
    name: String,
    inputs: usize,
    outputs: Vec<Signal>,
    gates: Vec<Gate>,
}

impl TryFrom<RawNetlist> for Netlist {
    type Error = Error;

    fn try_from(raw: RawNetlist) -> Result<Self> {
        Netlist::new(raw.name, raw.inputs, raw.outputs, raw.gates)
    }
}

impl Netlist {
    /// Builds a netlist, rejecting forward or dangling references.
    pub fn new(name: impl Into<String>, inputs: usize, outputs: Vec<Signal>, gates: Vec<Gate>) -> Result<Self> {
        let netlist = Netlist {
            name: name.into(),
            inputs,
            outputs,
            gates,
        };
        netlist.validate()?;
        Ok(netlist)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, gate) in self.gates.iter().enumerate() {
            let own = self.inputs + i;
            for (k, &op) in [gate.a, gate.b].iter().take(gate.function.arity()).enumerate() {
                if op as usize >= own {
                    return Err(Error::Validation(format!(
                        "gate {i} operand {} references signal {op}, which is not driven before address {own}",
                        if k == 0 { 'a' } else { 'b' }
                    )));
                }
            }
        }
        let signals = self.signal_count();
        for (k, &out) in self.outputs.iter().enumerate() {
            if out as usize >= signals {
                return Err(Error::Validation(format!(
                    "output {k} references signal {out}, but only {signals} signals exist"
                )));
            }
        }
        Ok(())
    }

    pub fn signal_count(&self) -> usize {
        self.inputs + self.gates.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    /// Gate driving `signal`, or `None` for primary inputs.
    pub fn driver(&self, signal: Signal) -> Option<&Gate> {
        (signal as usize)
            .checked_sub(self.inputs)
            .and_then(|i| self.gates.get(i))
    }

    /// Marks the gates in the transitive fan-in of the outputs.
    pub fn active_gates(&self) -> Vec<bool> {
        let mut active = vec![false; self.gates.len()];
        let mut stack: Vec<Signal> = self.outputs.clone();
        while let Some(sig) = stack.pop() {
            let Some(idx) = (sig as usize).checked_sub(self.inputs) else {
                continue;
            };
            if active[idx] {
                continue;
            }
            active[idx] = true;
            let gate = &self.gates[idx];
            stack.extend(gate.operands());
        }
        active
    }

    pub fn active_gate_count(&self) -> usize {
        self.active_gates().iter().filter(|&&a| a).count()
    }

    /// Drops every gate outside the output cones and renumbers the rest.
    pub fn pruned(&self) -> Netlist {
        let active = self.active_gates();
        let mut remap: Vec<Signal> = (0..self.inputs as Signal).collect();
        remap.resize(self.signal_count(), Signal::MAX);
        let mut gates = Vec::with_capacity(active.iter().filter(|&&a| a).count());
        for (i, gate) in self.gates.iter().enumerate() {
            if !active[i] {
                continue;
            }
            let map = |s: Signal, used: bool| if used { remap[s as usize] } else { 0 };
            let arity = gate.function.arity();
            gates.push(Gate::new(
                gate.function,
                map(gate.a, arity >= 1),
                map(gate.b, arity >= 2),
            ));
            remap[self.inputs + i] = (self.inputs + gates.len() - 1) as Signal;
        }
        Netlist {
            name: self.name.clone(),
            inputs: self.inputs,
            outputs: self.outputs.iter().map(|&o| remap[o as usize]).collect(),
            gates,
        }
    }

    /// Reference evaluation of a single input vector, one gate at a time.
    pub fn eval(&self, input: &[bool]) -> Vec<bool> {
        assert_eq!(input.len(), self.inputs, "input vector length mismatch");
        let mut values = Vec::with_capacity(self.signal_count());
        values.extend_from_slice(input);
        for gate in &self.gates {
            let a = gate.function.arity() >= 1 && values[gate.a as usize];
            let b = gate.function.arity() >= 2 && values[gate.b as usize];
            values.push(gate.function.eval_bool(a, b));
        }
        self.outputs.iter().map(|&o| values[o as usize]).collect()
    }

    /// Evaluates one vector given as the low bits of `input` and returns the
    /// outputs packed LSB-first.
    pub fn eval_u64(&self, input: u64) -> u64 {
        let bits: Vec<bool> = (0..self.inputs).map(|i| (input >> i) & 1 == 1).collect();
        self.eval(&bits)
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &b)| acc | ((b as u64) << k))
    }
}
