//! A small reduced ordered binary decision diagram package.
//!
//! Only what error analysis needs: AND/OR/XOR/NOT, construction from a
//! netlist, and model counting. Variables are ordered by primary input index.
//! Each manager is owned by one evaluation, so nothing here is shared.

use std::collections::HashMap;

use crate::circuit::{GateFn, Netlist};
use crate::error::{Error, Result};

pub type BddRef = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: BddRef,
    hi: BddRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
    Xor,
}

pub struct Bdd {
    vars: usize,
    budget: usize,
    nodes: Vec<Node>,
    unique: HashMap<Node, BddRef>,
    cache: HashMap<(Op, BddRef, BddRef), BddRef>,
}

impl Bdd {
    pub const FALSE: BddRef = 0;
    pub const TRUE: BddRef = 1;

    pub fn new(vars: usize, budget: usize) -> Self {
        assert!(vars < 120, "model counts are kept in u128");
        let terminal = |hi| Node {
            var: vars as u32,
            lo: 0,
            hi,
        };
        Bdd {
            vars,
            budget,
            nodes: vec![terminal(0), terminal(1)],
            unique: HashMap::new(),
            cache: HashMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn level(&self, f: BddRef) -> u32 {
        self.nodes[f as usize].var
    }

    fn mk(&mut self, var: u32, lo: BddRef, hi: BddRef) -> Result<BddRef> {
        if lo == hi {
            return Ok(lo);
        }
        let node = Node { var, lo, hi };
        if let Some(&r) = self.unique.get(&node) {
            return Ok(r);
        }
        if self.nodes.len() >= self.budget {
            return Err(Error::NodeBudget {
                nodes: self.nodes.len(),
            });
        }
        let r = self.nodes.len() as BddRef;
        self.nodes.push(node);
        self.unique.insert(node, r);
        Ok(r)
    }

    pub fn var(&mut self, i: usize) -> Result<BddRef> {
        assert!(i < self.vars);
        self.mk(i as u32, Self::FALSE, Self::TRUE)
    }

    fn cofactors(&self, f: BddRef, var: u32) -> (BddRef, BddRef) {
        let n = self.nodes[f as usize];
        if n.var == var && f > Self::TRUE {
            (n.lo, n.hi)
        } else {
            (f, f)
        }
    }

    fn apply(&mut self, op: Op, f: BddRef, g: BddRef) -> Result<BddRef> {
        use Bdd as B;
        let terminal = match op {
            Op::And => match (f, g) {
                (B::FALSE, _) | (_, B::FALSE) => Some(B::FALSE),
                (B::TRUE, x) | (x, B::TRUE) => Some(x),
                _ if f == g => Some(f),
                _ => None,
            },
            Op::Or => match (f, g) {
                (B::TRUE, _) | (_, B::TRUE) => Some(B::TRUE),
                (B::FALSE, x) | (x, B::FALSE) => Some(x),
                _ if f == g => Some(f),
                _ => None,
            },
            Op::Xor => match (f, g) {
                (B::FALSE, x) | (x, B::FALSE) => Some(x),
                _ if f == g => Some(B::FALSE),
                _ => None,
            },
        };
        if let Some(r) = terminal {
            return Ok(r);
        }
        let key = (op, f.min(g), f.max(g));
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let var = self.level(f).min(self.level(g));
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let lo = self.apply(op, f0, g0)?;
        let hi = self.apply(op, f1, g1)?;
        let r = self.mk(var, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    pub fn and(&mut self, f: BddRef, g: BddRef) -> Result<BddRef> {
        self.apply(Op::And, f, g)
    }

    pub fn or(&mut self, f: BddRef, g: BddRef) -> Result<BddRef> {
        self.apply(Op::Or, f, g)
    }

    pub fn xor(&mut self, f: BddRef, g: BddRef) -> Result<BddRef> {
        self.apply(Op::Xor, f, g)
    }

    pub fn not(&mut self, f: BddRef) -> Result<BddRef> {
        self.apply(Op::Xor, f, Self::TRUE)
    }

    /// Diagrams for every output of `netlist`, inputs bound to variables
    /// `0..inputs`.
    pub fn build_outputs(&mut self, netlist: &Netlist) -> Result<Vec<BddRef>> {
        if netlist.inputs > self.vars {
            return Err(Error::Validation(format!(
                "netlist has {} inputs but the manager has {} variables",
                netlist.inputs, self.vars
            )));
        }
        let active = netlist.active_gates();
        let mut sig: Vec<BddRef> = Vec::with_capacity(netlist.signal_count());
        for i in 0..netlist.inputs {
            let v = self.var(i)?;
            sig.push(v);
        }
        for (gate, &live) in netlist.gates.iter().zip(&active) {
            if !live {
                sig.push(Self::FALSE);
                continue;
            }
            let a = || sig[gate.a as usize];
            let b = || sig[gate.b as usize];
            let r = match gate.function {
                GateFn::Const0 => Self::FALSE,
                GateFn::Const1 => Self::TRUE,
                GateFn::Buf => a(),
                GateFn::Not => self.not(a())?,
                GateFn::And => self.and(a(), b())?,
                GateFn::Or => self.or(a(), b())?,
                GateFn::Xor => self.xor(a(), b())?,
                GateFn::Nand => {
                    let t = self.and(a(), b())?;
                    self.not(t)?
                }
                GateFn::Nor => {
                    let t = self.or(a(), b())?;
                    self.not(t)?
                }
                GateFn::Xnor => {
                    let t = self.xor(a(), b())?;
                    self.not(t)?
                }
            };
            sig.push(r);
        }
        Ok(netlist.outputs.iter().map(|&o| sig[o as usize]).collect())
    }

    /// Number of satisfying assignments over all manager variables.
    pub fn sat_count(&self, f: BddRef) -> u128 {
        let mut memo: HashMap<BddRef, u128> = HashMap::new();
        let c = self.count_below(f, &mut memo);
        c << self.level(f)
    }

    /// Assignments to variables `level(f)..vars`.
    fn count_below(&self, f: BddRef, memo: &mut HashMap<BddRef, u128>) -> u128 {
        if f <= Self::TRUE {
            return f as u128;
        }
        if let Some(&c) = memo.get(&f) {
            return c;
        }
        let n = self.nodes[f as usize];
        let lo = self.count_below(n.lo, memo) << (self.level(n.lo) - n.var - 1);
        let hi = self.count_below(n.hi, memo) << (self.level(n.hi) - n.var - 1);
        memo.insert(f, lo + hi);
        lo + hi
    }
}
