//! Cartesian genetic programming encoding.
//!
//! A genotype is a single row of `columns` nodes. Node `i` owns three genes
//! `(function, a, b)` and drives address `inputs + i`; the trailing
//! `outputs` genes select which addresses feed the primary outputs.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Gate, GateFn, Netlist, Signal};
use crate::error::{Error, Result};

pub const GENES_PER_NODE: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CgpGenotype {
    pub inputs: usize,
    pub outputs: usize,
    pub columns: usize,
    pub rows: usize,
    pub levels_back: usize,
    pub genes: Vec<u32>,
}

impl CgpGenotype {
    /// Grid width for a seed circuit: four times its size, at least 100.
    pub fn default_columns(gate_count: usize) -> usize {
        (4 * gate_count).max(100)
    }

    pub fn node_count(&self) -> usize {
        self.columns * self.rows
    }

    fn output_gene_base(&self) -> usize {
        self.node_count() * GENES_PER_NODE
    }

    /// Smallest address node `node` may read from besides the primary inputs.
    fn lowest_node_source(&self, node: usize) -> usize {
        let column = node / self.rows;
        column.saturating_sub(self.levels_back) * self.rows
    }

    /// Whether `addr` is a legal operand for `node`.
    fn operand_ok(&self, node: usize, addr: usize) -> bool {
        let column = node / self.rows;
        addr < self.inputs
            || (addr >= self.inputs + self.lowest_node_source(node) && addr < self.inputs + column * self.rows)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.output_gene_base() + self.outputs;
        if self.rows == 0 || self.genes.len() != expected {
            return Err(Error::Genotype {
                gene: self.genes.len().min(expected),
                reason: format!("expected {expected} genes, found {}", self.genes.len()),
            });
        }
        for node in 0..self.node_count() {
            let g = node * GENES_PER_NODE;
            let Some(f) = GateFn::from_index(self.genes[g]) else {
                return Err(Error::Genotype {
                    gene: g,
                    reason: format!("function index {} outside the gate set", self.genes[g]),
                });
            };
            for k in 0..f.arity() {
                let addr = self.genes[g + 1 + k] as usize;
                if !self.operand_ok(node, addr) {
                    return Err(Error::Genotype {
                        gene: g + 1 + k,
                        reason: format!("address {addr} is not a legal source for node {node}"),
                    });
                }
            }
        }
        let limit = self.inputs + self.node_count();
        for k in 0..self.outputs {
            let g = self.output_gene_base() + k;
            if self.genes[g] as usize >= limit {
                return Err(Error::Genotype {
                    gene: g,
                    reason: format!("output address {} out of range", self.genes[g]),
                });
            }
        }
        Ok(())
    }

    /// Netlist made of the active nodes only, in address order.
    pub fn decode(&self) -> Result<Netlist> {
        self.validate()?;
        let nodes = self.node_count();
        let mut active = vec![false; nodes];
        let mut stack: Vec<usize> = self.genes[self.output_gene_base()..]
            .iter()
            .map(|&g| g as usize)
            .collect();
        while let Some(addr) = stack.pop() {
            let Some(node) = addr.checked_sub(self.inputs) else {
                continue;
            };
            if active[node] {
                continue;
            }
            active[node] = true;
            let g = node * GENES_PER_NODE;
            let f = GateFn::from_index(self.genes[g]).expect("validated");
            for k in 0..f.arity() {
                stack.push(self.genes[g + 1 + k] as usize);
            }
        }
        let mut remap: Vec<Signal> = (0..self.inputs as Signal).collect();
        remap.resize(self.inputs + nodes, Signal::MAX);
        let mut gates = Vec::new();
        for node in (0..nodes).filter(|&n| active[n]) {
            let g = node * GENES_PER_NODE;
            let f = GateFn::from_index(self.genes[g]).expect("validated");
            let mut ops = [0 as Signal; 2];
            for (k, op) in ops.iter_mut().enumerate().take(f.arity()) {
                *op = remap[self.genes[g + 1 + k] as usize];
            }
            gates.push(Gate::new(f, ops[0], ops[1]));
            remap[self.inputs + node] = (self.inputs + gates.len() - 1) as Signal;
        }
        let outputs = self.genes[self.output_gene_base()..]
            .iter()
            .map(|&g| remap[g as usize])
            .collect();
        Netlist::new(
            format!("cgp_{}x{}", self.inputs, self.outputs),
            self.inputs,
            outputs,
            gates,
        )
    }

    /// Places `netlist` gate-for-gate on a single-row grid; surplus nodes are
    /// inactive buffers of input 0.
    pub fn encode(netlist: &Netlist, columns: usize, levels_back: usize) -> Result<CgpGenotype> {
        let gates = netlist.gates.len();
        if gates > columns {
            return Err(Error::Capacity { gates, columns });
        }
        if levels_back == 0 && gates > 0 {
            return Err(Error::Config("levels_back must be at least 1".into()));
        }
        let mut genes = Vec::with_capacity(columns * GENES_PER_NODE + netlist.outputs.len());
        for gate in &netlist.gates {
            let arity = gate.function.arity();
            genes.push(gate.function.index());
            genes.push(if arity >= 1 { gate.a } else { 0 });
            genes.push(if arity >= 2 { gate.b } else { 0 });
        }
        for _ in gates..columns {
            genes.extend_from_slice(&[GateFn::Buf.index(), 0, 0]);
        }
        genes.extend_from_slice(&netlist.outputs);
        let genotype = CgpGenotype {
            inputs: netlist.inputs,
            outputs: netlist.outputs.len(),
            columns,
            rows: 1,
            levels_back,
            genes,
        };
        // a short levels_back can make the seed's own wiring illegal
        genotype.validate()?;
        Ok(genotype)
    }

    /// Replaces `gene_mutations` distinct, uniformly chosen genes with
    /// uniformly chosen legal values.
    pub fn mutate<R: Rng + ?Sized>(&self, gene_mutations: usize, rng: &mut R) -> CgpGenotype {
        let mut child = self.clone();
        let count = gene_mutations.min(child.genes.len());
        for g in index::sample(rng, child.genes.len(), count) {
            child.genes[g] = child.random_gene_value(g, rng);
        }
        child
    }

    fn random_gene_value<R: Rng + ?Sized>(&self, gene: usize, rng: &mut R) -> u32 {
        if gene >= self.output_gene_base() {
            return rng.gen_range(0..(self.inputs + self.node_count()) as u32);
        }
        let node = gene / GENES_PER_NODE;
        if gene % GENES_PER_NODE == 0 {
            return rng.gen_range(0..GateFn::ALL.len() as u32);
        }
        let lo = self.lowest_node_source(node);
        let hi = (node / self.rows) * self.rows;
        let choices = self.inputs + (hi - lo);
        if choices == 0 {
            return 0;
        }
        let r = rng.gen_range(0..choices);
        if r < self.inputs {
            r as u32
        } else {
            (self.inputs + lo + (r - self.inputs)) as u32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xor_genotype(columns: usize) -> CgpGenotype {
        let mut genes = vec![GateFn::Xor.index(), 0, 1];
        for _ in 1..columns {
            genes.extend_from_slice(&[GateFn::And.index(), 0, 1]);
        }
        genes.push(2);
        CgpGenotype {
            inputs: 2,
            outputs: 1,
            columns,
            rows: 1,
            levels_back: columns,
            genes,
        }
    }

    #[test]
    fn decode_single_node() {
        let n = xor_genotype(1).decode().unwrap();
        assert_eq!(n.gates, vec![Gate::new(GateFn::Xor, 0, 1)]);
        assert_eq!(n.outputs, vec![2]);
    }

    #[test]
    fn all_inactive_when_output_reads_input() {
        let mut g = xor_genotype(10);
        *g.genes.last_mut().unwrap() = 0;
        let n = g.decode().unwrap();
        assert!(n.gates.is_empty());
        assert_eq!(n.outputs, vec![0]);
    }

    #[test]
    fn malformed_address_names_gene() {
        let mut g = xor_genotype(3);
        g.genes[4] = 3; // node 1 operand a -> its own address
        match g.decode() {
            Err(Error::Genotype { gene, .. }) => assert_eq!(gene, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn capacity_error() {
        let gates = (0..101).map(|_| Gate::new(GateFn::And, 0, 1)).collect();
        let n = Netlist::new("big", 2, vec![2], gates).unwrap();
        assert!(matches!(
            CgpGenotype::encode(&n, 100, 100),
            Err(Error::Capacity {
                gates: 101,
                columns: 100
            })
        ));
    }

    #[test]
    fn one_gate_into_wide_grid() {
        let n = Netlist::new("x", 2, vec![2], vec![Gate::new(GateFn::Xor, 0, 1)]).unwrap();
        let g = CgpGenotype::encode(&n, 100, 100).unwrap();
        assert_eq!(g.decode().unwrap().gates.len(), 1);
    }

    #[test]
    fn single_mutation_changes_at_most_one_gene() {
        let g = xor_genotype(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = g.mutate(1, &mut rng);
            let diff = g.genes.iter().zip(&c.genes).filter(|(a, b)| a != b).count();
            assert!(diff <= 1);
            c.validate().unwrap();
        }
    }

    #[test]
    fn mutation_is_deterministic() {
        let g = xor_genotype(50);
        let a = g.mutate(5, &mut ChaCha8Rng::seed_from_u64(9));
        let b = g.mutate(5, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn restricted_levels_back_respected() {
        let mut g = xor_genotype(20);
        g.levels_back = 2;
        for node in 1..20 {
            g.genes[node * 3 + 1] = 0;
            g.genes[node * 3 + 2] = 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            g = g.mutate(3, &mut rng);
            g.validate().unwrap();
        }
    }
}
