use super::{Gate, GateFn, Netlist, Signal};

/// A builder-side bit: either a known constant or a driven signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bit {
    Const(bool),
    Sig(Signal),
}

impl Bit {
    pub const ZERO: Bit = Bit::Const(false);
    pub const ONE: Bit = Bit::Const(true);
}

/// Incremental netlist construction with constant folding.
///
/// The folding helpers (`and`, `or`, `xor`, `not`, ...) never emit a gate
/// whose result is known at build time; `gate` emits verbatim.
pub struct NetlistBuilder {
    name: String,
    inputs: usize,
    gates: Vec<Gate>,
    consts: [Option<Signal>; 2],
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>, inputs: usize) -> Self {
        NetlistBuilder {
            name: name.into(),
            inputs,
            gates: Vec::new(),
            consts: [None, None],
        }
    }

    pub fn input(&self, i: usize) -> Bit {
        assert!(i < self.inputs, "input {i} out of range");
        Bit::Sig(i as Signal)
    }

    pub fn inputs(&self) -> Vec<Bit> {
        (0..self.inputs).map(|i| self.input(i)).collect()
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Appends a gate without any simplification.
    pub fn gate(&mut self, function: GateFn, a: Signal, b: Signal) -> Signal {
        let (a, b) = match function.arity() {
            0 => (0, 0),
            1 => (a, 0),
            _ => (a, b),
        };
        self.gates.push(Gate::new(function, a, b));
        (self.inputs + self.gates.len() - 1) as Signal
    }

    /// Turns a bit into a signal, emitting a (free) tie cell for constants.
    pub fn materialize(&mut self, bit: Bit) -> Signal {
        match bit {
            Bit::Sig(s) => s,
            Bit::Const(v) => {
                if let Some(s) = self.consts[v as usize] {
                    return s;
                }
                let s = self.gate(if v { GateFn::Const1 } else { GateFn::Const0 }, 0, 0);
                self.consts[v as usize] = Some(s);
                s
            }
        }
    }

    pub fn not(&mut self, a: Bit) -> Bit {
        match a {
            Bit::Const(v) => Bit::Const(!v),
            Bit::Sig(s) => Bit::Sig(self.gate(GateFn::Not, s, 0)),
        }
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(false), _) | (_, Bit::Const(false)) => Bit::ZERO,
            (Bit::Const(true), x) | (x, Bit::Const(true)) => x,
            (Bit::Sig(x), Bit::Sig(y)) if x == y => a,
            (Bit::Sig(x), Bit::Sig(y)) => Bit::Sig(self.gate(GateFn::And, x, y)),
        }
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(true), _) | (_, Bit::Const(true)) => Bit::ONE,
            (Bit::Const(false), x) | (x, Bit::Const(false)) => x,
            (Bit::Sig(x), Bit::Sig(y)) if x == y => a,
            (Bit::Sig(x), Bit::Sig(y)) => Bit::Sig(self.gate(GateFn::Or, x, y)),
        }
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(false), x) | (x, Bit::Const(false)) => x,
            (Bit::Const(true), x) | (x, Bit::Const(true)) => self.not(x),
            (Bit::Sig(x), Bit::Sig(y)) if x == y => Bit::ZERO,
            (Bit::Sig(x), Bit::Sig(y)) => Bit::Sig(self.gate(GateFn::Xor, x, y)),
        }
    }

    pub fn xnor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Sig(x), Bit::Sig(y)) if x != y => Bit::Sig(self.gate(GateFn::Xnor, x, y)),
            _ => {
                let x = self.xor(a, b);
                self.not(x)
            }
        }
    }

    /// `sel ? when_one : when_zero`
    pub fn mux(&mut self, sel: Bit, when_one: Bit, when_zero: Bit) -> Bit {
        if when_one == when_zero {
            return when_one;
        }
        let hi = self.and(sel, when_one);
        let nsel = self.not(sel);
        let lo = self.and(nsel, when_zero);
        self.or(hi, lo)
    }

    /// Returns `(sum, carry)`.
    pub fn half_adder(&mut self, a: Bit, b: Bit) -> (Bit, Bit) {
        let s = self.xor(a, b);
        let c = self.and(a, b);
        (s, c)
    }

    /// Returns `(sum, carry)`; five gates when no operand is constant.
    pub fn full_adder(&mut self, a: Bit, b: Bit, c: Bit) -> (Bit, Bit) {
        let p = self.xor(a, b);
        let s = self.xor(p, c);
        let g = self.and(a, b);
        let t = self.and(c, p);
        let carry = self.or(g, t);
        (s, carry)
    }

    /// `x >= z` for unsigned LSB-first operands; the narrower one is
    /// zero-extended. Ripple borrow chain: `x >= z` iff `x - z` does not borrow,
    /// with `borrow' = maj(!x, z, borrow)`.
    pub fn greater_equal(&mut self, x: &[Bit], z: &[Bit]) -> Bit {
        let width = x.len().max(z.len());
        let mut borrow = Bit::ZERO;
        for i in 0..width {
            let xi = x.get(i).copied().unwrap_or(Bit::ZERO);
            let zi = z.get(i).copied().unwrap_or(Bit::ZERO);
            let nx = self.not(xi);
            let gen = self.and(nx, zi);
            borrow = match borrow {
                Bit::Const(false) => gen,
                _ => {
                    let prop = self.or(nx, zi);
                    let keep = self.and(prop, borrow);
                    self.or(gen, keep)
                }
            };
        }
        self.not(borrow)
    }

    /// Adds a non-negative constant to an unsigned LSB-first value.
    pub fn add_const(&mut self, x: &[Bit], k: u64) -> Vec<Bit> {
        let width = x.len().max(64 - k.leading_zeros() as usize) + 1;
        let mut out = Vec::with_capacity(width);
        let mut carry = Bit::ZERO;
        for i in 0..width {
            let xi = x.get(i).copied().unwrap_or(Bit::ZERO);
            let ki = Bit::Const((k >> i.min(63)) & 1 == 1 && i < 64);
            let (s, c) = self.full_adder(xi, ki, carry);
            out.push(s);
            carry = c;
        }
        while out.len() > 1 && out.last() == Some(&Bit::ZERO) {
            out.pop();
        }
        out
    }

    /// Copies `netlist` verbatim with its inputs bound to `inputs`; returns
    /// its outputs.
    pub fn inline(&mut self, netlist: &Netlist, inputs: &[Bit]) -> Vec<Bit> {
        assert_eq!(inputs.len(), netlist.inputs, "inline: input count mismatch");
        let mut map: Vec<Signal> = Vec::with_capacity(netlist.signal_count());
        for &b in inputs {
            let s = self.materialize(b);
            map.push(s);
        }
        for gate in &netlist.gates {
            let a = if gate.function.arity() >= 1 {
                map[gate.a as usize]
            } else {
                0
            };
            let b = if gate.function.arity() >= 2 {
                map[gate.b as usize]
            } else {
                0
            };
            let s = self.gate(gate.function, a, b);
            map.push(s);
        }
        netlist.outputs.iter().map(|&o| Bit::Sig(map[o as usize])).collect()
    }

    pub fn finish(mut self, outputs: &[Bit]) -> Netlist {
        let outputs = outputs.iter().map(|&b| self.materialize(b)).collect();
        Netlist::new(self.name, self.inputs, outputs, self.gates).expect("builder only emits backward references")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_adder_truth_table() {
        let mut b = NetlistBuilder::new("fa", 3);
        let ins = b.inputs();
        let (s, c) = b.full_adder(ins[0], ins[1], ins[2]);
        let n = b.finish(&[s, c]);
        assert_eq!(n.gates.len(), 5);
        for v in 0..8u64 {
            assert_eq!(n.eval_u64(v), v.count_ones() as u64);
        }
    }

    #[test]
    fn greater_equal_exhaustive_width3() {
        let mut b = NetlistBuilder::new("ge", 6);
        let ins = b.inputs();
        let ge = b.greater_equal(&ins[..3], &ins[3..]);
        let n = b.finish(&[ge]);
        for v in 0..64u64 {
            let (x, z) = (v & 7, v >> 3);
            assert_eq!(n.eval_u64(v) == 1, x >= z, "x={x} z={z}");
        }
    }

    #[test]
    fn add_const_matches_integer_add() {
        for k in 0..9u64 {
            let mut b = NetlistBuilder::new("addc", 3);
            let ins = b.inputs();
            let out = b.add_const(&ins, k);
            let n = b.finish(&out);
            for v in 0..8u64 {
                assert_eq!(n.eval_u64(v), v + k);
            }
        }
    }

    #[test]
    fn constants_fold_away() {
        let mut b = NetlistBuilder::new("fold", 1);
        let x = b.input(0);
        let y = b.and(x, Bit::ONE);
        let z = b.or(y, Bit::ZERO);
        let w = b.xor(z, Bit::ZERO);
        assert_eq!(w, x);
        assert_eq!(b.gate_count(), 0);
    }
}
