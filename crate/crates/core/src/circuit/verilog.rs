use std::fmt::Write;

use super::{GateFn, Netlist};

fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, 'm');
    }
    s
}

/// Structural Verilog with one primitive instance per gate.
pub fn to_verilog(netlist: &Netlist) -> String {
    let mut v = String::new();
    let module = sanitize(&netlist.name);
    let mut ports: Vec<String> = (0..netlist.inputs).map(|i| format!("in{i}")).collect();
    ports.extend((0..netlist.outputs.len()).map(|k| format!("out{k}")));
    writeln!(v, "module {module} ({});", ports.join(", ")).unwrap();
    for i in 0..netlist.inputs {
        writeln!(v, "  input wire in{i};").unwrap();
    }
    for k in 0..netlist.outputs.len() {
        writeln!(v, "  output wire out{k};").unwrap();
    }
    let name = |s: u32| {
        if (s as usize) < netlist.inputs {
            format!("in{s}")
        } else {
            format!("n{s}")
        }
    };
    for i in 0..netlist.gates.len() {
        writeln!(v, "  wire n{};", netlist.inputs + i).unwrap();
    }
    for (i, gate) in netlist.gates.iter().enumerate() {
        let out = netlist.inputs + i;
        let line = match gate.function {
            GateFn::Const0 => format!("assign n{out} = 1'b0;"),
            GateFn::Const1 => format!("assign n{out} = 1'b1;"),
            GateFn::Buf => format!("buf g{out} (n{out}, {});", name(gate.a)),
            GateFn::Not => format!("not g{out} (n{out}, {});", name(gate.a)),
            f => {
                let prim = match f {
                    GateFn::And => "and",
                    GateFn::Or => "or",
                    GateFn::Xor => "xor",
                    GateFn::Nand => "nand",
                    GateFn::Nor => "nor",
                    _ => "xnor",
                };
                format!("{prim} g{out} (n{out}, {}, {});", name(gate.a), name(gate.b))
            }
        };
        writeln!(v, "  {line}").unwrap();
    }
    for (k, &o) in netlist.outputs.iter().enumerate() {
        writeln!(v, "  assign out{k} = {};", name(o)).unwrap();
    }
    v.push_str("endmodule\n");
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    #[test]
    fn emits_one_instance_per_gate() {
        let n = Netlist::new(
            "half-adder",
            2,
            vec![2, 3],
            vec![Gate::new(GateFn::Xor, 0, 1), Gate::new(GateFn::And, 0, 1)],
        )
        .unwrap();
        let v = to_verilog(&n);
        assert!(v.starts_with("module half_adder (in0, in1, out0, out1);"));
        assert!(v.contains("  xor g2 (n2, in0, in1);\n"));
        assert!(v.contains("  and g3 (n3, in0, in1);\n"));
        assert!(v.contains("  assign out1 = n3;\n"));
        assert!(v.ends_with("endmodule\n"));
    }
}
