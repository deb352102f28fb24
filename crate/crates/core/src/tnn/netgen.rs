use super::{infer_exact, neuron_requirements, BinaryDataset, Slot, Split, TnnModel};
use crate::circuit::{simulate, Bit, BitMatrix, Netlist, NetlistBuilder};
use crate::error::{Error, Result};
use crate::pcc::assemble_pcc;
use crate::popcount::{build_exact_pc, null_pc};

fn exact_pc_or_null(n: usize) -> Netlist {
    if n == 0 {
        null_pc(0)
    } else {
        build_exact_pc(n)
    }
}

/// Exact component for every slot of [`neuron_requirements`].
pub fn exact_selection(model: &TnnModel) -> Vec<Netlist> {
    neuron_requirements(model)
        .into_iter()
        .map(|slot| match slot {
            Slot::Hidden { n_pos, n_neg: 0, .. } => assemble_pcc(&null_pc(n_pos), &null_pc(0)).assembled,
            Slot::Hidden { n_pos, n_neg, .. } => {
                assemble_pcc(&exact_pc_or_null(n_pos), &exact_pc_or_null(n_neg)).assembled
            }
            Slot::Output { width, .. } => exact_pc_or_null(width),
        })
        .collect()
}

/// The complete classifier: one popcount-compare per hidden neuron fed by
/// its +1 features then its -1 features, an inverter/wire bank and popcount
/// per class, and an argmax tree with one-hot outputs.
///
/// `selection[k]` implements slot `k`: a single-output circuit over
/// `n_pos + n_neg` inputs for hidden slots, a popcount over the nonzero
/// connections for output slots.
pub fn generate_netlist(model: &TnnModel, selection: &[&Netlist]) -> Result<Netlist> {
    let slots = neuron_requirements(model);
    if selection.len() != slots.len() {
        return Err(Error::Validation(format!(
            "{} components for {} slots",
            selection.len(),
            slots.len()
        )));
    }
    let name = model.name.clone().unwrap_or_else(|| "tnn".into());
    let mut b = NetlistBuilder::new(name, model.topology.inputs);
    let equal_n = model.has_equal_zero_counts();
    let zero_counts = model.zero_counts();

    let mut hidden = Vec::with_capacity(model.topology.hidden);
    let mut scores = Vec::with_capacity(model.topology.classes);
    for (k, (slot, &circuit)) in slots.iter().zip(selection).enumerate() {
        match *slot {
            Slot::Hidden { neuron, n_pos, n_neg } => {
                if circuit.inputs != n_pos + n_neg || circuit.outputs.len() != 1 {
                    return Err(Error::Validation(format!(
                        "slot {k}: hidden neuron {neuron} needs a ({n_pos}+{n_neg})-input single-output circuit"
                    )));
                }
                let row = &model.hidden_weights[neuron];
                let pick = |v: i8| {
                    row.iter()
                        .enumerate()
                        .filter(move |&(_, &w)| w == v)
                        .map(|(i, _)| b.input(i))
                };
                let ins: Vec<Bit> = pick(1).chain(pick(-1)).collect();
                hidden.push(b.inline(circuit, &ins)[0]);
            }
            Slot::Output { class, width } => {
                if circuit.inputs != width {
                    return Err(Error::Validation(format!(
                        "slot {k}: class {class} needs a {width}-input popcount"
                    )));
                }
                let mut ins = Vec::with_capacity(width);
                for (j, &w) in model.output_weights[class].iter().enumerate() {
                    match w {
                        1 => ins.push(hidden[j]),
                        -1 => {
                            let inv = b.not(hidden[j]);
                            ins.push(inv);
                        }
                        _ => {}
                    }
                }
                let count = b.inline(circuit, &ins);
                scores.push(if equal_n {
                    count
                } else {
                    // 2·m + N orders the classes like the ±1 pre-activation
                    let doubled: Vec<Bit> = std::iter::once(Bit::ZERO).chain(count).collect();
                    b.add_const(&doubled, zero_counts[class] as u64)
                });
            }
        }
    }
    let (_, onehot) = argmax_tree(&mut b, &scores);
    Ok(b.finish(&onehot).pruned())
}

/// Tournament over class scores; the right contender must be strictly
/// greater to win, so the lowest index wins ties. Returns the winning score
/// and the one-hot selection.
fn argmax_tree(b: &mut NetlistBuilder, scores: &[Vec<Bit>]) -> (Vec<Bit>, Vec<Bit>) {
    if scores.len() == 1 {
        return (scores[0].clone(), vec![Bit::ONE]);
    }
    let mid = scores.len().div_ceil(2);
    let (ls, lsel) = argmax_tree(b, &scores[..mid]);
    let (rs, rsel) = argmax_tree(b, &scores[mid..]);
    let left_holds = b.greater_equal(&ls, &rs);
    let width = ls.len().max(rs.len());
    let bit = |v: &[Bit], i: usize| v.get(i).copied().unwrap_or(Bit::ZERO);
    let score = (0..width)
        .map(|i| b.mux(left_holds, bit(&ls, i), bit(&rs, i)))
        .collect();
    let right_wins = b.not(left_holds);
    let mut sel: Vec<Bit> = lsel.into_iter().map(|s| b.and(s, left_holds)).collect();
    sel.extend(rsel.into_iter().map(|s| b.and(s, right_wins)).collect::<Vec<_>>());
    (score, sel)
}

fn pack(data: &BinaryDataset, rows: &[usize]) -> BitMatrix {
    let mut m = BitMatrix::zeros(data.feature_count(), rows.len());
    for (lane, &r) in rows.iter().enumerate() {
        for (f, &bit) in data.bits[r].iter().enumerate() {
            if bit {
                m.set(f, lane, true);
            }
        }
    }
    m
}

/// Predicted class of every selected row, by bit-parallel simulation of a
/// one-hot classifier netlist.
pub fn predictions_netlist(netlist: &Netlist, data: &BinaryDataset, rows: &[usize]) -> Result<Vec<usize>> {
    if netlist.inputs != data.feature_count() {
        return Err(Error::Validation(format!(
            "netlist has {} inputs, dataset has {} features",
            netlist.inputs,
            data.feature_count()
        )));
    }
    let out = simulate(netlist, &pack(data, rows))?;
    Ok((0..rows.len())
        .map(|lane| (0..out.rows.len()).find(|&c| out.get(c, lane)).unwrap_or(0))
        .collect())
}

pub fn predict_netlist(netlist: &Netlist, sample: &[bool]) -> usize {
    let out = netlist.eval(sample);
    out.iter().position(|&b| b).unwrap_or(0)
}

fn split_rows(data: &BinaryDataset, split: Option<Split>) -> Result<Vec<usize>> {
    let rows = data.rows(split);
    if rows.is_empty() {
        return Err(Error::Validation(format!("dataset split {split:?} is empty")));
    }
    Ok(rows)
}

pub fn accuracy_netlist(netlist: &Netlist, data: &BinaryDataset, split: Option<Split>) -> Result<f64> {
    let rows = split_rows(data, split)?;
    let pred = predictions_netlist(netlist, data, &rows)?;
    let hits = rows.iter().zip(&pred).filter(|&(&r, &p)| data.labels[r] == p).count();
    Ok(hits as f64 / rows.len() as f64)
}

pub fn accuracy_model(model: &TnnModel, data: &BinaryDataset, split: Option<Split>) -> Result<f64> {
    let rows = split_rows(data, split)?;
    let mut hits = 0;
    for &r in &rows {
        if infer_exact(model, &data.bits[r])? == data.labels[r] {
            hits += 1;
        }
    }
    Ok(hits as f64 / rows.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tnn::tests::tiny;
    use crate::tnn::Topology;

    fn exact_netlist(m: &TnnModel) -> Netlist {
        let sel = exact_selection(m);
        let refs: Vec<&Netlist> = sel.iter().collect();
        generate_netlist(m, &refs).unwrap()
    }

    fn all_vectors(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u64 << n).map(move |v| (0..n).map(|i| (v >> i) & 1 == 1).collect())
    }

    #[test]
    fn tiny_netlist_matches_reference() {
        let m = tiny();
        let net = exact_netlist(&m);
        assert_eq!(net.outputs.len(), 2);
        assert_eq!(net.eval(&[true, true, false]), vec![true, false]);
        for v in all_vectors(3) {
            assert_eq!(predict_netlist(&net, &v), infer_exact(&m, &v).unwrap(), "{v:?}");
        }
    }

    #[test]
    fn unequal_zero_counts_and_degenerate_neurons() {
        let m = TnnModel {
            version: 1,
            name: None,
            topology: Topology {
                inputs: 4,
                hidden: 4,
                classes: 3,
            },
            // only positive, only negative, empty, mixed
            hidden_weights: vec![vec![1, 1, 0, 0], vec![0, -1, -1, 0], vec![0; 4], vec![1, -1, 1, -1]],
            output_weights: vec![vec![1, 0, -1, 1], vec![0, 0, 1, -1], vec![-1, 1, 0, 0]],
            thresholds: vec![0.5; 4],
        };
        let net = exact_netlist(&m);
        for v in all_vectors(4) {
            assert_eq!(predict_netlist(&net, &v), infer_exact(&m, &v).unwrap(), "{v:?}");
        }
    }

    #[test]
    fn zero_weight_feature_is_not_wired() {
        let mut m = tiny();
        m.hidden_weights = vec![vec![0, 1, -1], vec![0, -1, 1]];
        let net = exact_netlist(&m);
        let used = net
            .gates
            .iter()
            .zip(net.active_gates())
            .filter(|(_, a)| *a)
            .any(|(g, _)| g.operands().any(|s| s == 0));
        assert!(!used && !net.outputs.contains(&0));
    }

    #[test]
    fn wrong_component_shape_rejected() {
        let m = tiny();
        let mut sel = exact_selection(&m);
        sel[2] = build_exact_pc(3);
        let refs: Vec<&Netlist> = sel.iter().collect();
        assert!(generate_netlist(&m, &refs).is_err());
        assert!(generate_netlist(&m, &refs[..3]).is_err());
    }
}
