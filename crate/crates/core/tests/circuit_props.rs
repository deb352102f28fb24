use forge_core::circuit::{
    area, exhaustive_inputs, simulate, AreaTable, BitMatrix, CgpGenotype, Gate, GateFn, Netlist,
};
use forge_core::popcount::build_exact_pc;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A random feed-forward netlist over `inputs` inputs.
fn random_netlist() -> impl Strategy<Value = Netlist> {
    (1usize..7, 0usize..25, 1usize..5, any::<u64>()).prop_map(|(inputs, gates, outputs, seed)| {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gs = Vec::with_capacity(gates);
        for i in 0..gates {
            let avail = (inputs + i) as u32;
            let f = GateFn::ALL[rng.gen_range(0..GateFn::ALL.len())];
            gs.push(Gate::new(f, rng.gen_range(0..avail), rng.gen_range(0..avail)));
        }
        let total = (inputs + gates) as u32;
        let outs = (0..outputs).map(|_| rng.gen_range(0..total)).collect();
        Netlist::new("rand", inputs, outs, gs).unwrap()
    })
}

fn mutant(n: usize, mutations: usize, seed: u64) -> Netlist {
    let exact = build_exact_pc(n);
    let cols = exact.gates.len().max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CgpGenotype::encode(&exact, cols, cols)
        .unwrap()
        .mutate(mutations, &mut rng)
        .decode()
        .unwrap()
}

fn outputs_of(net: &Netlist) -> Vec<u64> {
    let sim = simulate(net, &exhaustive_inputs(net.inputs)).unwrap();
    (0..sim.lanes).map(|l| sim.lane_value(l)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_then_decode_preserves_function(net in random_netlist(), extra in 0usize..10) {
        let cols = net.gates.len().max(1) + extra;
        let g = CgpGenotype::encode(&net, cols, cols).unwrap();
        g.validate().unwrap();
        let back = g.decode().unwrap();
        prop_assert_eq!(back.inputs, net.inputs);
        prop_assert_eq!(outputs_of(&back), outputs_of(&net));
    }

    #[test]
    fn bit_parallel_simulation_matches_scalar_eval(net in random_netlist(), lanes in 1usize..150, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors: Vec<Vec<bool>> = (0..lanes).map(|_| (0..net.inputs).map(|_| rng.gen()).collect()).collect();
        let sim = simulate(&net, &BitMatrix::from_vectors(net.inputs, &vectors)).unwrap();
        for (lane, v) in vectors.iter().enumerate() {
            let want = net.eval(v);
            let got: Vec<bool> = (0..want.len()).map(|r| sim.get(r, lane)).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn pruning_keeps_function_and_area(net in random_netlist()) {
        let table = AreaTable::default();
        let p = net.pruned();
        prop_assert_eq!(outputs_of(&p), outputs_of(&net));
        prop_assert_eq!(area(&p, &table).unwrap(), area(&net, &table).unwrap());
    }

    #[test]
    fn area_is_monotone_in_gate_costs(net in random_netlist(), bump in 0usize..10, by in 0.0f64..5.0) {
        let base = AreaTable::default();
        let mut more = base.clone();
        *more.costs.get_mut(&GateFn::ALL[bump]).unwrap() += by;
        prop_assert!(area(&net, &more).unwrap() >= area(&net, &base).unwrap());
    }

    #[test]
    fn mutation_stays_legal(n in 2usize..12, mutations in 1usize..30, seed in any::<u64>()) {
        let exact = build_exact_pc(n);
        let cols = exact.gates.len() + 5;
        let g = CgpGenotype::encode(&exact, cols, cols).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = g.mutate(mutations, &mut rng);
        m.validate().unwrap();
        prop_assert_eq!(m.genes.len(), g.genes.len());
        let changed = m.genes.iter().zip(&g.genes).filter(|(a, b)| a != b).count();
        prop_assert!(changed <= mutations);
        let net = m.decode().unwrap();
        net.validate().unwrap();
        prop_assert_eq!(net.outputs.len(), exact.outputs.len());
    }

    #[test]
    fn mutants_remain_simulable(n in 2usize..10, seed in any::<u64>()) {
        let net = mutant(n, 8, seed);
        prop_assert_eq!(outputs_of(&net).len(), 1 << n);
    }
}

#[test]
fn gate_costs_of_exact_popcounts() {
    let table = AreaTable::default();
    assert_eq!(area(&build_exact_pc(8), &table).unwrap(), 63.0);
    for n in 1..=16 {
        let net = build_exact_pc(n);
        let out = outputs_of(&net);
        for (x, &y) in out.iter().enumerate() {
            assert_eq!(y, (x as u64).count_ones() as u64, "n={n} x={x}");
        }
    }
}
