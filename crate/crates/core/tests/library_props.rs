use forge_core::circuit::{area, AreaTable, CgpGenotype, Netlist};
use forge_core::metrics::{eval_exhaustive, eval_pcc_exhaustive, ErrorMetric};
use forge_core::pareto::dominates;
use forge_core::pcc::{
    assemble_pcc, build_pcc_library, enumerate_pcc_candidates, pareto_filter, PccBuildOptions, PccEvalOptions,
};
use forge_core::popcount::{build_exact_pc, build_pc_library, build_truncated_pc, cgp_search_traced, CgpSearchConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

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

fn budget(iterations: u64) -> CgpSearchConfig {
    CgpSearchConfig {
        max_iterations: Some(iterations),
        time_limit_secs: None,
        ..Default::default()
    }
}

/// A truncated popcount or a random mutant of the exact one.
fn some_pc(n: usize, choice: usize, seed: u64) -> Netlist {
    match choice {
        0 => build_exact_pc(n),
        1 if n > 1 => build_truncated_pc(n, 1).unwrap(),
        _ => mutant(n, 1 + seed as usize % 8, seed),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn search_is_monotone_sound_and_reproducible(
        n in 3usize..9, wcae: bool, tau_step in 0u32..6, seed in any::<u64>()
    ) {
        let metric = if wcae { ErrorMetric::Wcae } else { ErrorMetric::Mae };
        let config = CgpSearchConfig { error_metric: metric, tau: tau_step as f64 * 0.5, ..budget(1500) };
        let exact = build_exact_pc(n);
        let (entry, trace) = cgp_search_traced(&exact, &config, seed).unwrap();

        // accepted areas only fall, within the iteration budget
        prop_assert!(trace.iterations <= 1500);
        prop_assert!(trace.improvements.windows(2).all(|w| w[0].0 < w[1].0 && w[1].1 < w[0].1));
        let table = AreaTable::default();
        prop_assert!(entry.area <= area(&exact, &table).unwrap());
        prop_assert_eq!(entry.area, area(&entry.netlist, &table).unwrap());

        // the constraint holds under an independent re-measurement
        let r = eval_exhaustive(&entry.netlist, &exact).unwrap();
        prop_assert_eq!((r.mae, r.wcae), (entry.mae, entry.wcae));
        prop_assert!(metric.of(&r) <= config.tau);

        let (again, _) = cgp_search_traced(&exact, &config, seed).unwrap();
        prop_assert_eq!(again.netlist, entry.netlist);
    }

    #[test]
    fn assembled_comparator_decides_on_component_counts(
        n_pos in 1usize..7, n_neg in 0usize..7, cp in 0usize..3, cn in 0usize..3, seed in any::<u64>()
    ) {
        let pos = some_pc(n_pos, cp, seed);
        let neg = if n_neg == 0 { forge_core::popcount::null_pc(0) } else { some_pc(n_neg, cn, seed.rotate_left(17)) };
        let pcc = assemble_pcc(&pos, &neg);
        prop_assert_eq!(pcc.assembled.inputs, n_pos + n_neg);
        prop_assert_eq!(pcc.assembled.outputs.len(), 1);
        for v in 0..1u64 << (n_pos + n_neg) {
            let x = pos.eval_u64(v & ((1 << n_pos) - 1));
            let z = neg.eval_u64(v >> n_pos);
            prop_assert_eq!(pcc.assembled.eval_u64(v) == 1, x >= z, "vector {:b}", v);
        }
    }

    #[test]
    fn decision_error_is_bounded_by_component_errors(
        n_pos in 2usize..8, n_neg in 2usize..8, cp in 0usize..3, cn in 0usize..3, seed in any::<u64>()
    ) {
        let pos = some_pc(n_pos, cp, seed);
        let neg = some_pc(n_neg, cn, seed.rotate_left(29));
        let wp = eval_exhaustive(&pos, &build_exact_pc(n_pos)).unwrap().wcae;
        let wn = eval_exhaustive(&neg, &build_exact_pc(n_neg)).unwrap().wcae;
        let r = eval_pcc_exhaustive(&assemble_pcc(&pos, &neg)).unwrap();
        prop_assert!(r.wcde <= wp + wn, "wcde {} > {} + {}", r.wcde, wp, wn);
        if wp == 0 && wn == 0 {
            prop_assert_eq!(r.flip_fraction, 0.0);
        }
    }
}

#[test]
fn pc_library_front_flags_match_dominance() {
    let lib = build_pc_library(&[4, 6, 9], &budget(800), 3, 7).unwrap();
    lib.verify().unwrap();
    for n in [4, 6, 9] {
        let entries = lib.entries(n).unwrap();
        assert!(entries.iter().any(|e| e.wcae == 0), "n={n} lacks an exact entry");
        for e in entries {
            assert_eq!(e.input_count, n);
            assert!(e.constraint.admits(e.mae, e.wcae), "{}", e.id);
            let beaten = entries.iter().any(|o| dominates(&[o.area, o.mae], &[e.area, e.mae]));
            assert_eq!(e.pareto_optimal, !beaten, "{}", e.id);
        }
    }
    let again = build_pc_library(&[9, 4, 6, 4], &budget(800), 3, 7).unwrap();
    for n in [4, 6, 9] {
        let a: Vec<_> = lib.entries(n).unwrap().iter().map(|e| &e.netlist).collect();
        let b: Vec<_> = again.entries(n).unwrap().iter().map(|e| &e.netlist).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn pcc_fronts_are_nondominated_and_anchored() {
    let pcs = build_pc_library(&[3, 5, 6], &budget(800), 3, 11).unwrap();
    let table = AreaTable::default();
    let eval = PccEvalOptions::default();
    for (n_pos, n_neg) in [(3, 5), (5, 3), (6, 6), (5, 0)] {
        let all = enumerate_pcc_candidates(n_pos, n_neg, &pcs, &eval, &table).unwrap();
        let front = pareto_filter(&all, None).unwrap();
        for f in &front {
            assert!(!all
                .iter()
                .any(|c| dominates(&[c.estimated_area, c.mde], &[f.estimated_area, f.mde])));
        }
        for c in &all {
            let kept = front.iter().any(|f| f.id == c.id);
            let covered = front.iter().any(|f| {
                dominates(&[f.estimated_area, f.mde], &[c.estimated_area, c.mde])
                    || (f.estimated_area, f.mde) == (c.estimated_area, c.mde)
            });
            assert!(kept || covered, "{} dropped without a dominating entry", c.id);
        }
        assert!(front.windows(2).all(|w| w[0].mde <= w[1].mde));

        for max in [2, 3, 5] {
            let opts = PccBuildOptions {
                eval,
                max_per_size: Some(max),
                area_table: table.clone(),
            };
            let lib = build_pcc_library(&[(n_pos, n_neg)], &pcs, &opts).unwrap();
            let e = lib.entries(n_pos, n_neg).unwrap();
            assert!(e[0].exact && e[0].mde == 0.0 && e[0].error.flip_fraction == 0.0);
            assert!(e.len() <= max + 1);
            assert!(e.iter().filter(|x| x.exact).count() == 1);
        }
    }
}
