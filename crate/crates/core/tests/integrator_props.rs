use std::collections::BTreeSet;

use forge_core::circuit::{area, AreaTable};
use forge_core::integrator::{
    crossover, hypervolume, mutate_chromosome, nondominated_sort, nsga2_run, Nsga2Config, SlotLibrary,
};
use forge_core::pareto::{dominates, non_dominated};
use forge_core::pcc::{build_pcc_library, PccBuildOptions};
use forge_core::pipeline::{required_pc_sizes, required_pcc_pairs};
use forge_core::popcount::{build_pc_library, CgpSearchConfig};
use forge_core::tnn::toy::{synthetic_csv, train_toy_model};
use forge_core::tnn::{accuracy_netlist, ingest_reader, BinaryDataset, IngestOptions, Split, TnnModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    // a coarse grid so ties and duplicates are common
    prop::collection::vec(prop::collection::vec((0u8..6).prop_map(f64::from), 2), 1..40)
}

fn brute_front(p: &[Vec<f64>], alive: &[usize]) -> Vec<usize> {
    alive
        .iter()
        .copied()
        .filter(|&i| !alive.iter().any(|&j| dominates(&p[j], &p[i])))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sorting_peels_brute_force_fronts(p in points()) {
        let mut alive: Vec<usize> = (0..p.len()).collect();
        let fronts = nondominated_sort(&p);
        prop_assert_eq!(non_dominated(&p), brute_front(&p, &alive));
        for front in fronts {
            let mut want = brute_front(&p, &alive);
            let mut got = front.clone();
            want.sort_unstable();
            got.sort_unstable();
            prop_assert_eq!(&got, &want);
            alive.retain(|i| !front.contains(i));
        }
        prop_assert!(alive.is_empty());
    }

    #[test]
    fn variation_respects_gene_bounds(
        bounds in prop::collection::vec(1usize..9, 1..12), seed in any::<u64>(), rate in 0.0f64..1.0
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<usize> = bounds.iter().map(|&b| rng.gen_range(0..b)).collect();
        let b: Vec<usize> = bounds.iter().map(|&b| rng.gen_range(0..b)).collect();
        let (c, d) = crossover(&a, &b, &mut rng);
        for k in 0..bounds.len() {
            // uniform crossover swaps whole genes
            prop_assert!((c[k] == a[k] && d[k] == b[k]) || (c[k] == b[k] && d[k] == a[k]));
        }
        let m = mutate_chromosome(&c, &bounds, rate, &mut rng);
        prop_assert!(m.iter().zip(&bounds).all(|(&g, &b)| g < b));
    }

    #[test]
    fn hypervolume_grows_with_points(
        p in prop::collection::vec((1.0f64..100.0, 0.01f64..1.0), 1..20), extra in (1.0f64..100.0, 0.01f64..1.0)
    ) {
        let base = hypervolume(&p, 110.0);
        let mut more = p.clone();
        more.push(extra);
        prop_assert!(hypervolume(&more, 110.0) >= base);
        prop_assert!(base <= 110.0);
    }
}

struct Instance {
    model: TnnModel,
    data: BinaryDataset,
    lib: SlotLibrary,
}

fn instance(seed: u64) -> Instance {
    let csv = synthetic_csv(6, 3, 240, seed);
    let data = ingest_reader(
        csv.as_bytes(),
        &IngestOptions {
            seed,
            ..Default::default()
        },
    )
    .unwrap();
    let model = train_toy_model(&data, 4, 1, 800, seed).unwrap();
    let template = CgpSearchConfig {
        max_iterations: Some(1000),
        time_limit_secs: None,
        ..Default::default()
    };
    let pcs = build_pc_library(&required_pc_sizes(&model), &template, 3, seed).unwrap();
    let opts = PccBuildOptions {
        max_per_size: Some(4),
        ..Default::default()
    };
    let pccs = build_pcc_library(&required_pcc_pairs(&model), &pcs, &opts).unwrap();
    let lib = SlotLibrary::from_libraries(&model, &pcs, &pccs).unwrap();
    Instance { model, data, lib }
}

#[test]
fn nsga_front_is_valid_and_progress_is_monotone() {
    let table = AreaTable::default();
    for seed in [3, 8] {
        let Instance { model, data, lib } = instance(seed);
        let config = Nsga2Config {
            population_size: 24,
            generations: 15,
            rng_seed: seed,
            ..Default::default()
        };
        let r = nsga2_run(&model, &lib, &data, &config).unwrap();

        // the all-exact individual is the reference
        assert_eq!(r.exact.chromosome, vec![0; lib.len()]);
        assert!(r.trace.iter().all(|t| t.best_accuracy >= r.exact.accuracy_train));
        assert!(
            r.trace.windows(2).all(|w| w[1].hypervolume >= w[0].hypervolume),
            "hypervolume fell"
        );
        assert!(r.trace.windows(2).all(|w| w[1].evaluations >= w[0].evaluations));

        let objs: Vec<Vec<f64>> = r.front.iter().map(|e| vec![e.area_proxy, -e.accuracy_train]).collect();
        assert_eq!(non_dominated(&objs).len(), objs.len(), "front holds a dominated design");
        let distinct: BTreeSet<&Vec<usize>> = r.front.iter().map(|e| &e.chromosome).collect();
        assert_eq!(distinct.len(), r.front.len());

        // recorded objectives match a rebuild from scratch
        for e in r.front.iter().take(6) {
            lib.validate(&e.chromosome).unwrap();
            assert_eq!(e.area_proxy, lib.area_proxy(&e.chromosome));
            let net = lib.netlist(&model, &e.chromosome).unwrap();
            assert_eq!(e.synthesized_area, area(&net, &table).unwrap());
            assert_eq!(
                e.accuracy_train,
                accuracy_netlist(&net, &data, Some(Split::Train)).unwrap()
            );
            assert_eq!(
                e.accuracy_test,
                accuracy_netlist(&net, &data, Some(Split::Test)).unwrap()
            );
        }

        let again = nsga2_run(&model, &lib, &data, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&again.front).unwrap(),
            serde_json::to_string(&r.front).unwrap()
        );
    }
}
