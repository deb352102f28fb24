//! Choosing one library component per neuron: NSGA-II over integer
//! chromosomes, trading area against classification accuracy.

mod nsga2;
mod sort;

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{area, AreaTable, Netlist};
use crate::error::{Error, Result};
use crate::pcc::PccLibrary;
use crate::popcount::{null_pc, PcLibrary};
use crate::tnn::{generate_netlist, neuron_requirements, predictions_netlist, BinaryDataset, Slot, Split, TnnModel};
use crate::util::par_map;

pub use nsga2::{hypervolume, nsga2_run, GenerationTrace, Nsga2Config, Nsga2Result};
pub use sort::{crowding_distance, nondominated_sort, ranks};

/// A component that can fill a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOption {
    pub id: String,
    /// Area used in the proxy objective.
    pub area: f64,
    /// Mean distance error (hidden) or mean absolute error (output).
    pub error: f64,
    pub netlist: Netlist,
}

/// Candidate components of every slot. Option 0 of each slot is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotLibrary {
    pub slots: Vec<Slot>,
    pub options: Vec<Vec<SlotOption>>,
}

impl SlotLibrary {
    /// Hidden slots draw from the PCC library (full assembled area), output
    /// slots from the Pareto-optimal popcounts of the matching width. The
    /// exact component goes first.
    pub fn from_libraries(model: &TnnModel, pc: &PcLibrary, pcc: &PccLibrary) -> Result<Self> {
        let slots = neuron_requirements(model);
        let mut options = Vec::with_capacity(slots.len());
        for slot in &slots {
            let opts: Vec<SlotOption> = match *slot {
                Slot::Hidden { n_pos, n_neg, .. } => {
                    let entries = pcc.entries(n_pos, n_neg)?;
                    if !entries.first().is_some_and(|e| e.exact) {
                        return Err(Error::Lookup(format!(
                            "pcc({n_pos}, {n_neg}) does not start with an exact design"
                        )));
                    }
                    entries
                        .iter()
                        .map(|e| SlotOption {
                            id: e.id.clone(),
                            area: e.synthesized_area,
                            error: e.mde,
                            netlist: e.pcc.assembled.clone(),
                        })
                        .collect()
                }
                Slot::Output { width: 0, .. } => vec![SlotOption {
                    id: "pc0_null".into(),
                    area: 0.0,
                    error: 0.0,
                    netlist: null_pc(0),
                }],
                Slot::Output { width, .. } => {
                    let entries = pc.entries(width)?;
                    // smallest functionally exact circuit, whatever its origin
                    let exact = entries
                        .iter()
                        .filter(|e| e.wcae == 0)
                        .min_by(|a, b| a.area.total_cmp(&b.area).then(a.id.cmp(&b.id)))
                        .ok_or_else(|| Error::Lookup(format!("no exact popcount of width {width}")))?;
                    let mut rest: Vec<_> = entries.iter().filter(|e| e.pareto_optimal && e.wcae > 0).collect();
                    rest.sort_by(|a, b| a.mae.total_cmp(&b.mae).then(b.area.total_cmp(&a.area)));
                    std::iter::once(exact)
                        .chain(rest)
                        .map(|e| SlotOption {
                            id: e.id.clone(),
                            area: e.area,
                            error: e.mae,
                            netlist: e.netlist.clone(),
                        })
                        .collect()
                }
            };
            if opts.is_empty() {
                return Err(Error::Lookup(format!("no components for slot {slot:?}")));
            }
            options.push(opts);
        }
        Ok(SlotLibrary { slots, options })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn bounds(&self) -> Vec<usize> {
        self.options.iter().map(Vec::len).collect()
    }

    /// Number of distinct chromosomes.
    pub fn search_space(&self) -> f64 {
        self.options.iter().map(|o| o.len() as f64).product()
    }

    pub fn validate(&self, genes: &[usize]) -> Result<()> {
        if genes.len() != self.len() {
            return Err(Error::Validation(format!(
                "chromosome has {} genes for {} slots",
                genes.len(),
                self.len()
            )));
        }
        if let Some(k) = (0..genes.len()).find(|&k| genes[k] >= self.options[k].len()) {
            return Err(Error::Validation(format!(
                "gene {k} = {} exceeds the {} options of its slot",
                genes[k],
                self.options[k].len()
            )));
        }
        Ok(())
    }

    pub fn area_proxy(&self, genes: &[usize]) -> f64 {
        genes.iter().zip(&self.options).map(|(&g, o)| o[g].area).sum()
    }

    pub fn netlist(&self, model: &TnnModel, genes: &[usize]) -> Result<Netlist> {
        self.validate(genes)?;
        let sel: Vec<&Netlist> = genes.iter().zip(&self.options).map(|(&g, o)| &o[g].netlist).collect();
        generate_netlist(model, &sel)
    }
}

/// Uniform crossover: each gene position is exchanged with probability 1/2.
pub fn crossover<R: Rng + ?Sized>(a: &[usize], b: &[usize], rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    assert_eq!(a.len(), b.len(), "parents differ in length");
    let mut c = a.to_vec();
    let mut d = b.to_vec();
    for k in 0..a.len() {
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut c[k], &mut d[k]);
        }
    }
    (c, d)
}

/// Random-reset mutation: each gene is redrawn within its bounds with
/// probability `rate`.
pub fn mutate_chromosome<R: Rng + ?Sized>(genes: &[usize], bounds: &[usize], rate: f64, rng: &mut R) -> Vec<usize> {
    genes
        .iter()
        .zip(bounds)
        .map(|(&g, &n)| if rng.gen_bool(rate) { rng.gen_range(0..n) } else { g })
        .collect()
}

/// Objective values and reporting data of one chromosome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub chromosome: Vec<usize>,
    pub components: Vec<String>,
    pub area_proxy: f64,
    pub synthesized_area: f64,
    pub accuracy_train: f64,
    pub accuracy_test: f64,
    pub rank: usize,
    /// Infinite for boundary points, stored as `null`.
    #[serde(with = "infinite_as_null")]
    pub crowding: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Builds and scores chromosomes, remembering every result.
pub struct IndividualEvaluator<'a> {
    model: &'a TnnModel,
    library: &'a SlotLibrary,
    data: &'a BinaryDataset,
    table: AreaTable,
    fitness_split: Split,
    rows: Vec<usize>,
    memo: HashMap<Vec<usize>, FrontEntry>,
    builds: usize,
}

impl<'a> IndividualEvaluator<'a> {
    pub fn new(
        model: &'a TnnModel,
        library: &'a SlotLibrary,
        data: &'a BinaryDataset,
        table: AreaTable,
        fitness_split: Split,
    ) -> Result<Self> {
        if data.feature_count() != model.topology.inputs {
            return Err(Error::Validation(format!(
                "dataset has {} features, model expects {}",
                data.feature_count(),
                model.topology.inputs
            )));
        }
        for s in [Split::Train, Split::Test] {
            if data.rows(Some(s)).is_empty() {
                return Err(Error::Validation(format!("dataset has no {s:?} rows")));
            }
        }
        Ok(IndividualEvaluator {
            model,
            library,
            data,
            table,
            fitness_split,
            rows: data.rows(None),
            memo: HashMap::new(),
            builds: 0,
        })
    }

    /// Netlists built so far (memo hits excluded).
    pub fn builds(&self) -> usize {
        self.builds
    }

    pub fn is_evaluated(&self, genes: &[usize]) -> bool {
        self.memo.contains_key(genes)
    }

    pub fn fitness_split(&self) -> Split {
        self.fitness_split
    }

    /// Accuracy on the split that drives selection.
    pub fn fitness_accuracy(&self, e: &FrontEntry) -> f64 {
        match self.fitness_split {
            Split::Train => e.accuracy_train,
            Split::Test => e.accuracy_test,
        }
    }

    fn build(&self, genes: &[usize]) -> Result<FrontEntry> {
        let netlist = self.library.netlist(self.model, genes)?;
        let pred = predictions_netlist(&netlist, self.data, &self.rows)?;
        let (mut hit, mut total) = ([0usize; 2], [0usize; 2]);
        for (&r, &p) in self.rows.iter().zip(&pred) {
            let k = (self.data.split[r] == Split::Test) as usize;
            total[k] += 1;
            hit[k] += (self.data.labels[r] == p) as usize;
        }
        Ok(FrontEntry {
            chromosome: genes.to_vec(),
            components: genes
                .iter()
                .zip(&self.library.options)
                .map(|(&g, o)| o[g].id.clone())
                .collect(),
            area_proxy: self.library.area_proxy(genes),
            synthesized_area: area(&netlist, &self.table)?,
            accuracy_train: hit[0] as f64 / total[0] as f64,
            accuracy_test: hit[1] as f64 / total[1] as f64,
            rank: 0,
            crowding: 0.0,
        })
    }

    pub fn evaluate_individual(&mut self, genes: &[usize]) -> Result<FrontEntry> {
        Ok(self.evaluate_many(&[genes.to_vec()])?.remove(0))
    }

    /// Evaluates in parallel; results follow input order.
    pub fn evaluate_many(&mut self, population: &[Vec<usize>]) -> Result<Vec<FrontEntry>> {
        let mut missing: Vec<Vec<usize>> = population
            .iter()
            .filter(|g| !self.memo.contains_key(*g))
            .cloned()
            .collect();
        missing.sort();
        missing.dedup();
        let built = par_map(&missing, |g| self.build(g));
        for (g, e) in missing.into_iter().zip(built) {
            self.memo.insert(g, e?);
            self.builds += 1;
        }
        Ok(population.iter().map(|g| self.memo[g].clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn operators_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bounds = [1, 3, 5, 2];
        for _ in 0..10_000 {
            let a: Vec<usize> = bounds.iter().map(|&b| rng.gen_range(0..b)).collect();
            let b: Vec<usize> = bounds.iter().map(|&b| rng.gen_range(0..b)).collect();
            let (c, d) = crossover(&a, &b, &mut rng);
            for x in [c, d] {
                let m = mutate_chromosome(&x, &bounds, 0.5, &mut rng);
                assert!(m.iter().zip(&bounds).all(|(&g, &n)| g < n));
                assert_eq!(m[0], 0);
            }
        }
        let a = vec![2, 0, 1];
        assert_eq!(crossover(&a, &a, &mut rng), (a.clone(), a));
    }

    #[test]
    fn crowding_round_trips_through_json() {
        let e = FrontEntry {
            chromosome: vec![0],
            components: vec!["x".into()],
            area_proxy: 1.0,
            synthesized_area: 2.0,
            accuracy_train: 0.5,
            accuracy_test: 0.5,
            rank: 0,
            crowding: f64::INFINITY,
        };
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains("\"crowding\":null"));
        assert_eq!(serde_json::from_str::<FrontEntry>(&text).unwrap(), e);
    }
}
