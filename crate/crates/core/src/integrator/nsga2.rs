use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sort::{crowding_distance, nondominated_sort};
use super::{crossover, mutate_chromosome, FrontEntry, IndividualEvaluator, SlotLibrary};
use crate::circuit::AreaTable;
use crate::error::{Error, Result};
use crate::tnn::{BinaryDataset, Split, TnnModel};

/// Population 100 and the operator rates are conventional NSGA-II settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Nsga2Config {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene reset probability; `None` means `1 / chromosome length`.
    pub mutation_rate: Option<f64>,
    pub rng_seed: u64,
    pub accuracy_split_for_fitness: Split,
    pub area_table: AreaTable,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            population_size: 100,
            generations: 200,
            crossover_rate: 0.9,
            mutation_rate: None,
            rng_seed: 0,
            accuracy_split_for_fitness: Split::Train,
            area_table: AreaTable::default(),
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || self.population_size % 2 != 0 {
            return Err(Error::Config("population_size must be even and at least 2".into()));
        }
        if self.generations == 0 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config("crossover_rate must lie in [0, 1]".into()));
        }
        if self.mutation_rate.is_some_and(|m| !(0.0..=1.0).contains(&m)) {
            return Err(Error::Config("mutation_rate must lie in [0, 1]".into()));
        }
        self.area_table.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub generation: usize,
    pub best_accuracy: f64,
    pub min_area_proxy: f64,
    pub hypervolume: f64,
    pub front_size: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nsga2Result {
    /// Final rank-0 individuals, by increasing area.
    pub front: Vec<FrontEntry>,
    /// The all-exact individual.
    pub exact: FrontEntry,
    pub trace: Vec<GenerationTrace>,
    pub search_space: f64,
    pub evaluations: usize,
}

/// Area of objective space dominated by `points` (area minimized, accuracy
/// maximized) and bounded by `(ref_area, 0)`.
pub fn hypervolume(points: &[(f64, f64)], ref_area: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(a, acc)| a <= ref_area && acc > 0.0)
        .collect();
    // most accurate first; keep the staircase only, so dominated points
    // cannot perturb the sum
    pts.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.total_cmp(&y.0)));
    let mut stairs: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if stairs.last().is_none_or(|s| p.0 < s.0) {
            stairs.push(p);
        }
    }
    let mut hv = 0.0;
    let mut prev_acc = 0.0;
    for &(a, acc) in stairs.iter().rev() {
        hv += (acc - prev_acc) * (ref_area - a);
        prev_acc = acc;
    }
    hv
}

/// Cap on offspring draws per population slot; reached only when nearly the
/// whole search space has been evaluated.
const MAX_DRAWS_PER_CHILD: usize = 50;

struct Member {
    entry: FrontEntry,
    objectives: Vec<f64>,
}

fn tie_break(a: &FrontEntry, b: &FrontEntry) -> Ordering {
    a.synthesized_area
        .total_cmp(&b.synthesized_area)
        .then_with(|| a.chromosome.cmp(&b.chromosome))
}

/// Crowding of one front where chromosomes sharing an objective vector count
/// once: the best of each group by [`tie_break`] is its representative and
/// carries the crowding distance, the others get zero.
fn front_crowding(pool: &[Member], objectives: &[Vec<f64>], front: &[usize]) -> Vec<(usize, bool, f64)> {
    let mut reps: Vec<usize> = Vec::new();
    let mut rep_of: Vec<usize> = Vec::with_capacity(front.len());
    for &i in front {
        match reps.iter().position(|&r| objectives[r] == objectives[i]) {
            Some(k) => {
                if tie_break(&pool[i].entry, &pool[reps[k]].entry) == Ordering::Less {
                    reps[k] = i;
                }
                rep_of.push(k);
            }
            None => {
                reps.push(i);
                rep_of.push(reps.len() - 1);
            }
        }
    }
    let crowd = crowding_distance(objectives, &reps);
    front
        .iter()
        .zip(rep_of)
        .map(|(&i, k)| {
            let is_rep = reps[k] == i;
            (i, is_rep, if is_rep { crowd[k] } else { 0.0 })
        })
        .collect()
}

/// Ranks `pool` and keeps the best `keep`: whole fronts first, the last
/// front cut by representatives, then crowding distance.
fn environmental_selection(mut pool: Vec<Member>, keep: usize) -> Vec<Member> {
    let objectives: Vec<Vec<f64>> = pool.iter().map(|m| m.objectives.clone()).collect();
    let fronts = nondominated_sort(&objectives);
    let mut chosen: Vec<(usize, usize, f64)> = Vec::new();
    for (rank, front) in fronts.iter().enumerate() {
        let mut members = front_crowding(&pool, &objectives, front);
        if chosen.len() + members.len() > keep {
            members.sort_by(|&(i, ri, ci), &(j, rj, cj)| {
                rj.cmp(&ri)
                    .then(cj.total_cmp(&ci))
                    .then_with(|| tie_break(&pool[i].entry, &pool[j].entry))
            });
            members.truncate(keep - chosen.len());
        }
        chosen.extend(members.into_iter().map(|(i, _, c)| (i, rank, c)));
        if chosen.len() >= keep {
            break;
        }
    }
    let mut slots: Vec<Option<Member>> = pool.drain(..).map(Some).collect();
    chosen
        .into_iter()
        .map(|(i, rank, crowd)| {
            let mut m = slots[i].take().unwrap();
            m.entry.rank = rank;
            m.entry.crowding = crowd;
            m
        })
        .collect()
}

/// Crowded-comparison winner of two random members.
fn tournament<'p>(pop: &'p [Member], rng: &mut ChaCha8Rng) -> &'p FrontEntry {
    let a = &pop[rng.gen_range(0..pop.len())].entry;
    let b = &pop[rng.gen_range(0..pop.len())].entry;
    let order = a
        .rank
        .cmp(&b.rank)
        .then(b.crowding.total_cmp(&a.crowding))
        .then_with(|| tie_break(a, b));
    if order == Ordering::Greater {
        b
    } else {
        a
    }
}

/// NSGA-II with μ+λ survival over distinct chromosomes. The initial
/// population holds the all-exact individual plus random ones; offspring come
/// from binary tournaments, uniform crossover and random-reset mutation.
pub fn nsga2_run(
    model: &TnnModel,
    library: &SlotLibrary,
    data: &BinaryDataset,
    config: &Nsga2Config,
) -> Result<Nsga2Result> {
    config.validate()?;
    let mut eval = IndividualEvaluator::new(
        model,
        library,
        data,
        config.area_table.clone(),
        config.accuracy_split_for_fitness,
    )?;
    let bounds = library.bounds();
    let len = bounds.len();
    let rate = config.mutation_rate.unwrap_or(1.0 / len.max(1) as f64);
    let n = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let exact = eval.evaluate_individual(&vec![0; len])?;
    let ref_area = exact.area_proxy * 1.1;

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut initial = vec![vec![0; len]];
    seen.insert(initial[0].clone());
    for _ in 1..n {
        let g: Vec<usize> = bounds.iter().map(|&b| rng.gen_range(0..b)).collect();
        if seen.insert(g.clone()) {
            initial.push(g);
        }
    }
    let to_members = |eval: &mut IndividualEvaluator, genes: &[Vec<usize>]| -> Result<Vec<Member>> {
        Ok(eval
            .evaluate_many(genes)?
            .into_iter()
            .map(|entry| Member {
                objectives: vec![entry.area_proxy, -eval.fitness_accuracy(&entry)],
                entry,
            })
            .collect())
    };
    let mut pop = environmental_selection(to_members(&mut eval, &initial)?, n);

    let mut trace = Vec::with_capacity(config.generations + 1);
    let record = |pop: &[Member], generation: usize, evaluations: usize| {
        let front: Vec<(f64, f64)> = pop
            .iter()
            .filter(|m| m.entry.rank == 0)
            .map(|m| (m.objectives[0], -m.objectives[1]))
            .collect();
        GenerationTrace {
            generation,
            best_accuracy: pop.iter().map(|m| -m.objectives[1]).fold(f64::NEG_INFINITY, f64::max),
            min_area_proxy: pop.iter().map(|m| m.objectives[0]).fold(f64::INFINITY, f64::min),
            hypervolume: hypervolume(&front, ref_area),
            front_size: front.len(),
            evaluations,
        }
    };
    trace.push(record(&pop, 0, eval.builds()));

    for generation in 1..=config.generations {
        // draw until `n` never-evaluated chromosomes exist; revisits would
        // waste the generation once the population converges
        let mut pool = pop;
        let mut present: HashSet<Vec<usize>> = pool.iter().map(|m| m.entry.chromosome.clone()).collect();
        let mut offspring: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut attempts = 0;
        while offspring.len() < n && attempts < MAX_DRAWS_PER_CHILD * n {
            attempts += 2;
            let a = tournament(&pool, &mut rng).chromosome.clone();
            let b = tournament(&pool, &mut rng).chromosome.clone();
            let (c, d) = if rng.gen_bool(config.crossover_rate) {
                crossover(&a, &b, &mut rng)
            } else {
                (a, b)
            };
            for child in [c, d] {
                let child = mutate_chromosome(&child, &bounds, rate, &mut rng);
                if offspring.len() < n && !eval.is_evaluated(&child) && present.insert(child.clone()) {
                    offspring.push(child);
                }
            }
        }
        pool.extend(to_members(&mut eval, &offspring)?);
        pop = environmental_selection(pool, n);
        trace.push(record(&pop, generation, eval.builds()));
        log::debug!(
            "generation {generation}: hv {:.4}, {} evaluations",
            trace.last().unwrap().hypervolume,
            eval.builds()
        );
    }

    let mut front: Vec<FrontEntry> = pop.into_iter().filter(|m| m.entry.rank == 0).map(|m| m.entry).collect();
    front.sort_by(|a, b| {
        a.area_proxy
            .total_cmp(&b.area_proxy)
            .then_with(|| a.chromosome.cmp(&b.chromosome))
    });
    Ok(Nsga2Result {
        front,
        exact,
        trace,
        search_space: library.search_space(),
        evaluations: eval.builds(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypervolume_of_staircase() {
        // reference area 10: rectangles [2,10]x[0,0.5] and [5,10]x[0.5,0.9]
        let hv = hypervolume(&[(2.0, 0.5), (5.0, 0.9)], 10.0);
        assert!((hv - (8.0 * 0.5 + 5.0 * 0.4)).abs() < 1e-12);
        // dominated points add nothing
        let hv2 = hypervolume(&[(2.0, 0.5), (5.0, 0.9), (6.0, 0.6)], 10.0);
        assert!((hv - hv2).abs() < 1e-12);
        assert_eq!(hypervolume(&[], 10.0), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = Nsga2Config::default();
        c.population_size = 7;
        assert!(c.validate().is_err());
        c.population_size = 8;
        c.generations = 0;
        assert!(c.validate().is_err());
    }
}
