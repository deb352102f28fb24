use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::build_exact_pc;
use super::library::{Constraint, PcLibraryEntry, Provenance};
use crate::circuit::{area, AreaTable, CgpGenotype, Netlist};
use crate::error::{Error, Result};
use crate::metrics::{eval_bdd, ArithmeticErrorReport, ErrorMetric, ExhaustiveEvaluator, EXHAUSTIVE_LIMIT};
use crate::util::{mix64, par_map};

/// Which error evaluator the search uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Evaluator {
    Exhaustive,
    Bdd,
    /// Exhaustive up to 20 inputs, decision diagrams above.
    #[default]
    Auto,
}

/// Parameters of one (1+λ) run.
///
/// `lambda = 4` and `gene_mutations = 5` are conventional CGP settings. The
/// default budget (10^5 iterations or 60 s) is sized for a workstation; long
/// runs set `time_limit_secs` to tens of minutes and `max_iterations` to
/// `None`. A time limit makes the result depend on machine speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgpSearchConfig {
    pub lambda: usize,
    pub gene_mutations: usize,
    pub max_iterations: Option<u64>,
    pub time_limit_secs: Option<f64>,
    pub error_metric: ErrorMetric,
    pub tau: f64,
    pub evaluator: Evaluator,
    /// Grid width; `None` picks four times the seed size (at least 100).
    pub columns: Option<usize>,
    /// `None` means unrestricted feed-forward connectivity.
    pub levels_back: Option<usize>,
    pub area_table: AreaTable,
}

impl Default for CgpSearchConfig {
    fn default() -> Self {
        CgpSearchConfig {
            lambda: 4,
            gene_mutations: 5,
            max_iterations: Some(100_000),
            time_limit_secs: Some(60.0),
            error_metric: ErrorMetric::Mae,
            tau: 0.0,
            evaluator: Evaluator::Auto,
            columns: None,
            levels_back: None,
            area_table: AreaTable::default(),
        }
    }
}

impl CgpSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda == 0 {
            return Err(Error::Config("lambda must be at least 1".into()));
        }
        if self.gene_mutations == 0 {
            return Err(Error::Config("gene_mutations must be at least 1".into()));
        }
        if self.max_iterations.is_none() && self.time_limit_secs.is_none() {
            return Err(Error::Config(
                "at least one of max_iterations and time_limit_secs must be bounded".into(),
            ));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::Config("tau must be non-negative".into()));
        }
        self.area_table.validate()
    }
}

/// Best-so-far area after each accepted improvement.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub improvements: Vec<(u64, f64)>,
    pub iterations: u64,
    pub evaluations: u64,
}

enum Judge {
    Exhaustive(ExhaustiveEvaluator),
    Bdd(Netlist),
}

impl Judge {
    fn new(exact: &Netlist, evaluator: Evaluator) -> Result<Self> {
        let exhaustive = match evaluator {
            Evaluator::Exhaustive => true,
            Evaluator::Bdd => false,
            Evaluator::Auto => exact.inputs <= EXHAUSTIVE_LIMIT,
        };
        Ok(if exhaustive {
            Judge::Exhaustive(ExhaustiveEvaluator::new(exact, EXHAUSTIVE_LIMIT)?)
        } else {
            Judge::Bdd(exact.clone())
        })
    }

    /// Error report if the candidate satisfies the constraint.
    fn within(&self, cand: &Netlist, metric: ErrorMetric, tau: f64) -> Result<Option<ArithmeticErrorReport>> {
        match self {
            Judge::Exhaustive(ev) => ev.evaluate_within(cand, metric, tau),
            Judge::Bdd(exact) => {
                let r = match eval_bdd(cand, exact) {
                    Ok(r) => r,
                    // a candidate too large to analyse is simply rejected
                    Err(Error::NodeBudget { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                Ok((metric.of(&r) <= tau).then_some(r))
            }
        }
    }

    fn full(&self, cand: &Netlist) -> Result<ArithmeticErrorReport> {
        match self {
            Judge::Exhaustive(ev) => ev.evaluate(cand),
            Judge::Bdd(exact) => eval_bdd(cand, exact),
        }
    }
}

struct Candidate {
    genotype: CgpGenotype,
    netlist: Netlist,
    area: f64,
    report: Option<ArithmeticErrorReport>,
}

/// (1+λ) CGP minimizing area subject to `error <= tau`.
///
/// Fitness is the area when the constraint holds and infinite otherwise; the
/// best offspring replaces the parent whenever it is no worse, so neutral
/// mutations drift. The returned error is re-measured from scratch.
pub fn cgp_search(seed: &Netlist, config: &CgpSearchConfig, rng_seed: u64) -> Result<PcLibraryEntry> {
    cgp_search_traced(seed, config, rng_seed).map(|(entry, _)| entry)
}

pub fn cgp_search_traced(
    seed: &Netlist,
    config: &CgpSearchConfig,
    rng_seed: u64,
) -> Result<(PcLibraryEntry, SearchTrace)> {
    config.validate()?;
    let n = seed.inputs;
    let exact = build_exact_pc(n);
    if seed.outputs.len() != exact.outputs.len() {
        return Err(Error::Validation(format!(
            "seed has {} outputs, a {n}-input popcount has {}",
            seed.outputs.len(),
            exact.outputs.len()
        )));
    }
    let judge = Judge::new(&exact, config.evaluator)?;
    let (metric, tau) = (config.error_metric, config.tau);
    let table = &config.area_table;

    let seed = seed.pruned();
    let columns = config
        .columns
        .unwrap_or_else(|| CgpGenotype::default_columns(seed.gates.len()));
    let levels_back = config.levels_back.unwrap_or(columns);
    let genotype = CgpGenotype::encode(&seed, columns, levels_back)?;
    let netlist = genotype.decode()?;
    let report = judge
        .within(&netlist, metric, tau)?
        .ok_or_else(|| Error::Validation(format!("seed circuit violates the constraint {metric:?} <= {tau}")))?;
    let mut parent = Candidate {
        area: area(&netlist, table)?,
        genotype,
        netlist,
        report: Some(report),
    };

    let mut trace = SearchTrace {
        improvements: vec![(0, parent.area)],
        ..Default::default()
    };
    let started = config
        .time_limit_secs
        .map(|s| (Instant::now(), Duration::from_secs_f64(s)));
    let parallel = n > 12;
    let mut iteration = 0u64;
    while config.max_iterations.map_or(true, |m| iteration < m) {
        if started.is_some_and(|(t0, limit)| t0.elapsed() >= limit) {
            break;
        }
        let make = |k: &usize| -> Result<Candidate> {
            let stream = mix64(rng_seed ^ mix64(iteration.wrapping_mul(config.lambda as u64) + *k as u64));
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            let genotype = parent.genotype.mutate(config.gene_mutations, &mut rng);
            let netlist = genotype.decode()?;
            let a = area(&netlist, table)?;
            // offspring larger than the parent can never be selected
            let report = if a > parent.area {
                None
            } else if netlist == parent.netlist {
                parent.report
            } else {
                judge.within(&netlist, metric, tau)?
            };
            Ok(Candidate {
                genotype,
                netlist,
                area: a,
                report,
            })
        };
        let ks: Vec<usize> = (0..config.lambda).collect();
        let offspring: Vec<Candidate> = if parallel {
            par_map(&ks, make).into_iter().collect::<Result<_>>()?
        } else {
            ks.iter().map(make).collect::<Result<_>>()?
        };
        trace.evaluations += offspring
            .iter()
            .filter(|c| c.report.is_some() || c.area <= parent.area)
            .count() as u64;
        let best = offspring
            .into_iter()
            .filter(|c| c.report.is_some())
            .fold(None::<Candidate>, |best, c| match best {
                Some(b) if b.area <= c.area => Some(b),
                _ => Some(c),
            });
        iteration += 1;
        if let Some(best) = best {
            if best.area <= parent.area {
                if best.area < parent.area {
                    trace.improvements.push((iteration, best.area));
                }
                parent = best;
            }
        }
    }
    trace.iterations = iteration;

    let result = parent.netlist.pruned();
    let verified = judge.full(&result)?;
    if metric.of(&verified) > tau {
        return Err(Error::Validation(format!(
            "re-verification failed: {metric:?} {} exceeds {tau}",
            metric.of(&verified)
        )));
    }
    let entry = PcLibraryEntry {
        id: format!("pc{n}_{}_s{rng_seed}", metric_tag(metric)),
        input_count: n,
        area: area(&result, table)?,
        mae: verified.mae,
        wcae: verified.wcae,
        constraint: Constraint { metric, tau },
        provenance: Provenance::Evolved,
        rng_seed: Some(rng_seed),
        iterations: iteration,
        pareto_optimal: false,
        netlist: result,
    };
    Ok((entry, trace))
}

fn metric_tag(metric: ErrorMetric) -> &'static str {
    match metric {
        ErrorMetric::Mae => "mae",
        ErrorMetric::Wcae => "wcae",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::eval_exhaustive;
    use crate::popcount::build_truncated_pc;

    fn quick(tau: f64, metric: ErrorMetric, iters: u64) -> CgpSearchConfig {
        CgpSearchConfig {
            tau,
            error_metric: metric,
            max_iterations: Some(iters),
            time_limit_secs: None,
            ..Default::default()
        }
    }

    #[test]
    fn zero_tau_keeps_function() {
        let seed = build_exact_pc(6);
        let e = cgp_search(&seed, &quick(0.0, ErrorMetric::Mae, 3000), 1).unwrap();
        assert_eq!((e.mae, e.wcae), (0.0, 0));
        let check = eval_exhaustive(&e.netlist, &seed).unwrap();
        assert_eq!(check.wcae, 0);
        assert!(e.area <= area(&seed, &AreaTable::default()).unwrap());
    }

    #[test]
    fn deterministic_per_seed() {
        let seed = build_exact_pc(5);
        let cfg = quick(0.5, ErrorMetric::Mae, 2000);
        let a = cgp_search(&seed, &cfg, 7).unwrap();
        let b = cgp_search(&seed, &cfg, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constraint_holds_and_area_never_grows() {
        let seed = build_exact_pc(7);
        for (metric, tau) in [(ErrorMetric::Mae, 0.7), (ErrorMetric::Wcae, 2.0)] {
            let (e, trace) = cgp_search_traced(&seed, &quick(tau, metric, 5000), 3).unwrap();
            let r = eval_exhaustive(&e.netlist, &seed).unwrap();
            assert!(metric.of(&r) <= tau);
            assert_eq!((r.mae, r.wcae), (e.mae, e.wcae));
            for w in trace.improvements.windows(2) {
                assert!(w[1].1 < w[0].1 && w[1].0 > w[0].0);
            }
            assert_eq!(trace.improvements.last().unwrap().1, e.area);
        }
    }

    #[test]
    fn seed_must_satisfy_constraint() {
        let seed = build_truncated_pc(4, 1).unwrap();
        assert!(cgp_search(&seed, &quick(0.1, ErrorMetric::Mae, 10), 0).is_err());
    }

    #[test]
    fn unbounded_budget_rejected() {
        let cfg = CgpSearchConfig {
            max_iterations: None,
            time_limit_secs: None,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn bdd_evaluator_agrees() {
        let seed = build_exact_pc(6);
        let mut cfg = quick(1.0, ErrorMetric::Mae, 500);
        cfg.evaluator = Evaluator::Bdd;
        let a = cgp_search(&seed, &cfg, 11).unwrap();
        cfg.evaluator = Evaluator::Exhaustive;
        let b = cgp_search(&seed, &cfg, 11).unwrap();
        assert_eq!(a.netlist, b.netlist);
        assert_eq!(a.mae, b.mae);
    }
}
