use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::search::{cgp_search, CgpSearchConfig};
use super::{build_exact_pc, build_truncated_pc, pc_width, tau_schedule};
use crate::circuit::{area, AreaTable, Netlist};
use crate::error::{Error, Result};
use crate::metrics::{eval_bdd, eval_exhaustive, ArithmeticErrorReport, ErrorMetric, EXHAUSTIVE_LIMIT};
use crate::pareto::non_dominated;
use crate::util::{derive_seed, par_map, sha256_hex};

pub const LIBRARY_FORMAT_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Exact,
    Truncated,
    Evolved,
}

/// Error bound a circuit was admitted under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub metric: ErrorMetric,
    pub tau: f64,
}

impl Constraint {
    pub fn admits(&self, mae: f64, wcae: u64) -> bool {
        match self.metric {
            ErrorMetric::Mae => mae <= self.tau,
            ErrorMetric::Wcae => wcae as f64 <= self.tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcLibraryEntry {
    pub id: String,
    pub input_count: usize,
    pub area: f64,
    pub mae: f64,
    pub wcae: u64,
    /// Exact entries carry `MAE <= 0`, truncated ones their own MAE.
    pub constraint: Constraint,
    pub provenance: Provenance,
    pub rng_seed: Option<u64>,
    pub iterations: u64,
    /// Non-dominated in (area, mae) among entries of the same size.
    pub pareto_optimal: bool,
    pub netlist: Netlist,
}

impl PcLibraryEntry {
    fn measured(
        id: String,
        netlist: Netlist,
        report: &ArithmeticErrorReport,
        constraint: Constraint,
        provenance: Provenance,
        table: &AreaTable,
    ) -> Result<Self> {
        Ok(PcLibraryEntry {
            id,
            input_count: netlist.inputs,
            area: area(&netlist, table)?,
            mae: report.mae,
            wcae: report.wcae,
            constraint,
            provenance,
            rng_seed: None,
            iterations: 0,
            pareto_optimal: false,
            netlist,
        })
    }
}

/// Contents of one `pc_<n>.json` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcSizeFile {
    pub version: u32,
    pub input_count: usize,
    pub entries: Vec<PcLibraryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcIndexRecord {
    pub input_count: usize,
    pub file: String,
    pub sha256: String,
    pub entry_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcLibraryIndex {
    pub version: u32,
    pub sizes: Vec<PcIndexRecord>,
}

/// Popcount circuits grouped by input count. Within a size the exact circuit
/// comes first, followed by truncated and evolved ones in build order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PcLibrary {
    sizes: BTreeMap<usize, Vec<PcLibraryEntry>>,
}

impl PcLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.sizes.keys().copied()
    }

    pub fn entries(&self, n: usize) -> Result<&[PcLibraryEntry]> {
        self.sizes
            .get(&n)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Lookup(format!("popcount library has no entries for n={n}")))
    }

    pub fn len(&self) -> usize {
        self.sizes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Replaces all entries of one size and recomputes its Pareto flags.
    pub fn insert_size(&mut self, n: usize, mut entries: Vec<PcLibraryEntry>) {
        annotate_pareto(&mut entries);
        self.sizes.insert(n, entries);
    }

    /// A library holding only the exact circuit of every size.
    pub fn exact_only(sizes: &[usize], table: &AreaTable) -> Result<Self> {
        let mut lib = PcLibrary::new();
        for &n in sizes {
            lib.insert_size(n, vec![exact_entry(n, table)?]);
        }
        Ok(lib)
    }

    pub fn save(&self, dir: &Path) -> Result<PcLibraryIndex> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut records = Vec::new();
        for (&n, entries) in &self.sizes {
            let file = format!("pc_{n}.json");
            let body = serde_json::to_vec_pretty(&PcSizeFile {
                version: LIBRARY_FORMAT_VERSION,
                input_count: n,
                entries: entries.clone(),
            })
            .map_err(|e| Error::json(dir.join(&file), e))?;
            let path = dir.join(&file);
            fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
            records.push(PcIndexRecord {
                input_count: n,
                file,
                sha256: sha256_hex(&body),
                entry_count: entries.len(),
            });
        }
        let index = PcLibraryIndex {
            version: LIBRARY_FORMAT_VERSION,
            sizes: records,
        };
        let path = dir.join(INDEX_FILE);
        let body = serde_json::to_vec_pretty(&index).map_err(|e| Error::json(&path, e))?;
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(index)
    }

    /// Loads a saved library, checking file checksums and re-measuring every
    /// entry's error against its constraint.
    pub fn load(dir: &Path) -> Result<Self> {
        let index_path = dir.join(INDEX_FILE);
        let raw = fs::read(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let index: PcLibraryIndex = serde_json::from_slice(&raw).map_err(|e| Error::json(&index_path, e))?;
        if index.version != LIBRARY_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported popcount library version {}",
                index.version
            )));
        }
        let mut lib = PcLibrary::new();
        for rec in &index.sizes {
            let path = dir.join(&rec.file);
            let body = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&body) != rec.sha256 {
                return Err(Error::Checksum(path));
            }
            let file: PcSizeFile = serde_json::from_slice(&body).map_err(|e| Error::json(&path, e))?;
            if file.input_count != rec.input_count || file.entries.len() != rec.entry_count {
                return Err(Error::Validation(format!(
                    "{} disagrees with the index",
                    path.display()
                )));
            }
            lib.sizes.insert(file.input_count, file.entries);
        }
        lib.verify()?;
        Ok(lib)
    }

    /// Re-measures every entry and checks it against its stored figures.
    pub fn verify(&self) -> Result<()> {
        let all: Vec<&PcLibraryEntry> = self.sizes.values().flatten().collect();
        let checks = par_map(&all, |e| verify_entry(e));
        checks.into_iter().collect()
    }
}

fn verify_entry(e: &PcLibraryEntry) -> Result<()> {
    if e.netlist.inputs != e.input_count {
        return Err(Error::Validation(format!("{}: netlist input count mismatch", e.id)));
    }
    let exact = build_exact_pc(e.input_count);
    let r = if e.input_count <= EXHAUSTIVE_LIMIT {
        eval_exhaustive(&e.netlist, &exact)?
    } else {
        eval_bdd(&e.netlist, &exact)?
    };
    if r.mae != e.mae || r.wcae != e.wcae {
        return Err(Error::Validation(format!(
            "{}: stored error ({}, {}) but measured ({}, {})",
            e.id, e.mae, e.wcae, r.mae, r.wcae
        )));
    }
    if !e.constraint.admits(r.mae, r.wcae) {
        return Err(Error::Validation(format!("{}: error exceeds its constraint", e.id)));
    }
    Ok(())
}

fn annotate_pareto(entries: &mut [PcLibraryEntry]) {
    let points: Vec<Vec<f64>> = entries.iter().map(|e| vec![e.area, e.mae]).collect();
    let keep = non_dominated(&points);
    for (i, e) in entries.iter_mut().enumerate() {
        e.pareto_optimal = keep.binary_search(&i).is_ok();
    }
}

fn exact_entry(n: usize, table: &AreaTable) -> Result<PcLibraryEntry> {
    let exact = build_exact_pc(n);
    let report = ArithmeticErrorReport::from_totals(0, 0, n, crate::metrics::EvalMethod::Exhaustive);
    PcLibraryEntry::measured(
        format!("pc{n}_exact"),
        exact,
        &report,
        Constraint {
            metric: ErrorMetric::Mae,
            tau: 0.0,
        },
        Provenance::Exact,
        table,
    )
}

fn truncated_entries(n: usize, table: &AreaTable) -> Result<Vec<PcLibraryEntry>> {
    let exact = build_exact_pc(n);
    (1..pc_width(n))
        .map(|cut| {
            let t = build_truncated_pc(n, cut)?;
            let r = if n <= EXHAUSTIVE_LIMIT {
                eval_exhaustive(&t, &exact)?
            } else {
                eval_bdd(&t, &exact)?
            };
            let constraint = Constraint {
                metric: ErrorMetric::Mae,
                tau: r.mae,
            };
            PcLibraryEntry::measured(
                format!("pc{n}_trunc{cut}"),
                t,
                &r,
                constraint,
                Provenance::Truncated,
                table,
            )
        })
        .collect()
}

/// Exact, truncated and evolved popcounts for every size.
///
/// One search runs per size, metric and threshold of [`tau_schedule`]; `template`
/// supplies everything but the metric and threshold. Search seeds are derived
/// from `rng_seed`, so the result does not depend on scheduling.
pub fn build_pc_library(
    sizes: &[usize],
    template: &CgpSearchConfig,
    tau_points: usize,
    rng_seed: u64,
) -> Result<PcLibrary> {
    if sizes.is_empty() {
        return Err(Error::Validation("no popcount sizes requested".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Validation("popcount size must be at least 1".into()));
    }
    template.validate()?;
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();

    struct Job {
        n: usize,
        metric: ErrorMetric,
        k: usize,
        tau: f64,
    }
    let mut jobs = Vec::new();
    for &n in &sizes {
        let (mae, wcae) = tau_schedule(n, tau_points);
        for (metric, taus) in [(ErrorMetric::Mae, mae), (ErrorMetric::Wcae, wcae)] {
            for (k, tau) in taus.into_iter().enumerate() {
                jobs.push(Job { n, metric, k, tau });
            }
        }
    }
    let evolved = par_map(&jobs, |job| -> Result<PcLibraryEntry> {
        let config = CgpSearchConfig {
            error_metric: job.metric,
            tau: job.tau,
            ..template.clone()
        };
        let tag = match job.metric {
            ErrorMetric::Mae => "mae",
            ErrorMetric::Wcae => "wcae",
        };
        let seed = derive_seed(rng_seed, &format!("pc-{tag}"), ((job.n as u64) << 16) | job.k as u64);
        let mut entry = cgp_search(&build_exact_pc(job.n), &config, seed)?;
        entry.id = format!("pc{}_evo_{tag}_{}", job.n, job.k);
        log::debug!(
            "{}: area {} mae {} wcae {}",
            entry.id,
            entry.area,
            entry.mae,
            entry.wcae
        );
        Ok(entry)
    });

    let mut lib = PcLibrary::new();
    let mut evolved = jobs.iter().zip(evolved).peekable();
    for &n in &sizes {
        let mut entries = vec![exact_entry(n, &template.area_table)?];
        entries.extend(truncated_entries(n, &template.area_table)?);
        while let Some((job, result)) = evolved.next_if(|(job, _)| job.n == n) {
            let _ = job;
            entries.push(result?);
        }
        log::info!("pc{n}: {} library entries", entries.len());
        lib.insert_size(n, entries);
    }
    Ok(lib)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template(iters: u64) -> CgpSearchConfig {
        CgpSearchConfig {
            max_iterations: Some(iters),
            time_limit_secs: None,
            ..Default::default()
        }
    }

    #[test]
    fn small_library_contents() {
        let lib = build_pc_library(&[4], &template(300), 2, 5).unwrap();
        let e = lib.entries(4).unwrap();
        // exact + 2 truncations + 2 MAE + 2 WCAE searches
        assert_eq!(e.len(), 7);
        assert_eq!(e[0].provenance, Provenance::Exact);
        assert_eq!((e[0].mae, e[0].wcae), (0.0, 0));
        assert_eq!(e.iter().filter(|x| x.provenance == Provenance::Truncated).count(), 2);
        assert_eq!(e.iter().filter(|x| x.provenance == Provenance::Evolved).count(), 4);
        assert!(e.iter().all(|x| x.constraint.admits(x.mae, x.wcae)));
        assert!(lib.entries(5).is_err());
    }

    #[test]
    fn pareto_entries_trade_area_for_error() {
        let lib = build_pc_library(&[6], &template(500), 3, 9).unwrap();
        let mut front: Vec<_> = lib.entries(6).unwrap().iter().filter(|e| e.pareto_optimal).collect();
        front.sort_by(|a, b| a.area.total_cmp(&b.area));
        for w in front.windows(2) {
            assert!(w[1].mae <= w[0].mae);
        }
    }

    #[test]
    fn save_load_round_trip() {
        let lib = build_pc_library(&[3, 5], &template(200), 2, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let index = lib.save(dir.path()).unwrap();
        assert_eq!(index.sizes.len(), 2);
        let back = PcLibrary::load(dir.path()).unwrap();
        assert_eq!(back, lib);
    }

    #[test]
    fn tampered_file_is_detected() {
        let lib = PcLibrary::exact_only(&[4], &AreaTable::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        lib.save(dir.path()).unwrap();
        let path = dir.path().join("pc_4.json");
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"mae\": 0.0", "\"mae\": 0.25");
        fs::write(&path, text).unwrap();
        assert!(matches!(PcLibrary::load(dir.path()), Err(Error::Checksum(_))));
    }

    #[test]
    fn same_seed_same_library() {
        let a = build_pc_library(&[5], &template(300), 2, 77).unwrap();
        let b = build_pc_library(&[5], &template(300), 2, 77).unwrap();
        assert_eq!(a, b);
    }
}
