use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{enumerate_pcc_candidates, pareto_filter, synthesize_and_annotate, PccEvalOptions, PccLibraryEntry};
use crate::circuit::AreaTable;
use crate::error::{Error, Result};
use crate::popcount::{PcLibrary, LIBRARY_FORMAT_VERSION};
use crate::util::sha256_hex;

const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PccBuildOptions {
    pub eval: PccEvalOptions,
    /// Front size cap per `(n_pos, n_neg)`; `None` keeps whole fronts.
    pub max_per_size: Option<usize>,
    pub area_table: AreaTable,
}

impl Default for PccBuildOptions {
    fn default() -> Self {
        PccBuildOptions {
            eval: PccEvalOptions::default(),
            max_per_size: Some(8),
            area_table: AreaTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PccIndexRecord {
    pub n_pos: usize,
    pub n_neg: usize,
    pub file: String,
    pub sha256: String,
    pub entry_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PccLibraryIndex {
    pub version: u32,
    pub pairs: Vec<PccIndexRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PccPairFile {
    version: u32,
    n_pos: usize,
    n_neg: usize,
    entries: Vec<PccLibraryEntry>,
}

/// Pareto-filtered popcount-compare circuits keyed by `(n_pos, n_neg)`;
/// each list starts with its most accurate entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PccLibrary {
    pairs: BTreeMap<(usize, usize), Vec<PccLibraryEntry>>,
}

impl PccLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.keys().copied()
    }

    pub fn entries(&self, n_pos: usize, n_neg: usize) -> Result<&[PccLibraryEntry]> {
        self.pairs
            .get(&(n_pos, n_neg))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Lookup(format!("PCC library has no entries for ({n_pos}, {n_neg})")))
    }

    pub fn insert(&mut self, n_pos: usize, n_neg: usize, entries: Vec<PccLibraryEntry>) {
        self.pairs.insert((n_pos, n_neg), entries);
    }

    pub fn len(&self) -> usize {
        self.pairs.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn save(&self, dir: &Path) -> Result<PccLibraryIndex> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut records = Vec::new();
        for (&(n_pos, n_neg), entries) in &self.pairs {
            let file = format!("pcc_{n_pos}_{n_neg}.json");
            let path = dir.join(&file);
            let body = serde_json::to_vec_pretty(&PccPairFile {
                version: LIBRARY_FORMAT_VERSION,
                n_pos,
                n_neg,
                entries: entries.clone(),
            })
            .map_err(|e| Error::json(&path, e))?;
            fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
            records.push(PccIndexRecord {
                n_pos,
                n_neg,
                file,
                sha256: sha256_hex(&body),
                entry_count: entries.len(),
            });
        }
        let index = PccLibraryIndex {
            version: LIBRARY_FORMAT_VERSION,
            pairs: records,
        };
        let path = dir.join(INDEX_FILE);
        let body = serde_json::to_vec_pretty(&index).map_err(|e| Error::json(&path, e))?;
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(index)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let index_path = dir.join(INDEX_FILE);
        let raw = fs::read(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let index: PccLibraryIndex = serde_json::from_slice(&raw).map_err(|e| Error::json(&index_path, e))?;
        if index.version != LIBRARY_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported PCC library version {}",
                index.version
            )));
        }
        let mut lib = PccLibrary::new();
        for rec in &index.pairs {
            let path = dir.join(&rec.file);
            let body = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&body) != rec.sha256 {
                return Err(Error::Checksum(path));
            }
            let file: PccPairFile = serde_json::from_slice(&body).map_err(|e| Error::json(&path, e))?;
            if (file.n_pos, file.n_neg) != (rec.n_pos, rec.n_neg) || file.entries.len() != rec.entry_count {
                return Err(Error::Validation(format!(
                    "{} disagrees with the index",
                    path.display()
                )));
            }
            for e in &file.entries {
                if (e.n_pos(), e.n_neg()) != (rec.n_pos, rec.n_neg) || e.pcc.assembled.outputs.len() != 1 {
                    return Err(Error::Validation(format!(
                        "{}: malformed entry {}",
                        path.display(),
                        e.id
                    )));
                }
            }
            lib.insert(file.n_pos, file.n_neg, file.entries);
        }
        Ok(lib)
    }
}

/// Enumerates, filters and annotates candidates for every requested pair.
/// Entry 0 of every pair is the smallest exact design, kept even when an
/// approximation with zero mean distance error dominates it; with
/// `max_per_size` that can make one entry more than the limit.
pub fn build_pcc_library(
    pairs: &[(usize, usize)],
    pc_library: &PcLibrary,
    opts: &PccBuildOptions,
) -> Result<PccLibrary> {
    let mut pairs = pairs.to_vec();
    pairs.sort_unstable();
    pairs.dedup();
    let mut lib = PccLibrary::new();
    for (n_pos, n_neg) in pairs {
        let candidates = enumerate_pcc_candidates(n_pos, n_neg, pc_library, &opts.eval, &opts.area_table)?;
        let exact = candidates
            .iter()
            .filter(|c| c.exact)
            .min_by(|a, b| {
                a.estimated_area
                    .total_cmp(&b.estimated_area)
                    .then_with(|| a.id.cmp(&b.id))
            })
            .ok_or_else(|| Error::Lookup(format!("no exact design for pcc({n_pos}, {n_neg})")))?
            .clone();
        let mut front = pareto_filter(&candidates, opts.max_per_size)?;
        front.retain(|e| e.id != exact.id);
        front.insert(0, exact);
        synthesize_and_annotate(&mut front, &opts.area_table)?;
        log::info!(
            "pcc({n_pos}, {n_neg}): {} candidates, {} kept",
            candidates.len(),
            front.len()
        );
        lib.insert(n_pos, n_neg, front);
    }
    Ok(lib)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popcount::{build_pc_library, CgpSearchConfig};

    #[test]
    fn build_save_load() {
        let cfg = CgpSearchConfig {
            max_iterations: Some(300),
            time_limit_secs: None,
            ..Default::default()
        };
        let pcs = build_pc_library(&[3, 4], &cfg, 2, 3).unwrap();
        let lib = build_pcc_library(&[(3, 4), (4, 3), (3, 0)], &pcs, &PccBuildOptions::default()).unwrap();
        for (p, n) in lib.pairs() {
            let e = lib.entries(p, n).unwrap();
            assert!(e[0].exact);
            assert_eq!(e[0].mde, 0.0);
            assert_eq!(e[0].error.flip_fraction, 0.0);
            assert!(e.len() <= 9);
        }
        let dir = tempfile::tempdir().unwrap();
        lib.save(dir.path()).unwrap();
        assert_eq!(PccLibrary::load(dir.path()).unwrap(), lib);
        assert!(lib.entries(9, 9).is_err());
    }
}
