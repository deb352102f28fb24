//! End-to-end driver: popcount library, PCC library, NSGA-II integration.
//!
//! Each stage writes its artifacts plus a fingerprint of everything it was
//! derived from. A rerun reuses a stage whose fingerprint still matches and
//! rebuilds it (and everything downstream) otherwise.

mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{to_verilog, AreaTable};
use crate::error::{Error, Result};
use crate::integrator::{nsga2_run, FrontEntry, GenerationTrace, Nsga2Config, Nsga2Result, SlotLibrary};
use crate::metrics::SamplingMode;
use crate::pcc::{build_pcc_library, PccBuildOptions, PccEvalOptions, PccLibrary};
use crate::popcount::{build_pc_library, CgpSearchConfig, PcLibrary};
use crate::tnn::{
    ingest, neuron_requirements, validate_model, BinaryDataset, IngestOptions, LabelColumn, Slot, TnnModel, Topology,
    ValidationMode,
};
use crate::util::{derive_seed, sha256_hex};

pub use report::{report_summary, Summary, SummaryPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub label_column: Option<LabelColumn>,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    /// Split seed; derived from the master seed when absent.
    #[serde(default)]
    pub split_seed: Option<u64>,
}

fn default_split() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcStageConfig {
    pub tau_points: usize,
    pub search: CgpSearchConfig,
}

impl Default for PcStageConfig {
    fn default() -> Self {
        PcStageConfig {
            tau_points: 10,
            search: CgpSearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PccStageConfig {
    pub samples: u64,
    pub sampling: SamplingMode,
    pub max_per_size: Option<usize>,
}

impl Default for PccStageConfig {
    fn default() -> Self {
        PccStageConfig {
            samples: 1_000_000,
            sampling: SamplingMode::InputVectors,
            max_per_size: Some(8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    pub model: PathBuf,
    #[serde(default)]
    pub validation: ValidationMode,
    /// Binarize with the model's thresholds rather than the dataset medians.
    #[serde(default = "yes")]
    pub use_model_thresholds: bool,
    #[serde(default)]
    pub pc_library: PcStageConfig,
    #[serde(default)]
    pub pcc_library: PccStageConfig,
    /// `rng_seed` inside is ignored; the stage seed is derived.
    #[serde(default)]
    pub nsga2: Nsga2Config,
    #[serde(default)]
    pub area_table: AreaTable,
    pub rng_seed: u64,
    pub output_dir: PathBuf,
}

fn yes() -> bool {
    true
}

impl PipelineConfig {
    /// Reads a config file; relative paths inside are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset.path, &mut cfg.model, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Popcount sizes a model needs: both sides of every hidden neuron that has
/// negative weights, and every nonzero output width.
pub fn required_pc_sizes(model: &TnnModel) -> Vec<usize> {
    let mut sizes = BTreeSet::new();
    for slot in neuron_requirements(model) {
        match slot {
            Slot::Hidden { n_neg: 0, .. } => {}
            Slot::Hidden { n_pos, n_neg, .. } => {
                sizes.extend([n_pos, n_neg].into_iter().filter(|&n| n > 0));
            }
            Slot::Output { width, .. } if width > 0 => {
                sizes.insert(width);
            }
            Slot::Output { .. } => {}
        }
    }
    sizes.into_iter().collect()
}

pub fn required_pcc_pairs(model: &TnnModel) -> Vec<(usize, usize)> {
    let pairs: BTreeSet<(usize, usize)> = neuron_requirements(model)
        .into_iter()
        .filter_map(|s| match s {
            Slot::Hidden { n_pos, n_neg, .. } => Some((n_pos, n_neg)),
            Slot::Output { .. } => None,
        })
        .collect();
    pairs.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactBaseline {
    pub area_proxy: f64,
    pub synthesized_area: f64,
    pub accuracy_train: f64,
    pub accuracy_test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub model: String,
    pub topology: Topology,
    pub pc_sizes: Vec<usize>,
    pub pcc_pairs: Vec<(usize, usize)>,
    pub pc_library_entries: usize,
    pub pcc_library_entries: usize,
    pub search_space: f64,
    pub evaluations: usize,
    pub exact: ExactBaseline,
    pub front: Vec<FrontEntry>,
    pub summary: Summary,
}

/// Contents of `front/front.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontFile {
    pub exact: FrontEntry,
    pub front: Vec<FrontEntry>,
    pub search_space: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Checkpoints {
    pc_library: Option<String>,
    pcc_library: Option<String>,
    integrate: Option<String>,
}

const CHECKPOINT_FILE: &str = "checkpoints.json";

fn fingerprint<T: Serialize>(parts: &T) -> String {
    sha256_hex(&serde_json::to_vec(parts).expect("fingerprint inputs serialize"))
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name.into(),
        source: Box::new(e),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Loads the model and dataset the way every entry point does: shape and
/// ternary checks, then binarization with the model's thresholds.
pub fn load_inputs(config: &PipelineConfig) -> Result<(TnnModel, BinaryDataset)> {
    open_inputs(
        &config.model,
        &config.dataset,
        config.validation,
        config.use_model_thresholds,
        split_seed(config),
    )
}

fn split_seed(config: &PipelineConfig) -> u64 {
    config
        .dataset
        .split_seed
        .unwrap_or_else(|| derive_seed(config.rng_seed, "split", 0))
}

/// Like [`load_inputs`] without a pipeline config; `default_split_seed` is
/// used when the dataset config names none.
pub fn open_inputs(
    model_path: &Path,
    dataset: &DatasetConfig,
    validation: ValidationMode,
    use_model_thresholds: bool,
    default_split_seed: u64,
) -> Result<(TnnModel, BinaryDataset)> {
    let model = TnnModel::load(model_path)?;
    validate_model(&model, validation)?;
    let opts = IngestOptions {
        label_column: dataset.label_column.clone(),
        split_fraction: dataset.split_fraction,
        seed: dataset.split_seed.unwrap_or(default_split_seed),
    };
    let mut data = ingest(&dataset.path, &opts)?;
    if data.feature_count() != model.topology.inputs {
        return Err(Error::Validation(format!(
            "dataset has {} features, model expects {}",
            data.feature_count(),
            model.topology.inputs
        )));
    }
    if let Some(&bad) = data.labels.iter().find(|&&l| l >= model.topology.classes) {
        return Err(Error::Validation(format!(
            "label {bad} is outside the model's {} classes",
            model.topology.classes
        )));
    }
    if use_model_thresholds {
        data.rebinarize(&model.thresholds)?;
    }
    Ok((model, data))
}

fn trace_csv(trace: &[GenerationTrace]) -> String {
    let mut s = String::from("generation,best_accuracy,min_area_proxy,hypervolume,front_size,evaluations\n");
    for t in trace {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.generation, t.best_accuracy, t.min_area_proxy, t.hypervolume, t.front_size, t.evaluations
        ));
    }
    s
}

/// Writes front JSON, trace CSV and one Verilog file per front entry.
pub fn write_front(dir: &Path, model: &TnnModel, library: &SlotLibrary, result: &Nsga2Result) -> Result<()> {
    let vdir = dir.join("verilog");
    fs::create_dir_all(&vdir).map_err(|e| Error::io(&vdir, e))?;
    write_json(
        &dir.join("front.json"),
        &FrontFile {
            exact: result.exact.clone(),
            front: result.front.clone(),
            search_space: result.search_space,
            evaluations: result.evaluations,
        },
    )?;
    let trace = dir.join("trace.csv");
    fs::write(&trace, trace_csv(&result.trace)).map_err(|e| Error::io(&trace, e))?;
    let mut designs = vec![("exact".to_string(), &result.exact)];
    designs.extend(
        result
            .front
            .iter()
            .enumerate()
            .map(|(i, e)| (format!("front_{i:03}"), e)),
    );
    for (name, e) in designs {
        let mut net = library.netlist(model, &e.chromosome)?;
        net.name = format!("{}_{name}", model.name.as_deref().unwrap_or("tnn"));
        let path = vdir.join(format!("{name}.v"));
        fs::write(&path, to_verilog(&net)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Runs all three stages, reusing checkpointed stages whose inputs are
/// unchanged. Model and dataset are loaded before anything is written.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    let (model, data) = load_inputs(config)?;
    let model_bytes = fs::read(&config.model).map_err(|e| Error::io(&config.model, e))?;
    let data_bytes = fs::read(&config.dataset.path).map_err(|e| Error::io(&config.dataset.path, e))?;

    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let ck_path = out.join(CHECKPOINT_FILE);
    let mut checkpoints: Checkpoints = fs::read(&ck_path)
        .ok()
        .and_then(|raw| serde_json::from_slice(&raw).ok())
        .unwrap_or_default();

    let sizes = required_pc_sizes(&model);
    let pairs = required_pcc_pairs(&model);

    // popcount library
    let mut search = config.pc_library.search.clone();
    search.area_table = config.area_table.clone();
    let pc_seed = derive_seed(config.rng_seed, "pc-lib", 0);
    let pc_fp = fingerprint(&("pc-lib", &sizes, config.pc_library.tau_points, &search, pc_seed));
    let pc_dir = out.join("pc_lib");
    let pc_lib = stage("pc-lib", {
        let reused = (checkpoints.pc_library.as_deref() == Some(pc_fp.as_str()))
            .then(|| PcLibrary::load(&pc_dir).ok())
            .flatten();
        match reused {
            Some(lib) => {
                log::info!("pc-lib: reusing checkpoint");
                Ok(lib)
            }
            None => {
                checkpoints = Checkpoints::default();
                let lib = if sizes.is_empty() {
                    Ok(PcLibrary::new())
                } else {
                    build_pc_library(&sizes, &search, config.pc_library.tau_points, pc_seed)
                }?;
                lib.save(&pc_dir)?;
                checkpoints.pc_library = Some(pc_fp.clone());
                write_json(&ck_path, &checkpoints)?;
                Ok(lib)
            }
        }
    })?;

    // PCC library
    let pcc_opts = PccBuildOptions {
        eval: PccEvalOptions {
            samples: config.pcc_library.samples,
            seed: derive_seed(config.rng_seed, "pcc-lib", 0),
            sampling: config.pcc_library.sampling,
            ..Default::default()
        },
        max_per_size: config.pcc_library.max_per_size,
        area_table: config.area_table.clone(),
    };
    let pcc_fp = fingerprint(&("pcc-lib", &pairs, &pcc_opts, &pc_fp));
    let pcc_dir = out.join("pcc_lib");
    let pcc_lib = stage("pcc-lib", {
        let reused = (checkpoints.pcc_library.as_deref() == Some(pcc_fp.as_str()))
            .then(|| PccLibrary::load(&pcc_dir).ok())
            .flatten();
        match reused {
            Some(lib) => {
                log::info!("pcc-lib: reusing checkpoint");
                Ok(lib)
            }
            None => {
                checkpoints.pcc_library = None;
                checkpoints.integrate = None;
                let lib = build_pcc_library(&pairs, &pc_lib, &pcc_opts)?;
                lib.save(&pcc_dir)?;
                checkpoints.pcc_library = Some(pcc_fp.clone());
                write_json(&ck_path, &checkpoints)?;
                Ok(lib)
            }
        }
    })?;

    // integration
    let nsga = Nsga2Config {
        rng_seed: derive_seed(config.rng_seed, "nsga2", 0),
        area_table: config.area_table.clone(),
        ..config.nsga2.clone()
    };
    let split_seed = split_seed(config);
    let int_fp = fingerprint(&(
        "integrate",
        sha256_hex(&model_bytes),
        sha256_hex(&data_bytes),
        (&config.dataset.label_column, config.dataset.split_fraction, split_seed),
        config.use_model_thresholds,
        &nsga,
        &pcc_fp,
    ));
    let front_dir = out.join("front");
    let library = stage("integrate", SlotLibrary::from_libraries(&model, &pc_lib, &pcc_lib))?;
    let result = stage("integrate", {
        let reused = (checkpoints.integrate.as_deref() == Some(int_fp.as_str()))
            .then(|| fs::read(front_dir.join("front.json")).ok())
            .flatten()
            .and_then(|raw| serde_json::from_slice::<FrontFile>(&raw).ok());
        match reused {
            Some(f) => {
                log::info!("integrate: reusing checkpoint");
                Ok((f.exact, f.front, f.search_space, f.evaluations))
            }
            None => {
                let r = nsga2_run(&model, &library, &data, &nsga)?;
                write_front(&front_dir, &model, &library, &r)?;
                checkpoints.integrate = Some(int_fp.clone());
                write_json(&ck_path, &checkpoints)?;
                Ok((r.exact, r.front, r.search_space, r.evaluations))
            }
        }
    })?;
    let (exact, front, search_space, evaluations) = result;

    let summary = report_summary(&front, &exact);
    let report = PipelineReport {
        model: model.name.clone().unwrap_or_else(|| "tnn".into()),
        topology: model.topology,
        pc_sizes: sizes,
        pcc_pairs: pairs,
        pc_library_entries: pc_lib.len(),
        pcc_library_entries: pcc_lib.len(),
        search_space,
        evaluations,
        exact: ExactBaseline {
            area_proxy: exact.area_proxy,
            synthesized_area: exact.synthesized_area,
            accuracy_train: exact.accuracy_train,
            accuracy_test: exact.accuracy_test,
        },
        front,
        summary: summary.clone(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
