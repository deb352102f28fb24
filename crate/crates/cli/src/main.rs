use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forge_core::circuit::{area, to_verilog, AreaTable};
use forge_core::integrator::{nsga2_run, Nsga2Config, SlotLibrary};
use forge_core::pcc::{build_pcc_library, PccBuildOptions, PccEvalOptions, PccLibrary};
use forge_core::pipeline::{open_inputs, required_pcc_pairs, run_pipeline, write_front, DatasetConfig, PipelineConfig};
use forge_core::popcount::{build_pc_library, CgpSearchConfig, PcLibrary};
use forge_core::tnn::toy::{synthetic_csv, train_toy_model};
use forge_core::tnn::{
    exact_selection, generate_netlist, infer_exact, ingest, predictions_netlist, validate_model, IngestOptions,
    LabelColumn, Split, ValidationMode,
};
use forge_core::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "forge",
    version,
    about = "Approximate popcount libraries and bespoke TNN netlists"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all stages from a pipeline config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build a popcount library (exact, truncated and evolved circuits).
    PcLib {
        /// Comma-separated input widths.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        tau_points: usize,
        #[arg(long, default_value_t = 100_000)]
        budget_iters: u64,
        /// Optional wall-clock cap per search; makes results timing-dependent.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the comparator-circuit library for a model's hidden neurons.
    PccLib {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pc_lib: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Designs kept per (n_pos, n_neg) pair; 0 keeps the whole front.
        #[arg(long, default_value_t = 8)]
        max_per_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search component assignments with NSGA-II.
    Integrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pc_lib: PathBuf,
        #[arg(long)]
        pcc_lib: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 100)]
        pop: usize,
        #[arg(long, default_value_t = 200)]
        gens: usize,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a model, build its exact netlist and report accuracy.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Accept output neurons with differing zero counts.
        #[arg(long)]
        lenient: bool,
        #[arg(long)]
        netlist: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a synthetic dataset and a hill-climbed toy model.
    Toy {
        #[arg(long, default_value_t = 8)]
        features: usize,
        #[arg(long, default_value_t = 6)]
        hidden: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        /// Zero weights per output neuron.
        #[arg(long, default_value_t = 1)]
        zeros: usize,
        #[arg(long, default_value_t = 600)]
        rows: usize,
        #[arg(long, default_value_t = 3000)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.7)]
        split_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Label column by name or index (default: last).
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 0.7)]
    split_fraction: f64,
    #[arg(long, default_value_t = 1)]
    split_seed: u64,
}

impl DataArgs {
    fn config(&self) -> DatasetConfig {
        DatasetConfig {
            path: self.data.clone(),
            label_column: self.label.as_ref().map(|l| match l.parse() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(l.clone()),
            }),
            split_fraction: self.split_fraction,
            split_seed: Some(self.split_seed),
        }
    }
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write(
        path,
        serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?,
    )
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes")
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let report = run_pipeline(&cfg)?;
            let s = &report.summary;
            println!(
                "exact: area {:.1}, test accuracy {:.4}",
                s.exact_synthesized_area, s.exact_accuracy_test
            );
            println!(
                "iso-accuracy: area {:.1} ({:.1}% smaller), test accuracy {:.4}",
                s.iso_accuracy.synthesized_area,
                100.0 * s.iso_accuracy.area_reduction,
                s.iso_accuracy.accuracy_test
            );
            println!(
                "within {:.0} points: area {:.1} ({:.1}% smaller), test accuracy {:.4}",
                100.0 * s.max_accuracy_drop,
                s.bounded_drop.synthesized_area,
                100.0 * s.bounded_drop.area_reduction,
                s.bounded_drop.accuracy_test
            );
            println!(
                "front of {} designs written to {}",
                report.front.len(),
                cfg.output_dir.display()
            );
        }
        Command::PcLib {
            sizes,
            tau_points,
            budget_iters,
            time_limit,
            seed,
            out,
        } => {
            let template = CgpSearchConfig {
                max_iterations: Some(budget_iters),
                time_limit_secs: time_limit,
                ..Default::default()
            };
            let lib = build_pc_library(&sizes, &template, tau_points, seed)?;
            lib.save(&out)?;
            for n in lib.sizes() {
                let entries = lib.entries(n)?;
                let front = entries.iter().filter(|e| e.pareto_optimal).count();
                println!("pc{n}: {} entries, {front} Pareto-optimal", entries.len());
            }
        }
        Command::PccLib {
            model,
            pc_lib,
            samples,
            seed,
            max_per_size,
            out,
        } => {
            let model = forge_core::tnn::TnnModel::load(&model)?;
            validate_model(&model, ValidationMode::Lenient)?;
            let pc = PcLibrary::load(&pc_lib)?;
            let opts = PccBuildOptions {
                eval: PccEvalOptions {
                    samples,
                    seed,
                    ..Default::default()
                },
                max_per_size: (max_per_size > 0).then_some(max_per_size),
                area_table: AreaTable::default(),
            };
            let lib = build_pcc_library(&required_pcc_pairs(&model), &pc, &opts)?;
            lib.save(&out)?;
            for (p, n) in lib.pairs() {
                println!("pcc({p},{n}): {} designs", lib.entries(p, n)?.len());
            }
        }
        Command::Integrate {
            model,
            pc_lib,
            pcc_lib,
            data,
            pop,
            gens,
            seed,
            out,
        } => {
            let (model, data) = open_inputs(&model, &data.config(), ValidationMode::Lenient, true, 0)?;
            let pc = PcLibrary::load(&pc_lib)?;
            let pcc = PccLibrary::load(&pcc_lib)?;
            let library = SlotLibrary::from_libraries(&model, &pc, &pcc)?;
            let config = Nsga2Config {
                population_size: pop,
                generations: gens,
                rng_seed: seed,
                ..Default::default()
            };
            let result = nsga2_run(&model, &library, &data, &config)?;
            write_front(&out, &model, &library, &result)?;
            println!(
                "exact: area {:.1}, train {:.4}, test {:.4}",
                result.exact.synthesized_area, result.exact.accuracy_train, result.exact.accuracy_test
            );
            for e in &result.front {
                println!(
                    "area {:>8.1}  train {:.4}  test {:.4}  {:?}",
                    e.synthesized_area, e.accuracy_train, e.accuracy_test, e.chromosome
                );
            }
        }
        Command::Eval {
            model,
            data,
            lenient,
            netlist,
            report,
        } => {
            let mode = if lenient {
                ValidationMode::Lenient
            } else {
                ValidationMode::Strict
            };
            let (model, data) = open_inputs(&model, &data.config(), mode, true, 0)?;
            let validation = validate_model(&model, mode)?;
            let exact = exact_selection(&model);
            let mut net = generate_netlist(&model, &exact.iter().collect::<Vec<_>>())?;
            net.name = model.name.clone().unwrap_or_else(|| "tnn".into());
            let rows = data.rows(None);
            let pred = predictions_netlist(&net, &data, &rows)?;
            let mut agree = 0;
            let (mut hit, mut total) = ([0usize; 2], [0usize; 2]);
            for (&r, &p) in rows.iter().zip(&pred) {
                agree += (infer_exact(&model, &data.bits[r])? == p) as usize;
                let k = (data.split[r] == Split::Test) as usize;
                total[k] += 1;
                hit[k] += (data.labels[r] == p) as usize;
            }
            let ratio = |h: usize, t: usize| if t == 0 { 0.0 } else { h as f64 / t as f64 };
            let value = json!({
                "model": net.name,
                "topology": model.topology,
                "validation": validation,
                "area": area(&net, &AreaTable::default())?,
                "gates": net.active_gate_count(),
                "rows": rows.len(),
                "accuracy_train": ratio(hit[0], total[0]),
                "accuracy_test": ratio(hit[1], total[1]),
                "accuracy": ratio(hit[0] + hit[1], rows.len()),
                "netlist_agrees_with_model": ratio(agree, rows.len()),
            });
            if let Some(path) = netlist {
                write(&path, to_verilog(&net))?;
            }
            match report {
                Some(path) => write_json(&path, &value)?,
                None => println!("{}", pretty(&value)),
            }
        }
        Command::Toy {
            features,
            hidden,
            classes,
            zeros,
            rows,
            iterations,
            seed,
            split_fraction,
            out,
        } => {
            let csv_path = out.join("data.csv");
            write(&csv_path, synthetic_csv(features, classes, rows, seed))?;
            let opts = IngestOptions {
                label_column: None,
                split_fraction,
                seed,
            };
            let data = ingest(&csv_path, &opts)?;
            let model = train_toy_model(&data, hidden, zeros, iterations, seed)?;
            model.save(&out.join("model.json"))?;
            println!("wrote {} and model.json", csv_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
