//! Browser bindings: evolve one popcount, inspect a comparator's distance
//! histogram, and plot a size's area/error trade-off. Every call returns a
//! JSON string.

use forge_core::circuit::{area, to_verilog, AreaTable};
use forge_core::metrics::{eval_exhaustive, eval_pcc_exhaustive, eval_pcc_mc, ErrorMetric};
use forge_core::pcc::assemble_pcc;
use forge_core::popcount::{
    build_exact_pc, build_pc_library, build_truncated_pc, cgp_search_traced, null_pc, pc_width, CgpSearchConfig,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest popcount the demo will evolve; keeps a search interactive.
const MAX_DEMO_INPUTS: usize = 16;

fn metric(name: &str) -> Result<ErrorMetric, String> {
    match name.to_ascii_lowercase().as_str() {
        "mae" => Ok(ErrorMetric::Mae),
        "wcae" => Ok(ErrorMetric::Wcae),
        other => Err(format!("unknown metric `{other}`; use mae or wcae")),
    }
}

fn demo_size(n: usize) -> Result<(), String> {
    if (1..=MAX_DEMO_INPUTS).contains(&n) {
        Ok(())
    } else {
        Err(format!("input count must lie in 1..={MAX_DEMO_INPUTS}"))
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Evolved {
    inputs: usize,
    exact_area: f64,
    truncated_area: f64,
    truncated_mae: f64,
    area: f64,
    mae: f64,
    wcae: u64,
    iterations: u64,
    /// `(iteration, area)` at every improvement.
    improvements: Vec<(u64, f64)>,
    verilog: String,
}

pub fn evolve_pc_json(n: usize, metric_name: &str, tau: f64, iterations: u64, seed: u64) -> Result<String, String> {
    demo_size(n)?;
    let table = AreaTable::default();
    let exact = build_exact_pc(n);
    let config = CgpSearchConfig {
        error_metric: metric(metric_name)?,
        tau,
        max_iterations: Some(iterations),
        // wall-clock time is unavailable in the browser sandbox
        time_limit_secs: None,
        ..Default::default()
    };
    let (entry, trace) = cgp_search_traced(&exact, &config, seed).map_err(|e| e.to_string())?;
    let trunc = build_truncated_pc(n, 1).map_err(|e| e.to_string())?;
    let trunc_report = eval_exhaustive(&trunc, &exact).map_err(|e| e.to_string())?;
    to_json(&Evolved {
        inputs: n,
        exact_area: area(&exact, &table).map_err(|e| e.to_string())?,
        truncated_area: area(&trunc, &table).map_err(|e| e.to_string())?,
        truncated_mae: trunc_report.mae,
        area: entry.area,
        mae: entry.mae,
        wcae: entry.wcae,
        iterations: trace.iterations,
        improvements: trace.improvements,
        verilog: to_verilog(&entry.netlist),
    })
}

#[derive(Serialize)]
struct Histogram {
    n_pos: usize,
    n_neg: usize,
    area: f64,
    mde: f64,
    wcde: u64,
    flip_fraction: f64,
    sample_count: u64,
    exhaustive: bool,
    /// Sorted `(D, count)` pairs.
    histogram: Vec<(i64, u64)>,
}

/// Distance histogram of a comparator built from two truncated popcounts
/// (`cut = 0` keeps a side exact).
pub fn pcc_histogram_json(
    n_pos: usize,
    n_neg: usize,
    cut_pos: usize,
    cut_neg: usize,
    samples: u64,
    seed: u64,
) -> Result<String, String> {
    if n_pos + n_neg == 0 || n_pos > 64 || n_neg > 64 {
        return Err("need 1..=64 inputs per side and at least one in total".into());
    }
    let side = |n: usize, cut: usize| -> Result<_, String> {
        if n == 0 {
            Ok(null_pc(0))
        } else if cut > pc_width(n) {
            Err(format!(
                "cut of {cut} exceeds the {}-bit count of {n} inputs",
                pc_width(n)
            ))
        } else {
            build_truncated_pc(n, cut).map_err(|e| e.to_string())
        }
    };
    let pcc = assemble_pcc(&side(n_pos, cut_pos)?, &side(n_neg, cut_neg)?);
    let exhaustive = n_pos + n_neg <= 20;
    let report = if exhaustive {
        eval_pcc_exhaustive(&pcc)
    } else {
        eval_pcc_mc(&pcc, samples.max(1), seed)
    }
    .map_err(|e| e.to_string())?;
    to_json(&Histogram {
        n_pos,
        n_neg,
        area: area(&pcc.assembled, &AreaTable::default()).map_err(|e| e.to_string())?,
        mde: report.mde,
        wcde: report.wcde,
        flip_fraction: report.flip_fraction,
        sample_count: report.sample_count,
        exhaustive,
        histogram: report.histogram.into_iter().collect(),
    })
}

#[derive(Serialize)]
struct Point {
    id: String,
    area: f64,
    mae: f64,
    wcae: u64,
    pareto_optimal: bool,
}

/// Every library design of one size, for an area/error scatter plot.
pub fn tradeoff_json(n: usize, tau_points: usize, iterations: u64, seed: u64) -> Result<String, String> {
    demo_size(n)?;
    let template = CgpSearchConfig {
        max_iterations: Some(iterations),
        time_limit_secs: None,
        ..Default::default()
    };
    let lib = build_pc_library(&[n], &template, tau_points, seed).map_err(|e| e.to_string())?;
    let points: Vec<Point> = lib
        .entries(n)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|e| Point {
            id: e.id.clone(),
            area: e.area,
            mae: e.mae,
            wcae: e.wcae,
            pareto_optimal: e.pareto_optimal,
        })
        .collect();
    to_json(&points)
}

#[wasm_bindgen]
pub fn evolve_pc(n: usize, metric: &str, tau: f64, iterations: u32, seed: u32) -> Result<String, JsValue> {
    evolve_pc_json(n, metric, tau, iterations as u64, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn pcc_histogram(
    n_pos: usize,
    n_neg: usize,
    cut_pos: usize,
    cut_neg: usize,
    samples: u32,
    seed: u32,
) -> Result<String, JsValue> {
    pcc_histogram_json(n_pos, n_neg, cut_pos, cut_neg, samples as u64, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn tradeoff(n: usize, tau_points: usize, iterations: u32, seed: u32) -> Result<String, JsValue> {
    tradeoff_json(n, tau_points, iterations as u64, seed as u64).map_err(|e| JsValue::from_str(&e))
}
