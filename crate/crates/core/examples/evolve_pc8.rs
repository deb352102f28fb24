//! Evolves an 8-input popcount under a mean-error bound and prints it.
//!
//!     cargo run --release -p forge-core --example evolve_pc8 -- 0.5

use forge_core::circuit::{area, to_verilog, AreaTable};
use forge_core::popcount::{build_exact_pc, cgp_search_traced, CgpSearchConfig};

fn main() -> forge_core::Result<()> {
    let tau: f64 = std::env::args()
        .nth(1)
        .map_or(0.5, |s| s.parse().expect("tau must be a number"));
    let exact = build_exact_pc(8);
    let config = CgpSearchConfig {
        tau,
        max_iterations: Some(20_000),
        time_limit_secs: None,
        ..Default::default()
    };
    let (entry, trace) = cgp_search_traced(&exact, &config, 1)?;
    eprintln!(
        "exact area {}, evolved area {} (mae {}, wcae {}) after {} iterations",
        area(&exact, &AreaTable::default())?,
        entry.area,
        entry.mae,
        entry.wcae,
        trace.iterations
    );
    print!("{}", to_verilog(&entry.netlist));
    Ok(())
}
