//! Export a relaxation as an LP file and read it back.

use dbound::cli::{export, RunConfig};
use dbound::relax::Family;
use dbound_milp::{parse_lp, solve, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig {
        grid: Some("2x3".into()),
        seed: 5,
        relax: Family::StepMax,
        ell: 5,
        dominating: true,
        ..Default::default()
    };
    let art = export(&cfg)?;
    for line in art.lp.lines().take(12) {
        println!("{line}");
    }
    println!("... {} lines", art.lp.lines().count());
    let back = parse_lp(&art.lp)?;
    let r = solve(&back, &SolveOptions::default())?;
    println!("re-imported model: {} vars, {} rows, bound without contiguity {:.6}", back.vars.len(), back.constraints.len(), r.dual_bound);
    println!("breakpoints: {}", art.breakpoints.replace('\n', " "));
    Ok(())
}
