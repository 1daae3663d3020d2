//! The two-year partisan index: a step grid over both vote shares.

use dbound::breakpoints::MultiRatioGrid;
use dbound::oracle::brute_force_optimum;
use dbound::relax::{build, Family, RelaxOptions};
use dbound::{grid_instance, ObjectiveSpec};
use dbound_milp::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = grid_instance(2, 4, 2, 0.2, 3)?;
    let spec = ObjectiveSpec::cpvi();
    let best = brute_force_optimum(&inst, &spec)?;
    println!("ratio domains {:?}", spec.ratio_domain(&inst));
    for ell in [2, 4, 8] {
        let r = build(&inst, &spec, Family::StepMax, &RelaxOptions { ell, ..Default::default() })?;
        let grid = MultiRatioGrid::new(&spec.curve, r.breakpoints.clone())?;
        let s = r.solve(&inst, &SolveOptions::default())?;
        println!(
            "ell {ell}: bound {:.5}, optimum {:.5}, k * Delta = {:.5} ({} cells)",
            s.result.dual_bound,
            best.value,
            r.error_bound.unwrap_or(f64::NAN),
            grid.psi.len() * grid.psi[0].len()
        );
    }
    Ok(())
}
