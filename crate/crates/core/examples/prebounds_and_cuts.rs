//! District ranges and gradient cuts tighten the step bound.

use dbound::oracle::brute_force_optimum;
use dbound::prebounds::{compute_variable_ranges, gradient_cuts, CutOptions};
use dbound::relax::{build, Family, RelaxOptions};
use dbound::{grid_instance, ObjectiveSpec};
use dbound_milp::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let inst = grid_instance(3, 3, 2, 0.2, 21)?;
    let spec = ObjectiveSpec::bvap();
    let best = brute_force_optimum(&inst, &spec)?.value;
    let solve = SolveOptions::default();

    let ell = 4;
    let plain = build(&inst, &spec, Family::StepMax, &RelaxOptions { ell, ..Default::default() })?.solve(&inst, &solve)?;

    let bounds = compute_variable_ranges(&inst, &spec, &solve)?;
    for (j, (r, p)) in bounds.ratio.iter().zip(&bounds.phi).enumerate() {
        println!("district {j}: ratio in [{:.4}, {:.4}], phi in [{:.4}, {:.4}]", r.0, r.1, p.0, p.1);
    }
    let poly = gradient_cuts(&inst, &spec, Some(&bounds), best, &CutOptions::default())?;
    println!("{} gradient cuts, relaxed bounds per round {:?}", poly.cuts.len(), poly.history);

    let opts = RelaxOptions {
        ell,
        symmetry: true,
        bounds: Some(bounds),
        cuts: poly.cuts,
        ..Default::default()
    };
    let aided = build(&inst, &spec, Family::StepMax, &opts)?.solve(&inst, &solve)?;
    println!("optimum {best:.6}");
    println!("step-max bound {:.6} -> {:.6} with ranges and cuts", plain.result.dual_bound, aided.result.dual_bound);
    Ok(())
}
