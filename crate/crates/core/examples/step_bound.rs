//! Step relaxations on a small grid against the exhaustive optimum.

use dbound::oracle::brute_force_optimum;
use dbound::relax::{build, Family, RelaxOptions};
use dbound::{grid_instance, ObjectiveSpec};
use dbound_milp::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = grid_instance(3, 3, 3, 0.2, 7)?;
    let spec = ObjectiveSpec::bvap();
    let best = brute_force_optimum(&inst, &spec)?;
    println!("optimum {:.6} over {} partitions", best.value, best.count);

    for family in [Family::StepMax, Family::StepExp, Family::Loge, Family::Bn] {
        for dominating in [false, true] {
            let opts = RelaxOptions {
                ell: 8,
                dominating,
                ..Default::default()
            };
            let r = build(&inst, &spec, family, &opts)?;
            let s = r.solve(&inst, &SolveOptions::default())?;
            let tru = s.assignment.as_ref().map(|a| spec.true_objective(&inst, a)).transpose()?;
            println!(
                "{family:>8} dom={dominating:<5} bound {:.6}  true {:.6}  error {:>8}  nodes {}",
                s.result.dual_bound,
                tru.unwrap_or(f64::NAN),
                r.error_bound.map_or("-".into(), |e| format!("{e:.4}")),
                s.result.nodes
            );
            if !matches!(family, Family::StepMax | Family::StepExp) {
                break;
            }
        }
    }
    Ok(())
}
