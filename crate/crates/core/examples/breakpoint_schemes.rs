//! Max and expected error of the breakpoint schemes on the BVAP curve.

use dbound::breakpoints::{expected_error, max_error, multiplicative, step_exp, step_max, BreakpointSet};
use dbound::ProbitCurve;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curve = ProbitCurve::BVAP;
    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "ell", "max:unif", "max:smax", "max:sexp", "exp:unif", "exp:smax", "exp:sexp");
    for ell in [2, 5, 10, 20, 40] {
        let uni = BreakpointSet::uniform(0.0, 1.0, ell)?;
        let sm = step_max(&curve, 0.0, 1.0, ell)?;
        let se = step_exp(&curve, 0.0, 1.0, ell)?.set;
        println!(
            "{ell:>4} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            max_error(&curve, &uni),
            max_error(&curve, &sm),
            max_error(&curve, &se),
            expected_error(&curve, &uni),
            expected_error(&curve, &sm),
            expected_error(&curve, &se),
        );
    }

    let se = step_exp(&curve, 0.0, 1.0, 10)?;
    println!("\nstep-exp, ell = 10 (converged: {}, {} iterations)", se.converged, se.iterations);
    for b in &se.set.b {
        print!("{b:.4} ");
    }
    println!();

    let (geo, gamma) = multiplicative(1.0, 11.0, 100)?;
    println!("\ngeometric [1, 11], ell = 100: gamma = {gamma:.5}, b_1 = {:.5}", geo.b[1]);
    Ok(())
}
