//! Boundaryless knapsack: continuous and integer optima for BVAP.

use dbound::knapsack::{KnapsackProblem, SigmoidFn};
use dbound::ProbitCurve;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 7;
    let probe = KnapsackProblem::new(SigmoidFn::probit(ProbitCurve::BVAP, 0.0, 1.0)?, n, 1.0)?;
    let da = probe.d_a()?;
    println!("d_a = {da:.5}, all-interior threshold M >= {:.3}", da * n as f64);
    println!("{:>5} {:>28} {:>28}", "M", "continuous (k_a, k_y, y)", "integer (k_a, k_b, k_y, y)");
    for m in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0] {
        let p = KnapsackProblem::new(SigmoidFn::probit(ProbitCurve::BVAP, 0.0, 1.0)?, n, m)?;
        let c = p.continuous_optimum()?;
        let i = p.integer_optimum()?;
        println!(
            "{m:>5.1} {:>8.3} ({:.2}, {:.2}, {:.3}) {:>8.3} ({}, {}, {}, {:.3})",
            c.value, c.k_a, c.k_y, c.y, i.value, i.k_a, i.k_b, i.k_y, i.y
        );
    }
    Ok(())
}
