//! Separator cuts for a disconnected labeling of a 3x3 grid.

use dbound::contiguity::{components, separate_assignment};
use dbound::grid_instance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = grid_instance(3, 3, 2, 1.0, 0)?;
    // 0 1 0
    // 1 1 1
    // 0 1 0
    let labels = [0, 1, 0, 1, 1, 1, 0, 1, 0];
    let zero: Vec<usize> = (0..9).filter(|&i| labels[i] == 0).collect();
    println!("district 0 components: {:?}", components(&inst, &zero));
    for cut in separate_assignment(&inst, &labels, 2) {
        println!(
            "x[{a}] + x[{b}] <= 1 + sum x[{:?}] on district {}  (violation {})",
            cut.separator,
            cut.district,
            cut.violation(&labels),
            a = cut.a,
            b = cut.b,
        );
    }
    Ok(())
}
