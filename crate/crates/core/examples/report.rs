//! End-to-end run with the report table, as the binary prints it.

use dbound::cli::{run, RunConfig};
use dbound::relax::Family;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for relax in [Family::StepMax, Family::Loge, Family::VaPwl] {
        let cfg = RunConfig {
            grid: Some("3x3".into()),
            k: 3,
            seed: 11,
            relax,
            ell: 8,
            ..Default::default()
        };
        let r = run(&cfg)?;
        print!("{}", r.to_table());
        println!("assignment {:?}\n", r.assignment.unwrap_or_default());
    }
    Ok(())
}
