//! Gray codes and the rotation folding that picks a slice of the cone.

use dbound::graycode::{gray, slice_angles, slice_index, strengthened_support};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nu = 3;
    println!("slice  code  support  angles (deg)");
    for i in 0..1usize << nu {
        let code = gray(i, nu)?;
        let (lo, hi) = slice_angles(i, nu);
        println!(
            "{i:>5}  {}  {:<8} [{:.2}, {:.2}]",
            code.iter().map(|b| b.to_string()).collect::<String>(),
            format!("{:?}", strengthened_support(&code)?),
            lo.to_degrees(),
            hi.to_degrees()
        );
    }

    for deg in [44.0f64, 30.0, 12.5, 1.0] {
        let a = deg.to_radians();
        let info = slice_index(a.cos(), a.sin(), nu)?;
        println!("angle {deg:>5.1} -> slice {} via code {:?}", info.index, info.code);
    }
    Ok(())
}
