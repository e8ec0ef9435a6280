use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use madelung_core::grid::{l2_norm, read_complex_csv, Boundary};
use madelung_core::madelung::{decompose, DensityFloor, PhysicalConstants};

use crate::Failure;

pub fn run(input: &Path, hbar: f64, mass: f64, floor: f64, boundary: Boundary, out: &Path) -> Result<(), Failure> {
    let c = PhysicalConstants::new(hbar, mass)?;
    let file = File::open(input).map_err(|e| Failure::Usage(format!("{}: {e}", input.display())))?;
    let psi = read_complex_csv(BufReader::new(file), boundary)?;
    let fields = decompose(&psi, &c, DensityFloor::Relative(floor))?;
    let mut buf = Vec::new();
    fields.write_csv(&mut buf)?;
    fs::write(out, buf)?;
    println!(
        "nodes {} norm {} masked_fraction {} q_max {}",
        psi.len(),
        l2_norm(&psi),
        fields.masked_fraction(),
        fields.q_max()
    );
    Ok(())
}
