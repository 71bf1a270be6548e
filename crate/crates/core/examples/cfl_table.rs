//! Largest stable time step constant for the box without a boundary and for
//! the disk with a weakly imposed boundary.
//!
//!     cargo run --release --example cfl_table

use cutwave::experiments::{cfl_row, SetupOptions};
use cutwave::spectra::LanczosOptions;

fn main() -> cutwave::Result<()> {
    println!("{:>2} {:>6} {:>9} {:>9}", "p", "h", "aligned", "immersed");
    for p in 1..=3 {
        for h in [0.12, 0.06] {
            let r = cfl_row(&SetupOptions::new(p, h), LanczosOptions::default())?;
            println!("{p:>2} {h:>6} {:>9.4} {:>9.4}", r.cfl_aligned, r.cfl_immersed);
        }
    }
    Ok(())
}
