//! Mass-matrix condition numbers as a circle is moved towards a grid
//! vertex, with and without the ghost penalty. The last stabilized mass
//! matrix is written in Matrix Market format.
//!
//!     cargo run --release --example conditioning

use cutwave::experiments::{condition_sweep, offset_disk, Discretization, SetupOptions};
use cutwave::spectra::LanczosOptions;

fn main() -> cutwave::Result<()> {
    let h = 0.12;
    let offsets = [0.5, 1e-2, 1e-4, 1e-6];
    let rows = condition_sweep(&SetupOptions::new(1, h), &[1, 2], &[h], &offsets, LanczosOptions::default());
    println!("{:>2} {:>8} {:>12} {:>12}", "p", "offset", "stabilized", "bare");
    for r in &rows {
        println!("{:>2} {:>8.0e} {:>12.3e} {:>12.3e} {}", r.p, r.offset, r.kappa_stabilized, r.kappa_unstabilized, r.note);
    }

    let disc = Discretization::build(&offset_disk(h, 1e-6 * h), &SetupOptions::new(2, h))?;
    std::fs::create_dir_all("out")?;
    let file = std::fs::File::create("out/mass_p2.mtx")?;
    disc.system.mass.write_matrix_market(std::io::BufWriter::new(file))?;
    println!("wrote out/mass_p2.mtx ({} rows)", disc.num_dofs());
    Ok(())
}
