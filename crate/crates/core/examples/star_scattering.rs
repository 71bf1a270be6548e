//! A pulse entering through the bottom of the box and scattering off a
//! five-lobed star with a sound-hard boundary. Writes VTK snapshots of the
//! field to `out/star/`.
//!
//!     cargo run --release --example star_scattering

use cutwave::dynamics::{write_snapshot, SnapshotFormat};
use cutwave::experiments::{solve_outer, OuterOptions};
use std::path::Path;

fn main() -> cutwave::Result<()> {
    let mut opts = OuterOptions::new(2, 0.075);
    opts.snapshots = 8;
    let (disc, traj, tau) = solve_outer(&opts)?;
    println!("{} dofs, {} steps of {tau:.2e}", disc.num_dofs(), traj.steps);

    let dir = Path::new("out/star");
    std::fs::create_dir_all(dir)?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        let peak = s.xi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("t = {:.2}  max |u| = {peak:.3e}", s.t);
        write_snapshot(&disc.space, &s.xi, s.t, &dir.join(format!("star_{k:02}.vtk")), SnapshotFormat::Vtk)?;
    }
    Ok(())
}
