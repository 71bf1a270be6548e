//! Discrete energy of the free membrane over three periods for a few time
//! steps. The history is written to `out/energy.csv`.
//!
//!     cargo run --release --example energy

use cutwave::dynamics::default_time_step;
use cutwave::experiments::{run_inner, InnerOptions};
use serde::Serialize;

#[derive(Serialize)]
struct Sample {
    tau: f64,
    t: f64,
    energy: f64,
}

fn main() -> cutwave::Result<()> {
    let (p, h) = (2, 0.06);
    let tau0 = default_time_step(h, p);
    let mut samples = Vec::new();
    for k in [1.0, 2.0, 4.0] {
        let mut o = InnerOptions::new(p, h);
        o.tau = Some(tau0 / k);
        o.track_energy = true;
        let run = run_inner(&o)?;
        let drift = run.trajectory.relative_energy_drift().unwrap_or(f64::NAN);
        println!("tau = {:.3e}: relative drift {drift:.3e}", tau0 / k);
        let stride = (run.trajectory.energy.len() / 200).max(1);
        samples.extend(run.trajectory.energy.iter().step_by(stride).map(|&(t, energy)| Sample { tau: tau0 / k, t, energy }));
    }
    std::fs::create_dir_all("out")?;
    cutwave::experiments::write_csv(std::path::Path::new("out/energy.csv"), &samples)?;
    Ok(())
}
