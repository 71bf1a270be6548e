//! A vibrating circular membrane fixed at its rim, started from a radial
//! Bessel mode. Prints errors against the exact solution on three meshes.
//!
//!     cargo run --release --example disk_membrane

use cutwave::experiments::{fill_rates, run_inner, InnerOptions};

fn main() -> cutwave::Result<()> {
    let p = 2;
    let mut rows = Vec::new();
    for h in [0.12, 0.06, 0.03] {
        let run = run_inner(&InnerOptions::new(p, h))?;
        println!(
            "h = {h:<5} dofs = {:>6} steps = {:>5} t_f = {:.4}",
            run.disc.num_dofs(),
            run.trajectory.steps,
            run.t_final
        );
        rows.push(run.row());
    }
    fill_rates(&mut rows);
    println!("{:>6} {:>11} {:>6} {:>11} {:>6}", "h", "L2", "rate", "H1", "rate");
    for r in &rows {
        let rate = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.2}"));
        println!("{:>6} {:>11.3e} {:>6} {:>11.3e} {:>6}", r.h, r.e_l2, rate(r.rate_l2), r.e_h1, rate(r.rate_h1));
    }
    Ok(())
}
