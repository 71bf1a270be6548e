//! Full `Q_p` space against the space that drops to order `p - 1` next to
//! the boundary. The reduced space loses accuracy at p = 3.
//!
//!     cargo run --release --example reduced_space

use cutwave::basis::SpaceVariant;
use cutwave::experiments::{fill_rates, run_inner, InnerOptions};

fn main() -> cutwave::Result<()> {
    for variant in [SpaceVariant::Full, SpaceVariant::Reduced] {
        let mut rows = Vec::new();
        for h in [0.12, 0.06, 0.03] {
            let mut o = InnerOptions::new(3, h);
            o.setup.variant = variant;
            rows.push(run_inner(&o)?.row());
        }
        fill_rates(&mut rows);
        println!("{variant:?}");
        for r in &rows {
            println!("  h = {:<5} L2 = {:.3e} rate = {}", r.h, r.e_l2, r.rate_l2.map_or("-".into(), |x| format!("{x:.2}")));
        }
    }
    Ok(())
}
