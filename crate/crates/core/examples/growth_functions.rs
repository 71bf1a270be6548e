//! Growth functions of the stabilized mass-matrix condition number for the
//! default ghost-penalty weights and for unscaled weights.
//!
//!     cargo run --example growth_functions

use cutwave::forms::{raw_weights, stabilization_weights};
use cutwave::spectra::growth_diagnostics;

fn main() {
    println!("{:>2} {:>12} {:>12} {:>12} {:>12}", "p", "P(p)", "G", "sum 1/w", "G (raw w)");
    for p in 1..=5 {
        let d = growth_diagnostics(p, &stabilization_weights(p));
        let raw = growth_diagnostics(p, &raw_weights(p));
        println!(
            "{p:>2} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            d.p_function, d.g_function, d.inverse_weight_sum, raw.g_function
        );
    }
}
