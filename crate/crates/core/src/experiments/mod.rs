//! Convergence, stability and conditioning studies built on the library.

mod bessel;
mod norms;
mod output;
mod studies;

pub use bessel::{bessel_j0, bessel_j0_zero, bessel_j1, BesselMode};
pub use norms::{error_norms, fill_rates, rate, BoundaryError, ErrorNorms, ErrorRow, FeFunction, Target};
pub use output::{write_csv, Manifest};
pub use studies::*;

/// Maps `f` over `items` on up to `available_parallelism` threads, keeping
/// the order of the input.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    if threads <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut out);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_iter().map(|r| r.expect("every job ran")).collect()
}
