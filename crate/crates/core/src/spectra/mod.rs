//! Sparse symmetric linear algebra: storage, Cholesky, extremal eigenvalues
//! and the growth functions used as reference curves.

pub mod cholesky;
pub mod eigen;
pub mod sparse;

pub use cholesky::{nested_dissection, Cholesky};
pub use eigen::{
    cfl_number, condition_number, dense_generalized_eigenvalues, extremal_eigenvalue,
    extremal_eigenvalues, EigenEstimate, Extreme, LanczosOptions,
};
pub use sparse::{LinearOperator, Pattern, SparseSymmetric};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `P(p) = Σ_{k=1}^{p} p^{4k+2} / ((k!)² (2k+1))`.
pub fn growth_p(p: usize) -> f64 {
    let pf = p as f64;
    (1..=p)
        .map(|k| pf.powi(4 * k as i32 + 2) / (factorial(k).powi(2) * (2 * k + 1) as f64))
        .sum()
}

/// `G(w) = Σ_k w_k p^{4k+2} / ((2k+1) (k!)²)`.
pub fn growth_g(p: usize, weights: &[f64]) -> f64 {
    let pf = p as f64;
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let k = i + 1;
            w * pf.powi(4 * k as i32 + 2) / ((2 * k + 1) as f64 * factorial(k).powi(2))
        })
        .sum()
}

/// Constant added to `Σ 1/w_k` in `L(w)`; it has no published value.
pub const L_OFFSET: f64 = 1.0;

/// Growth diagnostics for order `p` and weights `w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthDiagnostics {
    pub p_function: f64,
    pub g_function: f64,
    pub inverse_weight_sum: f64,
    /// `L_OFFSET + Σ 1/w_k`.
    pub l_function: f64,
}

pub fn growth_diagnostics(p: usize, weights: &[f64]) -> GrowthDiagnostics {
    let inv: f64 = weights.iter().map(|w| 1.0 / w).sum();
    GrowthDiagnostics {
        p_function: growth_p(p),
        g_function: growth_g(p, weights),
        inverse_weight_sum: inv,
        l_function: L_OFFSET + inv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_function_closed_forms() {
        assert!((growth_p(1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((growth_p(2) - 1088.0 / 15.0).abs() < 1e-12);
        let p3 = 243.0 + 59049.0 / 20.0 + 4782969.0 / 252.0;
        assert!((growth_p(3) - p3).abs() < 1e-10 * p3);
    }
}
