//! Extremal eigenvalues of symmetric pencils by restarted Lanczos with full
//! reorthogonalization, plus a dense solver for small problems.

use super::cholesky::Cholesky;
use super::sparse::SparseSymmetric;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default cap on the total number of Lanczos steps.
pub const DEFAULT_MAX_ITER: usize = 5000;
/// Krylov basis size before a restart.
const BASIS: usize = 80;

/// Converged (or best available) extremal eigenpair.
#[derive(Clone, Debug)]
pub struct EigenEstimate {
    pub value: f64,
    /// `‖Ax − λMx‖ / ‖x‖` for the returned vector.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub vector: Vec<f64>,
}

/// Settings for the Lanczos iteration.
#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0x5eed,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Largest eigenvalue of an operator `op` self-adjoint in the inner product
/// `⟨x, y⟩ = xᵀ B y` (`B = I` when `inner` is `None`).
///
/// Returns the Ritz value, the Ritz vector, the number of steps and whether
/// the Ritz residual reached `tol` relative to the value.
fn lanczos_largest(
    n: usize,
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    inner: Option<&SparseSymmetric>,
    opts: LanczosOptions,
) -> (f64, Vec<f64>, usize, bool) {
    let apply_b = |x: &[f64]| match inner {
        Some(b) => b.mul_vec(x),
        None => x.to_vec(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut total = 0;
    let mut best: (f64, Vec<f64>, bool);
    if n == 0 {
        return (f64::NAN, start, 0, false);
    }
    loop {
        let mut vs: Vec<Vec<f64>> = Vec::new();
        let mut bvs: Vec<Vec<f64>> = Vec::new();
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let bv = apply_b(&start);
        let nrm = dot(&start, &bv).sqrt();
        vs.push(start.iter().map(|x| x / nrm).collect());
        bvs.push(bv.iter().map(|x| x / nrm).collect());
        let mut restart = None;
        loop {
            let j = vs.len() - 1;
            let mut w = op(&vs[j]);
            total += 1;
            let a = dot(&w, &bvs[j]);
            alpha.push(a);
            for _ in 0..2 {
                for (v, bv) in vs.iter().zip(&bvs) {
                    let c = dot(&w, bv);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let bw = apply_b(&w);
            let b = dot(&w, &bw).max(0.0).sqrt();
            let m = alpha.len();
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imax, theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            let s = eig.eigenvectors.column(imax);
            let ritz_res = b * s[m - 1].abs();
            let converged = ritz_res <= opts.tol * theta.abs().max(f64::MIN_POSITIVE);
            let invariant = b <= 1e-14 * theta.abs().max(1e-300);
            let full = m >= BASIS.min(n) || total >= opts.max_iter;
            if converged || invariant || full {
                let mut y = vec![0.0; n];
                for (k, v) in vs.iter().enumerate() {
                    for (yi, vi) in y.iter_mut().zip(v) {
                        *yi += s[k] * vi;
                    }
                }
                let done = converged || invariant;
                best = (theta, y.clone(), done);
                if done || total >= opts.max_iter {
                    break;
                }
                restart = Some(y);
                break;
            }
            beta.push(b);
            vs.push(w.iter().map(|x| x / b).collect());
            bvs.push(bw.iter().map(|x| x / b).collect());
        }
        match restart {
            Some(y) => start = y,
            None => break,
        }
    }
    (best.0, best.1, total, best.2)
}

fn residual_norm(a: &dyn Fn(&[f64]) -> Vec<f64>, m: &dyn Fn(&[f64]) -> Vec<f64>, lambda: f64, x: &[f64]) -> f64 {
    let ax = a(x);
    let mx = m(x);
    let r: Vec<f64> = ax.iter().zip(&mx).map(|(p, q)| p - lambda * q).collect();
    norm(&r) / norm(x)
}

/// Which end of the spectrum to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Smallest,
    Largest,
}

/// Extremal eigenvalue of `A x = λ M x` (`M = I` when `m` is `None`).
///
/// `Largest` iterates on `M⁻¹A`; `Smallest` on `A⁻¹M` and needs `A` SPD.
/// The factorizations may be passed in to avoid recomputation.
pub fn extremal_eigenvalue(
    a: &SparseSymmetric,
    m: Option<&SparseSymmetric>,
    which: Extreme,
    factor: Option<&Cholesky>,
    opts: LanczosOptions,
) -> Result<EigenEstimate> {
    let n = a.dim();
    if let Some(m) = m {
        if m.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.dim(),
            });
        }
    }
    let apply_m = |x: &[f64]| match m {
        Some(m) => m.mul_vec(x),
        None => x.to_vec(),
    };
    let apply_a = |x: &[f64]| a.mul_vec(x);
    let (value, vector, iterations, ritz_converged) = match which {
        Extreme::Largest => {
            let owned;
            let fm = match (m, factor) {
                (None, _) => None,
                (Some(_), Some(f)) => Some(f),
                (Some(m), None) => {
                    owned = Cholesky::factor(m)?;
                    Some(&owned)
                }
            };
            let op = |x: &[f64]| {
                let y = a.mul_vec(x);
                match fm {
                    Some(f) => f.solve(&y),
                    None => y,
                }
            };
            lanczos_largest(n, &op, m, opts)
        }
        Extreme::Smallest => {
            let owned;
            let fa = match factor {
                Some(f) => f,
                None => {
                    owned = Cholesky::factor(a)?;
                    &owned
                }
            };
            let op = |x: &[f64]| fa.solve(&apply_m(x));
            let (mu, v, it, conv) = lanczos_largest(n, &op, m, opts);
            (1.0 / mu, v, it, conv)
        }
    };
    let residual = residual_norm(&apply_a, &apply_m, value, &vector);
    Ok(EigenEstimate {
        value,
        residual,
        iterations,
        converged: ritz_converged,
        vector,
    })
}

/// Both ends of the spectrum of `A x = λ M x`.
pub fn extremal_eigenvalues(
    a: &SparseSymmetric,
    m: Option<&SparseSymmetric>,
    opts: LanczosOptions,
) -> Result<(EigenEstimate, EigenEstimate)> {
    let lo = extremal_eigenvalue(a, m, Extreme::Smallest, None, opts)?;
    let hi = extremal_eigenvalue(a, m, Extreme::Largest, None, opts)?;
    Ok((lo, hi))
}

/// Spectral condition number `λ_max / λ_min` of an SPD matrix.
pub fn condition_number(m: &SparseSymmetric, opts: LanczosOptions) -> Result<f64> {
    let (lo, hi) = extremal_eigenvalues(m, None, opts)?;
    Ok(hi.value / lo.value)
}

/// `C_FL = h⁻¹ / √λ_max` for the pencil `(A, M)`.
pub fn cfl_number(
    a: &SparseSymmetric,
    m: &SparseSymmetric,
    m_factor: Option<&Cholesky>,
    h: f64,
    opts: LanczosOptions,
) -> Result<(f64, EigenEstimate)> {
    let est = extremal_eigenvalue(a, Some(m), Extreme::Largest, m_factor, opts)?;
    if !est.converged {
        log::warn!(
            "largest eigenvalue not converged after {} steps (residual {:.2e})",
            est.iterations,
            est.residual
        );
    }
    Ok((1.0 / (h * est.value.sqrt()), est))
}

/// All eigenvalues of `A x = λ M x` in increasing order, by dense reduction.
/// Intended for dimensions up to a few thousand.
pub fn dense_generalized_eigenvalues(
    a: &SparseSymmetric,
    m: Option<&SparseSymmetric>,
) -> Result<Vec<f64>> {
    let ad = a.to_dense();
    let reduced = match m {
        None => ad,
        Some(m) => {
            let chol = m
                .to_dense()
                .cholesky()
                .ok_or(Error::NotPositiveDefinite { index: 0, pivot: f64::NAN })?;
            let l = chol.l();
            let li = l
                .clone()
                .try_inverse()
                .ok_or(Error::NotPositiveDefinite { index: 0, pivot: 0.0 })?;
            let c = &li * ad * li.transpose();
            (&c + c.transpose()) * 0.5
        }
    };
    let mut vals: Vec<f64> = SymmetricEigen::new(reduced).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}
