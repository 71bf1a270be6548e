//! Bessel functions of the first kind of orders 0 and 1, and the zeros of
//! `J₀` that set the frequencies of the disk modes.

use std::f64::consts::PI;

/// `(1/π) ∫₀^π cos(nθ - x sin θ) dθ` by the trapezoidal rule, which converges
/// geometrically for this periodic integrand once the node count exceeds `x`.
fn bessel_integral(n: u32, x: f64) -> f64 {
    let m = 32 + (2.0 * x.abs()).ceil() as usize;
    let mut s = 0.0;
    for k in 0..=m {
        let th = PI * k as f64 / m as f64;
        let w = if k == 0 || k == m { 0.5 } else { 1.0 };
        s += w * (n as f64 * th - x * th.sin()).cos();
    }
    s / m as f64
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_integral(0, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_integral(1, x)
}

/// `n`-th positive zero of `J₀`, `n ≥ 1`.
pub fn bessel_j0_zero(n: usize) -> f64 {
    assert!(n >= 1, "zeros are numbered from 1");
    // McMahon: α_n ≈ (n - 1/4)π, spacing π
    let guess = (n as f64 - 0.25) * PI;
    let (mut a, mut b) = (guess - 0.45, guess + 0.45);
    let (mut fa, fb) = (bessel_j0(a), bessel_j0(b));
    assert!(fa * fb < 0.0, "no sign change around zero {n}");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a < 4.0 * f64::EPSILON * m {
            break;
        }
        let fm = bessel_j0(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Radial mode `J₀(α_n r / R) cos(ω_n t)` of the disk of radius `R` with
/// homogeneous Dirichlet data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselMode {
    pub n: usize,
    pub radius: f64,
    pub alpha: f64,
    pub omega: f64,
    pub period: f64,
}

impl BesselMode {
    pub fn new(n: usize, radius: f64) -> Self {
        let alpha = bessel_j0_zero(n);
        let omega = alpha / radius;
        Self {
            n,
            radius,
            alpha,
            omega,
            period: 2.0 * PI / omega,
        }
    }

    /// Displacement and its spatial gradient at `(x, t)`, centered at the
    /// origin.
    pub fn eval(&self, x: [f64; 2], t: f64) -> (f64, [f64; 2]) {
        let r = x[0].hypot(x[1]);
        let k = self.alpha / self.radius;
        let c = (self.omega * t).cos();
        let u = bessel_j0(k * r) * c;
        if r == 0.0 {
            return (u, [0.0, 0.0]);
        }
        let du = -k * bessel_j1(k * r) * c;
        (u, [du * x[0] / r, du * x[1] / r])
    }
}
