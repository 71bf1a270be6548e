//! One-dimensional Gauss–Legendre and Gauss–Lobatto rules on `[-1, 1]`.

/// Points and weights of a 1D quadrature rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Maps the rule from `[-1, 1]` onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule1d {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule1d {
            points: self.points.iter().map(|t| mid + half * t).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (1.0 - x * x).abs() < 1e-14 {
        // P_n'(±1) = (±1)^{n+1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Rule1d {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Rule1d { points, weights }
}

/// `p + 1` Gauss–Lobatto points: the endpoints and the roots of `P_p'`.
/// Exact for polynomials of degree `2p - 1`.
pub fn gauss_lobatto(p: usize) -> Rule1d {
    assert!(p >= 1, "a Lobatto rule needs p >= 1");
    let n = p + 1;
    let mut points = vec![0.0; n];
    points[0] = -1.0;
    points[p] = 1.0;
    let pf = p as f64;
    for i in 1..p {
        let mut x = -(std::f64::consts::PI * i as f64 / pf).cos();
        for _ in 0..100 {
            let (pv, dp) = legendre(p, x);
            let d2p = (2.0 * x * dp - pf * (pf + 1.0) * pv) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        points[i] = x;
    }
    // enforce exact symmetry
    for i in 0..n / 2 {
        let s = 0.5 * (points[n - 1 - i] - points[i]);
        points[i] = -s;
        points[n - 1 - i] = s;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    let weights = points
        .iter()
        .map(|&x| {
            let (pv, _) = legendre(p, x);
            2.0 / (pf * (pf + 1.0) * pv * pv)
        })
        .collect();
    Rule1d { points, weights }
}
