//! One-dimensional rules that integrate the trigonometric and polynomial
//! integrands of this crate exactly.

use std::f64::consts::PI;

/// A 1D rule: nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss-Legendre rule with `n` nodes on [-1, 1], exact for polynomials of
/// degree `2n - 1`. Nodes are found by Newton iteration on the three-term
/// recurrence.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss-Legendre rule mapped to [lo, hi].
pub fn gauss_legendre_on(n: usize, lo: f64, hi: f64) -> Rule {
    let base = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    Rule {
        nodes: base.nodes.iter().map(|x| mid + half * x).collect(),
        weights: base.weights.iter().map(|w| w * half).collect(),
    }
}

/// Uniform rule on one period [0, period); exact for trigonometric
/// polynomials of degree below `n`.
pub fn periodic_trapezoid(n: usize, period: f64) -> Rule {
    assert!(n > 0);
    let h = period / n as f64;
    Rule { nodes: (0..n).map(|j| j as f64 * h).collect(), weights: vec![h; n] }
}

/// Closed trapezoid on [0, len] with `intervals` intervals and half-weighted
/// endpoints. For integrands that are even and 2*len-periodic this equals the
/// periodic rule on the doubled interval, so it is exact for cosine degree
/// (in units of pi/len) below `2 * intervals`.
pub fn closed_trapezoid(intervals: usize, len: f64) -> Rule {
    assert!(intervals > 0);
    let h = len / intervals as f64;
    let nodes = (0..=intervals).map(|j| j as f64 * h).collect();
    let weights = (0..=intervals).map(|j| if j == 0 || j == intervals { 0.5 * h } else { h }).collect();
    Rule { nodes, weights }
}
