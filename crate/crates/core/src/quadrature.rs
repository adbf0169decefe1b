//! Gauss-Legendre quadrature on subdivided intervals.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;


/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-like initial guess, refined by Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule: each gap between consecutive `cuts` is split
/// into `panels` equal panels with `order` nodes each.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
}

impl CompositeRule {
    pub fn new(order: usize, panels: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order.max(1));
        Self { nodes, weights, panels: panels.max(1) }
    }

    /// Integrates `f` over `[cuts[0], cuts[last]]`, never placing a panel
    /// across an interior cut.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, cuts: &[f64], mut f: F) -> f64 {
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(b > a) {
                continue;
            }
            let h = (b - a) / self.panels as f64;
            for p in 0..self.panels {
                let lo = a + p as f64 * h;
                let mid = lo + 0.5 * h;
                let half = 0.5 * h;
                for (x, wt) in self.nodes.iter().zip(&self.weights) {
                    total += wt * half * f(mid + half * x);
                }
            }
        }
        total
    }
}
