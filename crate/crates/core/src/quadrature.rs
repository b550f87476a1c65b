//! Gauss–Legendre rules and composite (panelled) integration.

use std::ops::{Add, Mul};

use rayon::prelude::*;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Nodes and weights of the composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|k| {
                let lo = a + k as f64 * h;
                let hi = if k + 1 == panels { b } else { lo + h };
                self.mapped(lo, hi).collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn integrate<T, F>(&self, f: F, a: f64, b: f64) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: Fn(f64) -> T,
    {
        self.mapped(a, b).fold(T::default(), |acc, (x, w)| acc + f(x) * w)
    }

    pub fn integrate_panels<T, F>(&self, f: F, a: f64, b: f64, panels: usize) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: Fn(f64) -> T,
    {
        self.composite(a, b, panels)
            .into_iter()
            .fold(T::default(), |acc, (x, w)| acc + f(x) * w)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Evaluates `f` at every node in parallel and sums the weighted values in node
/// order, so the result does not depend on the thread count.
pub fn integrate_nodes_parallel<T, F>(nodes: &[(f64, f64)], f: F) -> T
where
    T: Copy + Default + Send + Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(f64) -> T + Sync,
{
    let values: Vec<T> = nodes.par_iter().map(|&(x, w)| f(x) * w).collect();
    values.into_iter().fold(T::default(), |acc, v| acc + v)
}
