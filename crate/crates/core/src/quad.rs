//! Gauss–Legendre panels, geometric grading and small regression helpers.

use gauss_quad::legendre::GaussLegendre;
use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Cached Gauss–Legendre rule with `n` points.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("quadrature cache poisoned");
    map.entry(n).or_insert_with(|| {
        let gl = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Box::leak(Box::new(Rule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }))
    })
}

/// `∫_a^b f` with an `n`-point Gauss–Legendre rule.
pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let rule = gauss_legendre(n);
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| w * f(m + h * x))
        .sum::<f64>()
        * h
}

/// Composite rule over consecutive panel edges.
pub fn integrate_panels<F: FnMut(f64) -> f64>(edges: &[f64], n: usize, mut f: F) -> f64 {
    edges
        .windows(2)
        .map(|e| integrate(e[0], e[1], n, &mut f))
        .sum()
}

/// Nodes and weights of a composite rule over consecutive panel edges.
pub fn panel_nodes(edges: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(n);
    let mut xs = Vec::with_capacity(n * edges.len());
    let mut ws = Vec::with_capacity(n * edges.len());
    for e in edges.windows(2) {
        let (m, h) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            xs.push(m + h * x);
            ws.push(w * h);
        }
    }
    (xs, ws)
}

/// Edges `lo, lo·r, lo·r², …, hi` (the last panel may be shorter).
pub fn geometric_edges(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && ratio > 1.0);
    let mut edges = vec![lo];
    let mut x = lo;
    while x * ratio < hi * (1.0 - 1e-12) {
        x *= ratio;
        edges.push(x);
    }
    edges.push(hi);
    edges
}

/// Edges `0, 2^-depth·hi, …, hi/2, hi`: dyadic grading toward zero.
pub fn dyadic_edges(hi: f64, depth: usize) -> Vec<f64> {
    let mut edges = vec![0.0];
    for k in (0..depth).rev() {
        edges.push(hi * 0.5f64.powi(k as i32 + 1));
    }
    edges.push(hi);
    edges
}

/// Least-squares line `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit `y ≈ C·x^k`; returns `(k, C)`.
pub fn power_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (k, b) = linear_fit(&lx, &ly);
    (k, b.exp())
}

/// Logarithmically spaced values from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let v = integrate(0.0, 2.0, 4, |x| x.powi(7));
        assert!((v - 32.0).abs() < 1e-12);
    }

    #[test]
    fn dyadic_edges_cover_interval() {
        let e = dyadic_edges(0.5, 10);
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), 0.5);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(e[1], 0.5 * 0.5f64.powi(10));
    }

    #[test]
    fn power_fit_recovers_exponent() {
        let xs = log_space(1e-3, 1.0, 7);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.25)).collect();
        let (k, c) = power_fit(&xs, &ys);
        assert!((k + 0.25).abs() < 1e-12 && (c - 3.0).abs() < 1e-10);
    }
}
