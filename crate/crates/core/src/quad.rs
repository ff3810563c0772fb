//! Gauss–Legendre quadrature with node caching and a degree-doubling
//! error estimate. Integrands here are analytic after the sin²
//! endpoint substitutions, so convergence under doubling is geometric
//! and |I_2n − I_n| is a safe (pessimistic) error estimate.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

fn node_cache() -> &'static Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nodes and weights on [-1, 1], by Newton iteration on the Legendre
/// recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if let Some(hit) = node_cache().lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    node_cache()
        .lock()
        .unwrap()
        .insert(n, (nodes.clone(), weights.clone()));
    (nodes, weights)
}

fn sum_on(nodes: &[f64], weights: &[f64], a: f64, b: f64, f: &mut dyn FnMut(f64) -> Complex64) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        s += f(mid + half * x) * *w;
    }
    s * half
}

/// Result of an adaptive integration: value plus the doubling estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
}

/// Integrate an analytic integrand over [a, b], doubling the degree
/// from `n0` until |I_2n − I_n| meets the absolute-or-relative target
/// or the degree cap is hit. The returned error is the last doubling
/// difference (never zero so the caller can propagate it).
pub fn integrate_doubling(
    mut f: impl FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    n0: usize,
    abs_tol: f64,
    rel_tol: f64,
    n_max: usize,
) -> QuadResult {
    let mut n = n0.max(4);
    let (nodes, weights) = gauss_legendre(n);
    let mut prev = sum_on(&nodes, &weights, a, b, &mut f);
    loop {
        n *= 2;
        let (nodes, weights) = gauss_legendre(n);
        let cur = sum_on(&nodes, &weights, a, b, &mut f);
        let err = (cur - prev).norm();
        if err <= abs_tol.max(rel_tol * cur.norm()) || n >= n_max {
            return QuadResult {
                value: cur,
                error: err.max(1e-300),
            };
        }
        prev = cur;
    }
}

/// Bisection-adaptive Gauss–Legendre: each panel is accepted when its
/// 16- vs 32-point values agree, otherwise split. Handles integrands
/// with boundary layers (periods at extreme z) that a single
/// degree-doubling rule cannot.
pub fn integrate_adaptive(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    fn panel(
        f: &mut dyn FnMut(f64) -> Complex64,
        a: f64,
        b: f64,
        tol: f64,
        floor: f64,
        depth: usize,
    ) -> (Complex64, f64) {
        let (n16, w16) = gauss_legendre(16);
        let (n32, w32) = gauss_legendre(32);
        let coarse = sum_on(&n16, &w16, a, b, f);
        let fine = sum_on(&n32, &w32, a, b, f);
        let err = (fine - coarse).norm();
        if err <= tol || depth >= 40 {
            return (fine, err);
        }
        let child = (tol * 0.7).max(floor);
        let mid = 0.5 * (a + b);
        let (l, le) = panel(f, a, mid, child, floor, depth + 1);
        let (r, re) = panel(f, mid, b, child, floor, depth + 1);
        (l + r, le + re)
    }
    // first pass to size the relative tolerance
    let (n32, w32) = gauss_legendre(32);
    let rough = sum_on(&n32, &w32, a, b, f).norm();
    let tol = abs_tol.max(rel_tol * rough);
    let (value, error) = panel(f, a, b, tol, tol * 1e-3, 0);
    QuadResult {
        value,
        error: error.max(1e-300),
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_doubling_real(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    n0: usize,
    abs_tol: f64,
    rel_tol: f64,
    n_max: usize,
) -> (f64, f64) {
    let r = integrate_doubling(
        |x| Complex64::new(f(x), 0.0),
        a,
        b,
        n0,
        abs_tol,
        rel_tol,
        n_max,
    );
    (r.value.re, r.error)
}
