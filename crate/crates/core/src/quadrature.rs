//! Adaptive Gauss–Legendre quadrature for vectors of complex integrands.
//!
//! All components share one subdivision: a panel is accepted once the
//! worst component agrees between the panel rule and the sum of its two
//! halves.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Fixed-order Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be at least 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<const N: usize, F>(&self, a: f64, b: f64, f: &F) -> [Complex64; N]
    where
        F: Fn(f64) -> [Complex64; N],
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = [Complex64::new(0.0, 0.0); N];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            for (s, vk) in acc.iter_mut().zip(v) {
                *s += vk * (w * half);
            }
        }
        acc
    }

    /// Scalar real convenience wrapper.
    pub fn integrate_real<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.integrate(a, b, &|x| [Complex64::new(f(x), 0.0)])[0].re
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
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

/// Shared 10-point rule used by the adaptive driver.
pub fn gl10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

/// Shared 8-point rule for short fixed panels.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_depth: 30 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const N: usize> {
    pub value: [Complex64; N],
    /// Sum of accepted panel error estimates (max over components).
    pub error: f64,
    pub evaluations: usize,
    /// False if some panel hit `max_depth` before meeting its tolerance.
    pub converged: bool,
}

fn max_diff<const N: usize>(a: &[Complex64; N], b: &[Complex64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_norm<const N: usize>(a: &[Complex64; N]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn add<const N: usize>(a: &[Complex64; N], b: &[Complex64; N]) -> [Complex64; N] {
    let mut out = *a;
    for (o, x) in out.iter_mut().zip(b) {
        *o += x;
    }
    out
}

/// Adaptive bisection on `[a, b]`.
///
/// A panel with rule value `I` and half-panel sum `I'` is accepted when
/// `max_k |I_k − I'_k| ≤ max(abs_tol, rel_tol·|I'|_∞) · (width / (b − a))`.
pub fn integrate_adaptive<const N: usize, F>(f: F, a: f64, b: f64, opts: &AdaptiveOptions) -> QuadResult<N>
where
    F: Fn(f64) -> [Complex64; N],
{
    let rule = gl10();
    let per_panel = rule.order();
    let total = b - a;
    let mut value = [Complex64::new(0.0, 0.0); N];
    let mut error = 0.0;
    let mut evaluations = per_panel;
    let mut converged = true;
    if total == 0.0 {
        return QuadResult { value, error, evaluations: 0, converged };
    }

    let whole = rule.integrate(a, b, &f);
    // global scale for the relative tolerance
    let scale = max_norm(&whole);
    let mut stack = vec![(a, b, whole, 0u32)];
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &f);
        let right = rule.integrate(mid, hi, &f);
        evaluations += 2 * per_panel;
        let fine = add(&left, &right);
        let err = max_diff(&coarse, &fine);
        let tol = opts.abs_tol.max(opts.rel_tol * scale) * ((hi - lo) / total).abs();
        if err <= tol || depth >= opts.max_depth {
            if err > tol {
                converged = false;
            }
            value = add(&value, &fine);
            error += err;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    QuadResult { value, error, evaluations, converged }
}
