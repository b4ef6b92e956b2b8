//! Gauss–Legendre rules and composite panel rules.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// A one-dimensional quadrature rule `∫ f ≈ Σ wᵢ f(xᵢ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `n`-point Gauss–Legendre rule on `[-1, 1]`.
    pub fn gauss_legendre(n: usize) -> Rule {
        assert!(n > 0, "empty rule");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
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

    /// Gauss–Legendre rule mapped affinely onto `[a, b]`.
    pub fn on_interval(n: usize, a: f64, b: f64) -> Rule {
        Rule::gauss_legendre(n).mapped(a, b)
    }

    /// Affine image of a `[-1, 1]` rule onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| c + h * x).collect(),
            weights: self.weights.iter().map(|w| w * h).collect(),
        }
    }

    /// Composite rule: `n` Gauss points on every panel between consecutive breaks.
    pub fn composite(breaks: &[f64], n: usize) -> Rule {
        let base = Rule::gauss_legendre(n);
        let mut out = Rule { nodes: Vec::new(), weights: Vec::new() };
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                out.append(&base.mapped(w[0], w[1]));
            }
        }
        out
    }

    pub fn append(&mut self, other: &Rule) {
        self.nodes.extend_from_slice(&other.nodes);
        self.weights.extend_from_slice(&other.weights);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
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

/// Legendre values `P_0..P_{n-1}` at `x`.
pub fn legendre_values(n: usize, x: f64, out: &mut [f64]) {
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = x;
    }
    for k in 2..n {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Breaks `a = b₀ < … < b_m = b` refined geometrically towards `a`:
/// `levels` panels of ratio `ratio` below `a + (b-a)/ratio`, then one panel to `b`.
pub fn graded_breaks(a: f64, b: f64, levels: usize, ratio: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(levels + 2);
    v.push(a);
    for k in (1..=levels).rev() {
        v.push(a + (b - a) * libm::pow(ratio, -(k as f64)));
    }
    v.push(b);
    v
}

/// Geometric breaks from `a > 0` to `b` with ratio at most `ratio`.
pub fn geometric_breaks(a: f64, b: f64, ratio: f64) -> Vec<f64> {
    let n = libm::ceil(libm::log(b / a) / libm::log(ratio)).max(1.0) as usize;
    let q = libm::pow(b / a, 1.0 / n as f64);
    let mut v: Vec<f64> = (0..=n).map(|k| a * libm::pow(q, k as f64)).collect();
    v[n] = b;
    v
}

/// Pairwise (cascade) summation, deterministic and order-stable.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 12, 40] {
            let r = Rule::gauss_legendre(n);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = r.integrate(|x| libm::pow(x, k as f64));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k} got={got}");
            }
        }
    }

    #[test]
    fn composite_integrates_exponential() {
        let r = Rule::composite(&geometric_breaks(1e-3, 10.0, 2.0), 10);
        let got = r.integrate(libm::exp);
        let exact = libm::exp(10.0) - libm::exp(1e-3);
        assert!((got / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
