//! Gauss–Legendre rules and panel helpers.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// A Gauss–Legendre rule mapped onto a union of panels.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn on_panels(edges: &[f64], order: usize) -> Rule {
        let (x, w) = gauss_legendre(order);
        let mut rule = Rule::default();
        for p in edges.windows(2) {
            let (a, b) = (p[0], p[1]);
            let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in x.iter().zip(&w) {
                rule.nodes.push(c + r * xi);
                rule.weights.push(r * wi);
            }
        }
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Panel edges on [0, b] refined geometrically towards 0 (ratio 1/2, `levels` panels).
pub fn graded_edges(b: f64, levels: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..levels).map(|k| b * 0.5f64.powi(k as i32)).collect();
    e.push(0.0);
    e.reverse();
    e
}

/// `count` equal panels on [a, b].
pub fn uniform_edges(a: f64, b: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    (0..=count)
        .map(|k| a + (b - a) * k as f64 / count as f64)
        .collect()
}

/// Interior nodes and weights of Fejér's second rule with `n` intervals on [−1, 1].
///
/// The rule for n/2 uses the even-indexed nodes, so a coarse estimate comes for free.
pub fn fejer2(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "Fejér rule needs n ≥ 2");
    let mut x = Vec::with_capacity(n - 1);
    let mut w = Vec::with_capacity(n - 1);
    for k in 1..n {
        let th = PI * k as f64 / n as f64;
        let s: f64 = (1..=n / 2)
            .map(|j| {
                let o = (2 * j - 1) as f64;
                (o * th).sin() / o
            })
            .sum();
        x.push(-th.cos());
        w.push(4.0 * th.sin() * s / n as f64);
    }
    (x, w)
}

/// Panel rule carrying a second, embedded rule on a subset of its nodes.
#[derive(Clone, Debug, Default)]
pub struct NestedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Weights of the embedded rule; zero off its nodes.
    pub coarse: Vec<f64>,
}

impl NestedRule {
    /// Fejér rule with `n` intervals (n even) on every panel, embedded rule with n/2.
    pub fn on_panels(edges: &[f64], n: usize) -> NestedRule {
        assert!(n >= 4 && n % 2 == 0, "nested Fejér rule needs even n ≥ 4");
        let (x, w) = fejer2(n);
        let (_, wc) = fejer2(n / 2);
        let mut rule = NestedRule::default();
        for p in edges.windows(2) {
            let (c, r) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            for (k, (xi, wi)) in x.iter().zip(&w).enumerate() {
                rule.nodes.push(c + r * xi);
                rule.weights.push(r * wi);
                // node k+1 of the fine rule is node (k+1)/2 of the coarse one
                rule.coarse.push(if (k + 1) % 2 == 0 { r * wc[(k + 1) / 2 - 1] } else { 0.0 });
            }
        }
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Splits every panel so that none is longer than `max_len`.
pub fn limit_panel_length(edges: &[f64], max_len: f64) -> Vec<f64> {
    let mut out = vec![edges[0]];
    for p in edges.windows(2) {
        let k = ((p[1] - p[0]) / max_len).ceil().max(1.0) as usize;
        for i in 1..=k {
            out.push(p[0] + (p[1] - p[0]) * i as f64 / k as f64);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn graded_rule_handles_log_singularity() {
        let r = Rule::on_panels(&graded_edges(1.0, 40), 12);
        let q = r.integrate(|x| x.ln());
        assert!((q + 1.0).abs() < 1e-12);
    }

    #[test]
    fn fejer_rules_are_exact_and_nested() {
        for n in [4, 8, 16] {
            let (x, w) = fejer2(n);
            for deg in 0..n - 1 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
        let r = NestedRule::on_panels(&[0.0, 1.0, 3.0], 16);
        let fine: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.exp()).sum();
        let coarse: f64 = r.nodes.iter().zip(&r.coarse).map(|(x, w)| w * x.exp()).sum();
        let exact = 3f64.exp() - 1.0;
        assert!((fine - exact).abs() < 1e-12);
        assert!((coarse - exact).abs() < 1e-6);
        assert!((coarse - exact).abs() > (fine - exact).abs());
    }

    #[test]
    fn panel_splitting() {
        let e = limit_panel_length(&[0.0, 1.0, 1.1], 0.3);
        assert_eq!(e.len(), 6);
        assert!(e.windows(2).all(|p| p[1] - p[0] <= 0.3 + 1e-15));
    }
}
