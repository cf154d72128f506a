//! Gauss–Legendre rules and composite integration on the real line.

use std::f64::consts::PI;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the three-term Legendre
    /// recurrence, starting from the Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for k in 0..n.div_ceil(2) {
            let mut x = (PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let terms: Vec<f64> = self.mapped(a, b).map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    /// Fixed composite rule on panels of width at most `panel`.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panel: f64, mut f: F) -> f64 {
        let panels = panel_count(a, b, panel);
        let width = (b - a) / panels as f64;
        let sums: Vec<f64> = (0..panels)
            .map(|k| {
                let lo = a + k as f64 * width;
                let hi = if k + 1 == panels { b } else { lo + width };
                self.integrate(lo, hi, &mut f)
            })
            .collect();
        pairwise_sum(&sums)
    }

    /// Composite rule where each panel is bisected until the one-panel and
    /// two-half-panel estimates agree to `tol` (absolute, per panel).
    pub fn adaptive<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panel: f64,
        tol: f64,
        mut f: F,
    ) -> AdaptiveOutcome {
        let panels = panel_count(a, b, panel);
        let width = (b - a) / panels as f64;
        let mut outcome = AdaptiveOutcome::default();
        let mut sums = Vec::with_capacity(panels);
        for k in 0..panels {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == panels { b } else { lo + width };
            let whole = self.integrate(lo, hi, &mut f);
            sums.push(self.refine(lo, hi, whole, tol, 0, &mut f, &mut outcome));
        }
        outcome.value = pairwise_sum(&sums);
        outcome
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
        f: &mut F,
        outcome: &mut AdaptiveOutcome,
    ) -> f64 {
        const MAX_DEPTH: usize = 30;
        let mid = 0.5 * (a + b);
        let left = self.integrate(a, mid, &mut *f);
        let right = self.integrate(mid, b, &mut *f);
        outcome.evaluations += 2 * self.len();
        let split = left + right;
        let diff = (split - whole).abs();
        if diff <= tol || depth >= MAX_DEPTH {
            outcome.panels += 1;
            outcome.error_estimate += diff;
            outcome.max_depth = outcome.max_depth.max(depth);
            return split;
        }
        self.refine(a, mid, left, 0.5 * tol, depth + 1, f, outcome)
            + self.refine(mid, b, right, 0.5 * tol, depth + 1, f, outcome)
    }
}

/// Result of [`GaussLegendre::adaptive`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdaptiveOutcome {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
    pub evaluations: usize,
    pub max_depth: usize,
}

fn panel_count(a: f64, b: f64, panel: f64) -> usize {
    assert!(panel > 0.0, "panel width must be positive");
    (((b - a).abs() / panel).ceil() as usize).max(1)
}

/// Legendre polynomial `P_n(x)` and its derivative.
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

/// Pairwise (cascade) summation; the order of additions depends only on
/// the slice length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 3, 4, 7, 16, 64] {
            let rule = GaussLegendre::new(n);
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}: {total}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(4);
        for deg in 0..8 {
            let got = rule.integrate(0.0, 1.0, |x| x.powi(deg));
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn four_point_nodes_match_tables() {
        let rule = GaussLegendre::new(4);
        let inner = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
        let outer = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
        assert!((rule.nodes()[1] + inner).abs() < 1e-15);
        assert!((rule.nodes()[3] - outer).abs() < 1e-15);
        assert!((rule.weights()[0] - (18.0 - 30f64.sqrt()) / 36.0).abs() < 1e-15);
    }

    #[test]
    fn high_order_rule_integrates_oscillatory_function() {
        let rule = GaussLegendre::new(64);
        let got = rule.integrate(0.0, PI, |x| (5.0 * x).sin().powi(2) * x);
        assert!((got - PI * PI / 4.0).abs() < 1e-13);
    }

    #[test]
    fn composite_and_adaptive_agree() {
        let rule = GaussLegendre::new(16);
        let f = |x: f64| (-x * x).exp();
        let c = rule.composite(-10.0, 10.0, 0.5, f);
        let a = rule.adaptive(-10.0, 10.0, 0.5, 1e-15, f);
        assert!((c - PI.sqrt()).abs() < 1e-14);
        assert!((a.value - PI.sqrt()).abs() < 1e-14);
        assert_eq!(a.panels, 40);
    }

    #[test]
    fn adaptive_refines_kinks() {
        let rule = GaussLegendre::new(4);
        let out = rule.adaptive(-1.0, 1.0, 2.0, 1e-12, |x: f64| x.abs());
        assert!((out.value - 1.0).abs() < 1e-12);
        assert!(out.panels > 1);
    }
}
