//! Effective one-dimensional potential of the ground cross-section mode.
//!
//! Restricting the straightened form to `ψ = u(x)·χ(y)` and subtracting
//! `E₁(β)‖ψ‖²` leaves `∫|u′|² + ∫V|u|²` with
//!
//! ```text
//! V = (A₁+B₁−2C₁)α′² + 2(C₃−A₂)βα′ sin α + 2(B₂−C₂)βα′ cos α
//!     + (A₃−B₃)β² sin²α + 2C₄β² sin α cos α.
//! ```
//!
//! A negative integral of `V` forces spectrum below `E₁(β)`; the trial
//! functions `w(x/n)·χ(y)` make that constructive.

use crate::cross_section::Moments;
use crate::error::{Error, Result};
use crate::quadrature::{pairwise_sum, AdaptiveOutcome, GaussLegendre};
use crate::twist::{TwistProfile, TwistSample};

/// Panel width of the composite rule used for `∫V`.
pub const PANEL_WIDTH: f64 = 0.5;
/// Points per panel.
pub const RULE_ORDER: usize = 16;
/// Default half-window for tanh-type profiles.
pub const DEFAULT_WINDOW: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    moments: Moments,
    beta: f64,
    twist: TwistProfile,
}

impl PotentialSpec {
    pub fn new(moments: Moments, beta: f64, twist: TwistProfile) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::param(
                "beta",
                format!("must be finite and ≥ 0, got {beta}"),
            ));
        }
        let tc = moments.twist_coefficient();
        if tc < -1e-12 * (moments.a1 + moments.b1).abs().max(1.0) {
            return Err(Error::param("moments", format!("A1 + B1 − 2C1 = {tc} < 0")));
        }
        Ok(Self {
            moments,
            beta,
            twist,
        })
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn twist(&self) -> &TwistProfile {
        &self.twist
    }

    /// `V(x)`.
    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.value_at(self.twist.evaluate(x)?))
    }

    /// `V` from an already evaluated twist sample.
    pub fn value_at(&self, t: TwistSample) -> f64 {
        let m = &self.moments;
        let b = self.beta;
        let ap = t.alpha_prime;
        let (s, c) = t.alpha.sin_cos();
        m.twist_coefficient() * ap * ap
            + 2.0 * (m.c3 - m.a2) * b * ap * s
            + 2.0 * (m.b2 - m.c2) * b * ap * c
            + (m.a3 - m.b3) * b * b * s * s
            + 2.0 * m.c4 * b * b * s * c
    }

    /// `∫V` over `[−window, window]` with the adaptive composite
    /// Gauss–Legendre rule, plus tail evidence for `V ∈ L¹`.
    pub fn integral(&self, window: f64, order: usize) -> Result<IntegralReport> {
        if !(window > 0.0) {
            return Err(Error::param("window", "must be positive"));
        }
        if order == 0 {
            return Err(Error::param("order", "must be positive"));
        }
        let rule = GaussLegendre::new(order);
        let mut failure = None;
        let outcome = rule.adaptive(-window, window, PANEL_WIDTH, 1e-15, |x| {
            self.value(x).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let tail_left = self.value(-window)?.abs();
        let tail_right = self.value(window)?.abs();
        let half_left = self.value(-0.5 * window)?.abs();
        let half_right = self.value(0.5 * window)?.abs();
        let decaying = tail_left <= half_left && tail_right <= half_right;
        let integrable = tail_left.max(tail_right) < 1e-10 && decaying;
        Ok(IntegralReport {
            integral_v: outcome.value,
            integrable,
            hypothesis_met: integrable && outcome.value < 0.0,
            window,
            tail: tail_left.max(tail_right),
            quadrature: outcome,
        })
    }

    /// Trial energy `q(ψₙ) = Q(ψₙ) − E₁‖ψₙ‖²` of `ψₙ = w(x/n)·χ(y)`, which
    /// equals `(1/n)∫|w′|² + ∫V·w(x/n)²`.
    pub fn witness_energy(&self, n: f64) -> Result<f64> {
        if !(n >= 1.0) {
            return Err(Error::param("n", "cut-off scale must be ≥ 1"));
        }
        let cutoff = Cutoff::new();
        let rule = GaussLegendre::new(RULE_ORDER);
        let mut failure = None;
        let mut potential_part = |a: f64, b: f64| {
            rule.adaptive(a, b, PANEL_WIDTH, 1e-15, |x| {
                let w = cutoff.value(x / n);
                if w == 0.0 {
                    return 0.0;
                }
                match self.value(x) {
                    Ok(v) => v * w * w,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            })
            .value
        };
        // Break points at the plateau edges ±n and the support edges ±2n.
        let pieces = [
            potential_part(-2.0 * n, -n),
            potential_part(-n, n),
            potential_part(n, 2.0 * n),
        ];
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(cutoff.kinetic() / n + pairwise_sum(&pieces))
    }

    /// Smallest integer scale `n ≤ max_n` with `q(ψₙ) < 0`, doubling from
    /// `n = 1`, then refining downwards by bisection.
    pub fn first_witness(&self, max_n: u32) -> Result<Option<(u32, f64)>> {
        let mut hi = 1u32;
        loop {
            let q = self.witness_energy(hi as f64)?;
            if q < 0.0 {
                break;
            }
            if hi >= max_n {
                return Ok(None);
            }
            hi = (hi * 2).min(max_n);
        }
        let mut lo = hi / 2;
        if lo == 0 {
            return Ok(Some((1, self.witness_energy(1.0)?)));
        }
        // q(lo) ≥ 0 > q(hi); q is not monotone in general, so this finds a
        // sign change, reported as the first witness on the doubling path.
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.witness_energy(mid as f64)? < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some((hi, self.witness_energy(hi as f64)?)))
    }
}

/// Outcome of the `∫V < 0` check.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralReport {
    pub integral_v: f64,
    /// Tail of `|V|` at `±window` below `1e-10` and decaying.
    pub integrable: bool,
    /// `integrable && integral_v < 0`.
    pub hypothesis_met: bool,
    pub window: f64,
    pub tail: f64,
    pub quadrature: AdaptiveOutcome,
}

/// Smooth plateau: `w = 1` on `[−1, 1]`, `w = 0` off `(−2, 2)`, built
/// from the `exp(−1/t)` smooth step.
#[derive(Debug, Clone)]
pub struct Cutoff {
    kinetic: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self::new()
    }
}

impl Cutoff {
    pub fn new() -> Self {
        let rule = GaussLegendre::new(64);
        // w′ is supported on 1 < |x| < 2, symmetric.
        let one_side = rule.integrate(1.0, 2.0, |x| Self::derivative_at(x).powi(2));
        Self {
            kinetic: 2.0 * one_side,
        }
    }

    fn step_kernel(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }

    /// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
    fn smoothstep(t: f64) -> f64 {
        let a = Self::step_kernel(t);
        let b = Self::step_kernel(1.0 - t);
        a / (a + b)
    }

    pub fn value(&self, x: f64) -> f64 {
        Self::smoothstep(2.0 - x.abs())
    }

    pub fn derivative(&self, x: f64) -> f64 {
        Self::derivative_at(x)
    }

    fn derivative_at(x: f64) -> f64 {
        let t = 2.0 - x.abs();
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        // d/dt [a/(a+b)] with a = e^{−1/t}, b = e^{−1/(1−t)}.
        let a = Self::step_kernel(t);
        let b = Self::step_kernel(1.0 - t);
        let da = a / (t * t);
        let db = -b / ((1.0 - t) * (1.0 - t));
        let ds = (da * b - a * db) / ((a + b) * (a + b));
        -x.signum() * ds
    }

    /// `∫|w′|²`.
    pub fn kinetic(&self) -> f64 {
        self.kinetic
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::CrossSection;
    use std::f64::consts::PI;

    fn square_spec(beta: f64, c: f64) -> PotentialSpec {
        let s = CrossSection::square_pi();
        let (_, chi) = s.first_eigenpair(beta).unwrap();
        PotentialSpec::new(s.moments(&chi), beta, TwistProfile::tanh(c)).unwrap()
    }

    #[test]
    fn value_at_origin_matches_closed_form() {
        let v = square_spec(1.5, 0.5).value(0.0).unwrap();
        let closed = (2.0 * PI * PI / 3.0 - 1.5) * 0.25 + PI * 1.5 * 0.5 * (0.0 - 1.0);
        assert!((v - closed).abs() < 1e-13);
        assert!((v + 1.0863).abs() < 1e-4, "{v}");
    }

    #[test]
    fn constant_twist_gives_zero_potential() {
        let s = CrossSection::square_pi();
        let (_, chi) = s.first_eigenpair(1.5).unwrap();
        let spec = PotentialSpec::new(s.moments(&chi), 1.5, TwistProfile::constant(0.3)).unwrap();
        for k in 0..50 {
            assert!(spec.value(-5.0 + 0.2 * k as f64).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn unsheared_potential_is_nonnegative() {
        let spec = square_spec(0.0, 0.5);
        for k in 0..=400 {
            assert!(spec.value(-20.0 + 0.1 * k as f64).unwrap() >= 0.0);
        }
    }

    #[test]
    fn cutoff_shape() {
        let w = Cutoff::new();
        assert_eq!(w.value(0.0), 1.0);
        assert_eq!(w.value(1.0), 1.0);
        assert_eq!(w.value(-1.0), 1.0);
        assert_eq!(w.value(2.0), 0.0);
        assert_eq!(w.value(-2.5), 0.0);
        assert!((w.value(1.5) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for x in [1.1, 1.3, 1.5, 1.77, -1.4] {
            let fd = (w.value(x + h) - w.value(x - h)) / (2.0 * h);
            assert!((fd - w.derivative(x)).abs() < 1e-7);
        }
        let composite =
            GaussLegendre::new(16).composite(-3.0, 3.0, 0.05, |x| w.derivative(x).powi(2));
        assert!((composite - w.kinetic()).abs() < 1e-10);
    }

    #[test]
    fn constant_twist_witness_is_pure_kinetic() {
        let s = CrossSection::square_pi();
        let (_, chi) = s.first_eigenpair(1.5).unwrap();
        let spec =
            PotentialSpec::new(s.moments(&chi), 1.5, TwistProfile::constant(PI / 2.0)).unwrap();
        let kinetic = Cutoff::new().kinetic();
        for n in [1.0, 2.0, 10.0] {
            let q = spec.witness_energy(n).unwrap();
            assert!(q > 0.0);
            assert!((q - kinetic / n).abs() < 1e-15);
        }
    }

    #[test]
    fn integral_report_flags_hypothesis() {
        let met = square_spec(1.5, 0.5).integral(20.0, 16).unwrap();
        assert!(met.integral_v < 0.0 && met.integrable && met.hypothesis_met);
        let not_met = square_spec(0.0, 0.5).integral(20.0, 16).unwrap();
        assert!(not_met.integral_v >= 0.0 && !not_met.hypothesis_met);
    }

    #[test]
    fn non_decaying_tail_is_not_integrable() {
        let s = CrossSection::square_pi();
        let (_, chi) = s.first_eigenpair(1.5).unwrap();
        let steady =
            crate::twist::TabulatedTwist::new(vec![-30.0, 30.0], vec![0.0, 18.0], vec![0.3, 0.3])
                .unwrap();
        let spec =
            PotentialSpec::new(s.moments(&chi), 1.5, TwistProfile::Tabulated(steady)).unwrap();
        let r = spec.integral(20.0, 16).unwrap();
        assert!(!r.integrable && !r.hypothesis_met);
        assert!(spec.integral(40.0, 16).is_err());
    }

    #[test]
    fn first_witness_found_for_negative_integral() {
        let spec = square_spec(1.5, 0.5);
        let (n, q) = spec.first_witness(1 << 12).unwrap().expect("witness");
        assert!(q < 0.0);
        if n > 1 {
            assert!(spec.witness_energy((n - 1) as f64).unwrap() >= 0.0);
        }
        assert!(square_spec(0.0, 0.5).first_witness(64).unwrap().is_none());
    }
}
