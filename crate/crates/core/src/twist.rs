//! Rotation-angle profiles `α(x)` of the cross-section.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use crate::error::{Error, Result};

/// Angle and twist rate at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistSample {
    pub alpha: f64,
    pub alpha_prime: f64,
}

/// Rotation angle of the cross-section as a function of the axial
/// coordinate. All angles are in radians.
#[derive(Debug, Clone, PartialEq)]
pub enum TwistProfile {
    /// `α(x) = c·tanh(x) + offset`.
    Tanh {
        amplitude: f64,
        offset: f64,
    },
    /// `α(x) = offset + c·exp(1 − R²/(R² − x²))` on `|x| < R`, `offset`
    /// elsewhere.
    Bump {
        amplitude: f64,
        radius: f64,
        offset: f64,
    },
    Tabulated(TabulatedTwist),
}

impl TwistProfile {
    pub fn tanh(amplitude: f64) -> Self {
        TwistProfile::Tanh {
            amplitude,
            offset: FRAC_PI_2,
        }
    }

    pub fn bump(amplitude: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::param("twist.radius", "must be positive"));
        }
        Ok(TwistProfile::Bump {
            amplitude,
            radius,
            offset: FRAC_PI_2,
        })
    }

    /// Untwisted cross-section held at a fixed angle.
    pub fn constant(angle: f64) -> Self {
        TwistProfile::Tanh {
            amplitude: 0.0,
            offset: angle,
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<TwistSample> {
        match self {
            TwistProfile::Tanh { amplitude, offset } => Ok(TwistSample {
                alpha: amplitude * x.tanh() + offset,
                alpha_prime: amplitude * sech_squared(x),
            }),
            TwistProfile::Bump {
                amplitude,
                radius,
                offset,
            } => {
                let r2 = radius * radius;
                let gap = r2 - x * x;
                if gap <= 0.0 {
                    return Ok(TwistSample {
                        alpha: *offset,
                        alpha_prime: 0.0,
                    });
                }
                let bump = (1.0 - r2 / gap).exp();
                Ok(TwistSample {
                    alpha: offset + amplitude * bump,
                    alpha_prime: -amplitude * bump * 2.0 * r2 * x / (gap * gap),
                })
            }
            TwistProfile::Tabulated(table) => table.evaluate(x),
        }
    }

    /// Limiting angles `(α(−∞), α(+∞))` when the profile settles outside a
    /// bounded region. Tabulated profiles report their end samples.
    pub fn end_angles(&self) -> (f64, f64) {
        match self {
            TwistProfile::Tanh { amplitude, offset } => (offset - amplitude, offset + amplitude),
            TwistProfile::Bump { offset, .. } => (*offset, *offset),
            TwistProfile::Tabulated(t) => (t.alpha[0], t.alpha[t.alpha.len() - 1]),
        }
    }

    /// Region where evaluation is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            TwistProfile::Tabulated(t) => (t.x[0], t.x[t.x.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Checks the asymptotic-straightness condition `α′(x) → 0` as
    /// `|x| → ∞` at probe distance `probe`.
    pub fn verify_asymptotic(&self, tol: f64, probe: f64) -> Result<AsymptoticReport> {
        if !(tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if !(probe > 0.0) {
            return Err(Error::param("probe", "must be positive"));
        }
        const SAMPLES: usize = 65;
        let tail_left = self.evaluate(-probe)?.alpha_prime.abs();
        let tail_right = self.evaluate(probe)?.alpha_prime.abs();

        // α′ vanishes identically outside a compact support.
        if let TwistProfile::Bump { radius, .. } = self {
            if probe >= *radius {
                return Ok(AsymptoticReport {
                    straight: true,
                    tail_left,
                    tail_right,
                    monotone_tail: true,
                });
            }
        }

        let mut monotone_tail = true;
        for side in [-1.0, 1.0] {
            let mut prev = f64::INFINITY;
            for k in 0..SAMPLES {
                let x = side * (0.5 * probe + 0.5 * probe * k as f64 / (SAMPLES - 1) as f64);
                let mag = self.evaluate(x)?.alpha_prime.abs();
                if mag > prev {
                    monotone_tail = false;
                }
                prev = mag;
            }
        }
        Ok(AsymptoticReport {
            straight: tail_left <= tol && tail_right <= tol && monotone_tail,
            tail_left,
            tail_right,
            monotone_tail,
        })
    }
}

/// `1 − tanh²(x)` without the cancellation of the literal formula, which
/// rounds to zero for `|x| ≳ 19`.
fn sech_squared(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticReport {
    pub straight: bool,
    pub tail_left: f64,
    pub tail_right: f64,
    pub monotone_tail: bool,
}

/// Sampled profile. `α` is interpolated by cubic Hermite segments using the
/// supplied `α′` as slopes; `α′` itself by the monotone (Fritsch–Carlson)
/// cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTwist {
    x: Vec<f64>,
    alpha: Vec<f64>,
    alpha_prime: Vec<f64>,
    alpha_prime_slopes: Vec<f64>,
}

impl TabulatedTwist {
    pub fn new(x: Vec<f64>, alpha: Vec<f64>, alpha_prime: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::param("twist.file", "need at least two samples"));
        }
        if alpha.len() != x.len() || alpha_prime.len() != x.len() {
            return Err(Error::param("twist.file", "column lengths differ"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("twist.file", "x must be strictly increasing"));
        }
        if alpha.iter().chain(&alpha_prime).any(|v| !v.is_finite()) {
            return Err(Error::param("twist.file", "non-finite sample"));
        }
        let alpha_prime_slopes = monotone_slopes(&x, &alpha_prime);
        Ok(Self {
            x,
            alpha,
            alpha_prime,
            alpha_prime_slopes,
        })
    }

    /// Parses whitespace-separated `x α α′` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut x, mut a, mut ap) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 3 columns, found {}", cols.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad number `{s}`: {e}"),
                })
            };
            x.push(parse(cols[0])?);
            a.push(parse(cols[1])?);
            ap.push(parse(cols[2])?);
        }
        Self::new(x, a, ap)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn evaluate(&self, x: f64) -> Result<TwistSample> {
        let (lo, hi) = (self.x[0], self.x[self.x.len() - 1]);
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfRange { x, lo, hi });
        }
        let k = match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[k + 1] - self.x[k];
        let t = (x - self.x[k]) / h;
        let alpha = hermite(
            t,
            h,
            self.alpha[k],
            self.alpha[k + 1],
            self.alpha_prime[k],
            self.alpha_prime[k + 1],
        );
        let alpha_prime = hermite(
            t,
            h,
            self.alpha_prime[k],
            self.alpha_prime[k + 1],
            self.alpha_prime_slopes[k],
            self.alpha_prime_slopes[k + 1],
        );
        Ok(TwistSample { alpha, alpha_prime })
    }
}

fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Fritsch–Carlson node slopes for a monotone piecewise cubic.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secants: Vec<f64> = (0..n - 1)
        .map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k]))
        .collect();
    let mut d = vec![0.0; n];
    d[0] = secants[0];
    d[n - 1] = secants[n - 2];
    for k in 1..n - 1 {
        let (s0, s1) = (secants[k - 1], secants[k]);
        d[k] = if s0 * s1 <= 0.0 {
            0.0
        } else {
            let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            (w1 + w2) / (w1 / s0 + w2 / s1)
        };
    }
    for k in 0..n - 1 {
        let s = secants[k];
        if s == 0.0 {
            d[k] = 0.0;
            d[k + 1] = 0.0;
            continue;
        }
        let (a, b) = (d[k] / s, d[k + 1] / s);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d[k] = tau * a * s;
            d[k + 1] = tau * b * s;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_at_origin() {
        let s = TwistProfile::tanh(0.5).evaluate(0.0).unwrap();
        assert_eq!(s.alpha, FRAC_PI_2);
        assert_eq!(s.alpha_prime, 0.5);
    }

    #[test]
    fn tanh_rate_decays_and_stays_positive_far_out() {
        let p = TwistProfile::tanh(0.5);
        let far = p.evaluate(20.0).unwrap().alpha_prime;
        assert!(far > 0.0 && far < 1e-16);
        assert!(p.evaluate(40.0).unwrap().alpha_prime < 1e-33);
    }

    #[test]
    fn tanh_rate_is_even_and_matches_finite_differences() {
        let p = TwistProfile::tanh(0.5);
        let dx = 1e-4;
        for k in 0..=200 {
            let x = -10.0 + 0.1 * k as f64;
            let s = p.evaluate(x).unwrap();
            let mirrored = p.evaluate(-x).unwrap().alpha_prime;
            assert!((s.alpha_prime - mirrored).abs() <= 1e-12);
            let fd = (p.evaluate(x + dx).unwrap().alpha - p.evaluate(x - dx).unwrap().alpha)
                / (2.0 * dx);
            assert!((fd - s.alpha_prime).abs() <= 1e-6, "x={x}");
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let p = TwistProfile::bump(1.0, 2.0).unwrap();
        let s = p.evaluate(3.0).unwrap();
        assert_eq!(s.alpha_prime, 0.0);
        assert_eq!(s.alpha, FRAC_PI_2);
        let inside = p.evaluate(0.0).unwrap();
        assert!((inside.alpha - (FRAC_PI_2 + 1.0)).abs() < 1e-15);
        assert_eq!(inside.alpha_prime, 0.0);
    }

    #[test]
    fn bump_derivative_matches_finite_differences() {
        let p = TwistProfile::bump(0.7, 2.0).unwrap();
        let dx = 1e-5;
        for k in 1..39 {
            let x = -1.9 + 0.1 * k as f64;
            let fd = (p.evaluate(x + dx).unwrap().alpha - p.evaluate(x - dx).unwrap().alpha)
                / (2.0 * dx);
            assert!(
                (fd - p.evaluate(x).unwrap().alpha_prime).abs() < 1e-7,
                "x={x}"
            );
        }
    }

    #[test]
    fn asymptotic_checks() {
        let tanh = TwistProfile::tanh(0.5)
            .verify_asymptotic(1e-6, 10.0)
            .unwrap();
        assert!(tanh.straight);
        // 0.5·(1 − tanh²(10)) ≈ 4.1e-9
        assert!((tanh.tail_right - 0.5 * 4.0 * (-20.0f64).exp()).abs() < 1e-15);

        let flat = TabulatedTwist::new(vec![-20.0, 0.0, 20.0], vec![0.0; 3], vec![0.3; 3]).unwrap();
        let report = TwistProfile::Tabulated(flat)
            .verify_asymptotic(1e-6, 10.0)
            .unwrap();
        assert!(!report.straight);

        let bump = TwistProfile::bump(1.0, 2.0).unwrap();
        for probe in [2.5, 3.0, 10.0] {
            assert!(bump.verify_asymptotic(1e-12, probe).unwrap().straight);
        }
    }

    #[test]
    fn tabulated_reproduces_samples_and_rejects_out_of_range() {
        let p = TwistProfile::tanh(0.5);
        let xs: Vec<f64> = (0..=400).map(|k| -10.0 + 0.05 * k as f64).collect();
        let samples: Vec<TwistSample> = xs.iter().map(|&x| p.evaluate(x).unwrap()).collect();
        let table = TabulatedTwist::new(
            xs.clone(),
            samples.iter().map(|s| s.alpha).collect(),
            samples.iter().map(|s| s.alpha_prime).collect(),
        )
        .unwrap();
        for (x, s) in xs.iter().zip(&samples) {
            let got = table.evaluate(*x).unwrap();
            assert!((got.alpha - s.alpha).abs() < 1e-14);
            assert!((got.alpha_prime - s.alpha_prime).abs() < 1e-14);
        }
        let mid = table.evaluate(0.37).unwrap();
        let exact = p.evaluate(0.37).unwrap();
        assert!((mid.alpha - exact.alpha).abs() < 1e-6);
        assert!((mid.alpha_prime - exact.alpha_prime).abs() < 1e-3);
        assert!(matches!(
            table.evaluate(10.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn tabulated_parse_rejects_unsorted_rows() {
        let err = TabulatedTwist::parse("0 0 0\n-1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
        let err = TabulatedTwist::parse("0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let ok = TabulatedTwist::parse("# x a a'\n-1 0 0.1\n1 0.2 0.1\n").unwrap();
        assert_eq!(ok.x.len(), 2);
    }

    #[test]
    fn monotone_interpolant_does_not_overshoot() {
        let t = TabulatedTwist::new(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0; 4],
            vec![0.0, 0.0, 1.0, 1.0],
        )
        .unwrap();
        for k in 0..=300 {
            let v = t.evaluate(0.01 * k as f64).unwrap().alpha_prime;
            assert!((-1e-15..=1.0 + 1e-15).contains(&v));
        }
    }
}
