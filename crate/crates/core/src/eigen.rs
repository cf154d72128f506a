//! Generalised eigenvalues of banded pencils `K u = λ M u` below a
//! threshold, by inertia counting and bisection.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::assembly::BandedPencil;
use crate::banded::{Ldlt, SymBand};
use crate::error::{Error, Result};

/// Relative pivot floor of the `LDLᵀ` factorisation.
const PIVOT_FLOOR: f64 = 1e-13;
/// Relative shift applied when a factorisation meets a tiny pivot.
const RETRY_SHIFT: f64 = 1e-10;
const MAX_RETRIES: usize = 8;
/// Upper limit on eigenvalues reported below a threshold.
pub const MAX_EIGENVALUES: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DENSE_LIMIT: usize = 2000;

fn scale(pencil: &BandedPencil) -> f64 {
    pencil
        .stiffness
        .max_abs()
        .max(pencil.mass.max_abs())
        .max(1.0)
}

fn factor(pencil: &BandedPencil, sigma: f64) -> Result<Ldlt> {
    let shifted = pencil.stiffness.add_scaled(-sigma, &pencil.mass);
    let floor = PIVOT_FLOOR * shifted.max_abs().max(f64::MIN_POSITIVE);
    shifted.ldlt(floor)
}

/// Number of pencil eigenvalues below `sigma`: the negative pivots of
/// `K − σM = LDLᵀ`. A tiny pivot yields [`Error::NearSingular`]; callers
/// shift `σ` by about `1e-10·scale` and retry (see [`count_below`]).
pub fn inertia(pencil: &BandedPencil, sigma: f64) -> Result<usize> {
    factor(pencil, sigma).map(|f| f.negative_pivots())
}

/// [`inertia`] with the jitter-retry policy applied.
pub fn count_below(pencil: &BandedPencil, sigma: f64) -> Result<usize> {
    let step = RETRY_SHIFT * scale(pencil);
    let mut last = None;
    for attempt in 0..=MAX_RETRIES {
        let shift = match attempt {
            0 => 0.0,
            k if k % 2 == 1 => step * k.div_ceil(2) as f64,
            k => -step * (k / 2) as f64,
        };
        match inertia(pencil, sigma + shift) {
            Err(e @ Error::NearSingular { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Diagnostics attached to a [`SpectralResult`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub half_length: Option<f64>,
    pub nx: Option<usize>,
    pub modes: usize,
    pub bisection_iterations: usize,
    /// Eigenvalues within `tol` below the threshold, not classified as
    /// discrete.
    pub near_threshold: usize,
    /// Estimated discretisation error of the reported eigenvalues.
    pub discretization_error: Option<f64>,
    /// Bottom of the continuum of the truncated-basis operator at the ends
    /// of the guide.
    pub far_field_threshold: Option<f64>,
}

/// Eigenvalues of the pencil strictly below `threshold − tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub threshold: f64,
    pub tol: f64,
    pub eigenvalues: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl SpectralResult {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `threshold − max eigenvalue`, or `None` without eigenvalues.
    pub fn margin(&self) -> Option<f64> {
        self.eigenvalues.last().map(|l| self.threshold - l)
    }

    /// Flat `key = value` record.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let d = &self.diagnostics;
        let _ = writeln!(out, "threshold = {}", self.threshold);
        let _ = writeln!(out, "count = {}", self.count());
        let list: Vec<String> = self.eigenvalues.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "eigenvalues = {}", list.join(","));
        let _ = writeln!(out, "tol = {}", self.tol);
        if let Some(l) = d.half_length {
            let _ = writeln!(out, "L = {l}");
        }
        if let Some(nx) = d.nx {
            let _ = writeln!(out, "nx = {nx}");
        }
        let _ = writeln!(out, "modes = {}", d.modes);
        let _ = writeln!(out, "bisection_iterations = {}", d.bisection_iterations);
        let _ = writeln!(out, "near_threshold = {}", d.near_threshold);
        if let Some(m) = self.margin() {
            let _ = writeln!(out, "margin = {m}");
        }
        if let Some(e) = d.discretization_error {
            let _ = writeln!(out, "discretization_error = {e}");
        }
        if let Some(f) = d.far_field_threshold {
            let _ = writeln!(out, "far_field_threshold = {f}");
        }
        out
    }
}

fn lower_bound(pencil: &BandedPencil) -> Result<f64> {
    let (k_lo, _) = pencil.stiffness.gershgorin();
    let (m_lo, m_hi) = pencil.mass.gershgorin();
    let mut lo = if k_lo >= 0.0 {
        k_lo / m_hi
    } else if m_lo > 0.0 {
        k_lo / m_lo
    } else {
        k_lo - 1.0
    };
    lo -= 1e-6 * lo.abs().max(1.0);
    // Widen until certified.
    for _ in 0..64 {
        if count_below(pencil, lo)? == 0 {
            return Ok(lo);
        }
        lo -= 2.0 * lo.abs().max(1.0);
    }
    Err(Error::Convergence {
        iterations: 64,
        residual: lo,
    })
}

/// All eigenvalues below `threshold − tol`, each located to `tol` by
/// bisection on [`count_below`].
pub fn eigs_below(pencil: &BandedPencil, threshold: f64, tol: f64) -> Result<SpectralResult> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let cut = threshold - tol;
    let count = count_below(pencil, cut)?;
    if count > MAX_EIGENVALUES {
        return Err(Error::Capacity {
            requested: count,
            available: MAX_EIGENVALUES,
        });
    }
    let near = count_below(pencil, threshold)?.saturating_sub(count);
    let lo = if count > 0 { lower_bound(pencil)? } else { cut };

    let located: Vec<Result<(f64, usize)>> = (0..count)
        .into_par_iter()
        .map(|j| {
            // count(a) ≤ j < count(b)
            let (mut a, mut b) = (lo, cut);
            let mut steps = 0;
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if count_below(pencil, mid)? <= j {
                    a = mid;
                } else {
                    b = mid;
                }
                steps += 1;
            }
            Ok((0.5 * (a + b), steps))
        })
        .collect();
    let mut eigenvalues = Vec::with_capacity(count);
    let mut iterations = 0;
    for r in located {
        let (l, s) = r?;
        eigenvalues.push(l);
        iterations += s;
    }
    Ok(SpectralResult {
        threshold,
        tol,
        eigenvalues,
        diagnostics: Diagnostics {
            modes: pencil.modes,
            bisection_iterations: iterations,
            near_threshold: near,
            ..Diagnostics::default()
        },
    })
}

fn m_norm(pencil: &BandedPencil, u: &[f64]) -> f64 {
    let mu = pencil.mass.matvec(u);
    u.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>().sqrt()
}

/// Eigenvector for an eigenvalue located near `lambda`, by inverse
/// iteration; the result is `M`-normalised with its largest component
/// positive.
pub fn eigenvector(pencil: &BandedPencil, lambda: f64) -> Result<Vec<f64>> {
    const MAX_ITERATIONS: usize = 100;
    let n = pencil.dim();
    let step = RETRY_SHIFT * scale(pencil);
    let mut sigma = lambda;
    let fac = loop {
        match factor(pencil, sigma) {
            Ok(f) => break f,
            Err(Error::NearSingular { .. }) => sigma += step,
            Err(e) => return Err(e),
        }
    };
    let mut u: Vec<f64> = (0..n)
        .map(|k| 1.0 + 0.1 * ((k as f64) * 0.618_033_988_75).fract())
        .collect();
    let norm = m_norm(pencil, &u);
    u.iter_mut().for_each(|x| *x /= norm);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut y = pencil.mass.matvec(&u);
        fac.solve_in_place(&mut y);
        let norm = m_norm(pencil, &y);
        y.iter_mut().for_each(|x| *x /= norm);
        u = y;
        let ku = pencil.stiffness.matvec(&u);
        let mu = pencil.mass.matvec(&u);
        let rq: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
        let r: f64 = ku
            .iter()
            .zip(&mu)
            .map(|(k, m)| (k - rq * m).powi(2))
            .sum::<f64>()
            .sqrt();
        let ku_norm = ku.iter().map(|v| v * v).sum::<f64>().sqrt();
        residual = r / ku_norm.max(f64::MIN_POSITIVE);
        if residual <= 1e-8 {
            let pivot = u
                .iter()
                .copied()
                .fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
            if pivot < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
            }
            return Ok(u);
        }
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn dense(m: &SymBand) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |r, c| m.get(r, c))
}

/// Full sorted spectrum via Cholesky reduction to standard form and a
/// dense symmetric eigensolver. Test oracle for small pencils.
pub fn dense_oracle(pencil: &BandedPencil) -> Result<Vec<f64>> {
    let n = pencil.dim();
    if n > DENSE_LIMIT {
        return Err(Error::Capacity {
            requested: n,
            available: DENSE_LIMIT,
        });
    }
    let chol = dense(&pencil.mass)
        .cholesky()
        .ok_or_else(|| Error::param("mass", "not positive definite"))?;
    let l = chol.l();
    let k = dense(&pencil.stiffness);
    // C = L⁻¹ K L⁻ᵀ
    let y = l
        .solve_lower_triangular(&k)
        .expect("Cholesky factor is nonsingular");
    let c = l
        .solve_lower_triangular(&y.transpose())
        .expect("Cholesky factor is nonsingular");
    let c = 0.5 * (&c + c.transpose());
    let mut values: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}
