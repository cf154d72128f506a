//! Finite-element pencils `(K, M)` for the straightened quadratic form on the
//! truncated strip `(−L, L) × S` with Dirichlet ends.
//!
//! Unknowns are P1 hat functions in `x` times cross-section modes, ordered
//! node-major: unknown `p·N + i` is node `p`, mode `i`.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::banded::SymBand;
use crate::cross_section::{CouplingMoments, CrossSection, Mode};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::quadrature::GaussLegendre;
use crate::twist::{TwistProfile, TwistSample};

/// Element quadrature order.
const ELEMENT_ORDER: usize = 4;

/// Uniform partition of `(−L, L)`; only the `interior` nodes carry unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    half_length: f64,
    interior: usize,
}

impl Grid1D {
    pub fn new(half_length: f64, interior: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::param("domain.L", "must be positive"));
        }
        if interior < 3 {
            return Err(Error::param("domain.nx", "need at least 3 interior nodes"));
        }
        Ok(Self {
            half_length,
            interior,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn interior(&self) -> usize {
        self.interior
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.interior + 1) as f64
    }

    /// Coordinate of node `p`, where `p = 0` and `p = interior + 1` are the
    /// Dirichlet ends.
    pub fn node(&self, p: usize) -> f64 {
        -self.half_length + p as f64 * self.spacing()
    }

    /// Interior node coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.interior).map(|p| self.node(p)).collect()
    }

    /// Grid with every element split in two; its nodes contain these.
    pub fn refined(&self) -> Self {
        Self {
            half_length: self.half_length,
            interior: 2 * self.interior + 1,
        }
    }
}

/// Symmetric stiffness/mass pair with the reference energy it is compared
/// against.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedPencil {
    pub stiffness: SymBand,
    pub mass: SymBand,
    pub threshold: f64,
    pub modes: usize,
}

impl BandedPencil {
    pub fn new(stiffness: SymBand, mass: SymBand, threshold: f64) -> Self {
        assert_eq!(stiffness.dim(), mass.dim(), "pencil dimension mismatch");
        Self {
            stiffness,
            mass,
            threshold,
            modes: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn bandwidth(&self) -> usize {
        self.stiffness.bandwidth().max(self.mass.bandwidth())
    }

    /// Writes the header `n bandwidth`, then for each matrix (stiffness,
    /// then mass) one line per row with its lower-band entries
    /// `a(r, r−bw) … a(r, r)`, zero-filled before the first column.
    pub fn write_banded<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let bw = self.bandwidth();
        writeln!(out, "{} {}", self.dim(), bw)?;
        for m in [&self.stiffness, &self.mass] {
            for r in 0..self.dim() {
                let row: Vec<String> = (0..=bw)
                    .rev()
                    .map(|off| {
                        if off > r {
                            "0".to_string()
                        } else {
                            format!("{:e}", m.get(r, r - off))
                        }
                    })
                    .collect();
                writeln!(out, "{}", row.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Element loop shared by both assemblies. `local` receives the quadrature
/// point, weight (including the Jacobian), the two hat values and slopes,
/// and adds contributions through the callback.
fn for_each_quadrature_point<F>(grid: &Grid1D, mut visit: F) -> Result<()>
where
    F: FnMut(usize, f64, f64, [f64; 2], [f64; 2]) -> Result<()>,
{
    let rule = GaussLegendre::new(ELEMENT_ORDER);
    let h = grid.spacing();
    for e in 0..=grid.interior {
        let (xl, xr) = (grid.node(e), grid.node(e + 1));
        for (x, w) in rule.mapped(xl, xr) {
            let shape = [(xr - x) / h, (x - xl) / h];
            let slope = [-1.0 / h, 1.0 / h];
            visit(e, x, w, shape, slope)?;
        }
    }
    Ok(())
}

/// Local node `a ∈ {0, 1}` of element `e` as an interior unknown index.
fn unknown(grid: &Grid1D, e: usize, a: usize) -> Option<usize> {
    let p = e + a;
    (p >= 1 && p <= grid.interior).then(|| p - 1)
}

/// Single-mode pencil for `h(u) = ∫|u′|² + (E₁ + V)|u|²`.
pub fn assemble_effective_1d(grid: &Grid1D, spec: &PotentialSpec, e1: f64) -> Result<BandedPencil> {
    assemble_schrodinger_1d(grid, e1, |x| spec.value(x))
}

/// Pencil of `−u″ + (e1 + v)u` with Dirichlet ends; the threshold is `e1`.
pub fn assemble_schrodinger_1d<V>(grid: &Grid1D, e1: f64, mut v: V) -> Result<BandedPencil>
where
    V: FnMut(f64) -> Result<f64>,
{
    let n = grid.interior;
    let mut k = SymBand::zeros(n, 1);
    let mut m = SymBand::zeros(n, 1);
    for_each_quadrature_point(grid, |e, x, w, shape, slope| {
        let z = e1 + v(x)?;
        for a in 0..2 {
            let Some(r) = unknown(grid, e, a) else {
                continue;
            };
            for b in 0..=a {
                let Some(c) = unknown(grid, e, b) else {
                    continue;
                };
                k.add(r, c, w * (slope[a] * slope[b] + z * shape[a] * shape[b]));
                m.add(r, c, w * shape[a] * shape[b]);
            }
        }
        Ok(())
    })?;
    Ok(BandedPencil {
        stiffness: k,
        mass: m,
        threshold: e1,
        modes: 1,
    })
}

/// Mode-pair coefficients of the straightened form. For `ψ = Σ uᵢ(x)φᵢ(y)`
///
/// ```text
/// Q(ψ) = Σᵢ ∫|uᵢ′|² + 2 Σᵢⱼ ∫ uᵢ′uⱼ Fᵢⱼ(x) + Σᵢⱼ ∫ uᵢuⱼ Zᵢⱼ(x)
/// ```
///
/// with `D = a∂₁ + b∂₂`, `a = α′y₂ − β sin α`, `b = −(α′y₁ + β cos α)`,
/// `Fᵢⱼ = ∫φᵢDφⱼ` and `Zᵢⱼ = ∫DφᵢDφⱼ + ∫∇φᵢ·∇φⱼ`.
#[derive(Debug, Clone)]
pub struct ModeCoupling {
    count: usize,
    pairs: Vec<CouplingMoments>,
    beta: f64,
}

impl ModeCoupling {
    pub fn new(section: &CrossSection, basis: &[Mode], beta: f64) -> Result<Self> {
        let deviation = section.gram_deviation(basis);
        if deviation > 1e-8 {
            return Err(Error::Basis { deviation });
        }
        let count = basis.len();
        let mut pairs = Vec::with_capacity(count * count);
        for a in basis {
            for b in basis {
                pairs.push(section.coupling_moments(a, b));
            }
        }
        Ok(Self { count, pairs, beta })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    fn pair(&self, i: usize, j: usize) -> &CouplingMoments {
        &self.pairs[i * self.count + j]
    }

    /// `(F, Z)` at one twist sample, both row-major `N×N`.
    pub fn coefficients(&self, t: TwistSample) -> (Vec<f64>, Vec<f64>) {
        let n = self.count;
        let b = self.beta;
        let ap = t.alpha_prime;
        let (s, c) = t.alpha.sin_cos();
        let mut f = vec![0.0; n * n];
        let mut z = vec![0.0; n * n];
        // ∫ a·∂₁φᵢ · b·∂₂φⱼ
        let mixed = |p: &CouplingMoments| {
            -ap * ap * p.d1d2[0] - ap * b * c * p.d1d2[1]
                + ap * b * s * p.d1d2[2]
                + b * b * s * c * p.d1d2[3]
        };
        for i in 0..n {
            for j in 0..n {
                let p = self.pair(i, j);
                f[i * n + j] =
                    ap * p.f_d1[0] - b * s * p.f_d1[1] - ap * p.f_d2[0] - b * c * p.f_d2[1];
                if j > i {
                    continue;
                }
                let aa =
                    ap * ap * p.d1d1[0] - 2.0 * ap * b * s * p.d1d1[1] + b * b * s * s * p.d1d1[2];
                let bb =
                    ap * ap * p.d2d2[0] + 2.0 * ap * b * c * p.d2d2[1] + b * b * c * c * p.d2d2[2];
                let ab = mixed(p) + mixed(self.pair(j, i));
                let grad = p.d1d1[2] + p.d2d2[2];
                let v = aa + bb + ab + grad;
                z[i * n + j] = v;
                z[j * n + i] = v;
            }
        }
        (f, z)
    }
}

/// Coupled mode-Galerkin pencil. The threshold is the lowest basis
/// eigenvalue, `E₁(β)`.
pub fn assemble_coupled(
    grid: &Grid1D,
    section: &CrossSection,
    basis: &[Mode],
    twist: &TwistProfile,
    beta: f64,
) -> Result<BandedPencil> {
    if basis.is_empty() {
        return Err(Error::param("modes", "need at least one mode"));
    }
    let coupling = ModeCoupling::new(section, basis, beta)?;
    let nm = coupling.count();
    let n = grid.interior * nm;
    let bw = 2 * nm - 1;
    let mut k = SymBand::zeros(n, bw);
    let mut m = SymBand::zeros(n, nm);
    for_each_quadrature_point(grid, |e, x, w, shape, slope| {
        let (f, z) = coupling.coefficients(twist.evaluate(x)?);
        for a in 0..2 {
            let Some(pa) = unknown(grid, e, a) else {
                continue;
            };
            for b in 0..2 {
                let Some(pb) = unknown(grid, e, b) else {
                    continue;
                };
                let mass = w * shape[a] * shape[b];
                for i in 0..nm {
                    let r = pa * nm + i;
                    for j in 0..nm {
                        let c = pb * nm + j;
                        if c > r {
                            continue;
                        }
                        let mut v = w
                            * (f[i * nm + j] * slope[a] * shape[b]
                                + f[j * nm + i] * shape[a] * slope[b]
                                + z[i * nm + j] * shape[a] * shape[b]);
                        if i == j {
                            v += w * slope[a] * slope[b];
                            m.add(r, c, mass);
                        }
                        k.add(r, c, v);
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(BandedPencil {
        stiffness: k,
        mass: m,
        threshold: basis[0].eigenvalue,
        modes: nm,
    })
}

/// Bottom of the mode-Galerkin operator's continuum at each end of the
/// guide: the lowest eigenvalue of `Z` with `α′ = 0` and `α` at its limit.
/// Returns `(left, right)`.
pub fn far_field_thresholds(
    section: &CrossSection,
    basis: &[Mode],
    twist: &TwistProfile,
    beta: f64,
) -> Result<(f64, f64)> {
    let coupling = ModeCoupling::new(section, basis, beta)?;
    let n = coupling.count();
    let (left, right) = twist.end_angles();
    let lowest = |alpha: f64| {
        let (_, z) = coupling.coefficients(TwistSample {
            alpha,
            alpha_prime: 0.0,
        });
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &z));
        eig.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    Ok((lowest(left), lowest(right)))
}
