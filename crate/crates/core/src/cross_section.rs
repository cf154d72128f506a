//! The cross-section `S`, eigenmodes of `T(β) = −∂₁² − (1+β²)∂₂²` with
//! Dirichlet conditions, and the weighted gradient integrals built from them.
//!
//! Rectangles `(0, a) × (0, b)` use the analytic sine basis and closed-form
//! integrals. Other shapes are given as a boolean lattice (`MaskedGrid`) and
//! use the 5-point scheme with centred differences on grid cells.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::banded::SymBand;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum CrossSection {
    Rectangle { width: f64, height: f64 },
    MaskedGrid(GridMask),
}

impl CrossSection {
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::param("cross_section.a", "must be positive"));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::param("cross_section.b", "must be positive"));
        }
        Ok(CrossSection::Rectangle { width, height })
    }

    /// The square `(0, π)²`.
    pub fn square_pi() -> Self {
        CrossSection::Rectangle {
            width: PI,
            height: PI,
        }
    }

    /// Lattice approximation of `(0, a) × (0, b)` with spacing `h`; `a/h` and
    /// `b/h` are rounded to the nearest integer.
    pub fn masked_rectangle(width: f64, height: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::param("h", "must be positive"));
        }
        let cols = (width / spacing).round() as usize;
        let rows = (height / spacing).round() as usize;
        if cols < 2 || rows < 2 {
            return Err(Error::InvalidDomain("fewer than one interior point".into()));
        }
        let (cols, rows) = (cols - 1, rows - 1);
        GridMask::new(spacing, cols, rows, vec![true; cols * rows]).map(CrossSection::MaskedGrid)
    }

    pub fn centroid(&self) -> (f64, f64) {
        match self {
            CrossSection::Rectangle { width, height } => (0.5 * width, 0.5 * height),
            CrossSection::MaskedGrid(g) => g.centroid(),
        }
    }

    /// The `count` lowest eigenpairs of `T(β)`, ascending and orthonormal in
    /// `L²(S)`.
    pub fn mode_basis(&self, beta: f64, count: usize) -> Result<Vec<Mode>> {
        check_beta(beta)?;
        if count == 0 {
            return Err(Error::param("modes", "need at least one mode"));
        }
        match self {
            CrossSection::Rectangle { width, height } => {
                Ok(sine_basis(*width, *height, beta, count))
            }
            CrossSection::MaskedGrid(g) => g.lowest_modes(beta, count),
        }
    }

    /// `E₁(β)` and the ground mode.
    pub fn first_eigenpair(&self, beta: f64) -> Result<(f64, Mode)> {
        let mut basis = self.mode_basis(beta, 1)?;
        let chi = basis.pop().expect("one mode requested");
        Ok((chi.eigenvalue, chi))
    }

    pub fn moments(&self, chi: &Mode) -> Moments {
        Moments::from(self.coupling_moments(chi, chi))
    }

    /// All weighted integrals of the mode pair `(φᵢ, φⱼ)` needed to restrict
    /// the straightened quadratic form to the mode basis.
    pub fn coupling_moments(&self, phi_i: &Mode, phi_j: &Mode) -> CouplingMoments {
        match (self, &phi_i.shape, &phi_j.shape) {
            (
                CrossSection::Rectangle { width, height },
                ModeShape::Sine { m: mi, n: ni, .. },
                ModeShape::Sine { m: mj, n: nj, .. },
            ) => sine_coupling(*width, *height, (*mi, *ni), (*mj, *nj)),
            (CrossSection::MaskedGrid(g), ModeShape::Grid(a), ModeShape::Grid(b)) => {
                g.coupling(a, b)
            }
            _ => panic!("mode shape does not match cross-section kind"),
        }
    }

    /// `L²(S)` inner product of two modes.
    pub fn inner_product(&self, phi_i: &Mode, phi_j: &Mode) -> f64 {
        match (self, &phi_i.shape, &phi_j.shape) {
            (
                CrossSection::Rectangle { width, height },
                ModeShape::Sine { m: mi, n: ni, .. },
                ModeShape::Sine { m: mj, n: nj, .. },
            ) => {
                let x = SineFactor::new(*width);
                let y = SineFactor::new(*height);
                x.sin_sin(0, *mi, *mj) * y.sin_sin(0, *ni, *nj)
            }
            (CrossSection::MaskedGrid(g), ModeShape::Grid(a), ModeShape::Grid(b)) => {
                let h2 = g.spacing * g.spacing;
                a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>() * h2
            }
            _ => panic!("mode shape does not match cross-section kind"),
        }
    }

    /// Largest deviation of the Gram matrix of `basis` from the identity.
    pub fn gram_deviation(&self, basis: &[Mode]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.inner_product(a, b) - target).abs());
            }
        }
        worst
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "beta",
            format!("must be finite and ≥ 0, got {beta}"),
        ))
    }
}

/// One Dirichlet eigenmode of `T(β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub index: usize,
    pub eigenvalue: f64,
    pub shape: ModeShape,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeShape {
    /// `(2/√(ab))·sin(mπy₁/a)·sin(nπy₂/b)`.
    Sine {
        m: usize,
        n: usize,
        width: f64,
        height: f64,
    },
    /// Samples on the full lattice of a [`GridMask`], zero off the mask.
    Grid(Vec<f64>),
}

impl Mode {
    /// Value and gradient at `(y₁, y₂)`; `None` for grid modes.
    pub fn eval(&self, y1: f64, y2: f64) -> Option<(f64, [f64; 2])> {
        match self.shape {
            ModeShape::Sine {
                m,
                n,
                width,
                height,
            } => {
                let (k1, k2) = (m as f64 * PI / width, n as f64 * PI / height);
                let norm = 2.0 / (width * height).sqrt();
                let (s1, c1) = (k1 * y1).sin_cos();
                let (s2, c2) = (k2 * y2).sin_cos();
                Some((norm * s1 * s2, [norm * k1 * c1 * s2, norm * k2 * s1 * c2]))
            }
            ModeShape::Grid(_) => None,
        }
    }
}

/// The ten cross-section constants of the ground mode `χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// `∫ y₂² |∂₁χ|²`
    pub a1: f64,
    /// `∫ y₂ |∂₁χ|²`
    pub a2: f64,
    /// `∫ |∂₁χ|²`
    pub a3: f64,
    /// `∫ y₁² |∂₂χ|²`
    pub b1: f64,
    /// `∫ y₁ |∂₂χ|²`
    pub b2: f64,
    /// `∫ |∂₂χ|²`
    pub b3: f64,
    /// `∫ y₁y₂ ∂₁χ ∂₂χ`
    pub c1: f64,
    /// `∫ y₂ ∂₁χ ∂₂χ`
    pub c2: f64,
    /// `∫ y₁ ∂₁χ ∂₂χ`
    pub c3: f64,
    /// `∫ ∂₁χ ∂₂χ`
    pub c4: f64,
}

impl Moments {
    /// `A₁ + B₁ − 2C₁ = ∫(y₂∂₁χ − y₁∂₂χ)²`, the coefficient of `α′²`.
    pub fn twist_coefficient(&self) -> f64 {
        self.a1 + self.b1 - 2.0 * self.c1
    }
}

impl From<CouplingMoments> for Moments {
    fn from(c: CouplingMoments) -> Self {
        Moments {
            a1: c.d1d1[0],
            a2: c.d1d1[1],
            a3: c.d1d1[2],
            b1: c.d2d2[0],
            b2: c.d2d2[1],
            b3: c.d2d2[2],
            c1: c.d1d2[0],
            c2: c.d1d2[1],
            c3: c.d1d2[2],
            c4: c.d1d2[3],
        }
    }
}

/// Weighted integrals for a mode pair `(φᵢ, φⱼ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingMoments {
    /// `∫ w ∂₁φᵢ ∂₁φⱼ` for `w = y₂², y₂, 1`.
    pub d1d1: [f64; 3],
    /// `∫ w ∂₂φᵢ ∂₂φⱼ` for `w = y₁², y₁, 1`.
    pub d2d2: [f64; 3],
    /// `∫ w ∂₁φᵢ ∂₂φⱼ` for `w = y₁y₂, y₂, y₁, 1`.
    pub d1d2: [f64; 4],
    /// `∫ w φᵢ ∂₁φⱼ` for `w = y₂, 1`.
    pub f_d1: [f64; 2],
    /// `∫ w φᵢ ∂₂φⱼ` for `w = y₁, 1`.
    pub f_d2: [f64; 2],
}

// ---------------------------------------------------------------------------
// Rectangle: analytic sine basis

fn sine_basis(width: f64, height: f64, beta: f64, count: usize) -> Vec<Mode> {
    let energy = |m: usize, n: usize| {
        let k1 = m as f64 * PI / width;
        let k2 = n as f64 * PI / height;
        k1 * k1 + (1.0 + beta * beta) * k2 * k2
    };
    let mut candidates: Vec<(usize, usize, f64)> = (1..=count)
        .flat_map(|m| (1..=count).map(move |n| (m, n)))
        .map(|(m, n)| (m, n, energy(m, n)))
        .collect();
    // Lexicographic order first; the stable sort keeps it among (near-)ties.
    candidates.sort_by(|a, b| {
        let scale = a.2.abs().max(b.2.abs());
        if (a.2 - b.2).abs() <= 1e-12 * scale {
            Ordering::Equal
        } else {
            a.2.total_cmp(&b.2)
        }
    });
    candidates
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(index, (m, n, eigenvalue))| Mode {
            index,
            eigenvalue,
            shape: ModeShape::Sine {
                m,
                n,
                width,
                height,
            },
        })
        .collect()
}

/// Integrals of products of `X_m(t) = √(2/ℓ)·sin(mπt/ℓ)` and their
/// derivatives against `tᵏ` on `(0, ℓ)`, using exact values of `sin(jπ)`
/// and `cos(jπ)`.
#[derive(Debug, Clone, Copy)]
struct SineFactor {
    len: f64,
}

impl SineFactor {
    fn new(len: f64) -> Self {
        Self { len }
    }

    fn wavenumber(&self, m: usize) -> f64 {
        m as f64 * PI / self.len
    }

    /// `∫₀^ℓ tᵏ cos(jπt/ℓ) dt`.
    fn cos_moment(&self, k: u32, j: i64) -> f64 {
        let l = self.len;
        if j == 0 {
            return l.powi(k as i32 + 1) / (k as f64 + 1.0);
        }
        let w = j as f64 * PI / l;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        match k {
            0 => 0.0,
            1 => (sign - 1.0) / (w * w),
            2 => 2.0 * l * sign / (w * w),
            _ => unreachable!("weights up to t² only"),
        }
    }

    /// `∫₀^ℓ tᵏ sin(jπt/ℓ) dt`.
    fn sin_moment(&self, k: u32, j: i64) -> f64 {
        let l = self.len;
        if j == 0 {
            return 0.0;
        }
        let w = j as f64 * PI / l;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        match k {
            0 => (1.0 - sign) / w,
            1 => -l * sign / w,
            2 => -l * l * sign / w + 2.0 * (sign - 1.0) / (w * w * w),
            _ => unreachable!("weights up to t² only"),
        }
    }

    /// `∫ tᵏ X_m X_p`.
    fn sin_sin(&self, k: u32, m: usize, p: usize) -> f64 {
        let (m, p) = (m as i64, p as i64);
        (self.cos_moment(k, m - p) - self.cos_moment(k, m + p)) / self.len
    }

    /// `∫ tᵏ X_m′ X_p′`.
    fn cos_cos(&self, k: u32, m: usize, p: usize) -> f64 {
        let scale = self.wavenumber(m) * self.wavenumber(p) / self.len;
        let (m, p) = (m as i64, p as i64);
        scale * (self.cos_moment(k, m - p) + self.cos_moment(k, m + p))
    }

    /// `∫ tᵏ X_m X_p′`.
    fn sin_cos(&self, k: u32, m: usize, p: usize) -> f64 {
        let scale = self.wavenumber(p) / self.len;
        let (m, p) = (m as i64, p as i64);
        scale * (self.sin_moment(k, m + p) + self.sin_moment(k, m - p))
    }
}

fn sine_coupling(width: f64, height: f64, i: (usize, usize), j: (usize, usize)) -> CouplingMoments {
    let x = SineFactor::new(width);
    let y = SineFactor::new(height);
    let ((mi, ni), (mj, nj)) = (i, j);
    // ∂₁φᵢ ∂₁φⱼ = X′X′ ⊗ YY, weights in y₂
    let xx_d = x.cos_cos(0, mi, mj);
    let d1d1 = [
        xx_d * y.sin_sin(2, ni, nj),
        xx_d * y.sin_sin(1, ni, nj),
        xx_d * y.sin_sin(0, ni, nj),
    ];
    // ∂₂φᵢ ∂₂φⱼ = XX ⊗ Y′Y′, weights in y₁
    let yy_d = y.cos_cos(0, ni, nj);
    let d2d2 = [
        x.sin_sin(2, mi, mj) * yy_d,
        x.sin_sin(1, mi, mj) * yy_d,
        x.sin_sin(0, mi, mj) * yy_d,
    ];
    // ∂₁φᵢ ∂₂φⱼ = (X_mi′ X_mj) ⊗ (Y_ni Y_nj′)
    let x_dp = |k| x.sin_cos(k, mj, mi);
    let y_pd = |k| y.sin_cos(k, ni, nj);
    let d1d2 = [
        x_dp(1) * y_pd(1),
        x_dp(0) * y_pd(1),
        x_dp(1) * y_pd(0),
        x_dp(0) * y_pd(0),
    ];
    // φᵢ ∂₁φⱼ = (X_mi X_mj′) ⊗ (Y_ni Y_nj)
    let x_pd0 = x.sin_cos(0, mi, mj);
    let f_d1 = [x_pd0 * y.sin_sin(1, ni, nj), x_pd0 * y.sin_sin(0, ni, nj)];
    // φᵢ ∂₂φⱼ = (X_mi X_mj) ⊗ (Y_ni Y_nj′)
    let y_pd0 = y.sin_cos(0, ni, nj);
    let f_d2 = [x.sin_sin(1, mi, mj) * y_pd0, x.sin_sin(0, mi, mj) * y_pd0];
    CouplingMoments {
        d1d1,
        d2d2,
        d1d2,
        f_d1,
        f_d2,
    }
}

// ---------------------------------------------------------------------------
// Masked lattice

/// Interior lattice points of a cross-section. Point `(i, j)` sits at
/// `((i+1)h, (j+1)h)`; the frame of points at index `−1` and `cols`/`rows`
/// is the Dirichlet boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    spacing: f64,
    cols: usize,
    rows: usize,
    inside: Vec<bool>,
}

impl GridMask {
    pub fn new(spacing: f64, cols: usize, rows: usize, inside: Vec<bool>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param("h", "must be positive"));
        }
        if inside.len() != cols * rows {
            return Err(Error::InvalidDomain(format!(
                "mask has {} cells, expected {cols}×{rows}",
                inside.len()
            )));
        }
        let mask = Self {
            spacing,
            cols,
            rows,
            inside,
        };
        let total = mask.inside.iter().filter(|&&b| b).count();
        if total == 0 {
            return Err(Error::InvalidDomain("empty mask".into()));
        }
        if mask.connected_count() != total {
            return Err(Error::InvalidDomain("mask is not connected".into()));
        }
        Ok(mask)
    }

    /// Reads a `h <spacing>` header followed by raster rows of `0`/`1`
    /// (whitespace between cells optional). The first raster row is
    /// `y₂ = h`, and column `i` is `y₁ = (i+1)h`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `h <spacing>` header".into(),
        })?;
        let spacing = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["h", value] => value.parse::<f64>().map_err(|e| Error::Parse {
                line: hline,
                message: format!("bad spacing: {e}"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    message: "expected `h <spacing>`".into(),
                })
            }
        };
        let mut inside = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (lineno, line) in lines {
            let mut row = Vec::new();
            for ch in line.chars().filter(|c| !c.is_whitespace()) {
                match ch {
                    '0' => row.push(false),
                    '1' => row.push(true),
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                }
            }
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("row has {} cells, expected {c}", row.len()),
                    })
                }
                _ => {}
            }
            inside.extend(row);
            rows += 1;
        }
        Self::new(spacing, cols.unwrap_or(0), rows, inside)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.cols && j < self.rows && self.inside[j * self.cols + i]
    }

    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        ((i + 1) as f64 * self.spacing, (j + 1) as f64 * self.spacing)
    }

    pub fn interior_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    fn connected_count(&self) -> usize {
        let Some(start) = self.inside.iter().position(|&b| b) else {
            return 0;
        };
        let mut seen = vec![false; self.inside.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 0;
        while let Some(k) = queue.pop_front() {
            count += 1;
            let (i, j) = (k % self.cols, k / self.cols);
            let neighbours = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            for (a, b) in neighbours {
                if self.contains(a, b) && !seen[b * self.cols + a] {
                    seen[b * self.cols + a] = true;
                    queue.push_back(b * self.cols + a);
                }
            }
        }
        count
    }

    fn centroid(&self) -> (f64, f64) {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for j in 0..self.rows {
            for i in 0..self.cols {
                if self.contains(i, j) {
                    let (x, y) = self.position(i, j);
                    sx += x;
                    sy += y;
                    n += 1.0;
                }
            }
        }
        (sx / n, sy / n)
    }

    /// Lattice value with zero padding.
    fn at(&self, values: &[f64], i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i as usize >= self.cols || j as usize >= self.rows {
            0.0
        } else {
            values[j as usize * self.cols + i as usize]
        }
    }

    /// Five-point discretisation of `T(β)` on the masked unknowns, plus the
    /// lattice index of every unknown.
    fn operator(&self, beta: f64) -> (SymBand, Vec<usize>) {
        let mut unknown = vec![usize::MAX; self.inside.len()];
        let mut lattice = Vec::new();
        for (k, &inside) in self.inside.iter().enumerate() {
            if inside {
                unknown[k] = lattice.len();
                lattice.push(k);
            }
        }
        let mut bandwidth = 1;
        for &k in &lattice {
            let (i, j) = (k % self.cols, k / self.cols);
            if j > 0 && self.contains(i, j - 1) {
                bandwidth = bandwidth.max(unknown[k] - unknown[k - self.cols]);
            }
        }
        let h2 = self.spacing * self.spacing;
        let cy = 1.0 + beta * beta;
        let mut a = SymBand::zeros(lattice.len(), bandwidth);
        for (u, &k) in lattice.iter().enumerate() {
            let (i, j) = (k % self.cols, k / self.cols);
            a.set(u, u, (2.0 + 2.0 * cy) / h2);
            if i > 0 && self.contains(i - 1, j) {
                a.set(u, unknown[k - 1], -1.0 / h2);
            }
            if j > 0 && self.contains(i, j - 1) {
                a.set(u, unknown[k - self.cols], -cy / h2);
            }
        }
        (a, lattice)
    }

    fn lowest_modes(&self, beta: f64, count: usize) -> Result<Vec<Mode>> {
        let dof = self.interior_count();
        if count > dof {
            return Err(Error::Capacity {
                requested: count,
                available: dof,
            });
        }
        let (op, lattice) = self.operator(beta);
        let factor = op.ldlt(0.0)?;
        // The band is mostly zero; keep only the stencil for products.
        let entries: Vec<(usize, usize, f64)> = (0..dof)
            .flat_map(|r| {
                let op = &op;
                (r.saturating_sub(op.bandwidth())..=r)
                    .map(move |c| (r, c, op.get(r, c)))
                    .filter(|e| e.2 != 0.0)
            })
            .collect();
        let block = (count + (count / 2).max(4)).min(dof);

        // Deterministic start: all-ones, then smooth lattice patterns.
        let mut vectors: Vec<Vec<f64>> = (0..block)
            .map(|b| {
                lattice
                    .iter()
                    .map(|&k| {
                        if b == 0 {
                            1.0
                        } else {
                            let (i, j) = ((k % self.cols) as f64, (k / self.cols) as f64);
                            (0.7 * b as f64 * (i + 1.0) + 0.37 * (b * b) as f64 * (j + 1.0)).sin()
                        }
                    })
                    .collect()
            })
            .collect();
        orthonormalize(&mut vectors);

        const MAX_ITERATIONS: usize = 1000;
        let mut previous = vec![f64::INFINITY; block];
        let mut residual = f64::INFINITY;
        for iteration in 0..MAX_ITERATIONS {
            vectors
                .par_iter_mut()
                .for_each(|v| factor.solve_in_place(v));
            orthonormalize(&mut vectors);
            let images: Vec<Vec<f64>> = vectors
                .iter()
                .map(|v| stencil_matvec(&entries, v))
                .collect();
            let projected = DMatrix::from_fn(block, block, |r, c| dot(&vectors[r], &images[c]));
            let projected = 0.5 * (&projected + projected.transpose());
            let eig = SymmetricEigen::new(projected);
            let mut order: Vec<usize> = (0..block).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let ritz: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
            let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
                order
                    .iter()
                    .map(|&k| {
                        let mut out = vec![0.0; src[0].len()];
                        for (r, s) in src.iter().enumerate() {
                            let w = eig.eigenvectors[(r, k)];
                            out.iter_mut().zip(s).for_each(|(o, v)| *o += w * v);
                        }
                        out
                    })
                    .collect()
            };
            let new_vectors = rotate(&vectors);
            let new_images = rotate(&images);
            vectors = new_vectors;

            residual = (0..count)
                .map(|k| {
                    let r: f64 = new_images[k]
                        .iter()
                        .zip(&vectors[k])
                        .map(|(av, v)| (av - ritz[k] * v).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    r / ritz[k]
                })
                .fold(0.0, f64::max);
            let change = (0..count)
                .map(|k| (ritz[k] - previous[k]).abs() / ritz[k])
                .fold(0.0, f64::max);
            previous = ritz;
            if iteration > 0 && change <= 1e-10 && residual <= 1e-9 {
                return Ok(self.finish_modes(&lattice, &vectors[..count], &previous[..count]));
            }
        }
        Err(Error::Convergence {
            iterations: MAX_ITERATIONS,
            residual,
        })
    }

    fn finish_modes(&self, lattice: &[usize], vectors: &[Vec<f64>], values: &[f64]) -> Vec<Mode> {
        let scale = 1.0 / self.spacing;
        let (cx, cy) = self.centroid();
        let centre = lattice
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let d = |k: usize| {
                    let (x, y) = self.position(k % self.cols, k / self.cols);
                    (x - cx).powi(2) + (y - cy).powi(2)
                };
                d(*a.1).total_cmp(&d(*b.1))
            })
            .map(|(u, _)| u)
            .expect("nonempty mask");
        vectors
            .iter()
            .zip(values)
            .enumerate()
            .map(|(index, (v, &eigenvalue))| {
                // Sign: positive at the centroid, else at the largest entry.
                let pivot = if v[centre].abs() > 1e-8 {
                    v[centre]
                } else {
                    v.iter()
                        .copied()
                        .fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m })
                };
                let sign = if pivot < 0.0 { -scale } else { scale };
                let mut values = vec![0.0; self.inside.len()];
                for (u, &k) in lattice.iter().enumerate() {
                    values[k] = sign * v[u];
                }
                Mode {
                    index,
                    eigenvalue,
                    shape: ModeShape::Grid(values),
                }
            })
            .collect()
    }

    /// Weighted integrals by midpoint quadrature over lattice cells, with
    /// gradients from centred differences across each cell.
    fn coupling(&self, a: &[f64], b: &[f64]) -> CouplingMoments {
        let h = self.spacing;
        let mut out = CouplingMoments::default();
        for j in -1..self.rows as isize {
            for i in -1..self.cols as isize {
                let corners = |v: &[f64]| {
                    [
                        self.at(v, i, j),
                        self.at(v, i + 1, j),
                        self.at(v, i, j + 1),
                        self.at(v, i + 1, j + 1),
                    ]
                };
                let ca = corners(a);
                let cb = corners(b);
                if ca.iter().all(|&v| v == 0.0) && cb.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let grad = |c: [f64; 4]| {
                    (
                        0.25 * (c[0] + c[1] + c[2] + c[3]),
                        0.5 * ((c[1] - c[0]) + (c[3] - c[2])) / h,
                        0.5 * ((c[2] - c[0]) + (c[3] - c[1])) / h,
                    )
                };
                let (va, a1, a2) = grad(ca);
                let (_, b1, b2) = grad(cb);
                let y1 = (i as f64 + 1.5) * h;
                let y2 = (j as f64 + 1.5) * h;
                let d11 = a1 * b1;
                let d22 = a2 * b2;
                let d12 = a1 * b2;
                out.d1d1[0] += y2 * y2 * d11;
                out.d1d1[1] += y2 * d11;
                out.d1d1[2] += d11;
                out.d2d2[0] += y1 * y1 * d22;
                out.d2d2[1] += y1 * d22;
                out.d2d2[2] += d22;
                out.d1d2[0] += y1 * y2 * d12;
                out.d1d2[1] += y2 * d12;
                out.d1d2[2] += y1 * d12;
                out.d1d2[3] += d12;
                out.f_d1[0] += y2 * va * b1;
                out.f_d1[1] += va * b1;
                out.f_d2[0] += y1 * va * b2;
                out.f_d2[1] += va * b2;
            }
        }
        let cell = h * h;
        for v in out
            .d1d1
            .iter_mut()
            .chain(out.d2d2.iter_mut())
            .chain(out.d1d2.iter_mut())
            .chain(out.f_d1.iter_mut())
            .chain(out.f_d2.iter_mut())
        {
            *v *= cell;
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram–Schmidt, applied twice.
fn orthonormalize(vectors: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for k in 0..vectors.len() {
            let (done, rest) = vectors.split_at_mut(k);
            let v = &mut rest[0];
            for u in done.iter() {
                let c = dot(u, v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
            let norm = dot(v, v).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

/// `A·x` for a symmetric matrix given by its lower-triangle nonzeros.
fn stencil_matvec(entries: &[(usize, usize, f64)], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for &(r, c, v) in entries {
        y[r] += v * x[c];
        if r != c {
            y[c] += v * x[r];
        }
    }
    y
}
