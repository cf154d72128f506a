//! The immersion `(x, y) ↦ r_β(x) + R(α(x))·y` of `ℝ × S` into space, its
//! induced metric, and a surface mesh of the tube boundary.

use std::io::Write;

use crate::cross_section::CrossSection;
use crate::error::{Error, Result};
use crate::twist::TwistProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideParams {
    beta: f64,
    pub twist: TwistProfile,
}

impl WaveguideParams {
    pub fn new(beta: f64, twist: TwistProfile) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::param(
                "beta",
                format!("must be finite and ≥ 0, got {beta}"),
            ));
        }
        Ok(Self { beta, twist })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Point of the waveguide `Ω_β` with straightened coordinates `(x, y₁, y₂)`.
pub fn map_point(x: f64, y1: f64, y2: f64, params: &WaveguideParams) -> Result<[f64; 3]> {
    let alpha = params.twist.evaluate(x)?.alpha;
    let (s, c) = alpha.sin_cos();
    Ok([x, y1 * c - y2 * s, params.beta * x + y1 * s + y2 * c])
}

/// The scalar fields entering the metric: `K`, `L` are the transverse
/// components of `∂ₓ` of the immersion, `(M, N)` their rotation by `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearTwistTerms {
    pub k: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub alpha: f64,
}

impl ShearTwistTerms {
    pub fn at(x: f64, y1: f64, y2: f64, params: &WaveguideParams) -> Result<Self> {
        let t = params.twist.evaluate(x)?;
        let (s, c) = t.alpha.sin_cos();
        let ap = t.alpha_prime;
        let k = -ap * y1 * s - ap * y2 * c;
        let l = ap * y1 * c - ap * y2 * s + params.beta;
        Ok(Self {
            k,
            l,
            m: k * c + l * s,
            n: -k * s + l * c,
            alpha: t.alpha,
        })
    }
}

/// Symmetric 3×3 metric tensor in the coordinates `(x, y₁, y₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric3 {
    pub entries: [[f64; 3]; 3],
}

impl Metric3 {
    pub fn determinant(&self) -> f64 {
        let g = &self.entries;
        g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
            - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
            + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
    }

    pub fn is_symmetric(&self) -> bool {
        let g = &self.entries;
        (0..3).all(|i| (0..3).all(|j| g[i][j] == g[j][i]))
    }
}

pub fn metric(x: f64, y1: f64, y2: f64, params: &WaveguideParams) -> Result<Metric3> {
    let t = ShearTwistTerms::at(x, y1, y2, params)?;
    Ok(Metric3 {
        entries: [
            [1.0 + t.k * t.k + t.l * t.l, t.m, t.n],
            [t.m, 1.0, 0.0],
            [t.n, 0.0, 1.0],
        ],
    })
}

/// Quadrilateral surface mesh; faces hold 0-based vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 4]>,
    /// Straightened coordinates `(x, y₁, y₂)` of every vertex.
    pub preimages: Vec<[f64; 3]>,
}

impl SurfaceMesh {
    /// Writes `v x y z` / `f i j k l` lines with 1-based indices.
    pub fn write_obj<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(out, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1)?;
        }
        Ok(())
    }
}

/// Meshes the trace of `∂Ω_β` over `x_range`: `axial` uniformly spaced
/// rings, each carrying `per_side` points on every side of the rectangle.
pub fn surface_mesh(
    params: &WaveguideParams,
    section: &CrossSection,
    x_range: (f64, f64),
    axial: usize,
    per_side: usize,
) -> Result<SurfaceMesh> {
    let (width, height) = match section {
        CrossSection::Rectangle { width, height } => (*width, *height),
        CrossSection::MaskedGrid(_) => {
            return Err(Error::UnsupportedShape(
                "surface meshes need a rectangular cross-section".into(),
            ))
        }
    };
    if axial < 2 || per_side < 2 {
        return Err(Error::param(
            "resolution",
            "need at least 2 points per direction",
        ));
    }
    if !(x_range.1 > x_range.0) {
        return Err(Error::param("x_range", "upper end must exceed lower end"));
    }

    // Counter-clockwise walk around ∂S starting at the origin corner.
    let corners = [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)];
    let mut ring = Vec::with_capacity(4 * per_side);
    for side in 0..4 {
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        for k in 0..per_side {
            let t = k as f64 / per_side as f64;
            ring.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }

    let ring_len = ring.len();
    let mut vertices = Vec::with_capacity(axial * ring_len);
    let mut preimages = Vec::with_capacity(axial * ring_len);
    for i in 0..axial {
        let x = x_range.0 + (x_range.1 - x_range.0) * i as f64 / (axial - 1) as f64;
        for &(y1, y2) in &ring {
            vertices.push(map_point(x, y1, y2, params)?);
            preimages.push([x, y1, y2]);
        }
    }
    let mut faces = Vec::with_capacity((axial - 1) * ring_len);
    for i in 0..axial - 1 {
        for k in 0..ring_len {
            let next = (k + 1) % ring_len;
            faces.push([
                i * ring_len + k,
                i * ring_len + next,
                (i + 1) * ring_len + next,
                (i + 1) * ring_len + k,
            ]);
        }
    }
    Ok(SurfaceMesh {
        vertices,
        faces,
        preimages,
    })
}
