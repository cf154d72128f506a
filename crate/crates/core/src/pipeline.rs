//! End-to-end runs behind the command-line tool: each function takes a
//! [`Problem`] and returns data ready to be written.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::assembly::{assemble_coupled, far_field_thresholds, Grid1D};
use crate::config::{RunConfig, SectionConfig, TwistKind};
use crate::cross_section::{CrossSection, GridMask, Moments};
use crate::eigen::{eigs_below, SpectralResult};
use crate::error::{Error, Result};
use crate::geometry::{surface_mesh, SurfaceMesh, WaveguideParams};
use crate::potential::{IntegralReport, PotentialSpec, DEFAULT_WINDOW, RULE_ORDER};
use crate::twist::{TabulatedTwist, TwistProfile};

pub const CSV_VERSION: &str = "1";

/// A fully resolved run: cross-section, twist, shear and discretisation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub section: CrossSection,
    pub beta: f64,
    pub twist: TwistProfile,
    pub half_length: f64,
    pub nx: usize,
    pub modes: usize,
    pub tol: f64,
}

impl Problem {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let section = match &cfg.cross_section {
            SectionConfig::Rectangle { a, b } => CrossSection::rectangle(*a, *b)?,
            SectionConfig::Mask { path } => CrossSection::MaskedGrid(GridMask::load(path)?),
        };
        let t = &cfg.twist;
        let twist = match t.kind {
            TwistKind::Tanh => TwistProfile::Tanh {
                amplitude: t.c,
                offset: t.offset,
            },
            TwistKind::Bump => TwistProfile::Bump {
                amplitude: t.c,
                radius: t.radius,
                offset: t.offset,
            },
            TwistKind::Tabulated => {
                let path = t.file.as_ref().expect("validated");
                TwistProfile::Tabulated(TabulatedTwist::load(path)?)
            }
        };
        Ok(Self {
            section,
            beta: cfg.beta,
            twist,
            half_length: cfg.half_length,
            nx: cfg.nx,
            modes: cfg.modes,
            tol: cfg.tol,
        })
    }

    /// Amplitude of a tanh or bump twist; `NaN` for tabulated twists.
    pub fn amplitude(&self) -> f64 {
        match self.twist {
            TwistProfile::Tanh { amplitude, .. } | TwistProfile::Bump { amplitude, .. } => {
                amplitude
            }
            TwistProfile::Tabulated(_) => f64::NAN,
        }
    }

    fn with_amplitude(&self, c: f64) -> Result<Self> {
        let twist = match &self.twist {
            TwistProfile::Tanh { offset, .. } => TwistProfile::Tanh {
                amplitude: c,
                offset: *offset,
            },
            TwistProfile::Bump { radius, offset, .. } => TwistProfile::Bump {
                amplitude: c,
                radius: *radius,
                offset: *offset,
            },
            TwistProfile::Tabulated(_) => {
                return Err(Error::param(
                    "c",
                    "a tabulated twist has no amplitude to sweep",
                ))
            }
        };
        Ok(Self {
            twist,
            ..self.clone()
        })
    }

    fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::param("beta", "must be ≥ 0"));
        }
        Ok(Self {
            beta,
            ..self.clone()
        })
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        let (_, chi) = self.section.first_eigenpair(self.beta)?;
        PotentialSpec::new(self.section.moments(&chi), self.beta, self.twist.clone())
    }
}

/// Ground transverse energy and moments of the cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionReport {
    pub beta: f64,
    pub e1: f64,
    pub moments: Moments,
}

impl SectionReport {
    pub fn to_kv(&self) -> String {
        let m = &self.moments;
        let mut out = String::new();
        let _ = writeln!(out, "beta = {}", self.beta);
        let _ = writeln!(out, "E1 = {}", self.e1);
        for (k, v) in [
            ("A1", m.a1),
            ("A2", m.a2),
            ("A3", m.a3),
            ("B1", m.b1),
            ("B2", m.b2),
            ("B3", m.b3),
            ("C1", m.c1),
            ("C2", m.c2),
            ("C3", m.c3),
            ("C4", m.c4),
        ] {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "twist_coefficient = {}", m.twist_coefficient());
        out
    }

    pub fn to_csv(&self) -> String {
        let m = &self.moments;
        format!(
            "# waveguide cross-section v{CSV_VERSION}\nbeta,E1,A1,A2,A3,B1,B2,B3,C1,C2,C3,C4\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.beta, self.e1, m.a1, m.a2, m.a3, m.b1, m.b2, m.b3, m.c1, m.c2, m.c3, m.c4
        )
    }
}

pub fn cross_section_report(problem: &Problem) -> Result<SectionReport> {
    let (e1, chi) = problem.section.first_eigenpair(problem.beta)?;
    Ok(SectionReport {
        beta: problem.beta,
        e1,
        moments: problem.section.moments(&chi),
    })
}

/// Samples of the twist and effective potential, with the `∫V` report.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    pub rows: Vec<[f64; 4]>,
    pub report: IntegralReport,
}

impl PotentialTable {
    pub fn to_csv(&self) -> String {
        let r = &self.report;
        let mut out = String::new();
        let _ = writeln!(out, "# waveguide potential v{CSV_VERSION}");
        let _ = writeln!(out, "# integral_V = {}", r.integral_v);
        let _ = writeln!(out, "# integrable = {}", r.integrable);
        let _ = writeln!(out, "# hypothesis_met = {}", r.hypothesis_met);
        let _ = writeln!(out, "# window = {}", r.window);
        let _ = writeln!(out, "# tail = {}", r.tail);
        let _ = writeln!(out, "# quadrature_error = {}", r.quadrature.error_estimate);
        out.push_str("x,alpha,alpha_prime,V\n");
        for [x, a, ap, v] in &self.rows {
            let _ = writeln!(out, "{x},{a},{ap},{v}");
        }
        out
    }

    pub fn to_kv(&self) -> String {
        let r = &self.report;
        format!(
            "integral_V = {}\nintegrable = {}\nhypothesis_met = {}\nwindow = {}\ntail = {}\nquadrature_error = {}\n",
            r.integral_v, r.integrable, r.hypothesis_met, r.window, r.tail, r.quadrature.error_estimate
        )
    }
}

/// `samples` equally spaced points on `[−L, L]`.
pub fn potential_table(problem: &Problem, samples: usize) -> Result<PotentialTable> {
    if samples < 2 {
        return Err(Error::param("samples", "need at least 2"));
    }
    let spec = problem.potential()?;
    let l = problem.half_length;
    let mut rows = Vec::with_capacity(samples);
    for k in 0..samples {
        let x = -l + 2.0 * l * k as f64 / (samples - 1) as f64;
        let t = problem.twist.evaluate(x)?;
        rows.push([x, t.alpha, t.alpha_prime, spec.value_at(t)]);
    }
    let report = spec.integral(DEFAULT_WINDOW.max(l), RULE_ORDER)?;
    Ok(PotentialTable { rows, report })
}

/// `(n, q(ψ_n) − E₁‖ψ_n‖²)` for `n = 1..=max_n`, and `∫V`.
#[derive(Debug, Clone)]
pub struct WitnessTable {
    pub integral_v: f64,
    pub rows: Vec<(u32, f64)>,
}

impl WitnessTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# waveguide witness v{CSV_VERSION}\n# integral_V = {}\nn,q\n",
            self.integral_v
        );
        for (n, q) in &self.rows {
            let _ = writeln!(out, "{n},{q}");
        }
        out
    }

    pub fn to_kv(&self) -> String {
        let mut out = format!("integral_V = {}\n", self.integral_v);
        for (n, q) in &self.rows {
            let _ = writeln!(out, "q_{n} = {q}");
        }
        out
    }
}

pub fn witness_table(problem: &Problem, max_n: u32) -> Result<WitnessTable> {
    let spec = problem.potential()?;
    let integral_v = spec.integral(DEFAULT_WINDOW, RULE_ORDER)?.integral_v;
    let rows = (1..=max_n)
        .map(|n| spec.witness_energy(n as f64).map(|q| (n, q)))
        .collect::<Result<_>>()?;
    Ok(WitnessTable { integral_v, rows })
}

fn solve(problem: &Problem, nx: usize) -> Result<SpectralResult> {
    let grid = Grid1D::new(problem.half_length, nx)?;
    let basis = problem.section.mode_basis(problem.beta, problem.modes)?;
    let pencil = assemble_coupled(
        &grid,
        &problem.section,
        &basis,
        &problem.twist,
        problem.beta,
    )?;
    let mut result = eigs_below(&pencil, pencil.threshold, problem.tol)?;
    let (left, right) =
        far_field_thresholds(&problem.section, &basis, &problem.twist, problem.beta)?;
    let d = &mut result.diagnostics;
    d.half_length = Some(problem.half_length);
    d.nx = Some(nx);
    d.far_field_threshold = Some(left.min(right));
    Ok(result)
}

/// Discrete eigenvalues of the coupled mode-Galerkin operator below
/// `E₁(β)`. The discretisation error is estimated from a rerun on the
/// nested grid of half the resolution, assuming second-order convergence.
pub fn spectrum(problem: &Problem) -> Result<SpectralResult> {
    let mut fine = solve(problem, problem.nx)?;
    let coarse_nx = (problem.nx + 1) / 2 - 1;
    if coarse_nx >= 3 && !fine.eigenvalues.is_empty() {
        let coarse = solve(problem, coarse_nx)?;
        let err = fine
            .eigenvalues
            .iter()
            .zip(&coarse.eigenvalues)
            .map(|(f, c)| (c - f).abs() / 3.0)
            .fold(0.0, f64::max);
        // An eigenvalue missing on the coarse grid gives no usable estimate.
        fine.diagnostics.discretization_error = if coarse.count() < fine.count() {
            Some(f64::INFINITY)
        } else {
            Some(err)
        };
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    C,
    Beta,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::C => "c",
            SweepParameter::Beta => "beta",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub beta: f64,
    pub c: f64,
    pub result: SpectralResult,
}

/// Runs [`spectrum`] at each value concurrently; output keeps input order.
pub fn sweep(
    problem: &Problem,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<Vec<SweepPoint>> {
    values
        .par_iter()
        .map(|&v| {
            let p = match parameter {
                SweepParameter::C => problem.with_amplitude(v)?,
                SweepParameter::Beta => problem.with_beta(v)?,
            };
            Ok(SweepPoint {
                beta: p.beta,
                c: p.amplitude(),
                result: spectrum(&p)?,
            })
        })
        .collect()
}

/// CSV with one row per point: the swept parameter, the other parameter,
/// `lambda_1..lambda_K` (blank past the point's count), the count, then
/// the threshold, far-field threshold and discretisation error.
pub fn write_spectrum_csv<W: Write>(
    mut out: W,
    parameter: SweepParameter,
    points: &[SweepPoint],
) -> std::io::Result<()> {
    let width = points.iter().map(|p| p.result.count()).max().unwrap_or(0);
    let other = match parameter {
        SweepParameter::C => SweepParameter::Beta,
        SweepParameter::Beta => SweepParameter::C,
    };
    writeln!(out, "# waveguide spectrum v{CSV_VERSION}")?;
    let mut header = vec![parameter.name().to_string(), other.name().to_string()];
    header.extend((1..=width).map(|k| format!("lambda_{k}")));
    header.extend(
        [
            "count",
            "threshold",
            "far_field_threshold",
            "discretization_error",
        ]
        .map(String::from),
    );
    writeln!(out, "{}", header.join(","))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in points {
        let pick = |s: SweepParameter| match s {
            SweepParameter::C => p.c,
            SweepParameter::Beta => p.beta,
        };
        let mut row = vec![pick(parameter).to_string(), pick(other).to_string()];
        for k in 0..width {
            row.push(
                p.result
                    .eigenvalues
                    .get(k)
                    .map(|l| l.to_string())
                    .unwrap_or_default(),
            );
        }
        let d = &p.result.diagnostics;
        row.push(p.result.count().to_string());
        row.push(p.result.threshold.to_string());
        row.push(opt(d.far_field_threshold));
        row.push(opt(d.discretization_error));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Boundary surface over `[−L, L]`.
pub fn mesh(problem: &Problem, axial: usize, per_side: usize) -> Result<SurfaceMesh> {
    let params = WaveguideParams::new(problem.beta, problem.twist.clone())?;
    let l = problem.half_length;
    surface_mesh(&params, &problem.section, (-l, l), axial, per_side)
}
