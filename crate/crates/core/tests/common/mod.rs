//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

pub mod fd3d;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use waveguide::assembly::BandedPencil;
use waveguide::banded::SymBand;

/// Random symmetric stiffness with bandwidth `bw` and a diagonally dominant
/// (hence positive definite) mass of the same bandwidth.
pub fn random_pencil(rng: &mut ChaCha8Rng, n: usize, bw: usize) -> BandedPencil {
    let mut k = SymBand::zeros(n, bw);
    let mut m = SymBand::zeros(n, bw);
    let mut row_sum = vec![0.0; n];
    for r in 0..n {
        for c in r.saturating_sub(bw)..=r {
            k.set(r, c, rng.random_range(-1.0..1.0));
            if c < r {
                let v: f64 = rng.random_range(-0.5..0.5);
                m.set(r, c, v);
                row_sum[r] += v.abs();
                row_sum[c] += v.abs();
            }
        }
    }
    for (r, s) in row_sum.iter().enumerate() {
        m.set(r, r, s + rng.random_range(0.5..1.5));
    }
    BandedPencil::new(k, m, 0.0)
}

/// P1 stiffness and mass of `−u″` on an interval of length `len` with
/// `n` interior nodes.
pub fn interval_laplacian(len: f64, n: usize) -> BandedPencil {
    let h = len / (n + 1) as f64;
    let mut k = SymBand::zeros(n, 1);
    let mut m = SymBand::zeros(n, 1);
    for r in 0..n {
        k.set(r, r, 2.0 / h);
        m.set(r, r, 4.0 * h / 6.0);
        if r > 0 {
            k.set(r, r - 1, -1.0 / h);
            m.set(r, r - 1, h / 6.0);
        }
    }
    BandedPencil::new(k, m, 0.0)
}

/// Dirichlet ground state of the unit-depth square well on `|x| < 1`,
/// `−u″ − 1_{|x|<1} u = E u`: the root of `√(1−|E|)·tan√(1−|E|) = √|E|`.
pub fn square_well_ground() -> f64 {
    let f = |e: f64| {
        let k = (1.0 - e).sqrt();
        k * k.tan() - e.sqrt()
    };
    // `|E|` in (0, 1); f(0⁺) > 0 > f(1⁻).
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    -0.5 * (lo + hi)
}

/// Tensor Gauss–Legendre rule on `(0, a) × (0, b)`, computed here rather
/// than taken from the library.
pub fn tensor_rule(a: f64, b: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let (x, w) = legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (xi, wi) in x.iter().zip(&w) {
        for (xj, wj) in x.iter().zip(&w) {
            out.push((
                0.5 * a * (xi + 1.0),
                0.5 * b * (xj + 1.0),
                0.25 * a * b * wi * wj,
            ));
        }
    }
    out
}

/// Gauss–Legendre nodes and weights on `(a, b)`.
pub fn gauss_rule(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = legendre(n);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (0.5 * (a + b) + 0.5 * (b - a) * xi, 0.5 * (b - a) * wi))
        .collect()
}

fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}
