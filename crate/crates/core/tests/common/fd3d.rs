//! Matrix-free finite differences for the straightened form on
//! `(−X, X) × (0, π)²` with Dirichlet walls:
//!
//! `Q(ψ) = ∫ |ψ_x + aψ₁ + bψ₂|² + |∇_yψ|²`, `a = α′y₂ − β sin α`,
//! `b = −(α′y₁ + β cos α)`.
//!
//! `|∇_yψ|²` uses edge differences on each `x`-slice. The first-order
//! term is evaluated at cell centres, each derivative averaged over the
//! four parallel cell edges, with the midpoint rule over all cells. The
//! mass is lumped.

use std::f64::consts::PI;

pub struct Fd3d {
    pub half_length: f64,
    /// Cells along `x`.
    pub nx: usize,
    /// Cells along each `y` direction.
    pub ny: usize,
    pub beta: f64,
    /// `α(x)` and `α′(x)`.
    pub twist: fn(f64) -> (f64, f64),
}

impl Fd3d {
    fn hx(&self) -> f64 {
        2.0 * self.half_length / self.nx as f64
    }

    fn hy(&self) -> f64 {
        PI / self.ny as f64
    }

    pub fn unknowns(&self) -> usize {
        (self.nx - 1) * (self.ny - 1) * (self.ny - 1)
    }

    fn index(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        let inner = |v: usize, n: usize| v >= 1 && v < n;
        if inner(i, self.nx) && inner(j, self.ny) && inner(k, self.ny) {
            let m = self.ny - 1;
            Some(((i - 1) * m + (j - 1)) * m + (k - 1))
        } else {
            None
        }
    }

    /// `A ψ` with `ψᵀAψ = Q_h(ψ)`.
    pub fn apply(&self, psi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let (hx, h) = (self.hx(), self.hy());
        let vol = hx * h * h;
        let at = |i, j, k| self.index(i, j, k).map_or(0.0, |p| psi[p]);

        // Transverse gradient, edge by edge.
        for i in 1..self.nx {
            for j in 0..self.ny {
                for k in 0..self.ny {
                    for (dj, dk) in [(1, 0), (0, 1)] {
                        let (j2, k2) = (j + dj, k + dk);
                        if j2 > self.ny || k2 > self.ny {
                            continue;
                        }
                        let d = (at(i, j2, k2) - at(i, j, k)) / h;
                        let g = vol * d / h;
                        if let Some(p) = self.index(i, j2, k2) {
                            out[p] += g;
                        }
                        if let Some(p) = self.index(i, j, k) {
                            out[p] -= g;
                        }
                    }
                }
            }
        }

        // First-order term, cell by cell.
        for i in 0..self.nx {
            let xc = -self.half_length + (i as f64 + 0.5) * hx;
            let (alpha, dalpha) = (self.twist)(xc);
            let (s, c) = alpha.sin_cos();
            for j in 0..self.ny {
                let y1 = (j as f64 + 0.5) * h;
                for k in 0..self.ny {
                    let y2 = (k as f64 + 0.5) * h;
                    let a = dalpha * y2 - self.beta * s;
                    let b = -(dalpha * y1 + self.beta * c);
                    let mut coef = [0.0; 8];
                    let mut d = 0.0;
                    for (corner, cf) in coef.iter_mut().enumerate() {
                        let (di, dj, dk) = (corner >> 2, (corner >> 1) & 1, corner & 1);
                        let sign = |t: usize| 2.0 * t as f64 - 1.0;
                        *cf = 0.25 * (sign(di) / hx + a * sign(dj) / h + b * sign(dk) / h);
                        d += *cf * at(i + di, j + dj, k + dk);
                    }
                    for (corner, cf) in coef.iter().enumerate() {
                        let (di, dj, dk) = (corner >> 2, (corner >> 1) & 1, corner & 1);
                        if let Some(p) = self.index(i + di, j + dj, k + dk) {
                            out[p] += vol * d * cf;
                        }
                    }
                }
            }
        }
    }

    fn mass(&self) -> f64 {
        self.hx() * self.hy() * self.hy()
    }

    /// Lowest eigenvalue by inverse iteration, each solve by conjugate
    /// gradients. Returns the eigenvalue and the number of outer steps.
    pub fn lowest(&self, rel_tol: f64) -> (f64, usize) {
        let n = self.unknowns();
        let mut v = vec![1.0; n];
        normalize(&mut v);
        let mut av = vec![0.0; n];
        let mut lambda = f64::INFINITY;
        for step in 1..=500 {
            let w = self.solve(&v, 1e-12);
            v = w;
            normalize(&mut v);
            self.apply(&v, &mut av);
            let next = dot(&v, &av) / self.mass();
            if (next - lambda).abs() <= rel_tol * next.abs() {
                return (next, step);
            }
            lambda = next;
        }
        panic!("inverse iteration did not converge: {lambda}");
    }

    fn solve(&self, rhs: &[f64], tol: f64) -> Vec<f64> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        let stop = tol * tol * rr;
        for _ in 0..10 * n {
            if rr <= stop {
                break;
            }
            self.apply(&p, &mut ap);
            let step = rr / dot(&p, &ap);
            for q in 0..n {
                x[q] += step * p[q];
                r[q] -= step * ap[q];
            }
            let next = dot(&r, &r);
            let ratio = next / rr;
            rr = next;
            for q in 0..n {
                p[q] = r[q] + ratio * p[q];
            }
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}
