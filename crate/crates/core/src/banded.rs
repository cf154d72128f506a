//! Symmetric band matrices and their `LDLᵀ` factorisation.

use crate::error::{Error, Result};

/// Symmetric band matrix holding the lower band only: entry `(r, c)` with
/// `0 ≤ r − c ≤ bandwidth` lives at `data[r·(bandwidth+1) + (r − c)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        let off = r - c;
        (off <= self.bandwidth && r < self.n).then(|| r * (self.bandwidth + 1) + off)
    }

    /// Entry `(r, c)`; zero outside the band.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.slot(r, c).map_or(0.0, |k| self.data[k])
    }

    /// Adds `value` to the symmetric pair `(r, c)`/`(c, r)`.
    ///
    /// # Panics
    /// When `(r, c)` lies outside the band.
    pub fn add(&mut self, r: usize, c: usize, value: f64) {
        let k = self
            .slot(r, c)
            .unwrap_or_else(|| panic!("({r}, {c}) outside band {}", self.bandwidth));
        self.data[k] += value;
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        let k = self
            .slot(r, c)
            .unwrap_or_else(|| panic!("({r}, {c}) outside band {}", self.bandwidth));
        self.data[k] = value;
    }

    /// `self + s·other`, widening the band if needed.
    pub fn add_scaled(&self, s: f64, other: &SymBand) -> SymBand {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let bw = self.bandwidth.max(other.bandwidth);
        let mut out = SymBand::zeros(self.n, bw);
        for r in 0..self.n {
            for off in 0..=bw.min(r) {
                let c = r - off;
                out.data[r * (bw + 1) + off] = self.get(r, c) + s * other.get(r, c);
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        let bw = self.bandwidth;
        for r in 0..self.n {
            let row = &self.data[r * (bw + 1)..(r + 1) * (bw + 1)];
            y[r] += row[0] * x[r];
            for off in 1..=bw.min(r) {
                let c = r - off;
                y[r] += row[off] * x[c];
                y[c] += row[off] * x[r];
            }
        }
        y
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Gershgorin interval `[min_r (a_rr − R_r), max_r (a_rr + R_r)]`.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut radius = vec![0.0; self.n];
        let bw = self.bandwidth;
        for r in 0..self.n {
            for off in 1..=bw.min(r) {
                let v = self.data[r * (bw + 1) + off].abs();
                radius[r] += v;
                radius[r - off] += v;
            }
        }
        (0..self.n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            let d = self.data[r * (bw + 1)];
            (lo.min(d - radius[r]), hi.max(d + radius[r]))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c)).collect())
            .collect()
    }

    /// `LDLᵀ` without pivoting. Fails when a pivot drops below
    /// `pivot_floor` in magnitude.
    pub fn ldlt(&self, pivot_floor: f64) -> Result<Ldlt> {
        let n = self.n;
        let bw = self.bandwidth;
        let w = bw + 1;
        // Unit lower factor in the same band layout; diagonal slot unused.
        let mut l = self.data.clone();
        let mut d = vec![0.0; n];
        let mut scaled = vec![0.0; w];
        for j in 0..n {
            let first = j.saturating_sub(bw);
            // scaled[k - first] = L(j,k)·d_k
            for k in first..j {
                scaled[k - first] = l[j * w + (j - k)] * d[k];
            }
            // Offsets 1..=j-first of row j hold L(j, j-1)..L(j, first).
            let row_j = &l[j * w + 1..=j * w + (j - first)];
            let djj = l[j * w] - dot_reversed(row_j, &scaled[..j - first]);
            if !(djj.abs() > pivot_floor) {
                return Err(Error::NearSingular { row: j, pivot: djj });
            }
            d[j] = djj;
            for i in j + 1..n.min(j + bw + 1) {
                let start = first.max(i.saturating_sub(bw));
                let row_i = &l[i * w + (i - j + 1)..=i * w + (i - start)];
                let dot = dot_reversed(row_i, &scaled[start - first..j - first]);
                l[i * w + (i - j)] = (l[i * w + (i - j)] - dot) / djj;
            }
        }
        Ok(Ldlt {
            n,
            bandwidth: bw,
            lower: l,
            diag: d,
        })
    }
}

/// Band `LDLᵀ` factors.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    bandwidth: usize,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl Ldlt {
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Number of negative pivots, which by Sylvester's law of inertia is the
    /// number of negative eigenvalues of the factored matrix.
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|&&d| d < 0.0).count()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let w = self.bandwidth + 1;
        for i in 0..self.n {
            let first = i.saturating_sub(self.bandwidth);
            let row = &self.lower[i * w + 1..=i * w + (i - first)];
            b[i] -= dot_reversed(row, &b[first..i]);
        }
        for (bi, di) in b.iter_mut().zip(&self.diag) {
            *bi /= di;
        }
        // Row k of L holds column entries of Lᵀ; sweep rows to stay contiguous.
        for k in (0..self.n).rev() {
            let bk = b[k];
            let first = k.saturating_sub(self.bandwidth);
            let row = &self.lower[k * w..k * w + w];
            for (bi, r) in b[first..k].iter_mut().zip(row[1..=k - first].iter().rev()) {
                *bi -= r * bk;
            }
        }
    }
}

/// `Σ row[len-1-i]·x[i]`, with four accumulators so the loop vectorises.
fn dot_reversed(row: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(row.len(), x.len());
    let mut acc = [0.0; 4];
    let rows = row.rchunks_exact(4);
    let head = rows.remainder();
    let xs = x.chunks_exact(4);
    let tail = xs.remainder();
    for (r, x) in rows.zip(xs) {
        for q in 0..4 {
            acc[q] += r[3 - q] * x[q];
        }
    }
    let rest: f64 = head.iter().rev().zip(tail).map(|(a, b)| a * b).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + rest
}
