//! Symmetric banded matrices with Cholesky factorization.
//!
//! The uniform meshes used here produce mass/stiffness matrices with
//! bandwidth 1 (interval) or `N` (square, row-major interior numbering), so
//! band storage plus an `O(n kd^2)` factorization covers every linear solve
//! in the crate.

use crate::{Error, Result};

/// Symmetric matrix stored by its lower band: entry `(i, j)` with
/// `0 <= i - j <= kd` lives at `data[i * (kd + 1) + (j + kd - i)]`.
#[derive(Clone, Debug)]
pub struct SymBand {
    n: usize,
    kd: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, kd: usize) -> Self {
        SymBand {
            n,
            kd,
            data: vec![0.0; n * (kd + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.kd);
        i * (self.kd + 1) + (j + self.kd - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.kd {
            0.0
        } else {
            self.data[self.slot(hi, lo)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(hi - lo <= self.kd, "entry outside band");
        let s = self.slot(hi, lo);
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.kd);
            for j in j0..=i {
                let v = self.data[self.slot(i, j)];
                if v != 0.0 {
                    y[i] += v * x[j];
                    if i != j {
                        y[j] += v * x[i];
                    }
                }
            }
        }
        y
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        let mx = self.matvec(y);
        x.iter().zip(&mx).map(|(a, b)| a * b).sum()
    }

    /// `self + scale * other` (bands must be compatible).
    pub fn add_scaled(&self, scale_self: f64, other: &SymBand, scale_other: f64) -> SymBand {
        assert_eq!(self.n, other.n);
        let kd = self.kd.max(other.kd);
        let mut out = SymBand::zeros(self.n, kd);
        for i in 0..self.n {
            let j0 = i.saturating_sub(kd);
            for j in j0..=i {
                let v = scale_self * self.get(i, j) + scale_other * other.get(i, j);
                if v != 0.0 {
                    out.add(i, j, v);
                }
            }
        }
        out
    }

    /// Lower-band Cholesky factorization; fails on non-SPD input.
    pub fn cholesky(&self) -> Result<BandChol> {
        let n = self.n;
        let kd = self.kd;
        let mut l = self.data.clone();
        let idx = |i: usize, j: usize| i * (kd + 1) + (j + kd - i);
        for j in 0..n {
            let mut d = l[idx(j, j)];
            let k0 = j.saturating_sub(kd);
            for k in k0..j {
                let v = l[idx(j, k)];
                d -= v * v;
            }
            if d <= 0.0 {
                return Err(Error::EigenFailed(format!(
                    "matrix not positive definite at pivot {j}"
                )));
            }
            let d = d.sqrt();
            l[idx(j, j)] = d;
            let imax = (j + kd).min(n - 1);
            for i in j + 1..=imax {
                let mut v = l[idx(i, j)];
                let k0 = i.saturating_sub(kd).max(j.saturating_sub(kd));
                for k in k0..j {
                    if i - k <= kd {
                        v -= l[idx(i, k)] * l[idx(j, k)];
                    }
                }
                l[idx(i, j)] = v / d;
            }
        }
        Ok(BandChol { n, kd, l })
    }

    /// COO triplets of the lower triangle (for text dumps).
    pub fn lower_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.kd);
            for j in j0..=i {
                let v = self.data[self.slot(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Cholesky factor `L` of a banded SPD matrix.
#[derive(Clone, Debug)]
pub struct BandChol {
    n: usize,
    kd: usize,
    l: Vec<f64>,
}

impl BandChol {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kd + 1) + (j + self.kd - i)
    }

    /// Solve `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.kd);
            let mut v = y[i];
            for j in j0..i {
                v -= self.l[self.idx(i, j)] * y[j];
            }
            y[i] = v / self.l[self.idx(i, i)];
        }
        y
    }

    /// Solve `L^T x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        for i in (0..self.n).rev() {
            let imax = (i + self.kd).min(self.n - 1);
            let mut v = x[i];
            for j in i + 1..=imax {
                v -= self.l[self.idx(j, i)] * x[j];
            }
            x[i] = v / self.l[self.idx(i, i)];
        }
        x
    }

    /// Solve `A x = b` via the two triangular solves.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lo: f64, d: f64) -> SymBand {
        let mut m = SymBand::zeros(n, 1);
        for i in 0..n {
            m.add(i, i, d);
            if i + 1 < n {
                m.add(i + 1, i, lo);
            }
        }
        m
    }

    #[test]
    fn matvec_and_symmetry() {
        let m = tridiag(5, -1.0, 2.0);
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = m.matvec(&x);
        assert_eq!(y, vec![0.0, 0.0, 0.0, 0.0, 6.0]);
        assert!((m.get(2, 3) - m.get(3, 2)).abs() < 1e-15);
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let m = tridiag(40, -1.0, 2.5);
        let chol = m.cholesky().unwrap();
        let x_true: Vec<f64> = (0..40).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let b = m.matvec(&x_true);
        let x = chol.solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn wide_band_cholesky() {
        // SPD matrix with bandwidth 3
        let n = 30;
        let mut m = SymBand::zeros(n, 3);
        for i in 0..n {
            m.add(i, i, 10.0);
            for off in 1..=3usize {
                if i >= off {
                    m.add(i, i - off, -1.0 / off as f64);
                }
            }
        }
        let chol = m.cholesky().unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = chol.solve(&b);
        let r = m.matvec(&x);
        for (a, b) in r.iter().zip(&b) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_rejected() {
        let mut m = SymBand::zeros(3, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, -1.0);
        m.add(2, 2, 1.0);
        assert!(m.cholesky().is_err());
    }
}
