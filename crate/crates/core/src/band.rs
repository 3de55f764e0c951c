//! Banded matrices with an in-place LU solve (partial pivoting).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals. Storage reserves
/// `kl` extra super-diagonals for pivoting fill-in.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: alloc::vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` at `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band ({}, {})", self.kl, self.ku);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// `Aᵀx`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                y[j] += self.data[self.slot(i, j)] * x[i];
            }
        }
        y
    }

    /// Solves `A x = b`, consuming the matrix.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut x = b.to_vec();
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut piv = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::Precondition(format!("singular banded system at pivot {k}")));
            }
            let right = (k + reach).min(n - 1);
            if piv != k {
                for j in k..=right {
                    let (a, b) = (self.slot(k, j), self.slot(piv, j));
                    self.data.swap(a, b);
                }
                x.swap(k, piv);
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last {
                let s = self.slot(i, k);
                let factor = self.data[s] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.data[s] = 0.0;
                for j in k + 1..=right {
                    let v = self.data[self.slot(k, j)];
                    let t = self.slot(i, j);
                    self.data[t] -= factor * v;
                }
                x[i] -= factor * x[k];
            }
        }
        for k in (0..n).rev() {
            let right = (k + reach).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=right {
                acc -= self.data[self.slot(k, j)] * x[j];
            }
            x[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(x)
    }
}
