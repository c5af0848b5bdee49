//! Uniform cubic real-space grid.
//!
//! Samples sit at cell centers, x_i = -L/2 + (i + 1/2) h with h = L/n, so a
//! nucleus at the box center never coincides with a sample. Momentum nodes
//! are p_k = 2 pi k / L with k wrapped to [-n/2, n/2).

use crate::error::{CoreError, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    box_len: f64,
}

impl Grid {
    /// `n` points per axis (even, >= 16, 5-smooth so the FFT stays fast) on a
    /// cube of edge `box_len` Bohr.
    pub fn new(n: usize, box_len: f64) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(CoreError::Domain(format!(
                "grid size must be even and at least 16, got {n}"
            )));
        }
        let mut m = n;
        for f in [2usize, 3, 5] {
            while m % f == 0 {
                m /= f;
            }
        }
        if m != 1 {
            return Err(CoreError::Domain(format!(
                "grid size {n} must factor into 2, 3 and 5 for the FFT"
            )));
        }
        if !(box_len > 0.0) {
            return Err(CoreError::Domain(format!(
                "box length must be positive, got {box_len}"
            )));
        }
        Ok(Self { n, box_len })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    /// Number of samples, n^3.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Longest distance between two points of the box.
    pub fn diagonal(&self) -> f64 {
        self.box_len * 3f64.sqrt()
    }

    /// Real-space coordinate of sample `i` along one axis (cell-centered).
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_len + (i as f64 + 0.5) * self.spacing()
    }

    /// Momentum of DFT index `k` along one axis, wrapped to [-n/2, n/2).
    pub fn momentum(&self, k: usize) -> f64 {
        let k = k as i64;
        let n = self.n as i64;
        let signed = if k < n / 2 { k } else { k - n };
        2.0 * PI * signed as f64 / self.box_len
    }

    /// Flat index with x fastest: i = ix + n (iy + n iz).
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    /// Per-axis coordinates, precomputed.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Per-axis momenta, precomputed in DFT index order.
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.momentum(k)).collect()
    }
}
