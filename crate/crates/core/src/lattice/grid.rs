use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;
const MAX_SAMPLES: usize = 1 << 28;

/// A periodic lattice: `N` samples per axis over a period `L`, spacing `h = L/N`.
///
/// Flat indices are row-major with axis 0 slowest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    size: usize,
    period: f64,
}

impl Grid {
    pub fn new(n: usize, size: usize, period: f64) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "dimension {n} not in 1..={MAX_DIM}"
            )));
        }
        if size < 4 {
            return Err(Error::InvalidInput(format!(
                "need at least 4 samples per axis, got {size}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInput(format!(
                "period must be positive, got {period}"
            )));
        }
        let total = size
            .checked_pow(n as u32)
            .filter(|&t| t <= MAX_SAMPLES)
            .ok_or_else(|| Error::InvalidInput(format!("{size}^{n} samples exceeds 2^28")))?;
        debug_assert!(total > 0);
        Ok(Self { n, size, period })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Samples per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.size as f64
    }

    /// `hⁿ`, the quadrature weight of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    /// `Lⁿ`.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.n as i32)
    }

    /// Total number of samples `Nⁿ`.
    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for axis in (0..self.n).rev() {
            out[axis] = idx % self.size;
            idx /= self.size;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.n]
            .iter()
            .fold(0, |acc, &i| acc * self.size + i)
    }

    /// Flat index of a signed (wrapped) multi-index.
    pub fn flat_index_wrapped(&self, multi: &[i64]) -> usize {
        multi[..self.n]
            .iter()
            .fold(0, |acc, &i| acc * self.size + self.wrap(i))
    }

    /// Signed representative of an axis index in `[-N/2, N/2)`.
    pub fn signed(&self, i: usize) -> i64 {
        let half = self.size / 2;
        if i >= self.size - half && (self.size % 2 == 1 || i >= half) {
            i as i64 - self.size as i64
        } else {
            i as i64
        }
    }

    pub fn signed_multi(&self, idx: usize) -> [i64; MAX_DIM] {
        let m = self.multi_index(idx);
        let mut out = [0; MAX_DIM];
        for axis in 0..self.n {
            out[axis] = self.signed(m[axis]);
        }
        out
    }

    pub fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.size as i64) as usize
    }

    /// Absolute coordinates `i·h ∈ [0, L)ⁿ`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        let m = self.multi_index(idx);
        (0..self.n).map(|a| m[a] as f64 * h).collect()
    }

    /// Signed coordinates in `[-L/2, L/2)ⁿ`, the displacement from the origin on the torus.
    pub fn offset(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        let s = self.signed_multi(idx);
        (0..self.n).map(|a| s[a] as f64 * h).collect()
    }

    /// Signed frequency `m/L` of a spectral index.
    pub fn frequency(&self, idx: usize) -> Vec<f64> {
        let s = self.signed_multi(idx);
        (0..self.n).map(|a| s[a] as f64 / self.period).collect()
    }

    /// Largest representable frequency magnitude per axis, `N/(2L)`.
    pub fn nyquist(&self) -> f64 {
        self.size as f64 / (2.0 * self.period)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(3, 6, 1.0).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(idx)), idx);
        }
    }

    #[test]
    fn signed_range_even_and_odd() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let s: Vec<i64> = (0..8).map(|i| g.signed(i)).collect();
        assert_eq!(s, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        let g = Grid::new(1, 5, 1.0).unwrap();
        let s: Vec<i64> = (0..5).map(|i| g.signed(i)).collect();
        assert_eq!(s, vec![0, 1, 2, -2, -1]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(0, 8, 1.0).is_err());
        assert!(Grid::new(4, 8, 1.0).is_err());
        assert!(Grid::new(2, 2, 1.0).is_err());
        assert!(Grid::new(2, 8, -1.0).is_err());
        assert!(Grid::new(3, 1024, 1.0).is_err());
    }
}
