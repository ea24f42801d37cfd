use num_complex::Complex64;

use super::{fft, Grid};
use crate::error::{Error, Result};

/// Complex samples on a periodic lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::InvalidInput("field samples must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_real(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(
            grid,
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Samples `f` at absolute lattice points `i·h`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self { grid, values }
    }

    /// Samples `f` at signed torus offsets in `[-L/2, L/2)ⁿ`.
    pub fn from_offset_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.offset(i))).collect();
        Self { grid, values }
    }

    /// The field whose unnormalized DFT is `spectrum`.
    pub fn from_spectrum(grid: Grid, mut spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        fft::inverse(&grid, &mut spectrum);
        Ok(Self {
            grid,
            values: spectrum,
        })
    }

    /// `h⁻ⁿ δ₀`, the discrete identity for convolution.
    pub fn impulse(grid: Grid) -> Self {
        let mut f = Self::zeros(grid);
        f.values[0] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// `hⁿ Σ f`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    /// `hⁿ Σ |f|²`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// `hⁿ Σ |F|² / Nⁿ`, equal to [`energy`](Self::energy) by Parseval.
    pub fn spectral_energy(&self) -> f64 {
        let fhat = self.spectrum();
        fhat.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
            / self.grid.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Unnormalized DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data = self.values.clone();
        fft::forward(&self.grid, &mut data);
        data
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Periodic translation: `out(x) = f(x - shift·h)`.
    pub fn shift(&self, shift: &[i64]) -> Self {
        let g = self.grid;
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut moved = [0i64; super::grid::MAX_DIM];
        for (idx, v) in self.values.iter().enumerate() {
            let m = g.multi_index(idx);
            for a in 0..g.n() {
                moved[a] = m[a] as i64 + shift[a];
            }
            out[g.flat_index_wrapped(&moved)] = *v;
        }
        Self {
            grid: g,
            values: out,
        }
    }

    /// `Φ̃(x) = conj(Φ(-x))`.
    pub fn reflect_conj(&self) -> Self {
        let g = self.grid;
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut neg = [0i64; super::grid::MAX_DIM];
        for (idx, v) in self.values.iter().enumerate() {
            let m = g.multi_index(idx);
            for a in 0..g.n() {
                neg[a] = -(m[a] as i64);
            }
            out[g.flat_index_wrapped(&neg)] = v.conj();
        }
        Self {
            grid: g,
            values: out,
        }
    }
}

/// Periodic convolution `hⁿ Σ_y f(y) g(x - y)` via spectral multiplication.
pub fn convolve(f: &SampledField, g: &SampledField) -> Result<SampledField> {
    f.check_grid(g)?;
    let fs = f.spectrum();
    let gs = g.spectrum();
    let h = f.grid.cell_volume();
    let prod: Vec<Complex64> = fs.iter().zip(&gs).map(|(a, b)| a * b * h).collect();
    SampledField::from_spectrum(f.grid, prod)
}

/// Multiplies the spectrum of `f` by `multiplier` (indexed like the DFT).
pub fn apply_multiplier(f: &SampledField, multiplier: &[Complex64]) -> Result<SampledField> {
    if multiplier.len() != f.len() {
        return Err(Error::GridMismatch);
    }
    let fhat = f.spectrum();
    apply_multiplier_to_spectrum(f.grid, &fhat, multiplier)
}

/// Inverse transform of `spectrum · multiplier`.
pub fn apply_multiplier_to_spectrum(
    grid: Grid,
    spectrum: &[Complex64],
    multiplier: &[Complex64],
) -> Result<SampledField> {
    if multiplier.len() != grid.len() || spectrum.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let prod = spectrum
        .iter()
        .zip(multiplier)
        .map(|(a, b)| a * b)
        .collect();
    SampledField::from_spectrum(grid, prod)
}
