use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dilation::{QuasiLevel, QuasiNormEngine};
use crate::error::{Error, Result};
use crate::lattice::{Filter, GaussianHermite, Grid, SampledField};

/// A filter multiplied by a constant factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledFilter {
    pub inner: GaussianHermite,
    pub factor: f64,
}

impl Filter for ScaledFilter {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn fourier(&self, xi: &[f64]) -> Complex64 {
        self.inner.fourier(xi) * self.factor
    }
    fn moment_order(&self) -> Option<u32> {
        self.inner.moment_order()
    }
    fn band_limited(&self) -> bool {
        false
    }
    fn spatial(&self, x: &[f64]) -> Option<Complex64> {
        self.inner.spatial(x).map(|v| v * self.factor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryMember {
    pub filter: ScaledFilter,
    /// Estimated `‖·‖_{𝒮_N}` of the unscaled filter; the stored filter is
    /// divided by it.
    pub sn_norm: f64,
    pub label: String,
}

/// Finite family of Schwartz filters normalized to unit `𝒮_N` norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterDictionary {
    members: Vec<DictionaryMember>,
    order: u32,
}

/// `(variance factor, eccentricity, angle)` in the order members are added.
const PLANAR_SHAPES: [(f64, f64, f64); 16] = [
    (1.0, 1.0, 0.0),
    (2.0, 1.0, 0.0),
    (1.0, 2.0, 0.0),
    (1.0, 2.0, 0.5 * PI),
    (1.0, 2.0, 0.25 * PI),
    (1.0, 2.0, 0.75 * PI),
    (2.0, 2.0, 0.0),
    (2.0, 2.0, 0.5 * PI),
    (1.5, 1.0, 0.0),
    (0.75, 1.0, 0.0),
    (1.0, 3.0, 0.0),
    (1.0, 3.0, 0.5 * PI),
    (2.0, 2.0, 0.25 * PI),
    (2.0, 2.0, 0.75 * PI),
    (1.5, 3.0, 0.25 * PI),
    (1.5, 3.0, 0.75 * PI),
];

impl FilterDictionary {
    /// The first `size` members of a fixed family of Gaussians shaped like
    /// the canonical ellipsoid, then stretched and rotated.
    pub fn gaussian_family(engine: &QuasiNormEngine, order: u32, size: usize) -> Result<Self> {
        let n = engine.dim();
        let base = engine
            .p()
            .clone()
            .try_inverse()
            .expect("positive definite form")
            * (engine.c() / 4.0);
        let mut filters = Vec::new();
        for &(scale, ecc, angle) in PLANAR_SHAPES.iter().take(size) {
            let stretch = if n == 2 {
                let (s, c) = angle.sin_cos();
                let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
                let d = DMatrix::from_row_slice(2, 2, &[ecc.sqrt(), 0.0, 0.0, 1.0 / ecc.sqrt()]);
                &rot * d * rot.transpose()
            } else {
                // axis-aligned stretch along the axis selected by the angle
                let axis = ((angle / (0.25 * PI)).round() as usize) % n;
                DMatrix::from_fn(n, n, |i, j| match (i == j, i == axis) {
                    (true, true) => ecc.sqrt(),
                    (true, false) => 1.0 / ecc.sqrt().powf(1.0 / (n as f64 - 1.0).max(1.0)),
                    _ => 0.0,
                })
            };
            let cov = &stretch * &base * stretch.transpose() * scale;
            let cov = (&cov + cov.transpose()) * 0.5;
            filters.push((
                GaussianHermite::new(cov, 0)?,
                format!("gauss(scale={scale},ecc={ecc},angle={angle:.4})"),
            ));
        }
        Self::from_filters(engine, order, filters)
    }

    pub fn from_filters(
        engine: &QuasiNormEngine,
        order: u32,
        filters: Vec<(GaussianHermite, String)>,
    ) -> Result<Self> {
        let mut members = Vec::with_capacity(filters.len());
        for (filter, label) in filters {
            let sn_norm = estimate_sn_norm(&filter, engine, order)?;
            members.push(DictionaryMember {
                filter: ScaledFilter {
                    inner: filter,
                    factor: 1.0 / sn_norm,
                },
                sn_norm,
                label,
            });
        }
        Ok(Self { members, order })
    }

    pub fn members(&self) -> &[DictionaryMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The `N` of the `𝒮_N` normalization.
    pub fn order(&self) -> u32 {
        self.order
    }
}

/// All multi-indices `α ∈ ℕⁿ` with `|α| ≤ order`.
fn multi_indices(n: usize, order: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for a in 0..=(order - used) {
                let mut v = prefix.clone();
                v.push(a);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Estimates `sup_{|α| ≤ N} sup_x |∂^α φ(x)| max{1, ρ(x)^N}` on a fine
/// periodic grid sized from the covariance, with derivatives taken
/// spectrally from the analytic Fourier transform.
pub fn estimate_sn_norm(
    filter: &GaussianHermite,
    engine: &QuasiNormEngine,
    order: u32,
) -> Result<f64> {
    let n = filter.dim();
    if n != engine.dim() {
        return Err(Error::InvalidInput(
            "filter and engine dimensions differ".into(),
        ));
    }
    let eig = filter.covariance().clone().symmetric_eigenvalues();
    let s_max = eig.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
    let s_min = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b)).sqrt();
    let d = engine.dilation();
    // ρ(x)^N grows at most like |x|^{N ln b / ln λ₋}
    let growth = order as f64 * d.b().ln() / d.lambda_minus().ln();
    let half_period = (growth.sqrt() + 10.0) * s_max;
    let xi_max = (60.0 / (2.0 * PI * PI)).sqrt() / s_min;
    let needed = (4.0 * half_period * xi_max).ceil() as usize;
    let cap = match n {
        1 => 1 << 14,
        2 => 1 << 9,
        _ => 1 << 6,
    };
    let size = needed.next_power_of_two().clamp(16, cap);
    let grid = Grid::new(n, size, 2.0 * half_period)?;
    let base: Vec<Complex64> = (0..grid.len())
        .map(|i| filter.fourier(&grid.frequency(i)))
        .collect();
    let weights: Vec<f64> = (0..grid.len())
        .map(|i| match engine.level(&grid.offset(i)) {
            QuasiLevel::Zero => 1.0,
            QuasiLevel::Finite(j) => d.b().powi(j).powi(order as i32).max(1.0),
            QuasiLevel::Infinite => f64::INFINITY,
        })
        .collect();
    let freqs: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.frequency(i)).collect();
    let h = grid.cell_volume();
    let mut best: f64 = 0.0;
    for alpha in multi_indices(n, order) {
        let fhat: Vec<Complex64> = base
            .iter()
            .zip(&freqs)
            .map(|(v, xi)| {
                let mut m = Complex64::new(1.0, 0.0);
                for (a, &x) in alpha.iter().zip(xi) {
                    m *= Complex64::new(0.0, 2.0 * PI * x).powu(*a);
                }
                v * m / h
            })
            .collect();
        let field = SampledField::from_spectrum(grid, fhat)?;
        for (v, w) in field.values().iter().zip(&weights) {
            best = best.max(v.norm() * w);
        }
    }
    Ok(best)
}
