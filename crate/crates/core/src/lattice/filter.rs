use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{fft, Grid, SampledField};
use crate::dilation::{mat_vec, Dilation, QuasiNormEngine};
use crate::error::{Error, Result};

/// Relative magnitude above which a spectrum touching the Nyquist shell, or a
/// spatial kernel touching the period boundary, is treated as aliased.
pub const ALIASING_TOL: f64 = 1e-8;
/// Relative boundary magnitude allowed when sampling a filter pointwise.
pub const PERIOD_TAIL_TOL: f64 = 1e-12;

/// An analytic filter described by its Fourier transform
/// `φ̂(ξ) = ∫ φ(x) e^{-2πi x·ξ} dx`.
pub trait Filter: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;

    fn fourier(&self, xi: &[f64]) -> Complex64;

    /// Highest order through which all moments vanish; `u32::MAX` when every
    /// moment vanishes, `None` when even the mass is nonzero.
    fn moment_order(&self) -> Option<u32>;

    fn band_limited(&self) -> bool;

    /// Pointwise spatial value when a closed form exists.
    fn spatial(&self, _x: &[f64]) -> Option<Complex64> {
        None
    }
}

/// `(-Δ_Σ/2)^m` applied to the Gaussian of covariance `Σ`, rescaled so the
/// spectrum `(e·u/m)^m e^{-u}`, `u = 2π² ξᵀΣξ`, peaks at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHermite {
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
    laplacian_power: u32,
    /// Coefficients in `s = xᵀΣ⁻¹x` of the polynomial factor.
    poly: Vec<f64>,
    constant: f64,
}

impl GaussianHermite {
    pub fn new(covariance: DMatrix<f64>, laplacian_power: u32) -> Result<Self> {
        let n = covariance.nrows();
        if n == 0 || covariance.ncols() != n {
            return Err(Error::InvalidInput("covariance must be square".into()));
        }
        if (&covariance - covariance.transpose()).amax() > 1e-12 * covariance.amax() {
            return Err(Error::InvalidInput("covariance must be symmetric".into()));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("covariance must be positive definite".into()))?;
        let precision = chol.inverse();
        let det = covariance.determinant();
        let mut poly = vec![1.0];
        for _ in 0..laplacian_power {
            poly = radial_laplacian(&poly, n);
        }
        let m = laplacian_power as f64;
        let scale = if laplacian_power == 0 {
            1.0
        } else {
            (-E / (2.0 * m)).powi(laplacian_power as i32)
        };
        let constant = scale * (2.0 * PI).powf(-(n as f64) / 2.0) / det.sqrt();
        Ok(Self {
            covariance,
            precision,
            laplacian_power,
            poly,
            constant,
        })
    }

    pub fn isotropic(n: usize, variance: f64, laplacian_power: u32) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal_element(n, n, variance),
            laplacian_power,
        )
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn laplacian_power(&self) -> u32 {
        self.laplacian_power
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let px = mat_vec(&self.precision, x);
        let s: f64 = px.iter().zip(x).map(|(a, b)| a * b).sum();
        let p = self.poly.iter().rev().fold(0.0, |acc, c| acc * s + c);
        self.constant * p * (-s / 2.0).exp()
    }
}

/// `Δ[P(s)e^{-s/2}] = [4s(P'' − P' + P/4) + 2n(P' − P/2)] e^{-s/2}` for `s = |z|²`.
fn radial_laplacian(p: &[f64], n: usize) -> Vec<f64> {
    let deg = p.len();
    let mut out = vec![0.0; deg + 1];
    let nf = n as f64;
    for (i, &c) in p.iter().enumerate() {
        let i_f = i as f64;
        // 4s·P''
        if i >= 2 {
            out[i - 1] += 4.0 * c * i_f * (i_f - 1.0);
        }
        // -4s·P' + 2n·P'
        if i >= 1 {
            out[i] -= 4.0 * c * i_f;
            out[i - 1] += 2.0 * nf * c * i_f;
        }
        // s·P - n·P
        out[i + 1] += c;
        out[i] -= nf * c;
    }
    out
}

impl Filter for GaussianHermite {
    fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    fn fourier(&self, xi: &[f64]) -> Complex64 {
        let sx = mat_vec(&self.covariance, xi);
        let u = 2.0 * PI * PI * sx.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        let v = if self.laplacian_power == 0 {
            (-u).exp()
        } else {
            let m = self.laplacian_power as f64;
            (E * u / m).powi(self.laplacian_power as i32) * (-u).exp()
        };
        Complex64::new(v, 0.0)
    }

    fn moment_order(&self) -> Option<u32> {
        if self.laplacian_power == 0 {
            None
        } else {
            Some(2 * self.laplacian_power - 1)
        }
    }

    fn band_limited(&self) -> bool {
        false
    }

    fn spatial(&self, x: &[f64]) -> Option<Complex64> {
        Some(Complex64::new(self.value(x), 0.0))
    }
}

/// Radial spectrum `exp(1 − 1/(1 − t²))` with `t` the position of `ln|ξ|`
/// inside `(ln r_inner, ln r_outer)`; zero elsewhere, so every moment vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct BandlimitedAnnulus {
    n: usize,
    r_inner: f64,
    r_outer: f64,
}

impl BandlimitedAnnulus {
    pub fn new(n: usize, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(r_inner > 0.0 && r_outer > r_inner && r_outer.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "annulus needs 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
            )));
        }
        Ok(Self {
            n,
            r_inner,
            r_outer,
        })
    }

    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }
}

/// `exp(1 − 1/(1 − t²))` on `(−1, 1)`, zero outside; peak value 1 at `t = 0`.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

impl Filter for BandlimitedAnnulus {
    fn dim(&self) -> usize {
        self.n
    }

    fn fourier(&self, xi: &[f64]) -> Complex64 {
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= self.r_inner || r >= self.r_outer {
            return Complex64::new(0.0, 0.0);
        }
        let t = (2.0 * r.ln() - (self.r_inner * self.r_outer).ln())
            / (self.r_outer / self.r_inner).ln();
        Complex64::new(bump(t), 0.0)
    }

    fn moment_order(&self) -> Option<u32> {
        Some(u32::MAX)
    }

    fn band_limited(&self) -> bool {
        true
    }
}

/// The two filter families used throughout.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    GaussianHermite(GaussianHermite),
    BandlimitedAnnulus(BandlimitedAnnulus),
}

impl FilterSpec {
    fn inner(&self) -> &dyn Filter {
        match self {
            FilterSpec::GaussianHermite(g) => g,
            FilterSpec::BandlimitedAnnulus(a) => a,
        }
    }
}

impl Filter for FilterSpec {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn fourier(&self, xi: &[f64]) -> Complex64 {
        self.inner().fourier(xi)
    }
    fn moment_order(&self) -> Option<u32> {
        self.inner().moment_order()
    }
    fn band_limited(&self) -> bool {
        self.inner().band_limited()
    }
    fn spatial(&self, x: &[f64]) -> Option<Complex64> {
        self.inner().spatial(x)
    }
}

/// Gaussian-Hermite filter with `s + 1` Laplacians, shaped like the canonical
/// ellipsoid: covariance `c·P⁻¹/4`.
pub fn make_vanishing_moment_filter(s: u32, engine: &QuasiNormEngine) -> FilterSpec {
    let p_inv = engine
        .p()
        .clone()
        .try_inverse()
        .expect("ellipsoid form is positive definite");
    let cov = p_inv * (engine.c() / 4.0);
    let cov = (&cov + cov.transpose()) * 0.5;
    FilterSpec::GaussianHermite(
        GaussianHermite::new(cov, s + 1).expect("scaled inverse of a positive form"),
    )
}

fn check_dim(filter: &dyn Filter, grid: &Grid) -> Result<()> {
    if filter.dim() != grid.n() {
        return Err(Error::InvalidInput(format!(
            "filter dimension {} does not match grid dimension {}",
            filter.dim(),
            grid.n()
        )));
    }
    Ok(())
}

/// True for indices on the outermost layer of the index cube (spatial
/// boundary or Nyquist shell).
fn on_shell(grid: &Grid, idx: usize) -> bool {
    let half = (grid.size() / 2) as i64;
    let s = grid.signed_multi(idx);
    (0..grid.n()).any(|a| s[a].abs() >= half - 1)
}

/// Largest modulus on the outer shell `|signed index| ≥ N/2 − 1` relative to the overall maximum.
pub fn shell_ratio(grid: &Grid, values: &[Complex64]) -> f64 {
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let shell = (0..values.len())
        .filter(|&i| on_shell(grid, i))
        .map(|i| values[i].norm())
        .fold(0.0, f64::max);
    shell / max
}

/// Samples a filter on the lattice: pointwise in space when a closed form
/// exists, otherwise by exact spectral synthesis of the band-limited spectrum.
pub fn sample_filter(filter: &dyn Filter, grid: &Grid) -> Result<SampledField> {
    check_dim(filter, grid)?;
    if filter.spatial(&vec![0.0; grid.n()]).is_some() {
        let field = SampledField::from_offset_fn(*grid, |x| filter.spatial(x).unwrap());
        let tail = shell_ratio(grid, field.values());
        if tail > PERIOD_TAIL_TOL {
            return Err(Error::PeriodTooSmall { tail });
        }
        let spectrum: Vec<Complex64> = (0..grid.len())
            .filter(|&i| on_shell(grid, i))
            .map(|i| filter.fourier(&grid.frequency(i)))
            .collect();
        let peak = (0..grid.len())
            .map(|i| filter.fourier(&grid.frequency(i)).norm())
            .fold(0.0, f64::max);
        let spec_tail = spectrum.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak > 0.0 && spec_tail > ALIASING_TOL * peak {
            return Err(Error::AliasingRisk {
                scale: 0,
                detail: format!(
                    "spectrum reaches the Nyquist shell (ratio {:.3e})",
                    spec_tail / peak
                ),
            });
        }
        return Ok(field);
    }
    let spectrum: Vec<Complex64> = (0..grid.len())
        .map(|i| filter.fourier(&grid.frequency(i)))
        .collect();
    let tail = shell_ratio(grid, &spectrum);
    if tail > ALIASING_TOL {
        return Err(Error::AliasingRisk {
            scale: 0,
            detail: format!("spectrum reaches the Nyquist shell (ratio {tail:.3e})"),
        });
    }
    let h = grid.cell_volume();
    let mut data = spectrum;
    fft::inverse(grid, &mut data);
    for v in data.iter_mut() {
        *v /= h;
    }
    SampledField::new(*grid, data)
}

/// Spectral multiplier `φ̂((A^k)ᵀξ)` of `φ_k(x) = b^{-k}φ(A^{-k}x)` at every
/// lattice frequency, so that `f ∗ φ_k = IDFT(DFT(f) · multiplier)`.
pub fn filter_spectrum(
    filter: &dyn Filter,
    grid: &Grid,
    dilation: &Dilation,
    k: i32,
) -> Result<Vec<Complex64>> {
    check_dim(filter, grid)?;
    let akt = dilation.power(k).transpose();
    let spectrum: Vec<Complex64> = (0..grid.len())
        .map(|i| filter.fourier(&mat_vec(&akt, &grid.frequency(i))))
        .collect();
    let tail = shell_ratio(grid, &spectrum);
    if tail > ALIASING_TOL {
        return Err(Error::AliasingRisk {
            scale: k,
            detail: format!("dilated spectrum reaches the Nyquist shell (ratio {tail:.3e})"),
        });
    }
    Ok(spectrum)
}

/// Either an analytic filter or a sampled one dilated through [`dilate_filter`].
#[derive(Debug, Clone, Copy)]
pub enum FilterSource<'a> {
    Analytic(&'a dyn Filter),
    Sampled(&'a SampledField),
}

impl FilterSource<'_> {
    /// Multiplier `m_k` with `f ∗ φ_k = IDFT(DFT(f) · m_k)`.
    pub fn scale_multiplier(&self, grid: &Grid, d: &Dilation, k: i32) -> Result<Vec<Complex64>> {
        match self {
            FilterSource::Analytic(f) => filter_spectrum(*f, grid, d, k),
            FilterSource::Sampled(phi) => {
                if phi.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                let h = grid.cell_volume();
                Ok(dilate_filter(phi, k, d)?
                    .field
                    .spectrum()
                    .into_iter()
                    .map(|v| v * h)
                    .collect())
            }
        }
    }
}

/// Result of [`dilate_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedFilter {
    pub field: SampledField,
    /// Relative interpolation error estimate; exactly 0 for integer reindexing.
    pub interpolation_error: f64,
}

/// `φ_k(x) = b^{-k} φ(A^{-k}x)` from samples of `φ`.
///
/// Diagonal integer dilations reindex exactly: frequencies `m ↦ A^k m` for
/// `k ≥ 0`, sample points `i ↦ A^{|k|} i` for `k < 0`. Other dilations resample
/// the spectrum with tensor cubic interpolation.
pub fn dilate_filter(phi: &SampledField, k: i32, d: &Dilation) -> Result<DilatedFilter> {
    let grid = *phi.grid();
    if d.dim() != grid.n() {
        return Err(Error::InvalidInput(
            "dilation and grid dimensions differ".into(),
        ));
    }
    if k == 0 {
        return Ok(DilatedFilter {
            field: phi.clone(),
            interpolation_error: 0.0,
        });
    }
    let half = (grid.size() / 2) as i64;
    let in_range = |v: i64| v >= -half && v < grid.size() as i64 - half;
    if let Some(diag) = d.diagonal_integer() {
        let n = grid.n();
        let factors: Vec<i64> = diag
            .iter()
            .map(|&a| (a as i64).checked_pow(k.unsigned_abs()).unwrap_or(i64::MAX))
            .collect();
        if k > 0 {
            let fhat = phi.spectrum();
            let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
            let mut src = [0i64; 3];
            'outer: for (idx, o) in out.iter_mut().enumerate() {
                let s = grid.signed_multi(idx);
                for a in 0..n {
                    match s[a].checked_mul(factors[a]) {
                        Some(v) if in_range(v) => src[a] = v,
                        _ => continue 'outer,
                    }
                }
                *o = fhat[grid.flat_index_wrapped(&src)];
            }
            let field = SampledField::from_spectrum(grid, out)?;
            let tail = shell_ratio(&grid, field.values());
            if tail > ALIASING_TOL {
                return Err(Error::AliasingRisk {
                    scale: k,
                    detail: format!(
                        "dilated filter reaches the period boundary (ratio {tail:.3e})"
                    ),
                });
            }
            return Ok(DilatedFilter {
                field,
                interpolation_error: 0.0,
            });
        }
        let weight = d.b().powi(-k);
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut src = [0i64; 3];
        'outer2: for (idx, o) in out.iter_mut().enumerate() {
            let s = grid.signed_multi(idx);
            for a in 0..n {
                match s[a].checked_mul(factors[a]) {
                    Some(v) if in_range(v) => src[a] = v,
                    _ => continue 'outer2,
                }
            }
            *o = phi.values()[grid.flat_index_wrapped(&src)] * weight;
        }
        let field = SampledField::new(grid, out)?;
        let tail = shell_ratio(&grid, &field.spectrum());
        if tail > ALIASING_TOL {
            return Err(Error::AliasingRisk {
                scale: k,
                detail: format!("dilated spectrum reaches the Nyquist shell (ratio {tail:.3e})"),
            });
        }
        return Ok(DilatedFilter {
            field,
            interpolation_error: 0.0,
        });
    }

    // General dilation: the output spectrum at index m is the input spectrum
    // at the fractional index (A^k)ᵀm.
    let fhat = phi.spectrum();
    let akt = d.power(k).transpose();
    let n = grid.n();
    let scale = fhat.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut max_diff: f64 = 0.0;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let s = grid.signed_multi(idx);
        let m: Vec<f64> = (0..n).map(|a| s[a] as f64).collect();
        let pos = mat_vec(&akt, &m);
        let (cubic, linear) = interpolate(&grid, &fhat, &pos);
        max_diff = max_diff.max((cubic - linear).norm());
        *o = cubic;
    }
    let field = SampledField::from_spectrum(grid, out)?;
    let interpolation_error = if scale > 0.0 { max_diff / scale } else { 0.0 };
    // interpolation error spreads over the whole period, so the boundary
    // test only looks for mass above that floor
    let tail = shell_ratio(&grid, field.values());
    if tail > ALIASING_TOL.max(4.0 * interpolation_error) {
        return Err(Error::AliasingRisk {
            scale: k,
            detail: format!("dilated filter reaches the period boundary (ratio {tail:.3e})"),
        });
    }
    Ok(DilatedFilter {
        field,
        interpolation_error,
    })
}

/// Tensor cubic (Lagrange, 4-point) and multilinear interpolation of a
/// spectrum at a fractional signed index; indices outside the representable
/// band contribute zero.
fn interpolate(grid: &Grid, fhat: &[Complex64], pos: &[f64]) -> (Complex64, Complex64) {
    let n = grid.n();
    let half = (grid.size() / 2) as i64;
    let hi = grid.size() as i64 - half;
    let mut base = [0i64; 3];
    let mut cw = [[0.0f64; 4]; 3];
    let mut lw = [[0.0f64; 4]; 3];
    for a in 0..n {
        let f = pos[a].floor();
        let t = pos[a] - f;
        base[a] = f as i64 - 1;
        // nodes at -1, 0, 1, 2 relative to floor
        cw[a] = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        lw[a] = [0.0, 1.0 - t, t, 0.0];
    }
    let mut cubic = Complex64::new(0.0, 0.0);
    let mut linear = Complex64::new(0.0, 0.0);
    let corners = 4usize.pow(n as u32);
    let mut idx = [0i64; 3];
    'corner: for c in 0..corners {
        let mut rem = c;
        let mut wc = 1.0;
        let mut wl = 1.0;
        for a in 0..n {
            let o = rem % 4;
            rem /= 4;
            idx[a] = base[a] + o as i64;
            if idx[a] < -half || idx[a] >= hi {
                continue 'corner;
            }
            wc *= cw[a][o];
            wl *= lw[a][o];
        }
        let v = fhat[grid.flat_index_wrapped(&idx)];
        cubic += v * wc;
        linear += v * wl;
    }
    (cubic, linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::validate_dilation;

    fn max_err(a: &SampledField, b: &SampledField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn plain_gaussian_is_positive_and_even() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let phi = GaussianHermite::isotropic(2, 0.2, 0).unwrap();
        let f = sample_filter(&phi, &g).unwrap();
        assert!(f.values().iter().all(|v| v.re > 0.0 && v.im == 0.0));
        assert_eq!(f.reflect_conj(), f);
        assert!((f.integral().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spatial_form_matches_spectral_synthesis() {
        let g = Grid::new(2, 128, 8.0).unwrap();
        let cov = DMatrix::from_row_slice(2, 2, &[0.15, 0.04, 0.04, 0.09]);
        for m in 0..4 {
            let phi = GaussianHermite::new(cov.clone(), m).unwrap();
            let pointwise = sample_filter(&phi, &g).unwrap();
            let fhat: Vec<Complex64> = (0..g.len()).map(|i| phi.fourier(&g.frequency(i))).collect();
            let synth = SampledField::from_spectrum(g, fhat)
                .unwrap()
                .scale_real(1.0 / g.cell_volume());
            let scale = pointwise.max_abs();
            assert!(max_err(&pointwise, &synth) < 1e-10 * scale, "m = {m}");
        }
    }

    #[test]
    fn vanishing_moments() {
        let d = validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap();
        let e = QuasiNormEngine::new(d).unwrap();
        let g = Grid::new(2, 128, 8.0).unwrap();
        let s0 = make_vanishing_moment_filter(0, &e);
        let f0 = sample_filter(&s0, &g).unwrap();
        assert!(f0.integral().norm() < 1e-10);
        let s2 = make_vanishing_moment_filter(2, &e);
        assert!(s2.moment_order().unwrap() >= 2);
        let f2 = sample_filter(&s2, &g).unwrap();
        let h = g.cell_volume();
        for (a0, a1) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            let mom: f64 = (0..g.len())
                .map(|i| {
                    let x = g.offset(i);
                    f2.values()[i].re * x[0].powi(a0) * x[1].powi(a1)
                })
                .sum::<f64>()
                * h;
            assert!(mom.abs() < 1e-8, "moment ({a0},{a1}) = {mom}");
        }
    }

    #[test]
    fn annulus_spectrum_vanishes_outside() {
        let a = BandlimitedAnnulus::new(2, 0.5, 2.0).unwrap();
        assert_eq!(a.fourier(&[0.0, 0.0]), Complex64::new(0.0, 0.0));
        assert_eq!(a.fourier(&[2.5, 0.0]), Complex64::new(0.0, 0.0));
        assert_eq!(a.fourier(&[0.0, 0.4]), Complex64::new(0.0, 0.0));
        assert!((a.fourier(&[1.0, 0.0]).re - 1.0).abs() < 1e-15);
        let g = Grid::new(2, 64, 8.0).unwrap();
        let f = sample_filter(&a, &g).unwrap();
        let fhat = f.spectrum();
        let h = g.cell_volume();
        for i in 0..g.len() {
            let expect = a.fourier(&g.frequency(i));
            assert!((fhat[i] * h - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn period_too_small() {
        let g = Grid::new(2, 32, 2.0).unwrap();
        let phi = GaussianHermite::isotropic(2, 0.5, 0).unwrap();
        assert!(matches!(
            sample_filter(&phi, &g),
            Err(Error::PeriodTooSmall { .. })
        ));
    }

    #[test]
    fn dilate_gaussian_iso_two() {
        let g = Grid::new(2, 128, 16.0).unwrap();
        let d = validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap();
        let phi = GaussianHermite::isotropic(2, 0.25, 0).unwrap();
        let f = sample_filter(&phi, &g).unwrap();
        let out = dilate_filter(&f, 1, &d).unwrap();
        assert_eq!(out.interpolation_error, 0.0);
        let oracle = SampledField::from_offset_fn(g, |x| {
            Complex64::new(0.25 * phi.value(&[x[0] / 2.0, x[1] / 2.0]), 0.0)
        });
        assert!(max_err(&out.field, &oracle) < 1e-10);
        assert_eq!(dilate_filter(&f, 0, &d).unwrap().field, f);
    }

    #[test]
    fn dilation_preserves_mass_and_composes() {
        let g = Grid::new(2, 256, 32.0).unwrap();
        let d = validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap();
        let f = sample_filter(&GaussianHermite::isotropic(2, 0.25, 0).unwrap(), &g).unwrap();
        let m0 = f.integral();
        for k in [-1, 1, 2] {
            let fk = dilate_filter(&f, k, &d).unwrap().field;
            assert!((fk.integral() - m0).norm() < 1e-8, "k = {k}");
        }
        let once = dilate_filter(&f, 1, &d).unwrap().field;
        let twice = dilate_filter(&once, 1, &d).unwrap().field;
        let direct = dilate_filter(&f, 2, &d).unwrap().field;
        assert!(max_err(&twice, &direct) < 1e-8);
    }

    #[test]
    fn annulus_dilation_is_exact_spectral_map() {
        let g = Grid::new(2, 64, 16.0).unwrap();
        let d = validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap();
        let a = BandlimitedAnnulus::new(2, 0.5, 1.5).unwrap();
        let f = sample_filter(&a, &g).unwrap();
        let out = dilate_filter(&f, 1, &d);
        // spatial extent of the annulus filter doubles; check spectrum exactly
        if let Ok(out) = out {
            let fhat = out.field.spectrum();
            let h = g.cell_volume();
            let expect = filter_spectrum(&a, &g, &d, 1).unwrap();
            for i in 0..g.len() {
                assert!((fhat[i] * h - expect[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn general_dilation_interpolates() {
        let g = Grid::new(2, 128, 16.0).unwrap();
        let d = validate_dilation(2, &[1.5, 0.5, -0.5, 1.5]).unwrap();
        let phi = GaussianHermite::isotropic(2, 0.3, 0).unwrap();
        let f = sample_filter(&phi, &g).unwrap();
        let out = dilate_filter(&f, 1, &d).unwrap();
        let inv = d.inverse().clone();
        let b = d.b();
        let oracle = SampledField::from_offset_fn(g, |x| {
            Complex64::new(phi.value(&mat_vec(&inv, x)) / b, 0.0)
        });
        let err = max_err(&out.field, &oracle) / oracle.max_abs();
        assert!(err < 1e-3, "{err}");
        assert!(out.interpolation_error > 0.0);
    }

    #[test]
    fn aliasing_detected() {
        let g = Grid::new(2, 32, 8.0).unwrap();
        let d = validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap();
        let phi = GaussianHermite::isotropic(2, 0.1, 1).unwrap();
        assert!(matches!(
            filter_spectrum(&phi, &g, &d, -3),
            Err(Error::AliasingRisk { scale: -3, .. })
        ));
    }
}
