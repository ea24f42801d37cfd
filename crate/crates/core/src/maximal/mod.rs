//! Anisotropic maximal operators on the torus: Hardy-Littlewood over dilated
//! balls, dyadic, non-tangential, the finite-dictionary grand maximal
//! approximation, and the vector-valued Fefferman-Stein ratio.

mod balls;
mod dictionary;

pub use balls::{check_ball_fits, morph_max, BallRaster, ScaleRange};
pub use dictionary::{estimate_sn_norm, DictionaryMember, FilterDictionary, ScaledFilter};

pub(crate) use balls::{real_convolve, real_spectrum};

use num_complex::Complex64;

use crate::dilation::QuasiNormEngine;
use crate::dyadic::NestedCubeFamily;
use crate::error::{Error, Result};
use crate::lattice::{apply_multiplier_to_spectrum, FilterSource, Grid, SampledField};
use crate::lorentz::{lorentz_norm_magnitudes, LorentzParams};

/// Precomputed Hardy-Littlewood operator for one grid, engine and range.
#[derive(Debug, Clone)]
pub struct HardyLittlewood {
    grid: Grid,
    range: ScaleRange,
    balls: Vec<(Vec<usize>, Vec<Complex64>)>,
}

impl HardyLittlewood {
    pub fn new(engine: &QuasiNormEngine, grid: &Grid, range: ScaleRange) -> Result<Self> {
        range.check_resolvable(engine, grid)?;
        let raster = BallRaster::new(engine, grid)?;
        Ok(Self::from_raster(&raster, range))
    }

    pub fn from_raster(raster: &BallRaster, range: ScaleRange) -> Self {
        let grid = *raster.grid();
        let balls = range
            .iter()
            .map(|k| {
                let members = raster.members(k);
                let weight = 1.0 / members.len() as f64;
                let mut kernel = vec![0.0; grid.len()];
                for &m in &members {
                    kernel[m] = weight;
                }
                (members, real_spectrum(&grid, &kernel))
            })
            .collect();
        Self { grid, range, balls }
    }

    pub fn range(&self) -> ScaleRange {
        self.range
    }

    /// `M_HL` applied to non-negative samples.
    pub fn apply_magnitudes(&self, magnitudes: &[f64]) -> Vec<f64> {
        let lo = magnitudes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = magnitudes.iter().copied().fold(0.0, f64::max);
        let mut out = vec![0.0f64; magnitudes.len()];
        for (members, kernel) in &self.balls {
            // ball averages centred at every sample, then the max over all
            // balls containing each point
            let avg: Vec<f64> = real_convolve(&self.grid, magnitudes, kernel)
                .into_iter()
                .map(|v| v.clamp(lo, hi))
                .collect();
            let m = morph_max(&self.grid, &avg, members);
            for (o, v) in out.iter_mut().zip(m) {
                *o = o.max(v);
            }
        }
        out
    }

    pub fn apply(&self, f: &SampledField) -> Result<SampledField> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        SampledField::from_real(self.grid, self.apply_magnitudes(&f.abs()))
    }
}

/// `M_HL(f)(x) = max_k max_{x ∈ y + B_k} avg_{y + B_k} |f|` over the range.
pub fn hl_maximal(
    f: &SampledField,
    engine: &QuasiNormEngine,
    range: ScaleRange,
) -> Result<SampledField> {
    HardyLittlewood::new(engine, f.grid(), range)?.apply(f)
}

/// `M_d(f) = max_j E_j(|f|)`, the largest average of `|f|` over the nested
/// cubes containing each sample.
pub fn dyadic_maximal(f: &SampledField, cubes: &NestedCubeFamily) -> Result<SampledField> {
    if f.grid() != cubes.grid() {
        return Err(Error::GridMismatch);
    }
    let mags = f.abs();
    let mut out = vec![0.0f64; mags.len()];
    for level in 0..cubes.level_count() {
        let avg = cubes.level_averages(level, &mags);
        for (o, v) in out.iter_mut().zip(avg) {
            *o = o.max(v);
        }
    }
    SampledField::from_real(*f.grid(), out)
}

/// `M_φ(f)(x) = max_k max_{y ∈ x + B_k} |f ∗ φ_k(y)|`.
pub fn nontangential_maximal(
    f: &SampledField,
    phi: FilterSource<'_>,
    engine: &QuasiNormEngine,
    range: ScaleRange,
) -> Result<SampledField> {
    let grid = *f.grid();
    range.check_resolvable(engine, &grid)?;
    let raster = BallRaster::new(engine, &grid)?;
    let fhat = f.spectrum();
    let out = nontangential_from_spectrum(&grid, &fhat, phi, engine, range, &raster)?;
    SampledField::from_real(grid, out)
}

pub(crate) fn nontangential_from_spectrum(
    grid: &Grid,
    spectrum: &[Complex64],
    phi: FilterSource<'_>,
    engine: &QuasiNormEngine,
    range: ScaleRange,
    raster: &BallRaster,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; grid.len()];
    for k in range.iter() {
        let mult = phi.scale_multiplier(grid, engine.dilation(), k)?;
        let u = apply_multiplier_to_spectrum(*grid, spectrum, &mult)?.abs();
        let m = morph_max(grid, &u, &raster.members(k));
        for (o, v) in out.iter_mut().zip(m) {
            *o = o.max(v);
        }
    }
    Ok(out)
}

/// Pointwise maximum of the non-tangential maximal functions of every
/// dictionary member: a lower bound for the grand maximal function.
pub fn grand_maximal_approx(
    f: &SampledField,
    dict: &FilterDictionary,
    engine: &QuasiNormEngine,
    range: ScaleRange,
) -> Result<SampledField> {
    if dict.is_empty() {
        return Err(Error::InvalidInput("filter dictionary is empty".into()));
    }
    let grid = *f.grid();
    range.check_resolvable(engine, &grid)?;
    let raster = BallRaster::new(engine, &grid)?;
    grand_maximal_with_raster(f, dict, engine, range, &raster)
}

pub(crate) fn grand_maximal_with_raster(
    f: &SampledField,
    dict: &FilterDictionary,
    engine: &QuasiNormEngine,
    range: ScaleRange,
    raster: &BallRaster,
) -> Result<SampledField> {
    let grid = *f.grid();
    let fhat = f.spectrum();
    let mut out = vec![0.0f64; grid.len()];
    for member in dict.members() {
        let m = nontangential_from_spectrum(
            &grid,
            &fhat,
            FilterSource::Analytic(&member.filter),
            engine,
            range,
            raster,
        )?;
        for (o, v) in out.iter_mut().zip(m) {
            *o = o.max(v);
        }
    }
    SampledField::from_real(grid, out)
}

/// Outcome of a Fefferman-Stein comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsReport {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Zero denominator; `ratio` is 0 by convention.
    pub degenerate: bool,
}

/// `(Σ_j v_j^e)^{1/r}` pointwise; `e = ∞` takes the pointwise maximum.
fn combine(rows: &[Vec<f64>], e: f64, r: f64) -> Vec<f64> {
    let len = rows[0].len();
    (0..len)
        .map(|i| {
            if e.is_infinite() {
                rows.iter().map(|row| row[i]).fold(0.0, f64::max)
            } else {
                rows.iter()
                    .map(|row| row[i].powf(e))
                    .sum::<f64>()
                    .powf(1.0 / r)
            }
        })
        .collect()
}

fn fs_common(
    fields: &[SampledField],
    e: f64,
    r: f64,
    lp: LorentzParams,
    engine: &QuasiNormEngine,
    range: ScaleRange,
) -> Result<FsReport> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidInput("no fields".into()))?;
    let grid = *first.grid();
    if fields.iter().any(|f| f.grid() != &grid) {
        return Err(Error::GridMismatch);
    }
    let hl = HardyLittlewood::new(engine, &grid, range)?;
    let raw: Vec<Vec<f64>> = fields.iter().map(|f| f.abs()).collect();
    let maxed: Vec<Vec<f64>> = raw.iter().map(|v| hl.apply_magnitudes(v)).collect();
    let cell = grid.cell_volume();
    let numerator = lorentz_norm_magnitudes(&combine(&maxed, e, r), cell, lp);
    let denominator = lorentz_norm_magnitudes(&combine(&raw, e, r), cell, lp);
    let degenerate = denominator == 0.0;
    Ok(FsReport {
        ratio: if degenerate {
            0.0
        } else {
            numerator / denominator
        },
        numerator,
        denominator,
        degenerate,
    })
}

/// `‖(Σ_j (M_HL f_j)^r)^{1/r}‖ / ‖(Σ_j |f_j|^r)^{1/r}‖` in `L^{p,q}`; `r = ∞`
/// uses pointwise maxima.
pub fn fs_ratio(
    fields: &[SampledField],
    r: f64,
    lp: LorentzParams,
    engine: &QuasiNormEngine,
    range: ScaleRange,
) -> Result<FsReport> {
    if !(r > 1.0) {
        return Err(Error::InvalidInput(format!(
            "r must lie in (1, ∞], got {r}"
        )));
    }
    fs_common(fields, r, r, lp, engine, range)
}

/// The power form `‖(Σ_j (M_HL f_j)^{r/s})^{1/r}‖ / ‖(Σ_j |f_j|^{r/s})^{1/r}‖`
/// for `0 < s < min(r, p)`.
pub fn fs_ratio_power(
    fields: &[SampledField],
    r: f64,
    s: f64,
    lp: LorentzParams,
    engine: &QuasiNormEngine,
    range: ScaleRange,
) -> Result<FsReport> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "r must lie in (1, ∞), got {r}"
        )));
    }
    if !(s > 0.0 && s < r.min(lp.p())) {
        return Err(Error::ParameterInadmissible(format!(
            "s = {s} must lie in (0, min(r, p)) = (0, {})",
            r.min(lp.p())
        )));
    }
    fs_common(fields, r / s, r, lp, engine, range)
}
