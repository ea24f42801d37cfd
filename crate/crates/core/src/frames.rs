//! Band-limited Calderón reproducing pairs built on the dual quasi-norm,
//! with continuous and cube-sampled reconstruction, `φ_Q` translates and
//! the cross-scale decay check.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dilation::{mat_vec, Dilation, QuasiNormEngine};
use crate::dyadic::DilatedCube;
use crate::error::{Error, Result};
use crate::lattice::{dilate_filter, write_field, Filter, Grid, SampledField};

/// Coverage above `1 − COVERED_TOL` counts as inside the reproduced band.
const COVERED_TOL: f64 = 1e-10;

/// `exp(1 − 1/(1 − (t/w)²))` on `|t| < w`.
pub fn eta(t: f64, w: f64) -> f64 {
    let u = t / w;
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameProfile {
    /// Half-width `w ∈ (½, 1]` of the bump in `log_b ρ*`.
    pub half_width: f64,
}

impl Default for FrameProfile {
    fn default() -> Self {
        Self { half_width: 1.0 }
    }
}

/// `Φ̂ = Ψ̂ = η(t*(ξ) + s) / (Σ_j η(t*(ξ) + s + j)²)^{1/2}` with
/// `t* = log_b ρ*` continuous and the shift `s` chosen so the support sits
/// inside the fundamental frequency cell `[−½, ½]ⁿ`.
#[derive(Debug, Clone)]
pub struct FramePair {
    grid: Grid,
    dilation: Dilation,
    dual: QuasiNormEngine,
    profile: FrameProfile,
    shift: i32,
    phi_hat: Vec<f64>,
    partition_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDescriptor {
    pub format: String,
    pub version: u32,
    /// `(a, b)`: `supp Φ̂ = {b^a < ρ* < b^b}`.
    pub annulus: (f64, f64),
    pub partition_defect: f64,
    /// `b^{-s}`: factor applied to the unshifted profile's frequencies.
    pub scaling_factor: f64,
    pub half_width: f64,
}

pub fn build_frame_pair(d: &Dilation, grid: &Grid, profile: FrameProfile) -> Result<FramePair> {
    let w = profile.half_width;
    if !(w > 0.5 && w <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "bump half-width must lie in (0.5, 1], got {w}"
        )));
    }
    if d.dim() != grid.n() {
        return Err(Error::InvalidInput(
            "dilation and grid dimensions differ".into(),
        ));
    }
    let dual = QuasiNormEngine::new(d.adjoint())?;
    // smallest s with B*_{w − s} inside [−½, ½]ⁿ
    let mut shift = -64;
    while dual
        .half_widths((w.ceil() as i32) - shift)
        .iter()
        .any(|&hw| hw > 0.5)
    {
        shift += 1;
        if shift > 64 {
            return Err(Error::InvalidInput(
                "frame support cannot be placed in the cell".into(),
            ));
        }
    }
    let mut pair = FramePair {
        grid: *grid,
        dilation: d.clone(),
        dual,
        profile,
        shift,
        phi_hat: Vec::new(),
        partition_defect: 0.0,
    };
    pair.phi_hat = pair.multiplier(0)?;
    pair.partition_defect = pair.measure_defect()?;
    Ok(pair)
}

impl FramePair {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dilation(&self) -> &Dilation {
        &self.dilation
    }

    pub fn dual_engine(&self) -> &QuasiNormEngine {
        &self.dual
    }

    pub fn shift(&self) -> i32 {
        self.shift
    }

    pub fn partition_defect(&self) -> f64 {
        self.partition_defect
    }

    /// `(−w − s, w − s)` in `log_b ρ*`.
    pub fn annulus(&self) -> (f64, f64) {
        let w = self.profile.half_width;
        (-w - self.shift as f64, w - self.shift as f64)
    }

    /// `Φ̂(ξ)` from the continuous dual level.
    pub fn phi_hat_at(&self, xi: &[f64]) -> Result<f64> {
        let t = self.dual.continuous_level(xi);
        if !t.is_finite() {
            return Ok(0.0);
        }
        let w = self.profile.half_width;
        let tau = t + self.shift as f64;
        let base = tau.floor() as i64;
        let denom: f64 = (-base - 2..=-base + 2)
            .map(|j| eta(tau + j as f64, w).powi(2))
            .sum();
        if denom == 0.0 {
            return Err(Error::CoverageGap {
                frequency: xi.to_vec(),
            });
        }
        Ok(eta(tau, w) / denom.sqrt())
    }

    /// `Φ̂_j(ξ) = Φ̂((A*)^{-j}ξ)` on the grid frequencies; `Φ_j(x) = b^j Φ(A^j x)`.
    pub fn multiplier(&self, j: i32) -> Result<Vec<f64>> {
        let m = self.dual.dilation().power(-j);
        (0..self.grid.len())
            .map(|i| self.phi_hat_at(&mat_vec(&m, &self.grid.frequency(i))))
            .collect()
    }

    /// `Σ_{j∈J} |Φ̂_j|²` on the grid frequencies.
    pub fn coverage(&self, levels: impl IntoIterator<Item = i32>) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.grid.len()];
        for j in levels {
            for (a, v) in acc.iter_mut().zip(self.multiplier(j)?) {
                *a += v * v;
            }
        }
        Ok(acc)
    }

    /// `max |Σ_{j∈ℤ} |Φ̂((A*)^j ξ)|² − 1|` over nonzero grid frequencies,
    /// evaluating every term at the transformed frequency.
    fn measure_defect(&self) -> Result<f64> {
        let dual = self.dual.dilation();
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() {
            let xi = self.grid.frequency(i);
            if xi.iter().all(|&v| v == 0.0) {
                continue;
            }
            let t = self.dual.continuous_level(&xi) + self.shift as f64;
            let w = self.profile.half_width;
            let lo = (-t - w).floor() as i32 - 1;
            let hi = (-t + w).ceil() as i32 + 1;
            let mut sum = 0.0;
            for j in lo..=hi {
                let v = self.phi_hat_at(&mat_vec(&dual.power(j), &xi))?;
                sum += v * v;
            }
            worst = worst.max((sum - 1.0).abs());
        }
        Ok(worst)
    }

    /// `Φ` as a sampled field (`DFT(Φ)·h^n = Φ̂`).
    pub fn phi_field(&self) -> Result<SampledField> {
        let h = self.grid.cell_volume();
        SampledField::from_spectrum(
            self.grid,
            self.phi_hat
                .iter()
                .map(|&v| Complex64::new(v / h, 0.0))
                .collect(),
        )
    }

    /// Writes `phi.anlp`, `psi.anlp` and `frame.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<FrameDescriptor> {
        fs::create_dir_all(dir)?;
        let phi = self.phi_field()?;
        write_field(&dir.join("phi.anlp"), &phi)?;
        write_field(&dir.join("psi.anlp"), &phi)?;
        let desc = FrameDescriptor {
            format: "anilp-frame".into(),
            version: 1,
            annulus: self.annulus(),
            partition_defect: self.partition_defect,
            scaling_factor: self.dual.b().powi(-self.shift),
            half_width: self.profile.half_width,
        };
        let json = serde_json::to_string_pretty(&desc).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join("frame.json"), json)?;
        Ok(desc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// `‖f − f_rec‖₂ / ‖f‖₂`.
    pub residual: f64,
    /// Square of `residual`, comparable with energy fractions.
    pub energy_residual: f64,
    /// Share of the energy of `f` where the truncated coverage is below one.
    pub uncovered_fraction: f64,
    pub degenerate: bool,
}

fn check_grid(f: &SampledField, pair: &FramePair) -> Result<()> {
    if f.grid() != &pair.grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn report(f: &SampledField, rec: &SampledField, uncovered: f64) -> Result<ResidualReport> {
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Ok(ResidualReport {
            residual: 0.0,
            energy_residual: 0.0,
            uncovered_fraction: 0.0,
            degenerate: true,
        });
    }
    let r = f.sub(rec)?.l2_norm() / norm;
    Ok(ResidualReport {
        residual: r,
        energy_residual: r * r,
        uncovered_fraction: uncovered,
        degenerate: false,
    })
}

fn uncovered_fraction(fhat: &[Complex64], coverage: &[f64]) -> f64 {
    let total: f64 = fhat.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let out: f64 = fhat
        .iter()
        .zip(coverage)
        .filter(|(_, &c)| c < 1.0 - COVERED_TOL)
        .map(|(v, _)| v.norm_sqr())
        .sum();
    out / total
}

/// Relative residual of `Σ_{|j|≤J} f ∗ Φ̃_j ∗ Ψ_j` against `f`. Fails with
/// `SpectrumUncovered` when most of the energy lies outside the band.
pub fn reproduce_continuous(
    f: &SampledField,
    pair: &FramePair,
    big_j: u32,
) -> Result<ResidualReport> {
    check_grid(f, pair)?;
    let j = big_j as i32;
    let cov = pair.coverage(-j..=j)?;
    let fhat = f.spectrum();
    let unc = uncovered_fraction(&fhat, &cov);
    if unc > 0.5 {
        return Err(Error::SpectrumUncovered { fraction: unc });
    }
    let rec = SampledField::from_spectrum(
        pair.grid,
        fhat.iter().zip(&cov).map(|(s, c)| s * *c).collect(),
    )?;
    report(f, &rec, unc)
}

/// Lattice step, in samples per axis, of the level-`j` cube corners
/// `A^{-j}k`, together with the number of corners per axis in one period.
pub(crate) fn cube_lattice(d: &Dilation, grid: &Grid, j: i32) -> Result<(Vec<usize>, Vec<usize>)> {
    let diag = d
        .diagonal_integer()
        .ok_or_else(|| Error::LatticeMisaligned {
            level: j,
            detail: "cube corners need a diagonal integer dilation".into(),
        })?;
    let h = grid.spacing();
    let mut steps = Vec::new();
    let mut counts = Vec::new();
    for a in diag {
        let side = (a as f64).powi(-j);
        let ratio = side / h;
        let step = ratio.round();
        if step < 1.0 || (ratio - step).abs() > 1e-9 * ratio || grid.size() % step as usize != 0 {
            return Err(Error::LatticeMisaligned {
                level: j,
                detail: format!(
                    "cube side {side} is not a whole number of samples dividing the period"
                ),
            });
        }
        steps.push(step as usize);
        counts.push(grid.size() / step as usize);
    }
    Ok((steps, counts))
}

/// Number of level-`j` cubes per period: `b^j Lⁿ`.
pub fn cube_count(d: &Dilation, grid: &Grid, j: i32) -> Result<usize> {
    Ok(cube_lattice(d, grid, j)?.1.iter().product())
}

/// Residual of `Σ_{|j|≤J} Σ_{Q∈𝒬_j} |Q| (f ∗ Φ̃_j)(x_Q) Ψ_j(· − x_Q)`.
pub fn reproduce_discrete(
    f: &SampledField,
    pair: &FramePair,
    big_j: u32,
) -> Result<ResidualReport> {
    check_grid(f, pair)?;
    let grid = pair.grid;
    let n = grid.n();
    let fhat = f.spectrum();
    let h = grid.cell_volume();
    let b = pair.dilation.b();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut cov_total = vec![0.0; grid.len()];
    let j = big_j as i32;
    for level in -j..=j {
        let (steps, _) = cube_lattice(&pair.dilation, &grid, level)?;
        let m = pair.multiplier(level)?;
        let coeff =
            SampledField::from_spectrum(grid, fhat.iter().zip(&m).map(|(s, v)| s * *v).collect())?;
        let weight = b.powi(-level) / h;
        let train: Vec<Complex64> = coeff
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mi = grid.multi_index(i);
                if (0..n).all(|a| mi[a] % steps[a] == 0) {
                    v * weight
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let tspec = SampledField::new(grid, train)?.spectrum();
        let part =
            SampledField::from_spectrum(grid, tspec.iter().zip(&m).map(|(s, v)| s * *v).collect())?;
        for (a, v) in acc.iter_mut().zip(part.values()) {
            *a += v;
        }
        for (c, v) in cov_total.iter_mut().zip(&m) {
            *c += v * v;
        }
    }
    let rec = SampledField::new(grid, acc)?;
    report(f, &rec, uncovered_fraction(&fhat, &cov_total))
}

/// `φ_Q(x) = |Q|^{1/2} φ_{-j}(x − x_Q) = b^{j/2} φ(A^j x − k)`.
pub fn phi_q(phi: &SampledField, q: &DilatedCube, d: &Dilation) -> Result<SampledField> {
    let grid = *phi.grid();
    let h = grid.spacing();
    let shift: Vec<i64> = q
        .corner
        .iter()
        .map(|&c| {
            let s = c / h;
            if (s - s.round()).abs() > 1e-9 * s.abs().max(1.0) {
                Err(Error::LatticeMisaligned {
                    level: q.j,
                    detail: format!("cube corner {c} is not a grid point"),
                })
            } else {
                Ok(s.round() as i64)
            }
        })
        .collect::<Result<_>>()?;
    let dilated = dilate_filter(phi, -q.j, d)?;
    Ok(dilated.field.shift(&shift).scale_real(q.measure.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossScaleRow {
    pub i: i32,
    pub j: i32,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossScaleReport {
    pub rows: Vec<CrossScaleRow>,
    pub min: f64,
    pub max: f64,
}

impl CrossScaleReport {
    /// Largest `|ratio / mean − 1|` over the rows.
    pub fn spread(&self) -> f64 {
        let mean = self.rows.iter().map(|r| r.ratio).sum::<f64>() / self.rows.len() as f64;
        self.rows
            .iter()
            .map(|r| (r.ratio / mean - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// For each `(i, j)` with `i ≥ j`:
/// `max_x |φ_{-i} ∗ ψ_{-j}(x)| [1 + ρ(A^j x)]^M / b^{j − (i−j)(ℓ+1)ζ₋}`.
pub fn cross_scale_ratios(
    phi: &dyn Filter,
    psi: &dyn Filter,
    engine: &QuasiNormEngine,
    grid: &Grid,
    ell: u32,
    big_m: f64,
    pairs: &[(i32, i32)],
) -> Result<CrossScaleReport> {
    for (name, f) in [("φ", phi), ("ψ", psi)] {
        if f.moment_order().is_none_or(|s| s < ell) {
            return Err(Error::ParameterInadmissible(format!(
                "{name} does not cancel moments through order {ell}"
            )));
        }
    }
    let d = engine.dilation();
    let b = engine.b();
    let zeta = d.zeta_minus();
    let mut rows = Vec::new();
    for &(i, j) in pairs {
        if i < j {
            return Err(Error::InvalidInput(format!("need i ≥ j, got ({i}, {j})")));
        }
        // φ_{-i} has Fourier transform φ̂((A*)^{-i}ξ)
        let mi = d.power(-i).transpose();
        let mj = d.power(-j).transpose();
        let prod: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let xi = grid.frequency(idx);
                phi.fourier(&mat_vec(&mi, &xi)) * psi.fourier(&mat_vec(&mj, &xi))
            })
            .collect();
        let edge = crate::lattice::shell_ratio(grid, &prod);
        if edge > crate::lattice::ALIASING_TOL {
            return Err(Error::AliasingRisk {
                scale: i,
                detail: format!("product spectrum reaches the Nyquist shell (ratio {edge:.3e})"),
            });
        }
        let h = grid.cell_volume();
        let conv = SampledField::from_spectrum(*grid, prod.iter().map(|v| v / h).collect())?;
        let aj = d.power(j);
        let mut worst: f64 = 0.0;
        for (idx, v) in conv.values().iter().enumerate() {
            let rho = engine.rho(&mat_vec(&aj, &grid.offset(idx))).value;
            worst = worst.max(v.norm() * (1.0 + rho).powf(big_m));
        }
        let denom = b.powf(j as f64 - (i - j) as f64 * (ell as f64 + 1.0) * zeta);
        rows.push(CrossScaleRow {
            i,
            j,
            ratio: worst / denom,
        });
    }
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(CrossScaleReport { rows, min, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::validate_dilation;
    use crate::dyadic::dilated_cube;
    use crate::lattice::{GaussianHermite, PERIOD_TAIL_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_i() -> Dilation {
        validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap()
    }

    /// Random complex field with spectrum only where the coverage is one.
    fn covered_field(pair: &FramePair, big_j: i32, seed: u64) -> SampledField {
        let cov = pair.coverage(-big_j..=big_j).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fhat = cov
            .iter()
            .map(|&c| {
                if c >= 1.0 - COVERED_TOL {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        SampledField::from_spectrum(*pair.grid(), fhat).unwrap()
    }

    #[test]
    fn partition_and_zero_frequency() {
        for d in [
            two_i(),
            validate_dilation(2, &[2.0, 0.0, 0.0, 4.0]).unwrap(),
        ] {
            let g = Grid::new(2, 64, 16.0).unwrap();
            let pair = build_frame_pair(&d, &g, FrameProfile::default()).unwrap();
            assert!(
                pair.partition_defect() <= 1e-10,
                "{}",
                pair.partition_defect()
            );
            assert_eq!(pair.phi_hat_at(&[0.0, 0.0]).unwrap(), 0.0);
            // support inside the fundamental cell
            let m = pair.multiplier(0).unwrap();
            for (i, v) in m.iter().enumerate() {
                if *v != 0.0 {
                    assert!(g.frequency(i).iter().all(|x| x.abs() <= 0.5));
                }
            }
        }
    }

    #[test]
    fn dual_homogeneity() {
        let d = validate_dilation(2, &[1.0, 1.0, -1.0, 1.5]).unwrap();
        let dual = QuasiNormEngine::new(d.adjoint()).unwrap();
        assert_eq!(dual.b(), d.b());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let xi = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let a = dual.rho(&xi).value;
            let b = dual.rho(&d.adjoint().apply(&xi)).value;
            assert_eq!(b, d.b() * a);
        }
    }

    #[test]
    fn continuous_reproduction() {
        let g = Grid::new(2, 64, 16.0).unwrap();
        let pair = build_frame_pair(&two_i(), &g, FrameProfile::default()).unwrap();
        let f = covered_field(&pair, 2, 5);
        let r = reproduce_continuous(&f, &pair, 2).unwrap();
        assert!(r.residual <= 1e-6 && !r.degenerate, "{r:?}");
        let shifted = f.shift(&[5, -3]);
        let rs = reproduce_continuous(&shifted, &pair, 2).unwrap();
        assert!((rs.residual - r.residual).abs() <= 1e-12);
        let z = reproduce_continuous(&SampledField::zeros(g), &pair, 2).unwrap();
        assert!(z.degenerate && z.residual == 0.0);
    }

    #[test]
    fn uncovered_energy_shows_in_residual() {
        let g = Grid::new(2, 64, 16.0).unwrap();
        let pair = build_frame_pair(&two_i(), &g, FrameProfile::default()).unwrap();
        let f = covered_field(&pair, 1, 9);
        // a constant sits at ξ = 0, outside every band
        let e_in = f.energy();
        let c = (e_in / 9.0 / g.volume()).sqrt();
        let g10 = f
            .add(&SampledField::from_real(g, vec![c; g.len()]).unwrap())
            .unwrap();
        let r = reproduce_continuous(&g10, &pair, 1).unwrap();
        assert!((r.uncovered_fraction - 0.1).abs() < 1e-9);
        assert!(
            r.energy_residual >= 0.05 && r.energy_residual <= 0.2,
            "{r:?}"
        );
    }

    #[test]
    fn discrete_reproduction_and_counts() {
        let d = two_i();
        let g = Grid::new(2, 128, 16.0).unwrap();
        let pair = build_frame_pair(&d, &g, FrameProfile::default()).unwrap();
        assert_eq!(cube_count(&d, &g, 0).unwrap(), 256);
        assert_eq!(cube_count(&d, &g, 2).unwrap(), 256 * 16);
        assert_eq!(cube_count(&d, &g, -2).unwrap(), 16);
        let f = covered_field(&pair, 2, 11);
        let r = reproduce_discrete(&f, &pair, 2).unwrap();
        assert!(r.residual <= 1e-4, "{r:?}");
        assert!(
            reproduce_discrete(&SampledField::zeros(g), &pair, 2)
                .unwrap()
                .degenerate
        );
        assert!(matches!(
            reproduce_discrete(&f, &pair, 5),
            Err(Error::LatticeMisaligned { .. })
        ));
    }

    #[test]
    fn phi_q_normalization_and_pairing() {
        let d = two_i();
        let g = Grid::new(2, 128, 16.0).unwrap();
        let phi =
            crate::lattice::sample_filter(&GaussianHermite::isotropic(2, 0.3, 1).unwrap(), &g)
                .unwrap();
        let base = phi_q(&phi, &dilated_cube(&d, 0, &[0, 0]).unwrap(), &d).unwrap();
        assert_eq!(base, phi);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f =
            SampledField::from_real(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap();
        for _ in 0..4 {
            let j = rng.gen_range(-1..=1);
            let k = [rng.gen_range(-3..3), rng.gen_range(-3..3)];
            let q = dilated_cube(&d, j, &k).unwrap();
            let pq = phi_q(&phi, &q, &d).unwrap();
            assert!((pq.l2_norm() - phi.l2_norm()).abs() <= 1e-10 * phi.l2_norm());
            let h = g.cell_volume();
            let lhs: Complex64 = f
                .values()
                .iter()
                .zip(pq.values())
                .map(|(a, b)| a * b.conj())
                .sum::<Complex64>()
                * h;
            // (f ∗ Φ̃_{-j})(x_Q) = h^n Σ_y f(y) conj(φ_{-j}(y − x_Q))
            let pj = dilate_filter(&phi, -j, &d).unwrap().field;
            let xq: Vec<i64> = q
                .corner
                .iter()
                .map(|c| (c / g.spacing()).round() as i64)
                .collect();
            let mut conv = Complex64::new(0.0, 0.0);
            for y in 0..g.len() {
                let m = g.multi_index(y);
                let t: Vec<i64> = (0..2).map(|a| m[a] as i64 - xq[a]).collect();
                conv += f.values()[y] * pj.values()[g.flat_index_wrapped(&t)].conj();
            }
            let rhs = conv * h * q.measure.sqrt();
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        }
        assert!(PERIOD_TAIL_TOL > 0.0);
    }

    #[test]
    fn cross_scale_ratios_are_stable() {
        let d = two_i();
        let e = QuasiNormEngine::new(d).unwrap();
        let g = Grid::new(2, 128, 8.0).unwrap();
        let phi = GaussianHermite::isotropic(2, 0.08, 1).unwrap();
        let pairs: Vec<(i32, i32)> = (0..=4).map(|m| (m, 0)).collect();
        let r = cross_scale_ratios(&phi, &phi, &e, &g, 1, 4.0, &pairs).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| row.ratio.is_finite() && row.ratio > 0.0));
        assert!(r.spread() <= 0.5, "{r:?}");
        let doubled = GaussianHermite::new(phi.covariance().clone(), 1).unwrap();
        let twice = Scaled(doubled);
        let r2 = cross_scale_ratios(&twice, &phi, &e, &g, 1, 4.0, &pairs).unwrap();
        for (a, b) in r.rows.iter().zip(&r2.rows) {
            assert!((b.ratio - 2.0 * a.ratio).abs() <= 1e-12 * b.ratio);
        }
    }

    #[derive(Debug)]
    struct Scaled(GaussianHermite);

    impl Filter for Scaled {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn fourier(&self, xi: &[f64]) -> Complex64 {
            self.0.fourier(xi) * 2.0
        }
        fn moment_order(&self) -> Option<u32> {
            self.0.moment_order()
        }
        fn band_limited(&self) -> bool {
            false
        }
        fn spatial(&self, x: &[f64]) -> Option<Complex64> {
            self.0.spatial(x).map(|v| v * 2.0)
        }
    }
}
