//! Littlewood-Paley square functions: the Lusin area function `S`, its
//! aperture variant `S_{k₀}`, the `g`-function and `g*_λ`.

use num_complex::Complex64;

use crate::dilation::{QuasiLevel, QuasiNormEngine};
use crate::dyadic::min_moment_order;
use crate::error::{Error, Result};
use crate::lattice::{apply_multiplier_to_spectrum, Filter, FilterSpec, Grid, SampledField};
use crate::maximal::{check_ball_fits, real_convolve, real_spectrum, BallRaster, ScaleRange};

/// Fraction of the peak band coverage below which a frequency counts as
/// outside every band.
const BAND_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct SquareFunctionRequest {
    pub filter: FilterSpec,
    pub range: ScaleRange,
    /// Only read by `g*_λ`.
    pub lambda: f64,
    /// Only read by `S_{k₀}`.
    pub k0: u32,
}

impl SquareFunctionRequest {
    pub fn new(filter: FilterSpec, range: ScaleRange) -> Self {
        Self {
            filter,
            range,
            lambda: 0.0,
            k0: 0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_k0(mut self, k0: u32) -> Self {
        self.k0 = k0;
        self
    }

    /// Checks the moment order against `p`; returns warnings (currently
    /// only `λ ≤ 2/p`) without failing.
    pub fn admissibility(&self, p: f64, engine: &QuasiNormEngine) -> Result<Vec<String>> {
        let needed = min_moment_order(p.min(1.0), engine.dilation())?;
        match self.filter.moment_order() {
            Some(s) if s >= needed => {}
            got => {
                return Err(Error::ParameterInadmissible(format!(
                    "filter cancels moments through {got:?}, p = {p} needs {needed}"
                )))
            }
        }
        let mut warnings = Vec::new();
        if self.lambda > 0.0 && self.lambda <= 2.0 / p {
            warnings.push(format!(
                "λ = {} does not exceed 2/p = {}",
                self.lambda,
                2.0 / p
            ));
        }
        Ok(warnings)
    }
}

/// Per-scale multipliers and raster shared by every operator on one grid.
#[derive(Debug, Clone)]
pub struct SquarePlan {
    grid: Grid,
    range: ScaleRange,
    b: f64,
    multipliers: Vec<Vec<Complex64>>,
    raster: BallRaster,
}

impl SquarePlan {
    pub fn new(
        filter: &dyn Filter,
        range: ScaleRange,
        engine: &QuasiNormEngine,
        grid: &Grid,
    ) -> Result<Self> {
        range.check_resolvable(engine, grid)?;
        let multipliers = range
            .iter()
            .map(|k| crate::lattice::filter_spectrum(filter, grid, engine.dilation(), k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: *grid,
            range,
            b: engine.b(),
            multipliers,
            raster: BallRaster::new(engine, grid)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn range(&self) -> ScaleRange {
        self.range
    }

    pub fn raster(&self) -> &BallRaster {
        &self.raster
    }

    fn check(&self, f: &SampledField) -> Result<Vec<Complex64>> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(f.spectrum())
    }

    /// `|f ∗ φ_k|²` for every `k` in ascending order.
    pub fn energies(&self, f: &SampledField) -> Result<Vec<Vec<f64>>> {
        let fhat = self.check(f)?;
        self.multipliers
            .iter()
            .map(|m| {
                Ok(apply_multiplier_to_spectrum(self.grid, &fhat, m)?
                    .values()
                    .iter()
                    .map(|v| v.norm_sqr())
                    .collect())
            })
            .collect()
    }

    /// `(u ∗ χ_{B_j})(x)·h^n`: the integral of `u` over `x + B_j`.
    fn ball_integral(&self, u: &[f64], j: i32) -> Vec<f64> {
        let h = self.grid.cell_volume();
        let kernel: Vec<f64> = self
            .raster
            .indicator(j)
            .into_iter()
            .map(|v| v * h)
            .collect();
        real_convolve(&self.grid, u, &real_spectrum(&self.grid, &kernel))
    }

    /// `S_{k₀}` from precomputed energies.
    pub fn lusin_from_energies(&self, energies: &[Vec<f64>], k0: u32) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.grid.len()];
        for (k, u) in self.range.iter().zip(energies) {
            let j = k + k0 as i32;
            let w = self.b.powi(-j);
            for (a, v) in acc.iter_mut().zip(self.ball_integral(u, j)) {
                *a += w * v.max(0.0);
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    pub fn g_from_energies(&self, energies: &[Vec<f64>]) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.grid.len()];
        for u in energies {
            for (a, v) in acc.iter_mut().zip(u) {
                *a += v;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// `h^n (b^k/(b^k + ρ(d)))^λ` over signed offsets `d`, wrapped on the torus.
    pub fn g_star_kernel(&self, k: i32, lambda: f64) -> Vec<f64> {
        let h = self.grid.cell_volume();
        let bk = self.b.powi(k);
        self.raster
            .levels()
            .iter()
            .map(|lvl| {
                let rho = match lvl {
                    QuasiLevel::Zero => 0.0,
                    QuasiLevel::Finite(j) => self.b.powi(*j),
                    QuasiLevel::Infinite => f64::INFINITY,
                };
                h * (bk / (bk + rho)).powf(lambda)
            })
            .collect()
    }

    pub fn g_star_from_energies(&self, energies: &[Vec<f64>], lambda: f64) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.grid.len()];
        for (k, u) in self.range.iter().zip(energies) {
            let kernel = real_spectrum(&self.grid, &self.g_star_kernel(k, lambda));
            let w = self.b.powi(-k);
            for (a, v) in acc.iter_mut().zip(real_convolve(&self.grid, u, &kernel)) {
                *a += w * v.max(0.0);
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// Share of the spectral energy of `f` at frequencies where
    /// `Σ_k |φ̂_k|²` stays below 1% of its peak.
    pub fn out_of_band_fraction(&self, f: &SampledField) -> Result<f64> {
        let fhat = self.check(f)?;
        let cover: Vec<f64> = (0..self.grid.len())
            .map(|i| self.multipliers.iter().map(|m| m[i].norm_sqr()).sum())
            .collect();
        let peak = cover.iter().copied().fold(0.0, f64::max);
        let total: f64 = fhat.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return Ok(0.0);
        }
        let out: f64 = fhat
            .iter()
            .zip(&cover)
            .filter(|(_, &c)| c < BAND_FLOOR * peak)
            .map(|(v, _)| v.norm_sqr())
            .sum();
        Ok(out / total)
    }
}

fn plan_for(
    f: &SampledField,
    req: &SquareFunctionRequest,
    engine: &QuasiNormEngine,
    k0: u32,
) -> Result<SquarePlan> {
    check_ball_fits(engine, f.grid(), req.range.k_max + k0 as i32)?;
    SquarePlan::new(&req.filter, req.range, engine, f.grid())
}

/// `S(f)(x) = [Σ_k b^{-k} ∫_{x+B_k} |f ∗ φ_k(y)|² dy]^{1/2}`.
pub fn lusin_area(
    f: &SampledField,
    req: &SquareFunctionRequest,
    engine: &QuasiNormEngine,
) -> Result<SampledField> {
    let plan = plan_for(f, req, engine, 0)?;
    SampledField::from_real(*f.grid(), plan.lusin_from_energies(&plan.energies(f)?, 0))
}

/// `S_{k₀}(f)(x) = [Σ_k b^{-(k+k₀)} ∫_{x+B_{k+k₀}} |f ∗ φ_k(y)|² dy]^{1/2}`.
pub fn lusin_area_variant(
    f: &SampledField,
    req: &SquareFunctionRequest,
    engine: &QuasiNormEngine,
) -> Result<SampledField> {
    let plan = plan_for(f, req, engine, req.k0)?;
    SampledField::from_real(
        *f.grid(),
        plan.lusin_from_energies(&plan.energies(f)?, req.k0),
    )
}

/// `g(f)(x) = [Σ_k |f ∗ φ_k(x)|²]^{1/2}`.
pub fn lp_g(
    f: &SampledField,
    req: &SquareFunctionRequest,
    engine: &QuasiNormEngine,
) -> Result<SampledField> {
    let plan = SquarePlan::new(&req.filter, req.range, engine, f.grid())?;
    SampledField::from_real(*f.grid(), plan.g_from_energies(&plan.energies(f)?))
}

/// `g*_λ(f)(x) = [Σ_k b^{-k} ∫ (b^k/(b^k + ρ(x−y)))^λ |f ∗ φ_k(y)|² dy]^{1/2}`.
pub fn g_lambda_star(
    f: &SampledField,
    req: &SquareFunctionRequest,
    engine: &QuasiNormEngine,
) -> Result<SampledField> {
    if !(req.lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "λ must be positive, got {}",
            req.lambda
        )));
    }
    let plan = SquarePlan::new(&req.filter, req.range, engine, f.grid())?;
    SampledField::from_real(
        *f.grid(),
        plan.g_star_from_energies(&plan.energies(f)?, req.lambda),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::validate_dilation;
    use crate::lattice::{make_vanishing_moment_filter, BandlimitedAnnulus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (QuasiNormEngine, Grid, SquareFunctionRequest) {
        let e = QuasiNormEngine::new(validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap()).unwrap();
        let g = Grid::new(2, 16, 4.0).unwrap();
        let annulus = BandlimitedAnnulus::new(2, 0.2, 0.8).unwrap();
        let req = SquareFunctionRequest::new(
            FilterSpec::BandlimitedAnnulus(annulus),
            ScaleRange::new(-1, 0).unwrap(),
        );
        (e, g, req)
    }

    fn random_field(g: Grid, seed: u64) -> SampledField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SampledField::from_real(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    /// Offsets `d` (as signed multi-indices) with `level(d) < j`.
    fn ball_offsets(e: &QuasiNormEngine, g: &Grid, j: i32) -> Vec<[i64; 3]> {
        (0..g.len())
            .filter(|&i| e.level(&g.offset(i)) < QuasiLevel::Finite(j))
            .map(|i| g.signed_multi(i))
            .collect()
    }

    fn shifted(g: &Grid, x: usize, d: &[i64; 3]) -> usize {
        let m = g.multi_index(x);
        let t: Vec<i64> = (0..g.n()).map(|a| m[a] as i64 + d[a]).collect();
        g.flat_index_wrapped(&t)
    }

    #[test]
    fn zero_field_gives_zero() {
        let (e, g, req) = setup();
        let z = SampledField::zeros(g);
        let r = req.clone().with_lambda(3.0).with_k0(1);
        for out in [
            lusin_area(&z, &r, &e).unwrap(),
            lp_g(&z, &r, &e).unwrap(),
            g_lambda_star(&z, &r, &e).unwrap(),
            lusin_area_variant(&z, &r, &e).unwrap(),
        ] {
            assert!(out.is_zero());
        }
    }

    #[test]
    fn lusin_matches_brute_force() {
        let (e, g, req) = setup();
        let f = random_field(g, 3);
        let plan = SquarePlan::new(&req.filter, req.range, &e, &g).unwrap();
        let energies = plan.energies(&f).unwrap();
        for k0 in [0u32, 1] {
            let fast = plan.lusin_from_energies(&energies, k0);
            for x in 0..g.len() {
                let mut acc = 0.0;
                for (k, u) in req.range.iter().zip(&energies) {
                    let j = k + k0 as i32;
                    let s: f64 = ball_offsets(&e, &g, j)
                        .iter()
                        .map(|d| u[shifted(&g, x, d)])
                        .sum();
                    acc += e.b().powi(-j) * s * g.cell_volume();
                }
                let slow = acc.sqrt();
                assert!((fast[x] - slow).abs() <= 1e-12 * slow.max(1.0), "k0 = {k0}");
            }
        }
    }

    #[test]
    fn variant_at_zero_is_lusin() {
        let (e, g, req) = setup();
        let f = random_field(g, 4);
        let s = lusin_area(&f, &req, &e).unwrap();
        let s0 = lusin_area_variant(&f, &req.clone().with_k0(0), &e).unwrap();
        assert_eq!(s, s0);
    }

    #[test]
    fn ring_relation() {
        let (e, g, req) = setup();
        let f = random_field(g, 5);
        let plan = SquarePlan::new(&req.filter, req.range, &e, &g).unwrap();
        let en = plan.energies(&f).unwrap();
        let b = e.b();
        let s0 = plan.lusin_from_energies(&en, 0);
        let s1 = plan.lusin_from_energies(&en, 1);
        for x in 0..g.len() {
            let mut ring = 0.0;
            for (k, u) in req.range.iter().zip(&en) {
                let inner = ball_offsets(&e, &g, k);
                let outer = ball_offsets(&e, &g, k + 1);
                let s: f64 = outer
                    .iter()
                    .filter(|d| !inner.contains(d))
                    .map(|d| u[shifted(&g, x, d)])
                    .sum();
                ring += b.powi(-k) * s * g.cell_volume();
            }
            let lhs = s0[x] * s0[x] + ring;
            let rhs = s1[x] * s1[x] * b;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn g_star_pointwise_bounds() {
        let (e, g, req) = setup();
        let f = random_field(g, 6);
        let plan = SquarePlan::new(&req.filter, req.range, &e, &g).unwrap();
        let en = plan.energies(&f).unwrap();
        let s = plan.lusin_from_energies(&en, 0);
        let g3 = plan.g_star_from_energies(&en, 3.0);
        let g5 = plan.g_star_from_energies(&en, 5.0);
        for x in 0..g.len() {
            assert!(s[x] <= 2f64.powf(1.5) * g3[x] * (1.0 + 1e-12));
            assert!(g5[x] <= g3[x] * (1.0 + 1e-12));
        }
        // brute-force g*
        for x in [0usize, 37, 200] {
            let mut acc = 0.0;
            for (k, u) in req.range.iter().zip(&en) {
                let bk = e.b().powi(k);
                let mut s = 0.0;
                for y in 0..g.len() {
                    let d: Vec<f64> = (0..2).map(|a| g.offset(x)[a] - g.offset(y)[a]).collect();
                    let wrapped: Vec<f64> = d
                        .iter()
                        .map(|v| {
                            let l = g.period();
                            let w = v.rem_euclid(l);
                            if w >= l / 2.0 {
                                w - l
                            } else {
                                w
                            }
                        })
                        .collect();
                    let rho = e.rho(&wrapped).value;
                    s += (bk / (bk + rho)).powf(3.0) * u[y];
                }
                acc += s * g.cell_volume() / bk;
            }
            assert!((acc.sqrt() - g3[x]).abs() <= 1e-12 * g3[x].max(1.0));
        }
    }

    #[test]
    fn g_star_ring_decomposition() {
        let (e, g, req) = setup();
        let f = random_field(g, 7);
        let plan = SquarePlan::new(&req.filter, req.range, &e, &g).unwrap();
        let en = plan.energies(&f).unwrap();
        let lambda = 3.0;
        let b = e.b();
        let gs = plan.g_star_from_energies(&en, lambda);
        // enough apertures that B_{k+M} covers the whole torus
        let m_max = (1..20)
            .find(|m| plan.raster().count(req.range.k_min + m) == g.len())
            .unwrap() as u32;
        let mut rhs = plan
            .lusin_from_energies(&en, 0)
            .iter()
            .map(|v| v * v)
            .collect::<Vec<_>>();
        for m in 1..=m_max {
            let sm = plan.lusin_from_energies(&en, m);
            let w = b.powf(-(m as f64) * (lambda - 1.0));
            for (r, v) in rhs.iter_mut().zip(sm) {
                *r += w * v * v;
            }
        }
        let c = b.powf(lambda);
        for x in 0..g.len() {
            assert!(gs[x] * gs[x] <= c * rhs[x] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn homogeneity_and_g_identity() {
        let (e, g, req) = setup();
        let f = random_field(g, 8);
        let r = req.clone().with_lambda(2.5);
        let c = Complex64::new(0.0, -2.0);
        let cf = f.scale(c);
        let a = lp_g(&f, &r, &e).unwrap().real_parts();
        let b = lp_g(&cf, &r, &e).unwrap().real_parts();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.max(1.0));
        }
        // Parseval: h^n Σ g² equals the summed band energies
        let plan = SquarePlan::new(&r.filter, r.range, &e, &g).unwrap();
        let en = plan.energies(&f).unwrap();
        let lhs: f64 = a.iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
        let fhat = f.spectrum();
        let rhs: f64 = (0..g.len())
            .map(|i| {
                let m: f64 = plan.multipliers.iter().map(|m| m[i].norm_sqr()).sum();
                fhat[i].norm_sqr() * m
            })
            .sum::<f64>()
            * g.cell_volume()
            / g.len() as f64;
        assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        assert!(en.len() == 2);
    }

    #[test]
    fn band_null_space() {
        let e = QuasiNormEngine::new(validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap()).unwrap();
        let g = Grid::new(2, 32, 8.0).unwrap();
        let filter = FilterSpec::BandlimitedAnnulus(BandlimitedAnnulus::new(2, 0.5, 1.0).unwrap());
        let req =
            SquareFunctionRequest::new(filter, ScaleRange::new(1, 1).unwrap()).with_lambda(3.0);
        // frequency 1.5/L·... : a pure mode well outside the single band
        let f = SampledField::from_offset_fn(g, |x| {
            Complex64::new((2.0 * std::f64::consts::PI * 12.0 * x[0] / 8.0).cos(), 0.0)
        });
        for out in [
            lusin_area(&f, &req, &e).unwrap(),
            lp_g(&f, &req, &e).unwrap(),
            g_lambda_star(&f, &req, &e).unwrap(),
        ] {
            assert!(out.max_abs() < 1e-12);
        }
        let plan = SquarePlan::new(&req.filter, req.range, &e, &g).unwrap();
        assert!(plan.out_of_band_fraction(&f).unwrap() > 0.999);
    }

    #[test]
    fn admissibility_rules() {
        let (e, _, _) = setup();
        // moment order 2·2 − 1 = 3
        let req = SquareFunctionRequest::new(
            make_vanishing_moment_filter(1, &e),
            ScaleRange::new(0, 0).unwrap(),
        );
        assert!(req.admissibility(1.0, &e).unwrap().is_empty());
        assert!(req.admissibility(0.5, &e).unwrap().is_empty());
        assert!(req.admissibility(0.3, &e).is_err());
        let w = req.clone().with_lambda(3.0).admissibility(0.5, &e).unwrap();
        assert_eq!(w.len(), 1);
    }
}
