use super::min_moment_order;
use crate::dilation::QuasiNormEngine;
use crate::error::{Error, Result};
use crate::lattice::{Grid, SampledField};
use crate::maximal::{check_ball_fits, BallRaster};

/// A field proposed as a `(p, r, s)`-atom supported in `center + B_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCandidate {
    pub field: SampledField,
    /// Ball center in absolute torus coordinates.
    pub center: Vec<f64>,
    pub level: i32,
    pub p: f64,
    /// `f64::INFINITY` for `r = ∞`.
    pub r: f64,
    pub s: u32,
}

impl AtomCandidate {
    /// Checks the triplet: `p ∈ (0,1]`, `r ∈ (1,∞]`, `s` at least the minimal moment order.
    pub fn new(
        field: SampledField,
        center: Vec<f64>,
        level: i32,
        (p, r, s): (f64, f64, u32),
        engine: &QuasiNormEngine,
    ) -> Result<Self> {
        if center.len() != field.grid().n() {
            return Err(Error::InvalidInput("center has the wrong dimension".into()));
        }
        if !(r > 1.0) {
            return Err(Error::ParameterInadmissible(format!(
                "r must lie in (1, ∞], got {r}"
            )));
        }
        let s_min = min_moment_order(p, engine.dilation())
            .map_err(|e| Error::ParameterInadmissible(e.to_string()))?;
        if s < s_min {
            return Err(Error::ParameterInadmissible(format!(
                "s = {s} is below the minimal moment order {s_min} for p = {p}"
            )));
        }
        Ok(Self {
            field,
            center,
            level,
            p,
            r,
            s,
        })
    }

    /// `|B| = b^level`.
    pub fn ball_measure(&self, engine: &QuasiNormEngine) -> f64 {
        engine.b().powi(self.level)
    }

    /// `|B|^{1/r − 1/p}`.
    pub fn size_bound(&self, engine: &QuasiNormEngine) -> f64 {
        let inv_r = if self.r.is_infinite() {
            0.0
        } else {
            1.0 / self.r
        };
        self.ball_measure(engine).powf(inv_r - 1.0 / self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomTolerances {
    /// Multiplicative slack on the size bound.
    pub size: f64,
    /// Relative moment threshold.
    pub moment: f64,
}

impl Default for AtomTolerances {
    fn default() -> Self {
        Self {
            size: 1e-9,
            moment: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomReport {
    pub support_ok: bool,
    pub size_ok: bool,
    pub moments_ok: bool,
    /// The field is identically zero; every verdict passes vacuously.
    pub degenerate: bool,
    pub size_norm: f64,
    pub size_bound: f64,
    /// Largest `|moment| / (‖a‖₁ radius^{|α|})` over `|α| ≤ s`.
    pub worst_moment: f64,
}

impl AtomReport {
    pub fn passes(&self) -> bool {
        self.support_ok && self.size_ok && self.moments_ok
    }
}

/// Torus displacement `x − c` wrapped into `[−L/2, L/2)ⁿ`.
pub(crate) fn wrapped_offset(grid: &Grid, x: &[f64], c: &[f64]) -> Vec<f64> {
    let l = grid.period();
    x.iter()
        .zip(c)
        .map(|(a, b)| {
            let d = (a - b).rem_euclid(l);
            if d >= l / 2.0 {
                d - l
            } else {
                d
            }
        })
        .collect()
}

/// Multi-indices with `|α| ≤ s` in `n` variables.
fn multi_indices(n: usize, s: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for a in 0..=(s - used) {
                let mut v = prefix.clone();
                v.push(a);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Support, size and moment verdicts for an atom candidate.
pub fn validate_atom(
    c: &AtomCandidate,
    engine: &QuasiNormEngine,
    tol: AtomTolerances,
) -> AtomReport {
    let grid = *c.field.grid();
    let h = grid.cell_volume();
    let bound = c.size_bound(engine);
    if c.field.is_zero() {
        return AtomReport {
            support_ok: true,
            size_ok: true,
            moments_ok: true,
            degenerate: true,
            size_norm: 0.0,
            size_bound: bound,
            worst_moment: 0.0,
        };
    }
    let offsets: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| wrapped_offset(&grid, &grid.point(i), &c.center))
        .collect();
    let values = c.field.values();
    let support_ok = values
        .iter()
        .zip(&offsets)
        .all(|(v, x)| v.norm() == 0.0 || engine.ball_membership(c.level, x));
    let mags = c.field.abs();
    let size_norm = if c.r.is_infinite() {
        mags.iter().copied().fold(0.0, f64::max)
    } else {
        (mags.iter().map(|v| v.powf(c.r)).sum::<f64>() * h).powf(1.0 / c.r)
    };
    let size_ok = size_norm <= bound * (1.0 + tol.size);
    let l1: f64 = mags.iter().sum::<f64>() * h;
    let radius = engine
        .half_widths(c.level)
        .into_iter()
        .fold(0.0f64, f64::max);
    let mut worst: f64 = 0.0;
    for alpha in multi_indices(grid.n(), c.s) {
        let order: u32 = alpha.iter().sum();
        let moment = values
            .iter()
            .zip(&offsets)
            .map(|(v, x)| {
                let mono: f64 = x
                    .iter()
                    .zip(&alpha)
                    .map(|(xi, &a)| xi.powi(a as i32))
                    .product();
                v * mono
            })
            .sum::<num_complex::Complex64>()
            * h;
        let scale = l1 * radius.powi(order as i32);
        worst = worst.max(moment.norm() / scale);
    }
    AtomReport {
        support_ok,
        size_ok,
        moments_ok: worst <= tol.moment,
        degenerate: false,
        size_norm,
        size_bound: bound,
        worst_moment: worst,
    }
}

fn ball_setup(
    grid: &Grid,
    engine: &QuasiNormEngine,
    center_idx: usize,
    level: i32,
) -> Result<BallRaster> {
    if center_idx >= grid.len() {
        return Err(Error::InvalidInput("center index outside the grid".into()));
    }
    check_ball_fits(engine, grid, level)?;
    BallRaster::new(engine, grid)
}

/// `½|B|^{-1/p}(χ_{B⁺} − χ_{B⁻})` on the rasterized ball around a grid
/// point, split into the two halves `{d : d ≻ 0}` and `{−d}` (the center
/// sample is left at zero), so both halves have equal measure.
pub fn canonical_atom(
    grid: &Grid,
    engine: &QuasiNormEngine,
    center_idx: usize,
    level: i32,
    p: f64,
    r: f64,
) -> Result<AtomCandidate> {
    let raster = ball_setup(grid, engine, center_idx, level)?;
    let members = raster.members(level);
    if members.len() < 3 {
        return Err(Error::ScaleUnresolvable {
            scale: level,
            detail: "ball covers fewer than three samples".into(),
        });
    }
    let height = 0.5 * engine.b().powi(level).powf(-1.0 / p);
    let center_multi = grid.multi_index(center_idx);
    let mut values = vec![0.0; grid.len()];
    for d in members {
        let s = grid.signed_multi(d);
        let sign = match s[..grid.n()].iter().find(|&&v| v != 0) {
            Some(&v) if v > 0 => 1.0,
            Some(_) => -1.0,
            None => 0.0,
        };
        let target: Vec<i64> = (0..grid.n())
            .map(|a| center_multi[a] as i64 + s[a])
            .collect();
        values[grid.flat_index_wrapped(&target)] = sign * height;
    }
    let field = SampledField::from_real(*grid, values)?;
    let s = min_moment_order(p, engine.dilation())?;
    if s > 0 {
        return Err(Error::ParameterInadmissible(format!(
            "two-valued atoms only cancel the mean; p = {p} needs {s} vanishing moments"
        )));
    }
    AtomCandidate::new(field, grid.point(center_idx), level, (p, r, 0), engine)
}

/// `Δ_h^m g` for a smooth bump `g` inside the ball, with `m = ⌈(s+1)/2⌉`
/// so every discrete moment of order `≤ 2m−1 ≥ s` vanishes; scaled to half
/// the size bound.
pub fn laplacian_atom(
    grid: &Grid,
    engine: &QuasiNormEngine,
    center_idx: usize,
    level: i32,
    (p, r, s): (f64, f64, u32),
) -> Result<AtomCandidate> {
    let raster = ball_setup(grid, engine, center_idx, level)?;
    let m = (s + 1).div_ceil(2);
    let center_multi = grid.multi_index(center_idx);
    let form = engine.ball_form(level);
    let c = engine.c();
    let h = grid.spacing();
    let mut theta = 0.6;
    while theta > 0.02 {
        let mut g = vec![0.0; grid.len()];
        for (idx, gv) in g.iter_mut().enumerate() {
            let x: Vec<f64> = grid.offset(idx);
            let q: f64 = crate::dilation::mat_vec(&form, &x)
                .iter()
                .zip(&x)
                .map(|(a, b)| a * b)
                .sum();
            let t = 1.0 - q / (theta * c);
            if t > 0.0 {
                *gv = t.powi(2 * m as i32 + 2);
            }
        }
        let mut a = g;
        for _ in 0..m {
            a = discrete_laplacian(grid, &a, h);
        }
        let inside = (0..grid.len()).all(|i| a[i] == 0.0 || raster.contains(level, i));
        let nonzero = a.iter().any(|&v| v != 0.0);
        if inside && nonzero {
            // move from the origin to the requested center
            let mut placed = vec![0.0; grid.len()];
            for (idx, v) in a.iter().enumerate() {
                let sm = grid.signed_multi(idx);
                let target: Vec<i64> = (0..grid.n())
                    .map(|ax| center_multi[ax] as i64 + sm[ax])
                    .collect();
                placed[grid.flat_index_wrapped(&target)] = *v;
            }
            let field = SampledField::from_real(*grid, placed)?;
            let mut cand =
                AtomCandidate::new(field, grid.point(center_idx), level, (p, r, s), engine)?;
            let mags = cand.field.abs();
            let norm = if r.is_infinite() {
                mags.iter().copied().fold(0.0, f64::max)
            } else {
                (mags.iter().map(|v| v.powf(r)).sum::<f64>() * grid.cell_volume()).powf(1.0 / r)
            };
            let scale = 0.5 * cand.size_bound(engine) / norm;
            cand.field = cand.field.scale_real(scale);
            return Ok(cand);
        }
        theta *= 0.7;
    }
    Err(Error::ScaleUnresolvable {
        scale: level,
        detail: format!("ball too small for {m} discrete Laplacians"),
    })
}

/// Periodic `(2n+1)`-point Laplacian divided by `h²`.
fn discrete_laplacian(grid: &Grid, v: &[f64], h: f64) -> Vec<f64> {
    let n = grid.n();
    let mut out = vec![0.0; v.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let m = grid.multi_index(idx);
        let mut acc = -2.0 * n as f64 * v[idx];
        for axis in 0..n {
            for step in [-1i64, 1] {
                let mut t: Vec<i64> = (0..n).map(|a| m[a] as i64).collect();
                t[axis] += step;
                acc += v[grid.flat_index_wrapped(&t)];
            }
        }
        *o = acc / (h * h);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::validate_dilation;

    fn setup() -> (QuasiNormEngine, Grid) {
        let e = QuasiNormEngine::new(validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap()).unwrap();
        (e, Grid::new(2, 32, 8.0).unwrap())
    }

    #[test]
    fn canonical_atom_passes() {
        let (e, g) = setup();
        let centre = g.flat_index(&[16, 16]);
        for r in [2.0, f64::INFINITY] {
            let a = canonical_atom(&g, &e, centre, 1, 1.0, r).unwrap();
            let rep = validate_atom(&a, &e, AtomTolerances::default());
            assert!(rep.passes(), "{rep:?}");
            assert!(!rep.degenerate);
        }
    }

    #[test]
    fn sign_flip_breaks_moments_only() {
        let (e, g) = setup();
        let centre = g.flat_index(&[16, 16]);
        let mut a = canonical_atom(&g, &e, centre, 1, 1.0, f64::INFINITY).unwrap();
        let idx = a.field.values().iter().position(|v| v.re > 0.0).unwrap();
        a.field.values_mut()[idx] = -a.field.values()[idx];
        let rep = validate_atom(&a, &e, AtomTolerances::default());
        assert!(rep.support_ok && rep.size_ok && !rep.moments_ok);
    }

    #[test]
    fn zero_field_is_degenerate() {
        let (e, g) = setup();
        let a = AtomCandidate::new(SampledField::zeros(g), vec![4.0, 4.0], 0, (1.0, 2.0, 0), &e)
            .unwrap();
        let rep = validate_atom(&a, &e, AtomTolerances::default());
        assert!(rep.passes() && rep.degenerate);
    }

    #[test]
    fn laplacian_atoms_cancel_higher_moments() {
        let (e, g) = setup();
        let centre = g.flat_index(&[10, 20]);
        for s in [2u32, 3, 4] {
            let p = 0.5;
            let a = laplacian_atom(&g, &e, centre, 2, (p, 2.0, s)).unwrap();
            let rep = validate_atom(&a, &e, AtomTolerances::default());
            assert!(rep.passes(), "s = {s}: {rep:?}");
        }
    }

    #[test]
    fn inadmissible_triplets() {
        let (e, g) = setup();
        let f = SampledField::zeros(g);
        assert!(AtomCandidate::new(f.clone(), vec![0.0, 0.0], 0, (0.5, 2.0, 1), &e).is_err());
        assert!(AtomCandidate::new(f.clone(), vec![0.0, 0.0], 0, (1.0, 1.0, 0), &e).is_err());
        assert!(AtomCandidate::new(f, vec![0.0, 0.0], 0, (1.5, 2.0, 0), &e).is_err());
    }
}
