//! Dilated cubes `Q_{j,k} = A^{-j}([0,1)ⁿ + k)`, nested cube families for
//! diagonal integer dilations, Calderón-Zygmund stopping times, atoms and
//! atomic decompositions.

mod atoms;
mod cz;
mod decomposition;

pub use atoms::{
    canonical_atom, laplacian_atom, validate_atom, AtomCandidate, AtomReport, AtomTolerances,
};
pub use cz::{cz_decompose, CzDecomposition, CzReport, SelectedCube};
pub use decomposition::{
    atomic_norm, AtomEntry, AtomRecord, AtomicDecomposition, DecompositionFile, GridRecord,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dilation::{mat_vec, Dilation, QuasiNormEngine};
use crate::error::{Error, Result};
use crate::lattice::Grid;

/// Relative distance to an integer under which a computed exponent is
/// treated as that integer.
const INTEGER_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DilatedCube {
    pub j: i32,
    pub k: Vec<i64>,
    /// `x_Q = A^{-j} k`
    pub corner: Vec<f64>,
    /// `c_Q = A^{-j}(k + ½)`
    pub center: Vec<f64>,
    /// `|Q| = b^{-j}`
    pub measure: f64,
    a_j: nalgebra::DMatrix<f64>,
}

impl DilatedCube {
    /// `x ∈ Q ⟺ A^j x − k ∈ [0,1)ⁿ`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let y = mat_vec(&self.a_j, x);
        y.iter()
            .zip(&self.k)
            .all(|(v, &k)| (v - k as f64) >= 0.0 && (v - k as f64) < 1.0)
    }
}

pub fn dilated_cube(d: &Dilation, j: i32, k: &[i64]) -> Result<DilatedCube> {
    if k.len() != d.dim() {
        return Err(Error::InvalidInput(
            "cube index has the wrong dimension".into(),
        ));
    }
    let inv = d.power(-j);
    let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    let half: Vec<f64> = kf.iter().map(|v| v + 0.5).collect();
    Ok(DilatedCube {
        j,
        k: k.to_vec(),
        corner: mat_vec(&inv, &kf),
        center: mat_vec(&inv, &half),
        measure: d.b().powi(-j),
        a_j: d.power(j),
    })
}

fn snapped_floor(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= INTEGER_SNAP * r.abs().max(1.0) {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// `⌊(1/p − 1) ln b / ln λ₋⌋`, snapping values within `1e-9` of an integer.
pub fn min_moment_order(p: f64, d: &Dilation) -> Result<u32> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "p must lie in (0, 1], got {p}"
        )));
    }
    let v = (1.0 / p - 1.0) * d.b().ln() / d.lambda_minus().ln();
    Ok(snapped_floor(v).max(0) as u32)
}

/// `N_(p)`: `⌊(1/p − 1) ln b / ln λ₋⌋ + 2` for `p ≤ 1`, and 2 for `p > 1`.
pub fn grand_n(p: f64, d: &Dilation) -> Result<u32> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("p must be positive, got {p}")));
    }
    if p > 1.0 {
        return Ok(2);
    }
    Ok(min_moment_order(p, d)? + 2)
}

/// Smallest `j0 ≥ 0` such that `c_Q + B_{-j0-j} ⊂ Q` and `Q − x ⊂ B_{j0-j}`
/// for every sampled cube at the given levels and every sampled `x ∈ Q`.
pub fn estimate_j0(
    engine: &QuasiNormEngine,
    levels: &[i32],
    samples: usize,
    seed: u64,
) -> Result<i32> {
    let d = engine.dilation();
    let n = d.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_axis = 9usize;
    // points of the unit cube: a regular lattice including the far faces
    // (approached from inside) plus random interior points
    let mut unit_points: Vec<Vec<f64>> = Vec::new();
    for idx in 0..per_axis.pow(n as u32) {
        let mut rem = idx;
        let mut p = Vec::with_capacity(n);
        for _ in 0..n {
            let t = (rem % per_axis) as f64 / (per_axis - 1) as f64;
            p.push(if t == 1.0 { 1.0 - 1e-12 } else { t });
            rem /= per_axis;
        }
        unit_points.push(p);
    }
    for _ in 0..samples {
        unit_points.push((0..n).map(|_| rng.gen_range(0.0..1.0)).collect());
    }
    // boundary directions of Δ
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for _ in 0..samples.max(64) {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: f64 = mat_vec(engine.p(), &u)
            .iter()
            .zip(&u)
            .map(|(a, b)| a * b)
            .sum();
        if q > 0.0 {
            let s = (engine.c() / q).sqrt() * (1.0 - 1e-12);
            directions.push(u.iter().map(|v| v * s).collect());
        }
    }
    for j0 in 0..64 {
        let mut ok = true;
        'levels: for &j in levels {
            let k: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
            let cube = dilated_cube(d, j, &k)?;
            let inner = d.power(-j0 - j);
            for u in &directions {
                let z = mat_vec(&inner, u);
                let y: Vec<f64> = cube.center.iter().zip(&z).map(|(c, v)| c + v).collect();
                if !cube.contains(&y) {
                    ok = false;
                    break 'levels;
                }
            }
            let to_q = d.power(-j);
            let pts: Vec<Vec<f64>> = unit_points
                .iter()
                .map(|u| {
                    let shifted: Vec<f64> = u.iter().zip(&k).map(|(a, &b)| a + b as f64).collect();
                    mat_vec(&to_q, &shifted)
                })
                .collect();
            for x in &pts {
                for y in &pts {
                    let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
                    if !engine.ball_membership(j0 - j, &diff) {
                        ok = false;
                        break 'levels;
                    }
                }
            }
        }
        if ok {
            return Ok(j0);
        }
    }
    Err(Error::InvalidInput(
        "no j0 below 64 satisfies the cube inclusions".into(),
    ))
}

/// One level of a nested family: cubes of `cells[i]` grid cells along axis `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeLevel {
    /// Dilation level `j`, or `None` for the added single-cell level.
    pub j: Option<i32>,
    pub cells: Vec<usize>,
}

/// Nested dilated cubes on a grid for a diagonal integer dilation, ordered
/// from coarsest to finest. When the finest dilation level still spans
/// several cells, a terminal single-cell level is appended.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedCubeFamily {
    grid: Grid,
    levels: Vec<CubeLevel>,
    diag: Vec<u64>,
}

fn as_integer(x: f64) -> Option<usize> {
    let r = x.round();
    if r >= 1.0 && (x - r).abs() <= 1e-9 * r {
        Some(r as usize)
    } else {
        None
    }
}

impl NestedCubeFamily {
    /// Every level `j` whose cubes are unions of grid cells tiling the period.
    pub fn new(grid: &Grid, d: &Dilation) -> Result<Self> {
        Self::with_levels(grid, d, None)
    }

    /// Restricts to dilation levels in `j_min..=j_max`.
    pub fn with_range(grid: &Grid, d: &Dilation, j_min: i32, j_max: i32) -> Result<Self> {
        Self::with_levels(grid, d, Some((j_min, j_max)))
    }

    fn with_levels(grid: &Grid, d: &Dilation, range: Option<(i32, i32)>) -> Result<Self> {
        let diag = d.diagonal_integer().ok_or_else(|| {
            Error::NotNested("nested cubes need a diagonal integer dilation".into())
        })?;
        if diag.len() != grid.n() {
            return Err(Error::InvalidInput(
                "dilation and grid dimensions differ".into(),
            ));
        }
        let h = grid.spacing();
        let mut levels = Vec::new();
        for j in -64..=64 {
            if let Some((lo, hi)) = range {
                if j < lo || j > hi {
                    continue;
                }
            }
            // side a_i^{-j} must be a whole number of cells dividing the period
            let mut cells = Vec::with_capacity(grid.n());
            for &a in &diag {
                let side = (a as f64).powi(-j);
                match as_integer(side / h) {
                    Some(c) if grid.size() % c == 0 => cells.push(c),
                    _ => break,
                }
            }
            if cells.len() == grid.n() {
                levels.push(CubeLevel { j: Some(j), cells });
            }
        }
        if levels.is_empty() {
            return Err(Error::NotNested(
                "no dilation level is aligned with the grid".into(),
            ));
        }
        if levels.last().unwrap().cells.iter().any(|&c| c > 1) {
            levels.push(CubeLevel {
                j: None,
                cells: vec![1; grid.n()],
            });
        }
        let family = Self {
            grid: *grid,
            levels,
            diag,
        };
        family.check_nested()?;
        Ok(family)
    }

    fn check_nested(&self) -> Result<()> {
        for w in self.levels.windows(2) {
            for (coarse, fine) in w[0].cells.iter().zip(&w[1].cells) {
                if coarse % fine != 0 {
                    return Err(Error::NotNested(format!(
                        "level with {fine} cells does not refine level with {coarse}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn levels(&self) -> &[CubeLevel] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn diagonal(&self) -> &[u64] {
        &self.diag
    }

    /// Cubes per axis at a level.
    pub fn cubes_per_axis(&self, level: usize) -> Vec<usize> {
        self.levels[level]
            .cells
            .iter()
            .map(|c| self.grid.size() / c)
            .collect()
    }

    pub fn cube_count(&self, level: usize) -> usize {
        self.cubes_per_axis(level).iter().product()
    }

    /// Samples per cube at a level.
    pub fn cube_samples(&self, level: usize) -> usize {
        self.levels[level].cells.iter().product()
    }

    /// Flat id of the cube containing sample `idx`.
    pub fn cube_of(&self, level: usize, idx: usize) -> usize {
        let m = self.grid.multi_index(idx);
        let per = self.cubes_per_axis(level);
        let cells = &self.levels[level].cells;
        (0..self.grid.n()).fold(0, |acc, a| acc * per[a] + m[a] / cells[a])
    }

    /// Cube multi-index `k` of a flat cube id.
    pub fn cube_index(&self, level: usize, id: usize) -> Vec<usize> {
        let per = self.cubes_per_axis(level);
        let mut rem = id;
        let mut out = vec![0; self.grid.n()];
        for a in (0..self.grid.n()).rev() {
            out[a] = rem % per[a];
            rem /= per[a];
        }
        out
    }

    /// Sample indices inside a cube.
    pub fn cube_members(&self, level: usize, id: usize) -> Vec<usize> {
        let k = self.cube_index(level, id);
        let cells = &self.levels[level].cells;
        let n = self.grid.n();
        let total: usize = cells.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut mi = vec![0usize; n];
        for t in 0..total {
            let mut rem = t;
            for a in (0..n).rev() {
                mi[a] = k[a] * cells[a] + rem % cells[a];
                rem /= cells[a];
            }
            out.push(self.grid.flat_index(&mi));
        }
        out
    }

    /// Parent cube id at `level - 1` of cube `id` at `level`.
    pub fn parent(&self, level: usize, id: usize) -> Option<usize> {
        if level == 0 {
            return None;
        }
        let first = self.cube_members(level, id)[0];
        Some(self.cube_of(level - 1, first))
    }

    /// Mean of `values` over every cube at a level.
    pub fn cube_means(&self, level: usize, values: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.cube_count(level)];
        for (idx, v) in values.iter().enumerate() {
            sums[self.cube_of(level, idx)] += v;
        }
        let count = self.cube_samples(level) as f64;
        sums.iter().map(|s| s / count).collect()
    }

    /// `E_j(v)` broadcast back to samples.
    pub fn level_averages(&self, level: usize, values: &[f64]) -> Vec<f64> {
        let means = self.cube_means(level, values);
        (0..values.len())
            .map(|i| means[self.cube_of(level, i)])
            .collect()
    }

    /// Largest ratio `|parent| / |child|` between consecutive levels.
    pub fn max_refinement(&self) -> f64 {
        (1..self.levels.len())
            .map(|l| self.cube_samples(l - 1) as f64 / self.cube_samples(l) as f64)
            .fold(1.0, f64::max)
    }
}
