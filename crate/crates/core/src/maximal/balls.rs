use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;

use crate::dilation::{QuasiLevel, QuasiNormEngine};
use crate::error::{Error, Result};
use crate::lattice::{Grid, SampledField};

/// Inclusive range of scales `k_min..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleRange {
    pub k_min: i32,
    pub k_max: i32,
}

impl ScaleRange {
    pub fn new(k_min: i32, k_max: i32) -> Result<Self> {
        if k_min > k_max {
            return Err(Error::InvalidInput(format!(
                "empty scale range {k_min}..={k_max}"
            )));
        }
        Ok(Self { k_min, k_max })
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Checks that `B_{k_min}` spans at least one cell and `B_{k_max}` fits
    /// inside the period.
    pub fn check_resolvable(&self, engine: &QuasiNormEngine, grid: &Grid) -> Result<()> {
        check_ball_fits(engine, grid, self.k_max)?;
        if engine.b().powi(self.k_min) < grid.cell_volume() {
            return Err(Error::ScaleUnresolvable {
                scale: self.k_min,
                detail: format!(
                    "|B_k| = {:.3e} is below the cell volume {:.3e}",
                    engine.b().powi(self.k_min),
                    grid.cell_volume()
                ),
            });
        }
        Ok(())
    }
}

/// Fails when the continuous ball `B_k` reaches half the period along some axis.
pub fn check_ball_fits(engine: &QuasiNormEngine, grid: &Grid, k: i32) -> Result<()> {
    let half = grid.period() / 2.0;
    if let Some(w) = engine.half_widths(k).into_iter().find(|&w| w >= half) {
        return Err(Error::ScaleUnresolvable {
            scale: k,
            detail: format!("ball half-width {w:.4} reaches half the period {half:.4}"),
        });
    }
    Ok(())
}

/// Quasi-norm level of every signed torus offset; rasterizes `B_k` as
/// `{d : level(d) < k}` (which always contains the origin).
#[derive(Debug, Clone)]
pub struct BallRaster {
    grid: Grid,
    levels: Vec<QuasiLevel>,
}

impl BallRaster {
    pub fn new(engine: &QuasiNormEngine, grid: &Grid) -> Result<Self> {
        if engine.dim() != grid.n() {
            return Err(Error::InvalidInput(
                "engine and grid dimensions differ".into(),
            ));
        }
        let levels = (0..grid.len())
            .map(|i| engine.level(&grid.offset(i)))
            .collect();
        Ok(Self {
            grid: *grid,
            levels,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Level of the offset stored at flat index `idx`.
    pub fn level(&self, idx: usize) -> QuasiLevel {
        self.levels[idx]
    }

    pub fn levels(&self) -> &[QuasiLevel] {
        &self.levels
    }

    pub fn contains(&self, k: i32, idx: usize) -> bool {
        self.levels[idx] < QuasiLevel::Finite(k)
    }

    /// Flat indices of the offsets in the rasterized `B_k`.
    pub fn members(&self, k: i32) -> Vec<usize> {
        (0..self.levels.len())
            .filter(|&i| self.contains(k, i))
            .collect()
    }

    pub fn count(&self, k: i32) -> usize {
        (0..self.levels.len())
            .filter(|&i| self.contains(k, i))
            .count()
    }

    pub fn indicator(&self, k: i32) -> Vec<f64> {
        (0..self.levels.len())
            .map(|i| if self.contains(k, i) { 1.0 } else { 0.0 })
            .collect()
    }
}

/// `(v ∗ χ)(x) = Σ_d v(x - d) χ(d)` for real arrays via the DFT.
pub(crate) fn real_convolve(grid: &Grid, v: &[f64], kernel_spectrum: &[Complex64]) -> Vec<f64> {
    let field = SampledField::from_real(*grid, v.to_vec()).expect("finite input");
    let fhat = field.spectrum();
    let prod: Vec<Complex64> = fhat
        .iter()
        .zip(kernel_spectrum)
        .map(|(a, b)| a * b)
        .collect();
    SampledField::from_spectrum(*grid, prod)
        .expect("matching length")
        .real_parts()
}

pub(crate) fn real_spectrum(grid: &Grid, v: &[f64]) -> Vec<Complex64> {
    SampledField::from_real(*grid, v.to_vec())
        .expect("finite input")
        .spectrum()
}

/// `out(x) = max_{d ∈ S} v(x + d)` on the torus, with `S` given by flat
/// offset indices. The element is split into runs along the last axis and
/// each distinct run is handled by a periodic sliding-window maximum.
pub fn morph_max(grid: &Grid, values: &[f64], element: &[usize]) -> Vec<f64> {
    let n = grid.n();
    let size = grid.size();
    // leading signed offsets -> sorted last-axis signed offsets
    let mut rows: BTreeMap<Vec<i64>, Vec<i64>> = BTreeMap::new();
    for &idx in element {
        let s = grid.signed_multi(idx);
        rows.entry(s[..n - 1].to_vec()).or_default().push(s[n - 1]);
    }
    // distinct runs (lo, hi) -> list of leading offsets using that run
    let mut runs: BTreeMap<(i64, i64), Vec<Vec<i64>>> = BTreeMap::new();
    for (lead, mut last) in rows {
        last.sort_unstable();
        last.dedup();
        let mut start = last[0];
        let mut prev = last[0];
        for &v in &last[1..] {
            if v != prev + 1 {
                runs.entry((start, prev)).or_default().push(lead.clone());
                start = v;
            }
            prev = v;
        }
        runs.entry((start, prev)).or_default().push(lead);
    }

    let mut out = vec![f64::NEG_INFINITY; values.len()];
    let row_count = values.len() / size;
    let mut window = vec![0.0; values.len()];
    for ((lo, hi), leads) in runs {
        sliding_max(values, size, row_count, lo, hi, &mut window);
        for lead in leads {
            for row in 0..row_count {
                let src_row = shift_row(grid, row, &lead);
                let dst = &mut out[row * size..(row + 1) * size];
                let src = &window[src_row * size..(src_row + 1) * size];
                for (o, s) in dst.iter_mut().zip(src) {
                    if *s > *o {
                        *o = *s;
                    }
                }
            }
        }
    }
    out
}

/// Row index reached from `row` by adding the leading offsets.
fn shift_row(grid: &Grid, row: usize, lead: &[i64]) -> usize {
    let n = grid.n();
    let size = grid.size() as i64;
    let mut rem = row;
    let mut coords = [0i64; 3];
    for axis in (0..n - 1).rev() {
        coords[axis] = (rem % grid.size()) as i64;
        rem /= grid.size();
    }
    let mut out = 0usize;
    for axis in 0..n - 1 {
        let c = (coords[axis] + lead[axis]).rem_euclid(size) as usize;
        out = out * grid.size() + c;
    }
    out
}

/// `window[x] = max_{lo ≤ t ≤ hi} v[x + t]` along each row, periodically.
fn sliding_max(values: &[f64], size: usize, rows: usize, lo: i64, hi: i64, window: &mut [f64]) {
    let width = (hi - lo + 1) as usize;
    for r in 0..rows {
        let row = &values[r * size..(r + 1) * size];
        let dst = &mut window[r * size..(r + 1) * size];
        if width >= size {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            dst.iter_mut().for_each(|d| *d = m);
            continue;
        }
        let at = |t: i64| row[t.rem_euclid(size as i64) as usize];
        let mut deque: VecDeque<(i64, f64)> = VecDeque::with_capacity(width);
        // window for x covers positions x+lo ..= x+hi
        for t in lo..hi {
            let v = at(t);
            while deque.back().is_some_and(|&(_, b)| b <= v) {
                deque.pop_back();
            }
            deque.push_back((t, v));
        }
        for (x, d) in dst.iter_mut().enumerate() {
            let t = x as i64 + hi;
            let v = at(t);
            while deque.back().is_some_and(|&(_, b)| b <= v) {
                deque.pop_back();
            }
            deque.push_back((t, v));
            while deque.front().is_some_and(|&(p, _)| p < x as i64 + lo) {
                deque.pop_front();
            }
            *d = deque.front().unwrap().1;
        }
    }
}
