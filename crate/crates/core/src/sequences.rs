//! Sequences indexed by the dilated cubes of one level, their periodized
//! majorants, and the sup/inf sequences of a filtered field.

use num_complex::Complex64;

use crate::dilation::{Dilation, QuasiNormEngine};
use crate::error::{Error, Result};
use crate::frames::{cube_lattice, FramePair};
use crate::lattice::{Grid, SampledField};
use crate::lorentz::{lorentz_norm_magnitudes, LorentzParams};
use crate::maximal::{HardyLittlewood, ScaleRange};

/// Image shells stop once every term of a shell is below this share of the
/// kernel mass accumulated so far, which includes the unit weight at offset zero.
const IMAGE_TOL: f64 = 1e-14;
const MAX_SHELLS: i64 = 256;

/// Values on the level-`j` cubes `A^{-j}([0,1)ⁿ + k)` tiling one period,
/// stored row-major over `k ∈ Π [0, counts_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSequence {
    level: i32,
    grid: Grid,
    b: f64,
    steps: Vec<usize>,
    counts: Vec<usize>,
    values: Vec<Complex64>,
}

impl CubeSequence {
    pub fn new(d: &Dilation, grid: &Grid, level: i32, values: Vec<Complex64>) -> Result<Self> {
        let (steps, counts) = cube_lattice(d, grid, level)?;
        let len: usize = counts.iter().product();
        if values.len() != len {
            return Err(Error::InvalidInput(format!(
                "level {level} has {len} cubes per period, got {} values",
                values.len()
            )));
        }
        Ok(Self {
            level,
            grid: *grid,
            b: d.b(),
            steps,
            counts,
            values,
        })
    }

    pub fn zeros(d: &Dilation, grid: &Grid, level: i32) -> Result<Self> {
        let (_, counts) = cube_lattice(d, grid, level)?;
        Self::new(
            d,
            grid,
            level,
            vec![Complex64::new(0.0, 0.0); counts.iter().product()],
        )
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Samples per cube side along each axis.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// `|Q| = b^{-j}`.
    pub fn cube_measure(&self) -> f64 {
        self.b.powi(-self.level)
    }

    pub fn multi(&self, q: usize) -> Vec<usize> {
        let mut rem = q;
        let mut out = vec![0; self.counts.len()];
        for a in (0..self.counts.len()).rev() {
            out[a] = rem % self.counts[a];
            rem /= self.counts[a];
        }
        out
    }

    pub fn flat(&self, k: &[usize]) -> usize {
        k.iter()
            .zip(&self.counts)
            .fold(0, |acc, (&v, &c)| acc * c + v % c)
    }

    /// Cube containing grid sample `idx`.
    pub fn cube_of(&self, idx: usize) -> usize {
        let m = self.grid.multi_index(idx);
        let k: Vec<usize> = (0..self.counts.len())
            .map(|a| m[a] / self.steps[a])
            .collect();
        self.flat(&k)
    }

    /// Corner `x_Q` in absolute coordinates.
    pub fn corner(&self, q: usize) -> Vec<f64> {
        let h = self.grid.spacing();
        self.multi(q)
            .iter()
            .zip(&self.steps)
            .map(|(&k, &s)| (k * s) as f64 * h)
            .collect()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Cyclic shift by whole cubes: `out_k = s_{k − t}`.
    pub fn translate(&self, t: &[i64]) -> Self {
        let mut out = self.clone();
        for q in 0..self.len() {
            let k = self.multi(q);
            let dst: Vec<usize> = (0..k.len())
                .map(|a| (k[a] as i64 + t[a]).rem_euclid(self.counts[a] as i64) as usize)
                .collect();
            out.values[self.flat(&dst)] = self.values[q];
        }
        out
    }

    /// `Σ_Q v_Q χ_Q` on the grid.
    pub fn step_function(&self, v: &[f64]) -> Vec<f64> {
        (0..self.grid.len()).map(|i| v[self.cube_of(i)]).collect()
    }

    fn same_geometry(&self, other: &Self) -> bool {
        self.level == other.level && self.grid == other.grid && self.counts == other.counts
    }
}

/// `Σ_{m ∈ ℤⁿ} [1 + ρ(x + Lm)/scale]^{-λ}` split into the `m = 0` term and
/// the image tail. Shells are expanded by `|m|_∞` until every term of a shell
/// falls below `IMAGE_TOL · reference`.
fn periodized_weight(
    engine: &QuasiNormEngine,
    x: &[f64],
    period: f64,
    scale: f64,
    lambda: f64,
    reference: f64,
) -> (f64, f64) {
    let n = x.len();
    let term = |y: &[f64]| (1.0 + engine.rho(y).value / scale).powf(-lambda);
    let central = term(x);
    let mut tail = 0.0;
    let mut y = vec![0.0; n];
    for r in 1..=MAX_SHELLS {
        let mut largest: f64 = 0.0;
        for_each_shell_point(n, r, |m| {
            for a in 0..n {
                y[a] = x[a] + period * m[a] as f64;
            }
            let t = term(&y);
            tail += t;
            largest = largest.max(t);
        });
        if largest < IMAGE_TOL * (reference + central + tail) {
            break;
        }
    }
    (central, tail)
}

/// Calls `visit` on every `m ∈ ℤⁿ` with `|m|_∞ = r`, each exactly once.
fn for_each_shell_point(n: usize, r: i64, mut visit: impl FnMut(&[i64])) {
    let mut m = vec![0i64; n];
    // `a` is the first axis sitting on the shell; earlier axes stay strictly inside
    for a in 0..n {
        let inner = (2 * r - 1).max(0) as usize;
        let outer = (2 * r + 1) as usize;
        let free = inner.pow(a as u32) * outer.pow((n - a - 1) as u32);
        for side in [-r, r] {
            for flat in 0..free {
                let mut rem = flat;
                for (b, mb) in m.iter_mut().enumerate() {
                    if b == a {
                        *mb = side;
                    } else if b < a {
                        *mb = (rem % inner) as i64 - (r - 1);
                        rem /= inner;
                    } else {
                        *mb = (rem % outer) as i64 - r;
                        rem /= outer;
                    }
                }
                visit(&m);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Majorant {
    pub sequence: CubeSequence,
    /// Largest change in any entry caused by the periodic images.
    pub image_tail: f64,
}

/// `(s*_{r,λ})_Q = [Σ_{|P|=|Q|} |s_P|^r / (1 + |Q|^{-1}ρ(x_Q − x_P))^λ]^{1/r}`
/// summed over the periodized level. Requires `λ > 1` so the image sum converges.
pub fn majorant(
    s: &CubeSequence,
    r: f64,
    lambda: f64,
    engine: &QuasiNormEngine,
) -> Result<Majorant> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "r must be positive and finite, got {r}"
        )));
    }
    if !(lambda > 1.0) {
        return Err(Error::InvalidInput(format!(
            "λ must exceed 1 for the periodized kernel to converge, got {lambda}"
        )));
    }
    let kernel = MajorantKernel::new(s, lambda, s.cube_measure(), engine);
    let pow: Vec<f64> = s.values.iter().map(|v| v.norm().powf(r)).collect();
    let (full, central) = kernel.apply(s, &pow);
    let mut out = s.clone();
    let mut tail: f64 = 0.0;
    for ((o, f), c) in out.values.iter_mut().zip(&full).zip(&central) {
        let v = f.powf(1.0 / r);
        tail = tail.max(v - c.powf(1.0 / r));
        *o = Complex64::new(v, 0.0);
    }
    Ok(Majorant {
        sequence: out,
        image_tail: tail,
    })
}

/// Weights indexed by the cyclic cube offset `k_Q − k_P`.
struct MajorantKernel {
    full: Vec<f64>,
    central: Vec<f64>,
}

impl MajorantKernel {
    fn new(s: &CubeSequence, lambda: f64, scale: f64, engine: &QuasiNormEngine) -> Self {
        let h = s.grid.spacing();
        let period = s.grid.period();
        let mut full = Vec::with_capacity(s.len());
        let mut central = Vec::with_capacity(s.len());
        let mut mass = 0.0;
        for delta in 0..s.len() {
            let k = s.multi(delta);
            // nearest representative of the offset on the torus
            let x: Vec<f64> = (0..k.len())
                .map(|a| {
                    let c = s.counts[a];
                    let signed = if k[a] >= c.div_ceil(2) {
                        k[a] as i64 - c as i64
                    } else {
                        k[a] as i64
                    };
                    (signed * s.steps[a] as i64) as f64 * h
                })
                .collect();
            let (c, t) = periodized_weight(engine, &x, period, scale, lambda, mass);
            mass += c + t;
            full.push(c + t);
            central.push(c);
        }
        Self { full, central }
    }

    /// `(Σ_P w_P K_full(Q−P), Σ_P w_P K_central(Q−P))` for every `Q`.
    fn apply(&self, s: &CubeSequence, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nz: Vec<(Vec<usize>, f64)> = w
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(p, &v)| (s.multi(p), v))
            .collect();
        let mut full = vec![0.0; s.len()];
        let mut central = vec![0.0; s.len()];
        for q in 0..s.len() {
            let kq = s.multi(q);
            let mut delta = vec![0usize; kq.len()];
            for (kp, v) in &nz {
                for a in 0..kq.len() {
                    delta[a] = (kq[a] + s.counts[a] - kp[a]) % s.counts[a];
                }
                let d = s.flat(&delta);
                full[q] += v * self.full[d];
                central[q] += v * self.central[d];
            }
        }
        (full, central)
    }
}

/// `sup_Q = max_{y∈Q} |f ∗ Φ̃_{-j}(y)|` and
/// `inf_Q = max_{P ⊂ Q, |Q|/|P| = b^γ} min_{y∈P} |f ∗ Φ̃_{-j}(y)|` over grid samples.
pub fn sup_inf_sequences(
    f: &SampledField,
    pair: &FramePair,
    gamma: u32,
    level: i32,
) -> Result<(CubeSequence, CubeSequence)> {
    if f.grid() != pair.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *f.grid();
    let d = pair.dilation();
    let coarse = CubeSequence::zeros(d, &grid, level).map_err(|e| unresolvable(level, e))?;
    let fine = CubeSequence::zeros(d, &grid, level + gamma as i32)
        .map_err(|e| unresolvable(level + gamma as i32, e))?;
    let m = pair.multiplier(level)?;
    let fhat = f.spectrum();
    let g = SampledField::from_spectrum(grid, fhat.iter().zip(&m).map(|(s, v)| s * *v).collect())?
        .abs();
    Ok(sup_inf_from_samples(&g, coarse, fine))
}

fn unresolvable(level: i32, e: Error) -> Error {
    match e {
        Error::LatticeMisaligned { detail, .. } => Error::ScaleUnresolvable {
            scale: level,
            detail,
        },
        other => other,
    }
}

pub(crate) fn sup_inf_from_samples(
    g: &[f64],
    mut sup: CubeSequence,
    fine: CubeSequence,
) -> (CubeSequence, CubeSequence) {
    let mut inf = sup.clone();
    let mut sup_v = vec![0.0f64; sup.len()];
    let mut fine_min = vec![f64::INFINITY; fine.len()];
    for (i, &v) in g.iter().enumerate() {
        let q = sup.cube_of(i);
        sup_v[q] = sup_v[q].max(v);
        let p = fine.cube_of(i);
        fine_min[p] = fine_min[p].min(v);
    }
    let mut inf_v = vec![0.0f64; sup.len()];
    for (p, &v) in fine_min.iter().enumerate() {
        // the fine corner lies in exactly one coarse cube
        let corner = fine.multi(p);
        let idx: Vec<usize> = corner
            .iter()
            .zip(fine.steps())
            .map(|(&k, &s)| k * s)
            .collect();
        let q = sup.cube_of(fine.grid().flat_index(&idx));
        inf_v[q] = inf_v[q].max(v);
    }
    for (o, v) in sup.values.iter_mut().zip(sup_v) {
        *o = Complex64::new(v, 0.0);
    }
    for (o, v) in inf.values.iter_mut().zip(inf_v) {
        *o = Complex64::new(v, 0.0);
    }
    (sup, inf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    /// Largest ratio over the non-degenerate entries; 0 when none remain.
    pub ratio: f64,
    /// Entries excluded because the denominator vanished.
    pub degenerate_entries: usize,
    /// Every denominator vanished.
    pub degenerate: bool,
}

/// `max_Q (sup*)_Q / (inf*)_Q` at each level.
pub fn sup_inf_ratio(
    f: &SampledField,
    pair: &FramePair,
    gamma: u32,
    r: f64,
    lambda: f64,
    levels: &[i32],
) -> Result<RatioReport> {
    if gamma == 0 {
        return Err(Error::InvalidInput("γ must be at least 1".into()));
    }
    let engine = QuasiNormEngine::new(pair.dilation().clone())?;
    let mut ratio: f64 = 0.0;
    let mut excluded = 0;
    let mut kept = 0;
    for &j in levels {
        let (sup, inf) = sup_inf_sequences(f, pair, gamma, j)?;
        let ms = majorant(&sup, r, lambda, &engine)?.sequence;
        let mi = majorant(&inf, r, lambda, &engine)?.sequence;
        for (a, b) in ms.values.iter().zip(&mi.values) {
            let (a, b) = (a.re, b.re);
            if b == 0.0 {
                if a > 0.0 {
                    excluded += 1;
                }
                continue;
            }
            kept += 1;
            ratio = ratio.max(a / b);
        }
    }
    Ok(RatioReport {
        ratio,
        degenerate_entries: excluded,
        degenerate: kept == 0,
    })
}

/// `max_{Q, x∈Q} LHS_Q / RHS(x)` with
/// `LHS_Q = [Σ_{|P|=b^{-i}} |s_P|^r (1 + ρ(x_Q − x_P)/max(|P|,|Q|))^{-λ}]^{1/r}` and
/// `RHS(x) = b^{max(0,i−j)/a} [M_HL(Σ_P |s_P|^a χ_P)(x)]^{1/a}`.
#[allow(clippy::too_many_arguments)]
pub fn majorant_maximal_ratio(
    s: &CubeSequence,
    a: f64,
    r: f64,
    lambda: f64,
    j: i32,
    engine: &QuasiNormEngine,
    range: ScaleRange,
) -> Result<f64> {
    if !(a > 0.0 && r >= a && r.is_finite()) {
        return Err(Error::ParameterInadmissible(format!(
            "need 0 < a ≤ r < ∞, got a = {a}, r = {r}"
        )));
    }
    if !(lambda > r / a) {
        return Err(Error::ParameterInadmissible(format!(
            "λ = {lambda} must exceed r/a = {}",
            r / a
        )));
    }
    let i = s.level;
    let grid = s.grid;
    let q_seq = CubeSequence::zeros(engine.dilation(), &grid, j)?;
    let scale = s.cube_measure().max(q_seq.cube_measure());
    let fine = if i >= j { s.clone() } else { q_seq.clone() };
    let kernel = MajorantKernel::new(&fine, lambda, scale, engine);
    let pow: Vec<f64> = s.values.iter().map(|v| v.norm().powf(r)).collect();
    let nz: Vec<(Vec<usize>, f64)> = pow
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(p, &v)| {
            (
                s.multi(p)
                    .iter()
                    .zip(&s.steps)
                    .map(|(k, st)| k * st)
                    .collect(),
                v,
            )
        })
        .collect();
    let n = grid.size();
    let lhs: Vec<f64> = (0..q_seq.len())
        .map(|q| {
            let xq: Vec<usize> = q_seq
                .multi(q)
                .iter()
                .zip(&q_seq.steps)
                .map(|(k, st)| k * st)
                .collect();
            let mut delta = vec![0usize; xq.len()];
            nz.iter()
                .map(|(xp, v)| {
                    for ax in 0..xq.len() {
                        delta[ax] = ((xq[ax] + n - xp[ax]) % n) / fine.steps[ax];
                    }
                    v * kernel.full[fine.flat(&delta)]
                })
                .sum()
        })
        .collect();
    let hl = HardyLittlewood::new(engine, &grid, range)?;
    let step: Vec<f64> = s.step_function(
        &s.values
            .iter()
            .map(|v| v.norm().powf(a))
            .collect::<Vec<_>>(),
    );
    let m = hl.apply_magnitudes(&step);
    let factor = engine.b().powf((i - j).max(0) as f64 / a);
    let mut worst: f64 = 0.0;
    for (idx, mv) in m.iter().enumerate() {
        let q = q_seq.cube_of(idx);
        let l = lhs[q].powf(1.0 / r);
        if l == 0.0 {
            continue;
        }
        let rhs = factor * mv.powf(1.0 / a);
        if rhs == 0.0 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(l / rhs);
    }
    Ok(worst)
}

/// `‖(Σ_Q (s*_Q)² χ_Q)^{1/2}‖ / ‖(Σ_Q |s_Q|² χ_Q)^{1/2}‖` in `L^{p,q}` over a
/// multi-level sequence; requires `λ > max(1, r/2, r/p)`.
pub fn majorant_square_ratio(
    levels: &[CubeSequence],
    r: f64,
    lambda: f64,
    lp: LorentzParams,
    engine: &QuasiNormEngine,
) -> Result<RatioReport> {
    let p = lp.p();
    let bound = 1f64.max(r / 2.0).max(r / p);
    if !(lambda > bound) {
        return Err(Error::ParameterInadmissible(format!(
            "λ = {lambda} must exceed {bound}"
        )));
    }
    let first = levels
        .first()
        .ok_or_else(|| Error::InvalidInput("no levels given".into()))?;
    let grid = first.grid;
    let mut num = vec![0.0f64; grid.len()];
    let mut den = vec![0.0f64; grid.len()];
    for (idx, s) in levels.iter().enumerate() {
        if s.grid != grid || levels[..idx].iter().any(|o| o.same_geometry(s)) {
            return Err(Error::InvalidInput(
                "levels must share a grid and be distinct".into(),
            ));
        }
        let m = majorant(s, r, lambda, engine)?.sequence;
        let ms: Vec<f64> = m.values.iter().map(|v| v.re * v.re).collect();
        let ss: Vec<f64> = s.values.iter().map(|v| v.norm_sqr()).collect();
        for (o, v) in num.iter_mut().zip(s.step_function(&ms)) {
            *o += v;
        }
        for (o, v) in den.iter_mut().zip(s.step_function(&ss)) {
            *o += v;
        }
    }
    let cell = grid.cell_volume();
    let n: Vec<f64> = num.into_iter().map(f64::sqrt).collect();
    let d: Vec<f64> = den.into_iter().map(f64::sqrt).collect();
    let nn = lorentz_norm_magnitudes(&n, cell, lp);
    let dn = lorentz_norm_magnitudes(&d, cell, lp);
    Ok(if dn == 0.0 {
        RatioReport {
            ratio: 0.0,
            degenerate_entries: 0,
            degenerate: true,
        }
    } else {
        RatioReport {
            ratio: nn / dn,
            degenerate_entries: 0,
            degenerate: false,
        }
    })
}
