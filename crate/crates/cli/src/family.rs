//! Deterministic field families. Field `i` draws from its own ChaCha stream
//! of the experiment seed, so generation order and parallelism never change
//! the values.

use std::f64::consts::PI;

use anilp_core::dyadic::laplacian_atom;
use anilp_core::lattice::{Filter, GaussianHermite, Grid, SampledField};
use anilp_core::QuasiNormEngine;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::FamilySpec;
use crate::error::{CliError, CliResult, Context};

/// A generated member with its position in the family and a short label.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub id: usize,
    pub kind: &'static str,
    pub field: SampledField,
}

fn rng_for(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64 + 1);
    rng
}

/// The family block and the index inside it for family member `id`.
fn locate(blocks: &[FamilySpec], id: usize) -> Option<&FamilySpec> {
    let mut start = 0;
    for s in blocks {
        if id < start + s.count() {
            return Some(s);
        }
        start += s.count();
    }
    None
}

pub fn family_len(blocks: &[FamilySpec]) -> usize {
    blocks.iter().map(FamilySpec::count).sum()
}

/// Member `id` of the family described by `blocks`.
pub fn generate(
    blocks: &[FamilySpec],
    id: usize,
    seed: u64,
    grid: &Grid,
    engine: &QuasiNormEngine,
) -> CliResult<FamilyMember> {
    let block = locate(blocks, id)
        .ok_or_else(|| CliError::ConfigInvalid(format!("family has no member {id}")))?;
    let mut rng = rng_for(seed, id);
    let (kind, field) = match block {
        FamilySpec::Zero { .. } => ("zero", SampledField::zeros(*grid)),
        FamilySpec::Constant { value, .. } => (
            "constant",
            SampledField::from_real(*grid, vec![*value; grid.len()])
                .context(|| format!("field {id}"))?,
        ),
        FamilySpec::BandLimited { band, modes, .. } => {
            ("band_limited", band_limited(grid, *band, *modes, &mut rng)?)
        }
        FamilySpec::GaussianBumps {
            bumps,
            variance,
            laplacians,
            ..
        } => (
            "gaussian_bumps",
            gaussian_bumps(grid, *bumps, *variance, *laplacians, &mut rng)
                .context(|| format!("field {id}"))?,
        ),
        FamilySpec::Atoms {
            atoms,
            levels,
            p,
            moments,
            ..
        } => (
            "atoms",
            atom_sum(grid, engine, *atoms, *levels, (*p, *moments), &mut rng)
                .context(|| format!("field {id}"))?,
        ),
    };
    Ok(FamilyMember { id, kind, field })
}

fn band_limited(
    grid: &Grid,
    band: [f64; 2],
    modes: usize,
    rng: &mut ChaCha8Rng,
) -> CliResult<SampledField> {
    let [lo, hi] = band;
    let period = grid.period();
    if !(0.0 <= lo && lo <= hi && hi < grid.nyquist()) {
        return Err(CliError::ConfigInvalid(format!(
            "band [{lo}, {hi}] must satisfy 0 ≤ lo ≤ hi < Nyquist {}",
            grid.nyquist()
        )));
    }
    let reach = (hi * period).floor() as i64;
    let candidates: Vec<Vec<f64>> = lattice_points(grid.n(), reach)
        .into_iter()
        .map(|m| m.iter().map(|&v| v as f64 / period).collect::<Vec<f64>>())
        .filter(|xi| {
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            r >= lo && r <= hi && r > 0.0
        })
        .collect();
    if candidates.is_empty() {
        return Err(CliError::ConfigInvalid(format!(
            "band [{lo}, {hi}] holds no grid frequency"
        )));
    }
    let waves: Vec<(Vec<f64>, f64, f64)> = (0..modes)
        .map(|_| {
            let xi = candidates[rng.gen_range(0..candidates.len())].clone();
            (xi, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    Ok(SampledField::from_fn(*grid, |x| {
        let v: f64 = waves
            .iter()
            .map(|(xi, a, phase)| {
                a * (2.0 * PI * xi.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() + phase).cos()
            })
            .sum();
        Complex64::new(v, 0.0)
    }))
}

fn lattice_points(n: usize, reach: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (-reach..=reach).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn gaussian_bumps(
    grid: &Grid,
    bumps: usize,
    variance: [f64; 2],
    laplacians: u32,
    rng: &mut ChaCha8Rng,
) -> anilp_core::Result<SampledField> {
    let h = grid.cell_volume();
    let mut fhat = vec![Complex64::new(0.0, 0.0); grid.len()];
    for _ in 0..bumps {
        let var = rng.gen_range(variance[0]..=variance[1]);
        let center: Vec<f64> = (0..grid.n())
            .map(|_| rng.gen_range(0.0..grid.period()))
            .collect();
        let amp = rng.gen_range(0.5..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let g = GaussianHermite::isotropic(grid.n(), var, laplacians)?;
        let peak = g.value(&vec![0.0; grid.n()]).abs().max(f64::MIN_POSITIVE);
        for (i, s) in fhat.iter_mut().enumerate() {
            let xi = grid.frequency(i);
            let phase = -2.0 * PI * xi.iter().zip(&center).map(|(a, b)| a * b).sum::<f64>();
            *s += g.fourier(&xi) * Complex64::from_polar(amp / (peak * h), phase);
        }
    }
    let f = SampledField::from_spectrum(*grid, fhat)?;
    SampledField::from_real(*grid, f.real_parts())
}

fn atom_sum(
    grid: &Grid,
    engine: &QuasiNormEngine,
    atoms: usize,
    levels: [i32; 2],
    (p, moments): (f64, u32),
    rng: &mut ChaCha8Rng,
) -> anilp_core::Result<SampledField> {
    let mut acc = SampledField::zeros(*grid);
    for _ in 0..atoms {
        let center = rng.gen_range(0..grid.len());
        let level = rng.gen_range(levels[0]..=levels[1]);
        let coeff = rng.gen_range(0.5..1.0);
        let atom = laplacian_atom(grid, engine, center, level, (p, 2.0, moments))?;
        acc = acc.add(&atom.field.scale_real(coeff))?;
    }
    Ok(acc)
}

/// The first `len` members, generated in parallel and returned in order.
pub fn generate_all(
    blocks: &[FamilySpec],
    len: usize,
    seed: u64,
    grid: &Grid,
    engine: &QuasiNormEngine,
) -> CliResult<Vec<FamilyMember>> {
    use rayon::prelude::*;
    (0..len)
        .into_par_iter()
        .map(|id| generate(blocks, id, seed, grid, engine))
        .collect()
}
