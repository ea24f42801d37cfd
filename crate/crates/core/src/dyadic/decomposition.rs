use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::atoms::{wrapped_offset, AtomCandidate};
use crate::dilation::{Dilation, QuasiNormEngine};
use crate::error::{Error, Result};
use crate::lattice::{decode_field, encode_field, Grid};
use crate::lorentz::{Exponent, LorentzParams};

const FORMAT: &str = "anilp-atomic-decomposition";
const VERSION: u32 = 1;
/// `λ_i^k / (2^k |B|^{1/p})` must lie in `[1/4, 4]`.
const LAMBDA_WINDOW: (f64, f64) = (0.25, 4.0);

#[derive(Debug, Clone, PartialEq)]
pub struct AtomEntry {
    pub k: i32,
    pub i: usize,
    pub lambda: f64,
    pub atom: AtomCandidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDecomposition {
    entries: Vec<AtomEntry>,
    overlap_bound: usize,
}

impl AtomicDecomposition {
    pub fn new(entries: Vec<AtomEntry>, overlap_bound: usize) -> Result<Self> {
        if overlap_bound == 0 {
            return Err(Error::InvalidInput("overlap bound must be positive".into()));
        }
        if let Some(e) = entries.iter().find(|e| !e.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coefficient at k = {}",
                e.k
            )));
        }
        Ok(Self {
            entries,
            overlap_bound,
        })
    }

    pub fn entries(&self) -> &[AtomEntry] {
        &self.entries
    }

    pub fn overlap_bound(&self) -> usize {
        self.overlap_bound
    }

    /// Coefficients grouped by `k`.
    pub fn by_scale(&self) -> BTreeMap<i32, Vec<f64>> {
        let mut m: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
        for e in &self.entries {
            m.entry(e.k).or_default().push(e.lambda);
        }
        m
    }

    /// Checks the coefficient window and the per-scale support overlap.
    pub fn check_invariants(&self, engine: &QuasiNormEngine) -> Result<()> {
        for e in &self.entries {
            let target = 2f64.powi(e.k) * e.atom.ball_measure(engine).powf(1.0 / e.atom.p);
            let ratio = e.lambda.abs() / target;
            if !(LAMBDA_WINDOW.0..=LAMBDA_WINDOW.1).contains(&ratio) {
                return Err(Error::ParameterInadmissible(format!(
                    "coefficient at (k = {}, i = {}) is {ratio:.3e} times 2^k|B|^(1/p)",
                    e.k, e.i
                )));
            }
        }
        let mut counts: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for e in &self.entries {
            let grid = *e.atom.field.grid();
            let c = counts.entry(e.k).or_insert_with(|| vec![0; grid.len()]);
            if c.len() != grid.len() {
                return Err(Error::GridMismatch);
            }
            for (idx, slot) in c.iter_mut().enumerate() {
                let x = wrapped_offset(&grid, &grid.point(idx), &e.atom.center);
                if engine.ball_membership(e.atom.level, &x) {
                    *slot += 1;
                }
            }
        }
        for (k, c) in counts {
            let worst = c.into_iter().max().unwrap_or(0);
            if worst > self.overlap_bound {
                return Err(Error::ParameterInadmissible(format!(
                    "{worst} supports overlap at scale {k}, bound is {}",
                    self.overlap_bound
                )));
            }
        }
        Ok(())
    }
}

/// `[Σ_k (Σ_i |λ_i^k|^p)^{q/p}]^{1/q}`, or `sup_k (Σ_i |λ_i^k|^p)^{1/p}` at `q = ∞`.
pub fn atomic_norm(decomp: &AtomicDecomposition, lp: LorentzParams) -> f64 {
    let p = lp.p();
    let inner: Vec<f64> = decomp
        .by_scale()
        .values()
        .map(|ls| {
            ls.iter()
                .map(|l| l.abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        })
        .collect();
    match lp.q() {
        Exponent::Infinite => inner.into_iter().fold(0.0, f64::max),
        Exponent::Finite(q) => inner.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub n: usize,
    pub size: usize,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub k: i32,
    pub i: usize,
    pub lambda: f64,
    pub center: Vec<f64>,
    pub level: i32,
    /// SHA-256 of the encoded field, which lives at `fields/<hash>.anlp`.
    pub field: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub format: String,
    pub version: u32,
    pub p: f64,
    /// `null` means `r = ∞`.
    pub r: Option<f64>,
    pub s: u32,
    pub dilation: Vec<Vec<f64>>,
    pub grid: GridRecord,
    pub overlap_bound: usize,
    pub atoms: Vec<AtomRecord>,
}

fn field_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join("fields").join(format!("{hash}.anlp"))
}

impl DecompositionFile {
    /// Writes the JSON manifest to `path` and each atom field under
    /// `fields/` next to it.
    pub fn export(decomp: &AtomicDecomposition, dilation: &Dilation, path: &Path) -> Result<Self> {
        let first = decomp
            .entries
            .first()
            .ok_or_else(|| Error::InvalidInput("empty decomposition".into()))?;
        let (p, r, s) = (first.atom.p, first.atom.r, first.atom.s);
        let grid = *first.atom.field.grid();
        let dir = path.parent().unwrap_or(Path::new("."));
        fs::create_dir_all(dir.join("fields"))?;
        let mut atoms = Vec::with_capacity(decomp.entries.len());
        for e in &decomp.entries {
            if (e.atom.p, e.atom.r, e.atom.s) != (p, r, s) {
                return Err(Error::InvalidInput(
                    "atoms must share one (p, r, s) triplet".into(),
                ));
            }
            if *e.atom.field.grid() != grid {
                return Err(Error::GridMismatch);
            }
            let bytes = encode_field(&e.atom.field);
            let hash = hex::encode(Sha256::digest(&bytes));
            let fp = field_path(dir, &hash);
            if !fp.exists() {
                fs::write(fp, &bytes)?;
            }
            atoms.push(AtomRecord {
                k: e.k,
                i: e.i,
                lambda: e.lambda,
                center: e.atom.center.clone(),
                level: e.atom.level,
                field: hash,
            });
        }
        let m = dilation.matrix();
        let file = Self {
            format: FORMAT.into(),
            version: VERSION,
            p,
            r: r.is_finite().then_some(r),
            s,
            dilation: (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect(),
            grid: GridRecord {
                n: grid.n(),
                size: grid.size(),
                period: grid.period(),
            },
            overlap_bound: decomp.overlap_bound,
            atoms,
        };
        let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, json)?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: Self = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::Format(format!(
                "expected {FORMAT} v{VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        Ok(file)
    }

    /// Loads every referenced field, verifying its hash, and rebuilds the
    /// decomposition.
    pub fn load(&self, path: &Path, engine: &QuasiNormEngine) -> Result<AtomicDecomposition> {
        let dir = path.parent().unwrap_or(Path::new("."));
        let grid = Grid::new(self.grid.n, self.grid.size, self.grid.period)?;
        let r = self.r.unwrap_or(f64::INFINITY);
        let mut entries = Vec::with_capacity(self.atoms.len());
        for rec in &self.atoms {
            let bytes = fs::read(field_path(dir, &rec.field))?;
            let hash = hex::encode(Sha256::digest(&bytes));
            if hash != rec.field {
                return Err(Error::Format(format!(
                    "field {} fails its hash check",
                    rec.field
                )));
            }
            let field = decode_field(&bytes)?;
            if *field.grid() != grid {
                return Err(Error::GridMismatch);
            }
            let atom = AtomCandidate::new(
                field,
                rec.center.clone(),
                rec.level,
                (self.p, r, self.s),
                engine,
            )?;
            entries.push(AtomEntry {
                k: rec.k,
                i: rec.i,
                lambda: rec.lambda,
                atom,
            });
        }
        AtomicDecomposition::new(entries, self.overlap_bound)
    }

    pub fn dilation(&self) -> Result<Dilation> {
        Dilation::from_rows(&self.dilation)
    }
}
