#![allow(dead_code)]

use std::path::{Path, PathBuf};

use anilp_core::dyadic::{canonical_atom, AtomEntry, AtomicDecomposition, DecompositionFile};
use anilp_core::lattice::Grid;
use anilp_core::{Dilation, QuasiNormEngine};

pub fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// Four separated `(1, ∞, 0)`-atoms at scales 0 and 1 on a 64×64 torus of
/// period 8, written as `decomp.json` under `dir`.
pub fn write_decomposition(dir: &Path) -> PathBuf {
    let d = Dilation::isotropic(2, 2.0).unwrap();
    let engine = QuasiNormEngine::new(d.clone()).unwrap();
    let grid = Grid::new(2, 64, 8.0).unwrap();
    let mut entries = Vec::new();
    for (n, &(cx, cy)) in [(8usize, 8usize), (40, 8), (8, 40), (40, 40)]
        .iter()
        .enumerate()
    {
        let k = (n % 2) as i32;
        let atom = canonical_atom(
            &grid,
            &engine,
            grid.flat_index(&[cx, cy]),
            0,
            1.0,
            f64::INFINITY,
        )
        .unwrap();
        let lambda = 2f64.powi(k) * atom.ball_measure(&engine);
        entries.push(AtomEntry {
            k,
            i: n / 2,
            lambda,
            atom,
        });
    }
    let decomp = AtomicDecomposition::new(entries, 1).unwrap();
    let path = dir.join("decomp.json");
    DecompositionFile::export(&decomp, &d, &path).unwrap();
    path
}

/// An atoms-study config next to a fresh decomposition in `dir`.
pub fn write_atoms_config(dir: &Path) -> PathBuf {
    write_decomposition(dir);
    let path = dir.join("atoms.json");
    std::fs::write(
        &path,
        r#"{"name": "atoms", "seed": 7, "atoms": {"decomposition": "decomp.json", "q": "p"}}"#,
    )
    .unwrap();
    path
}
