//! Expansive matrices and the quasi-norm geometry they induce.
//!
//! A [`Dilation`] is a validated real matrix whose eigenvalues all lie
//! outside the closed unit disc. [`QuasiNormEngine`] builds the canonical
//! ellipsoid `Δ` of unit measure with `Δ ⊂ rΔ ⊂ AΔ`, the dilated balls
//! `B_k = A^k Δ` and the step quasi-norm `ρ` that is constant on the shells
//! `B_{j+1} \ B_j`.

mod quasi_norm;

pub use quasi_norm::{QuasiLevel, QuasiNormEngine, StepQuasiNorm, DEFAULT_TRUNCATION};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative distance under which two computed eigenvalues are treated as one
/// repeated eigenvalue.
const EIGEN_CLUSTER_TOL: f64 = 1e-5;
/// Eigenvector condition number above which a matrix counts as defective.
const EIGENVECTOR_COND_LIMIT: f64 = 1e8;

/// A validated expansive matrix with its spectral metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilation {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    b: f64,
    lambda_minus: f64,
    lambda_plus: f64,
    eigenvalues: Vec<Complex64>,
    diagonalizable: bool,
}

/// Validates `matrix` (row-major `n × n`) as an expansive dilation.
///
/// `λ₋`/`λ₊` are the extreme eigenvalue moduli when the matrix is numerically
/// diagonalizable; otherwise they are pulled 1% inside/outside the spectrum.
pub fn validate_dilation(n: usize, entries: &[f64]) -> Result<Dilation> {
    Dilation::from_row_slice(n, entries)
}

impl Dilation {
    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Self::from_matrix(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(n, &flat)
    }

    /// `scale · I_n`.
    pub fn isotropic(n: usize, scale: f64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal_element(n, n, scale))
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                entries[i]
            } else {
                0.0
            }
        }))
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::InvalidInput(
                "matrix must be square and non-empty".into(),
            ));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let det = matrix.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Singular { det });
        }
        let eigenvalues: Vec<Complex64> = matrix.complex_eigenvalues().iter().copied().collect();
        let min_mod = eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min);
        let max_mod = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if min_mod <= 1.0 {
            return Err(Error::NotExpansive { modulus: min_mod });
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { det })?;
        let diagonalizable = is_diagonalizable(&matrix, &eigenvalues);
        let (lambda_minus, lambda_plus) = if diagonalizable {
            (min_mod, max_mod)
        } else {
            (
                (0.99 * min_mod).max(1.0 + 0.5 * (min_mod - 1.0)),
                1.01 * max_mod,
            )
        };
        Ok(Self {
            matrix,
            inverse,
            b: det.abs(),
            lambda_minus,
            lambda_plus,
            eigenvalues,
            diagonalizable,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `b = |det A|`.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    /// `ζ₋ = ln λ₋ / ln b`.
    pub fn zeta_minus(&self) -> f64 {
        self.lambda_minus.ln() / self.b.ln()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.diagonalizable
    }

    /// The adjoint (transpose) dilation `A*`, acting on frequencies.
    pub fn adjoint(&self) -> Dilation {
        let mut adj = Self::from_matrix(self.matrix.transpose())
            .expect("transpose of an expansive matrix is expansive");
        // det Aᵀ = det A up to rounding of the LU path; keep them identical.
        adj.b = self.b;
        adj
    }

    /// Diagonal entries when `A` is diagonal with integer entries `>= 2`.
    pub fn diagonal_integer(&self) -> Option<Vec<u64>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && self.matrix[(i, j)] != 0.0 {
                    return None;
                }
            }
            let a = self.matrix[(i, i)];
            if a.fract() != 0.0 || a < 2.0 {
                return None;
            }
            out.push(a as u64);
        }
        Some(out)
    }

    /// `A^k` for any integer `k` (negative powers use the inverse).
    pub fn power(&self, k: i32) -> DMatrix<f64> {
        let base = if k >= 0 { &self.matrix } else { &self.inverse };
        let mut result = DMatrix::identity(self.dim(), self.dim());
        let mut sq = base.clone();
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        result
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.matrix, x)
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.inverse, x)
    }

    /// Smallest `C` with `|A^j x| <= C λ₋^j |x|` for `j_min <= j <= 0`,
    /// measured through spectral norms of the powers.
    pub fn decay_constant(&self, j_min: i32) -> f64 {
        let mut c: f64 = 0.0;
        let mut m = DMatrix::identity(self.dim(), self.dim());
        for j in 0..=j_min.unsigned_abs() {
            let norm = spectral_norm(&m);
            c = c.max(norm * self.lambda_minus.powi(j as i32));
            m = &self.inverse * m;
        }
        c
    }
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate() {
            acc += m[(i, j)] * xj;
        }
        *o = acc;
    }
    out
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a: f64, &b| a.max(b))
}

fn is_diagonalizable(matrix: &DMatrix<f64>, eigenvalues: &[Complex64]) -> bool {
    let n = matrix.nrows();
    let scale = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let complex = matrix.map(|v| Complex64::new(v, 0.0));

    // Group eigenvalues that agree to EIGEN_CLUSTER_TOL; a cluster of size m
    // must carry an m-dimensional (numerical) null space.
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &z in eigenvalues {
        match clusters
            .iter_mut()
            .find(|(c, _)| (*c - z).norm() <= EIGEN_CLUSTER_TOL * scale)
        {
            Some(entry) => entry.1 += 1,
            None => clusters.push((z, 1)),
        }
    }

    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (center, mult) in clusters {
        let shifted = &complex - nalgebra::DMatrix::<Complex64>::identity(n, n) * center;
        let svd = shifted.svd(false, true);
        let v_t = match svd.v_t {
            Some(v) => v,
            None => return false,
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        for &idx in order.iter().take(mult) {
            if svd.singular_values[idx] > 1e-7 * scale {
                return false;
            }
            vectors.push((0..n).map(|c| v_t[(idx, c)].conj()).collect());
        }
    }
    let basis = DMatrix::<Complex64>::from_fn(n, n, |r, c| vectors[c][r]);
    let sv = basis.svd(false, false).singular_values;
    let max = sv.iter().fold(0.0, |a: f64, &b| a.max(b));
    let min = sv.iter().fold(f64::INFINITY, |a: f64, &b| a.min(b));
    min > 0.0 && max / min < EIGENVECTOR_COND_LIMIT
}
