use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mat_vec, spectral_norm, Dilation};
use crate::error::{Error, Result};

/// Default number of terms in the series defining the ellipsoid form.
pub const DEFAULT_TRUNCATION: usize = 200;
const TAIL_LIMIT: f64 = 1e-12;
/// Boundary points of `Δ` are assigned to the outer shell; this guard absorbs
/// the rounding of `⟨Px, x⟩` for points computed to lie exactly on `∂Δ`.
const BOUNDARY_GUARD: f64 = 8.0 * f64::EPSILON;
const H_SAMPLES: usize = 4096;

/// Level `j` of a point, meaning `x ∈ B_{j+1} \ B_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuasiLevel {
    /// The origin, or a point below the smallest representable level.
    Zero,
    Finite(i32),
    /// Beyond the largest representable level or non-finite.
    Infinite,
}

impl QuasiLevel {
    pub fn finite(self) -> Option<i32> {
        match self {
            QuasiLevel::Finite(j) => Some(j),
            _ => None,
        }
    }
}

/// `ρ(x)`: either `0`, `b^j`, or `+∞` past the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepQuasiNorm {
    pub level: QuasiLevel,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct QuasiNormEngine {
    dilation: Dilation,
    p: DMatrix<f64>,
    c: f64,
    threshold: f64,
    r_exp: f64,
    tau: u32,
    h_est: f64,
    truncation: usize,
    level_clamp: i32,
}

/// Volume of the Euclidean unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// Smallest eigenvalue of the pencil `(P, Q)` for symmetric positive-definite `Q`.
pub(crate) fn min_generalized_eigenvalue(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    let chol = q
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("form is not positive definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("singular Cholesky factor".into()))?;
    let m = &l_inv * p * l_inv.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    Ok(sym
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b)))
}

impl QuasiNormEngine {
    pub fn new(dilation: Dilation) -> Result<Self> {
        Self::build(dilation, DEFAULT_TRUNCATION)
    }

    /// Builds the ellipsoid with `P = Σ_{j=0}^{J} (A^{-j})ᵀ A^{-j}`.
    pub fn build(dilation: Dilation, truncation: usize) -> Result<Self> {
        let n = dilation.dim();
        let inv = dilation.inverse().clone();
        let lm = dilation.lambda_minus();
        let mut p = DMatrix::zeros(n, n);
        let mut m = DMatrix::identity(n, n);
        let mut growth: f64 = 0.0;
        for j in 0..=truncation {
            p += m.transpose() * &m;
            growth = growth.max(spectral_norm(&m) * lm.powi(j as i32));
            m = &inv * m;
        }
        let ratio = lm.powi(-2);
        let tail = growth * growth * ratio.powi(truncation as i32 + 1) / (1.0 - ratio);
        if !(tail < TAIL_LIMIT) {
            return Err(Error::TruncationTooSmall { truncation, tail });
        }
        let p = (&p + p.transpose()) * 0.5;
        let det_p = p.determinant();
        let c = (det_p.sqrt() / unit_ball_volume(n)).powf(2.0 / n as f64);

        let q = inv.transpose() * &p * &inv;
        let r_exp = min_generalized_eigenvalue(&p, &q)?.sqrt();
        let mut tau = 1u32;
        while r_exp.powi(tau as i32) < 2.0 * (1.0 - 1e-12) {
            tau += 1;
        }
        let level_clamp = (1074.0 * std::f64::consts::LN_2 / dilation.b().ln()).floor() as i32;
        let mut engine = Self {
            dilation,
            p,
            c,
            threshold: c * (1.0 - BOUNDARY_GUARD),
            r_exp,
            tau,
            h_est: 1.0,
            truncation,
            level_clamp,
        };
        engine.h_est = engine.estimate_h(H_SAMPLES, 0);
        Ok(engine)
    }

    pub fn dilation(&self) -> &Dilation {
        &self.dilation
    }

    pub fn dim(&self) -> usize {
        self.dilation.dim()
    }

    pub fn b(&self) -> f64 {
        self.dilation.b()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Normalization level with `|{⟨Px,x⟩ < c}| = 1`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r_exp(&self) -> f64 {
        self.r_exp
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    /// Sampled quasi-triangle constant.
    pub fn h_est(&self) -> f64 {
        self.h_est
    }

    /// `b^τ`, a guaranteed upper bound for the quasi-triangle constant.
    pub fn h_certified(&self) -> f64 {
        self.b().powi(self.tau as i32)
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn level_clamp(&self) -> i32 {
        self.level_clamp
    }

    /// Volume of `Δ` from the closed-form ellipsoid formula.
    pub fn ellipsoid_volume(&self) -> f64 {
        let n = self.dim() as f64;
        unit_ball_volume(self.dim()) * self.c.powf(n / 2.0) / self.p.determinant().sqrt()
    }

    /// Quadratic form of `B_k`: `P_k = (A^{-k})ᵀ P A^{-k}`, so `B_k = {⟨P_k x,x⟩ < c}`.
    pub fn ball_form(&self, k: i32) -> DMatrix<f64> {
        let m = self.dilation.power(-k);
        m.transpose() * &self.p * m
    }

    /// Half-widths of `B_k` along the coordinate axes.
    pub fn half_widths(&self, k: i32) -> Vec<f64> {
        let ak = self.dilation.power(k);
        let p_inv = self
            .p
            .clone()
            .try_inverse()
            .expect("P is positive definite");
        let cov = &ak * p_inv * ak.transpose();
        (0..self.dim())
            .map(|i| (self.c * cov[(i, i)]).sqrt())
            .collect()
    }

    fn form(&self, y: &[f64]) -> f64 {
        let py = mat_vec(&self.p, y);
        py.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `⟨P A^{-k}x, A^{-k}x⟩` evaluated along the canonical path of repeated
    /// single applications of `A^{-1}` (or `A` for negative `k`).
    pub fn level_form(&self, k: i32, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        if k >= 0 {
            for _ in 0..k {
                y = self.dilation.apply_inverse(&y);
            }
        } else {
            for _ in 0..k.unsigned_abs() {
                y = self.dilation.apply(&y);
            }
        }
        self.form(&y)
    }

    /// `x ∈ B_k`.
    pub fn ball_membership(&self, k: i32, x: &[f64]) -> bool {
        self.level_form(k, x) < self.threshold
    }

    /// The unique `j` with `x ∈ B_{j+1} \ B_j`.
    pub fn level(&self, x: &[f64]) -> QuasiLevel {
        self.level_with_forms(x).0
    }

    /// Level together with `q_j` and `q_{j+1}` along the canonical path.
    fn level_with_forms(&self, x: &[f64]) -> (QuasiLevel, f64, f64) {
        if x.iter().any(|v| !v.is_finite()) {
            return (QuasiLevel::Infinite, f64::INFINITY, f64::INFINITY);
        }
        if x.iter().all(|&v| v == 0.0) {
            return (QuasiLevel::Zero, 0.0, 0.0);
        }
        let q0 = self.form(x);
        if q0 < self.threshold {
            // walk down: k = -1, -2, ... until q_k >= threshold
            let mut y = x.to_vec();
            let mut prev = q0;
            let mut k = 0i32;
            loop {
                k -= 1;
                if k < -self.level_clamp {
                    return (QuasiLevel::Zero, 0.0, 0.0);
                }
                y = self.dilation.apply(&y);
                let q = self.form(&y);
                if q >= self.threshold {
                    return (QuasiLevel::Finite(k), q, prev);
                }
                prev = q;
            }
        } else {
            let mut y = x.to_vec();
            let mut prev = q0;
            let mut k = 0i32;
            loop {
                k += 1;
                if k - 1 > self.level_clamp {
                    return (QuasiLevel::Infinite, f64::INFINITY, f64::INFINITY);
                }
                y = self.dilation.apply_inverse(&y);
                let q = self.form(&y);
                if q < self.threshold {
                    return (QuasiLevel::Finite(k - 1), prev, q);
                }
                prev = q;
            }
        }
    }

    /// `ρ(x)`.
    pub fn rho(&self, x: &[f64]) -> StepQuasiNorm {
        let level = self.level(x);
        let value = match level {
            QuasiLevel::Zero => 0.0,
            QuasiLevel::Finite(j) => self.b().powi(j),
            QuasiLevel::Infinite => f64::INFINITY,
        };
        StepQuasiNorm { level, value }
    }

    /// A continuous refinement `t(x) ∈ [j, j+1)` of the level with
    /// `t(Ax) = t(x) + 1`, interpolating `ln q` across the shell.
    pub fn continuous_level(&self, x: &[f64]) -> f64 {
        match self.level_with_forms(x) {
            (QuasiLevel::Zero, _, _) => f64::NEG_INFINITY,
            (QuasiLevel::Infinite, _, _) => f64::INFINITY,
            (QuasiLevel::Finite(j), qj, qj1) => {
                let frac = (qj / self.c).ln() / (qj / qj1).ln();
                j as f64 + frac.clamp(0.0, 1.0 - 1e-15)
            }
        }
    }

    /// Largest sampled `ρ(x+y) / (ρ(x) + ρ(y))`.
    pub fn estimate_h(&self, sample_count: usize, seed: u64) -> f64 {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: f64 = 1.0;
        let b = self.b();
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let k: i32 = rng.gen_range(-4..=4);
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            mat_vec(&self.dilation.power(k), &u)
        };
        for _ in 0..sample_count {
            let x = draw(&mut rng);
            let y = if rng.gen_bool(0.25) {
                // nearly cancelling pairs probe the small-sum side
                let t: f64 = rng.gen_range(0.5..2.0);
                x.iter().map(|v| -v * t).collect()
            } else {
                draw(&mut rng)
            };
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let (lx, ly, ls) = (self.level(&x), self.level(&y), self.level(&sum));
            let val = |l: QuasiLevel| match l {
                QuasiLevel::Zero => 0.0,
                QuasiLevel::Finite(j) => b.powi(j),
                QuasiLevel::Infinite => f64::INFINITY,
            };
            let denom = val(lx) + val(ly);
            if denom > 0.0 && denom.is_finite() {
                best = best.max(val(ls) / denom);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::validate_dilation;
    use std::f64::consts::PI;

    fn iso2() -> QuasiNormEngine {
        QuasiNormEngine::new(validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap()).unwrap()
    }

    #[test]
    fn iso_two_form_and_radius() {
        let e = iso2();
        let p = e.p();
        assert!((p[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
        assert!((p[(1, 1)] - 4.0 / 3.0).abs() < 1e-14);
        assert!(p[(0, 1)].abs() < 1e-15);
        let radius = (e.c() / p[(0, 0)]).sqrt();
        assert!((radius - PI.powf(-0.5)).abs() < 1e-13);
        assert!((e.r_exp() - 2.0).abs() < 1e-12);
        assert_eq!(e.tau(), 1);
        assert!((e.ellipsoid_volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn diag_two_four_expansion() {
        let e = QuasiNormEngine::new(validate_dilation(2, &[2.0, 0.0, 0.0, 4.0]).unwrap()).unwrap();
        assert!((e.r_exp() - 2.0).abs() < 1e-12);
        assert_eq!(e.tau(), 1);
        assert!((e.ellipsoid_volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_point_lies_in_outer_shell() {
        let e = iso2();
        let r = PI.powf(-0.5);
        assert_eq!(e.rho(&[r, 0.0]).value, 1.0);
        assert!(e.ball_membership(1, &[1.5 * r, 0.0]));
        assert!(!e.ball_membership(0, &[1.5 * r, 0.0]));
        assert_eq!(e.rho(&[0.0, 0.0]).value, 0.0);
        assert!(e.ball_membership(0, &[0.0, 0.0]));
    }

    #[test]
    fn truncation_too_small() {
        let d = validate_dilation(2, &[1.01, 0.0, 0.0, 1.01]).unwrap();
        assert!(matches!(
            QuasiNormEngine::build(d, 10),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn continuous_level_is_shift_equivariant() {
        let e =
            QuasiNormEngine::new(validate_dilation(2, &[1.0, -1.0, 1.0, 1.0]).unwrap()).unwrap();
        for x in [[0.3, -0.2], [5.0, 1.0], [-0.01, 0.002]] {
            let t = e.continuous_level(&x);
            let ax = e.dilation().apply(&x);
            assert!((e.continuous_level(&ax) - t - 1.0).abs() < 1e-9);
            assert_eq!(t.floor() as i32, e.level(&x).finite().unwrap());
        }
    }

    #[test]
    fn clamp_maps_to_sentinels() {
        let e = iso2();
        assert_eq!(e.level(&[1e-320, 0.0]), QuasiLevel::Zero);
        assert_eq!(e.level(&[f64::INFINITY, 0.0]), QuasiLevel::Infinite);
    }

    #[test]
    fn h_estimate_bounds() {
        let e = iso2();
        let h = e.h_est();
        assert!(h >= 1.0 && h <= e.h_certified());
        assert_eq!(e.h_certified(), 4.0);
    }
}
