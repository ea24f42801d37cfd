//! Lorentz quasi-norms of sampled fields, evaluated exactly on the step
//! rearrangement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SampledField;

/// The secondary Lorentz exponent `q ∈ (0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(q) => q,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn from_value(q: f64) -> Self {
        if q.is_infinite() {
            Exponent::Infinite
        } else {
            Exponent::Finite(q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzParams {
    p: f64,
    q: Exponent,
}

impl LorentzParams {
    pub fn new(p: f64, q: Exponent) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "Lorentz p must be in (0, ∞), got {p}"
            )));
        }
        if let Exponent::Finite(q) = q {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "Lorentz q must be in (0, ∞], got {q}"
                )));
            }
        }
        Ok(Self { p, q })
    }

    /// `q = f64::INFINITY` selects the weak space.
    pub fn from_values(p: f64, q: f64) -> Result<Self> {
        Self::new(p, Exponent::from_value(q))
    }

    pub fn weak(p: f64) -> Result<Self> {
        Self::new(p, Exponent::Infinite)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> Exponent {
        self.q
    }

    /// `(p·r, q·r)`, the exponents appearing on the right of the power identity.
    pub fn scaled(&self, r: f64) -> Result<Self> {
        let q = match self.q {
            Exponent::Finite(q) => Exponent::Finite(q * r),
            Exponent::Infinite => Exponent::Infinite,
        };
        Self::new(self.p * r, q)
    }
}

/// Step form of `f*`: value `levels[i]` on `[T_{i-1}, T_i)` with
/// `T_i = weights[0] + … + weights[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    pub levels: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rearrangement {
    /// From non-negative magnitudes, each carrying measure `cell`.
    pub fn from_magnitudes(magnitudes: &[f64], cell: f64) -> Self {
        let mut sorted: Vec<f64> = magnitudes.iter().copied().filter(|&v| v > 0.0).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut levels = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for v in sorted {
            match levels.last() {
                Some(&last) if last == v => *counts.last_mut().unwrap() += 1,
                _ => {
                    levels.push(v);
                    counts.push(1);
                }
            }
        }
        let weights = counts.into_iter().map(|c| c as f64 * cell).collect();
        Self { levels, weights }
    }

    pub fn is_zero(&self) -> bool {
        self.levels.is_empty()
    }

    /// Measure of the support.
    pub fn support(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫ (f*)^r dt`.
    pub fn power_integral(&self, r: f64) -> f64 {
        self.levels
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v.powf(r) * w)
            .sum()
    }

    /// `‖f‖_{L^{p,q}}` in closed form over the steps.
    ///
    /// For `q < ∞` this is `(Σ v_i^q (T_i^{q/p} − T_{i-1}^{q/p}))^{1/q}`, factored
    /// as `v_1 T_1^{1/p}` times a correction that equals 1 for a single step.
    pub fn lorentz_norm(&self, lp: LorentzParams) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let inv_p = 1.0 / lp.p;
        match lp.q {
            Exponent::Infinite => {
                let mut t = 0.0;
                let mut best: f64 = 0.0;
                for (v, w) in self.levels.iter().zip(&self.weights) {
                    t += w;
                    best = best.max(v * t.powf(inv_p));
                }
                best
            }
            Exponent::Finite(q) => {
                let a = q / lp.p;
                let v1 = self.levels[0];
                let t1 = self.weights[0];
                let mut sum = 1.0;
                let mut t_prev = t1;
                for (v, w) in self.levels.iter().zip(&self.weights).skip(1) {
                    // (T_i/T_1)^a − (T_{i-1}/T_1)^a without cancellation
                    let x = t_prev / t1;
                    let diff = x.powf(a) * (a * (w / t_prev).ln_1p()).exp_m1();
                    sum += (v / v1).powf(q) * diff;
                    t_prev += w;
                }
                v1 * t1.powf(inv_p) * sum.powf(1.0 / q)
            }
        }
    }
}

/// `d_f(α) = |{|f| > α}|`.
pub fn distribution_function(f: &SampledField, alpha: f64) -> f64 {
    let count = f.values().iter().filter(|v| v.norm() > alpha).count();
    count as f64 * f.grid().cell_volume()
}

pub fn rearrange(f: &SampledField) -> Rearrangement {
    Rearrangement::from_magnitudes(&f.abs(), f.grid().cell_volume())
}

pub fn lorentz_norm(f: &SampledField, lp: LorentzParams) -> f64 {
    rearrange(f).lorentz_norm(lp)
}

/// Lorentz quasi-norm of non-negative samples with per-sample measure `cell`.
pub fn lorentz_norm_magnitudes(magnitudes: &[f64], cell: f64, lp: LorentzParams) -> f64 {
    Rearrangement::from_magnitudes(magnitudes, cell).lorentz_norm(lp)
}

/// The dyadic level-sum form `(Σ_k [2^k d_f(2^k)^{1/p}]^q)^{1/q}`
/// (`sup_k` when `q = ∞`), equivalent to the rearrangement form.
pub fn dyadic_sum_norm(f: &SampledField, lp: LorentzParams) -> f64 {
    let r = rearrange(f);
    if r.is_zero() {
        return 0.0;
    }
    let top = r.levels[0];
    let bottom = *r.levels.last().unwrap();
    let support = r.support();
    let inv_p = 1.0 / lp.p;
    // d_f(2^k) from the rearrangement: measure of levels strictly above 2^k
    let dist = |alpha: f64| -> f64 {
        r.levels
            .iter()
            .zip(&r.weights)
            .take_while(|(v, _)| **v > alpha)
            .map(|(_, w)| w)
            .sum()
    };
    let k_top = top.log2().ceil() as i32;
    // below k_low every sample exceeds 2^k, so d_f(2^k) = |supp f|
    let k_low = bottom.log2().floor() as i32 - 1;
    match lp.q {
        Exponent::Infinite => {
            let mut best: f64 = 0.0;
            for k in k_low..=k_top {
                let alpha = 2f64.powi(k);
                best = best.max(alpha * dist(alpha).powf(inv_p));
            }
            best
        }
        Exponent::Finite(q) => {
            let mut sum = 0.0;
            for k in (k_low + 1)..=k_top {
                let alpha = 2f64.powi(k);
                sum += (alpha * dist(alpha).powf(inv_p)).powf(q);
            }
            // geometric tail Σ_{k ≤ k_low} (2^k |supp|^{1/p})^q
            let tail = (2f64.powi(k_low) * support.powf(inv_p)).powf(q) / (1.0 - 2f64.powf(-q));
            (sum + tail).powf(1.0 / q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIdentityReport {
    /// `‖|g|^r‖_{L^{p,q}}`
    pub lhs: f64,
    /// `‖g‖_{L^{pr,qr}}^r`
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `‖|g|^r‖_{L^{p,q}} = ‖g‖_{L^{pr,qr}}^r` to `1e-10` relative.
pub fn check_power_identity(
    g: &SampledField,
    r: f64,
    lp: LorentzParams,
) -> Result<PowerIdentityReport> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "power must be positive, got {r}"
        )));
    }
    let cell = g.grid().cell_volume();
    let powered: Vec<f64> = g.abs().iter().map(|v| v.powf(r)).collect();
    let lhs = lorentz_norm_magnitudes(&powered, cell, lp);
    let rhs = lorentz_norm(g, lp.scaled(r)?).powf(r);
    let scale = lhs.abs().max(rhs.abs());
    Ok(PowerIdentityReport {
        lhs,
        rhs,
        holds: (lhs - rhs).abs() <= 1e-10 * scale,
    })
}
