//! JSON experiment configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anilp_core::lattice::{make_vanishing_moment_filter, BandlimitedAnnulus, FilterSpec, Grid};
use anilp_core::lorentz::LorentzParams;
use anilp_core::maximal::ScaleRange;
use anilp_core::{Dilation, QuasiNormEngine};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub dilation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub family: Vec<FamilySpec>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub equiv: Option<EquivConfig>,
    #[serde(default)]
    pub fs: Option<FsConfig>,
    #[serde(default)]
    pub frame: Option<FrameConfig>,
    #[serde(default)]
    pub atoms: Option<AtomsConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub size: usize,
    pub period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub k_min: i32,
    pub k_max: i32,
}

impl RangeConfig {
    pub fn range(&self) -> CliResult<ScaleRange> {
        ScaleRange::new(self.k_min, self.k_max).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }
}

/// One block of the field family; blocks are concatenated in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Zero {
        count: usize,
    },
    Constant {
        count: usize,
        value: f64,
    },
    /// Sums of `modes` plane waves with frequencies (cycles per unit) in `band`.
    BandLimited {
        count: usize,
        band: [f64; 2],
        modes: usize,
    },
    /// Sums of `bumps` iterated Laplacians of Gaussians.
    GaussianBumps {
        count: usize,
        bumps: usize,
        variance: [f64; 2],
        laplacians: u32,
    },
    /// Sums of `atoms` smooth `(p, 2, moments)`-atoms at levels in `levels`.
    Atoms {
        count: usize,
        atoms: usize,
        levels: [i32; 2],
        p: f64,
        moments: u32,
    },
}

impl FamilySpec {
    pub fn count(&self) -> usize {
        match self {
            FamilySpec::Zero { count }
            | FamilySpec::Constant { count, .. }
            | FamilySpec::BandLimited { count, .. }
            | FamilySpec::GaussianBumps { count, .. }
            | FamilySpec::Atoms { count, .. } => *count,
        }
    }
}

/// A Lorentz exponent written as a number, `"inf"`, or (for `q`) `"p"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentSpec {
    Value(f64),
    Keyword(String),
}

impl ExponentSpec {
    pub fn resolve(&self, p: f64) -> CliResult<f64> {
        match self {
            ExponentSpec::Value(v) => Ok(*v),
            ExponentSpec::Keyword(k) if k == "inf" => Ok(f64::INFINITY),
            ExponentSpec::Keyword(k) if k == "p" => Ok(p),
            ExponentSpec::Keyword(k) => Err(CliError::ConfigInvalid(format!(
                "exponent must be a number, \"inf\" or \"p\", got {k:?}"
            ))),
        }
    }
}

/// The `(p, q)` cells `p × q`, in config order with duplicates removed.
pub fn lorentz_cells(ps: &[f64], qs: &[ExponentSpec]) -> CliResult<Vec<LorentzParams>> {
    let mut out: Vec<LorentzParams> = Vec::new();
    for &p in ps {
        for q in qs {
            let lp = LorentzParams::from_values(p, q.resolve(p)?)
                .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
            if !out.contains(&lp) {
                out.push(lp);
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::ConfigInvalid("empty (p, q) grid".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterConfig {
    /// Smooth radial band-pass supported in `r_inner ≤ |ξ| ≤ r_outer`.
    Annulus { r_inner: f64, r_outer: f64 },
    /// Gaussian shaped like the canonical ellipsoid with `moments + 1` Laplacians.
    GaussianHermite { moments: u32 },
}

impl FilterConfig {
    pub fn build(&self, engine: &QuasiNormEngine) -> CliResult<FilterSpec> {
        match *self {
            FilterConfig::Annulus { r_inner, r_outer } => {
                BandlimitedAnnulus::new(engine.dim(), r_inner, r_outer)
                    .map(FilterSpec::BandlimitedAnnulus)
                    .map_err(|e| CliError::ConfigInvalid(e.to_string()))
            }
            FilterConfig::GaussianHermite { moments } => {
                Ok(make_vanishing_moment_filter(moments, engine))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivConfig {
    pub p: Vec<f64>,
    pub q: Vec<ExponentSpec>,
    /// `λ = 2/p + offset` for every `p`.
    #[serde(default)]
    pub lambda_offsets: Vec<f64>,
    /// Absolute `λ` values used for every `p`.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    pub scales: RangeConfig,
    pub maximal_scales: RangeConfig,
    pub filter: FilterConfig,
    /// Divide the square-function filter by its estimated `𝒮_N` norm, the
    /// normalization the dictionary members carry.
    #[serde(default)]
    pub normalize_filter: bool,
    /// The `𝒮_N` order is `N_(p) + sn_order_offset`.
    #[serde(default)]
    pub sn_order_offset: u32,
    pub dictionary_size: usize,
    /// Acceptance interval `[1/C, C]` for every pairwise ratio.
    pub max_ratio: f64,
}

impl EquivConfig {
    /// `λ` values for one `p`, in config order without duplicates.
    pub fn lambdas_for(&self, p: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for l in self
            .lambda_offsets
            .iter()
            .map(|o| 2.0 / p + o)
            .chain(self.lambdas.iter().copied())
        {
            if !out.contains(&l) {
                out.push(l);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsConfig {
    pub p: Vec<f64>,
    pub q: Vec<ExponentSpec>,
    /// Inner exponents `r ∈ (1, ∞]`.
    pub r: Vec<ExponentSpec>,
    /// When present, the power form with these `s ∈ (0, min(r, p))` is used.
    #[serde(default)]
    pub s: Vec<f64>,
    /// Each family is the prefix of the field family with this many members.
    pub family_sizes: Vec<usize>,
    pub scales: RangeConfig,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    /// Grid sizes `N`; the period comes from `grid`.
    pub sizes: Vec<usize>,
    pub truncations: Vec<u32>,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_true")]
    pub discrete: bool,
    pub continuous_tolerance: f64,
    pub discrete_tolerance: f64,
}

fn default_half_width() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsConfig {
    /// Decomposition file, relative paths resolved against the config file.
    pub decomposition: PathBuf,
    pub q: ExponentSpec,
    #[serde(default)]
    pub size_tolerance: Option<f64>,
    #[serde(default)]
    pub moment_tolerance: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn dilation(&self) -> CliResult<Dilation> {
        let rows = self
            .dilation
            .as_ref()
            .ok_or_else(|| CliError::ConfigInvalid("missing `dilation`".into()))?;
        Dilation::from_rows(rows).map_err(|e| CliError::ConfigInvalid(format!("dilation: {e}")))
    }

    pub fn engine(&self) -> CliResult<QuasiNormEngine> {
        QuasiNormEngine::new(self.dilation()?)
            .map_err(|e| CliError::ConfigInvalid(format!("dilation: {e}")))
    }

    pub fn grid(&self) -> CliResult<Grid> {
        let g = self
            .grid
            .ok_or_else(|| CliError::ConfigInvalid("missing `grid`".into()))?;
        Grid::new(g.n, g.size, g.period).map_err(|e| CliError::ConfigInvalid(format!("grid: {e}")))
    }

    pub fn family_size(&self) -> usize {
        self.family.iter().map(FamilySpec::count).sum()
    }

    pub fn section<'a, T>(&self, section: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        section
            .as_ref()
            .ok_or_else(|| CliError::ConfigInvalid(format!("missing `{name}` section")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err =
            ExperimentConfig::from_json(r#"{"name": "x", "seed": 1, "colour": 3}"#).unwrap_err();
        assert!(matches!(err, CliError::ConfigInvalid(_)));
        let err = ExperimentConfig::from_json(
            r#"{"name": "x", "seed": 1, "family": [{"kind": "zero", "count": 1, "x": 0}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::ConfigInvalid(_)));
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(ExperimentConfig::from_json(r#"{"name": "x"}"#).is_err());
    }

    #[test]
    fn exponent_keywords() {
        let qs: Vec<ExponentSpec> = serde_json::from_str(r#"["p", 2, "inf"]"#).unwrap();
        let cells = lorentz_cells(&[0.5, 2.0], &qs).unwrap();
        assert_eq!(cells.len(), 5);
        assert_eq!(cells[0].q().value(), 0.5);
        assert!(cells[2].q().value().is_infinite());
        assert!(ExponentSpec::Keyword("two".into()).resolve(1.0).is_err());
    }

    #[test]
    fn lambda_offsets_follow_p() {
        let cfg: EquivConfig = serde_json::from_str(
            r#"{"p": [0.5], "q": ["p"], "lambda_offsets": [0.5, 2], "lambdas": [6],
                "scales": {"k_min": 0, "k_max": 1}, "maximal_scales": {"k_min": 0, "k_max": 1},
                "filter": {"kind": "annulus", "r_inner": 0.2, "r_outer": 0.8},
                "dictionary_size": 2, "max_ratio": 50}"#,
        )
        .unwrap();
        assert_eq!(cfg.lambdas_for(0.5), vec![4.5, 6.0]);
    }
}
