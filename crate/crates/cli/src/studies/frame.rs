//! Residuals of the continuous and discrete reproducing formulas over the
//! truncation `J` and the grid size `N`.

use anilp_core::frames::{
    build_frame_pair, reproduce_continuous, reproduce_discrete, FrameProfile,
};
use anilp_core::lattice::Grid;
use anilp_core::{Error, QuasiNormEngine};
use serde::Serialize;

use super::StudyOutcome;

/// Rows with at most this uncovered energy share are held to the tolerances.
const COVERED: f64 = 1e-12;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, Context};
use crate::family::generate_all;
use crate::output::{num, Table};

#[derive(Debug, Clone, Serialize)]
pub struct FrameSummary {
    pub name: String,
    pub seed: u64,
    pub continuous_tolerance: f64,
    pub discrete_tolerance: f64,
    /// Largest residual over the rows whose field spectrum is fully covered.
    pub worst_continuous: Option<f64>,
    pub worst_discrete: Option<f64>,
    pub misaligned_rows: usize,
    pub uncovered_rows: usize,
    pub passed: bool,
}

pub fn run_frame_study(cfg: &ExperimentConfig) -> CliResult<StudyOutcome> {
    let fr = cfg.section(&cfg.frame, "frame")?;
    let d = cfg.dilation()?;
    let engine =
        QuasiNormEngine::new(d.clone()).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let base = cfg.grid()?;
    if fr.truncations.is_empty() || fr.sizes.is_empty() {
        return Err(CliError::ConfigInvalid(
            "frame study needs sizes and truncations".into(),
        ));
    }
    let profile = FrameProfile {
        half_width: fr.half_width,
    };
    let mut table = Table::new(&[
        "size",
        "field",
        "mode",
        "J",
        "residual",
        "energy_residual",
        "uncovered_fraction",
        "status",
    ]);
    let mut worst_c: Option<f64> = None;
    let mut worst_d: Option<f64> = None;
    let (mut misaligned, mut uncovered) = (0usize, 0usize);
    let mut passed = true;
    for &size in &fr.sizes {
        let grid = Grid::new(base.n(), size, base.period())
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        let pair =
            build_frame_pair(&d, &grid, profile).context(|| format!("frame pair on N = {size}"))?;
        let family = generate_all(&cfg.family, cfg.family_size(), cfg.seed, &grid, &engine)?;
        for member in &family {
            let modes: &[&str] = if fr.discrete {
                &["continuous", "discrete"]
            } else {
                &["continuous"]
            };
            for &mode in modes {
                for &j in &fr.truncations {
                    let res = if mode == "continuous" {
                        reproduce_continuous(&member.field, &pair, j)
                    } else {
                        reproduce_discrete(&member.field, &pair, j)
                    };
                    let (report, status) = match res {
                        Ok(r) => (Some(r), "ok".to_string()),
                        Err(Error::LatticeMisaligned { level, detail }) => {
                            misaligned += 1;
                            (
                                None,
                                format!("lattice misaligned at level {level}: {detail}"),
                            )
                        }
                        Err(Error::SpectrumUncovered { fraction }) => {
                            uncovered += 1;
                            (None, format!("spectrum uncovered: fraction {fraction:e}"))
                        }
                        Err(e) => {
                            return Err(CliError::numerical(
                                format!("N = {size}, field {}, J = {j}", member.id),
                                e,
                            ))
                        }
                    };
                    if let Some(r) =
                        report.filter(|r| !r.degenerate && r.uncovered_fraction <= COVERED)
                    {
                        let (worst, tol) = if mode == "continuous" {
                            (&mut worst_c, fr.continuous_tolerance)
                        } else {
                            (&mut worst_d, fr.discrete_tolerance)
                        };
                        *worst = Some(worst.map_or(r.residual, |w: f64| w.max(r.residual)));
                        passed &= r.residual <= tol;
                    }
                    table.push(vec![
                        size.to_string(),
                        member.id.to_string(),
                        mode.to_string(),
                        j.to_string(),
                        report.map(|r| num(r.residual)).unwrap_or_default(),
                        report.map(|r| num(r.energy_residual)).unwrap_or_default(),
                        report
                            .map(|r| num(r.uncovered_fraction))
                            .unwrap_or_default(),
                        status,
                    ]);
                }
            }
        }
    }
    passed &= worst_c.is_some() && (worst_d.is_some() || !fr.discrete);
    let summary = FrameSummary {
        name: cfg.name.clone(),
        seed: cfg.seed,
        continuous_tolerance: fr.continuous_tolerance,
        discrete_tolerance: fr.discrete_tolerance,
        worst_continuous: worst_c,
        worst_discrete: worst_d,
        misaligned_rows: misaligned,
        uncovered_rows: uncovered,
        passed,
    };
    Ok(StudyOutcome {
        table,
        summary: serde_json::to_value(summary).expect("plain data"),
        passed,
    })
}
