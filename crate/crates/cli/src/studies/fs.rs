//! Empirical vector-valued maximal inequality over nested random families.

use anilp_core::lattice::SampledField;
use anilp_core::lorentz::LorentzParams;
use anilp_core::maximal::{fs_ratio, fs_ratio_power, FsReport};
use rayon::prelude::*;
use serde::Serialize;

use super::StudyOutcome;
use crate::config::{lorentz_cells, ExperimentConfig};
use crate::error::{CliError, CliResult, Context};
use crate::family::generate_all;
use crate::output::{finite_or_null, num, Table};

#[derive(Debug, Clone, Serialize)]
pub struct FsCellSummary {
    pub p: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub q: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub r: f64,
    pub s: Option<f64>,
    pub max_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FsSummary {
    pub name: String,
    pub seed: u64,
    pub bound: f64,
    pub cells: Vec<FsCellSummary>,
    pub passed: bool,
}

struct Cell {
    lp: LorentzParams,
    r: f64,
    s: Option<f64>,
}

pub fn run_fs_study(cfg: &ExperimentConfig) -> CliResult<StudyOutcome> {
    let fs = cfg.section(&cfg.fs, "fs")?;
    let engine = cfg.engine()?;
    let grid = cfg.grid()?;
    let range = fs.scales.range()?;
    let lorentz = lorentz_cells(&fs.p, &fs.q)?;
    let largest = fs.family_sizes.iter().copied().max().unwrap_or(0);
    if largest == 0 || fs.family_sizes.contains(&0) {
        return Err(CliError::ConfigInvalid(
            "family_sizes must be positive".into(),
        ));
    }
    if largest > cfg.family_size() {
        return Err(CliError::ConfigInvalid(format!(
            "family size {largest} exceeds the {} configured fields",
            cfg.family_size()
        )));
    }
    let mut cells = Vec::new();
    for lp in &lorentz {
        for r in &fs.r {
            let r = r.resolve(lp.p())?;
            if fs.s.is_empty() {
                if !(lp.p() > 1.0) {
                    return Err(CliError::ConfigInvalid(format!(
                        "p = {} needs the power form (set `s`)",
                        lp.p()
                    )));
                }
                cells.push(Cell {
                    lp: *lp,
                    r,
                    s: None,
                });
            } else {
                for &s in &fs.s {
                    cells.push(Cell {
                        lp: *lp,
                        r,
                        s: Some(s),
                    });
                }
            }
        }
    }
    let family = generate_all(&cfg.family, largest, cfg.seed, &grid, &engine)?;
    let fields: Vec<SampledField> = family.into_iter().map(|m| m.field).collect();

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| fs.family_sizes.iter().map(move |&n| (c, n)))
        .collect();
    let reports: Vec<FsReport> = jobs
        .par_iter()
        .map(|&(c, n)| {
            let cell = &cells[c];
            let prefix = &fields[..n];
            match cell.s {
                None => fs_ratio(prefix, cell.r, cell.lp, &engine, range),
                Some(s) => fs_ratio_power(prefix, cell.r, s, cell.lp, &engine, range),
            }
            .context(|| format!("family size {n}, p = {}, r = {}", cell.lp.p(), cell.r))
        })
        .collect::<CliResult<_>>()?;

    let mut table = Table::new(&[
        "family_size",
        "p",
        "q",
        "r",
        "s",
        "numerator",
        "denominator",
        "ratio",
        "running_max",
        "degenerate",
        "in_interval",
    ]);
    let mut summaries = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let mut running: f64 = 0.0;
        let mut passed = true;
        for (k, &n) in fs.family_sizes.iter().enumerate() {
            let rep = &reports[c * fs.family_sizes.len() + k];
            let inside = rep.degenerate || rep.ratio <= fs.max_ratio;
            if !rep.degenerate {
                running = running.max(rep.ratio);
            }
            passed &= inside;
            table.push(vec![
                n.to_string(),
                num(cell.lp.p()),
                num(cell.lp.q().value()),
                num(cell.r),
                cell.s.map(num).unwrap_or_default(),
                num(rep.numerator),
                num(rep.denominator),
                if rep.degenerate {
                    String::new()
                } else {
                    num(rep.ratio)
                },
                num(running),
                rep.degenerate.to_string(),
                inside.to_string(),
            ]);
        }
        summaries.push(FsCellSummary {
            p: cell.lp.p(),
            q: cell.lp.q().value(),
            r: cell.r,
            s: cell.s,
            max_ratio: running,
            passed,
        });
    }
    let passed = summaries.iter().all(|c| c.passed);
    let summary = FsSummary {
        name: cfg.name.clone(),
        seed: cfg.seed,
        bound: fs.max_ratio,
        cells: summaries,
        passed,
    };
    Ok(StudyOutcome {
        table,
        summary: serde_json::to_value(summary).expect("plain data"),
        passed,
    })
}
