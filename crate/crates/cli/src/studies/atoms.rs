//! Validation of an exported atomic decomposition.

use std::path::Path;

use anilp_core::dyadic::{atomic_norm, validate_atom, AtomTolerances, DecompositionFile};
use anilp_core::lorentz::LorentzParams;
use anilp_core::QuasiNormEngine;
use serde::Serialize;

use super::StudyOutcome;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, Context};
use crate::output::{num, Table};

#[derive(Debug, Clone, Serialize)]
pub struct AtomsSummary {
    pub name: String,
    pub atoms: usize,
    pub failing_atoms: usize,
    pub invariants: Result<(), String>,
    pub atomic_norm: f64,
    pub passed: bool,
}

/// `base` resolves a relative decomposition path (normally the config's directory).
pub fn run_atoms_study(cfg: &ExperimentConfig, base: &Path) -> CliResult<StudyOutcome> {
    let at = cfg.section(&cfg.atoms, "atoms")?;
    let path = base.join(&at.decomposition);
    let file = DecompositionFile::read(&path).context(|| format!("reading {}", path.display()))?;
    let d = file
        .dilation()
        .map_err(|e| CliError::ConfigInvalid(format!("decomposition dilation: {e}")))?;
    let engine = QuasiNormEngine::new(d).context(|| "decomposition dilation".into())?;
    let decomp = file
        .load(&path, &engine)
        .context(|| format!("loading {}", path.display()))?;
    let mut tol = AtomTolerances::default();
    if let Some(s) = at.size_tolerance {
        tol.size = s;
    }
    if let Some(m) = at.moment_tolerance {
        tol.moment = m;
    }
    let mut table = Table::new(&[
        "atom",
        "k",
        "i",
        "lambda",
        "level",
        "support_ok",
        "size_ok",
        "moments_ok",
        "degenerate",
        "size_norm",
        "size_bound",
        "worst_moment",
    ]);
    let mut failing = 0;
    for (idx, e) in decomp.entries().iter().enumerate() {
        let rep = validate_atom(&e.atom, &engine, tol);
        if !rep.passes() {
            failing += 1;
        }
        table.push(vec![
            idx.to_string(),
            e.k.to_string(),
            e.i.to_string(),
            num(e.lambda),
            e.atom.level.to_string(),
            rep.support_ok.to_string(),
            rep.size_ok.to_string(),
            rep.moments_ok.to_string(),
            rep.degenerate.to_string(),
            num(rep.size_norm),
            num(rep.size_bound),
            num(rep.worst_moment),
        ]);
    }
    let invariants = decomp.check_invariants(&engine).map_err(|e| e.to_string());
    let lp = LorentzParams::from_values(file.p, at.q.resolve(file.p)?)
        .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let passed = failing == 0 && invariants.is_ok();
    let summary = AtomsSummary {
        name: cfg.name.clone(),
        atoms: decomp.entries().len(),
        failing_atoms: failing,
        invariants,
        atomic_norm: atomic_norm(&decomp, lp),
        passed,
    };
    Ok(StudyOutcome {
        table,
        summary: serde_json::to_value(summary).expect("plain data"),
        passed,
    })
}
