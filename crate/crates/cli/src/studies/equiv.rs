//! Norm equivalence of the Lusin area function, the `g` and `g*_λ`
//! functions and the dictionary grand maximal function.

use anilp_core::dyadic::grand_n;
use anilp_core::lattice::{FilterSource, FilterSpec, Grid};
use anilp_core::lorentz::{lorentz_norm_magnitudes, LorentzParams};
use anilp_core::maximal::{
    check_ball_fits, estimate_sn_norm, nontangential_maximal, FilterDictionary, ScaleRange,
};
use anilp_core::square::{SquareFunctionRequest, SquarePlan};
use anilp_core::QuasiNormEngine;
use rayon::prelude::*;
use serde::Serialize;

use super::{ratio, StudyOutcome};
use crate::config::{lorentz_cells, EquivConfig, ExperimentConfig};
use crate::error::{CliError, CliResult, Context};
use crate::family::{generate_all, FamilyMember};
use crate::output::{finite_or_null, num, opt, Table};

pub const RATIO_NAMES: [&str; 6] = ["S/g", "S/g*", "S/M", "g/g*", "g/M", "g*/M"];

/// The four norms of one field in one `(p, q, λ)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormQuad {
    pub s: f64,
    pub g: f64,
    pub g_star: f64,
    pub m: f64,
}

impl NormQuad {
    /// Pairwise ratios in [`RATIO_NAMES`] order; `None` for a vanishing denominator.
    pub fn ratios(&self) -> [Option<f64>; 6] {
        let NormQuad { s, g, g_star, m } = *self;
        [
            ratio(s, g),
            ratio(s, g_star),
            ratio(s, m),
            ratio(g, g_star),
            ratio(g, m),
            ratio(g_star, m),
        ]
    }
}

/// Pointwise square and maximal functions of one field.
struct FieldFunctions {
    s: Vec<f64>,
    g: Vec<f64>,
    g_star: Vec<(f64, Vec<f64>)>,
    /// Non-tangential maximal function of every unnormalized dictionary shape.
    member_maximals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub p: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub q: f64,
    pub lambda: f64,
    pub lambda_admissible: bool,
    pub fields: usize,
    pub degenerate_fields: usize,
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivSummary {
    pub name: String,
    pub seed: u64,
    pub max_ratio: f64,
    pub warnings: Vec<String>,
    pub cells: Vec<CellSummary>,
    pub passed: bool,
}

pub fn run_equivalence_study(cfg: &ExperimentConfig) -> CliResult<StudyOutcome> {
    let eq = cfg.section(&cfg.equiv, "equiv")?;
    let engine = cfg.engine()?;
    let grid = cfg.grid()?;
    if !(eq.max_ratio >= 1.0) {
        return Err(CliError::ConfigInvalid(format!(
            "max_ratio must be at least 1, got {}",
            eq.max_ratio
        )));
    }
    if eq.dictionary_size == 0 {
        return Err(CliError::ConfigInvalid(
            "dictionary_size must be positive".into(),
        ));
    }
    let cells = lorentz_cells(&eq.p, &eq.q)?;
    let filter = eq.filter.build(&engine)?;
    let range = eq.scales.range()?;
    let max_range = eq.maximal_scales.range()?;
    let mut warnings = Vec::new();
    for lp in &cells {
        let lambdas = eq.lambdas_for(lp.p());
        if lambdas.is_empty() {
            return Err(CliError::ConfigInvalid("no λ values configured".into()));
        }
        for &l in &lambdas {
            let req = SquareFunctionRequest::new(filter.clone(), range).with_lambda(l);
            for w in req
                .admissibility(lp.p(), &engine)
                .map_err(|e| CliError::ConfigInvalid(format!("p = {}: {e}", lp.p())))?
            {
                if !warnings.contains(&w) {
                    warnings.push(w);
                }
            }
        }
    }
    check_ball_fits(&engine, &grid, range.k_max).context(|| "square-function scales".into())?;
    let plan = SquarePlan::new(&filter, range, &engine, &grid)
        .context(|| "square-function scales".into())?;

    // member shapes are shared; only the 𝒮_N normalization depends on p
    let mut orders: Vec<u32> = Vec::new();
    for lp in &cells {
        let n = sn_order(lp.p(), eq.sn_order_offset, &engine)?;
        if !orders.contains(&n) {
            orders.push(n);
        }
    }
    let dictionaries: Vec<(u32, FilterDictionary)> = orders
        .iter()
        .map(|&n| {
            FilterDictionary::gaussian_family(&engine, n, eq.dictionary_size)
                .map(|d| (n, d))
                .context(|| format!("dictionary of order {n}"))
        })
        .collect::<CliResult<_>>()?;
    let filter_norms: Vec<(u32, f64)> = orders
        .iter()
        .map(|&n| Ok((n, filter_scale(&filter, eq.normalize_filter, &engine, n)?)))
        .collect::<CliResult<_>>()?;

    let mut all_lambdas: Vec<f64> = Vec::new();
    for lp in &cells {
        for l in eq.lambdas_for(lp.p()) {
            if !all_lambdas.contains(&l) {
                all_lambdas.push(l);
            }
        }
    }

    let family = generate_all(&cfg.family, cfg.family_size(), cfg.seed, &grid, &engine)?;
    let functions: Vec<FieldFunctions> = family
        .par_iter()
        .map(|m| {
            field_functions(
                m,
                &plan,
                &all_lambdas,
                &dictionaries[0].1,
                &engine,
                max_range,
            )
        })
        .collect::<CliResult<_>>()?;

    let cell_volume = grid.cell_volume();
    let mut table = Table::new(&[
        "field",
        "kind",
        "p",
        "q",
        "lambda",
        "lambda_admissible",
        "norm_S",
        "norm_g",
        "norm_g_star",
        "norm_M",
        "S/g",
        "S/g*",
        "S/M",
        "g/g*",
        "g/M",
        "g*/M",
        "degenerate",
        "in_interval",
    ]);
    let mut summaries = Vec::new();
    let c = eq.max_ratio;
    for lp in &cells {
        let order = sn_order(lp.p(), eq.sn_order_offset, &engine)?;
        let dict = &dictionaries
            .iter()
            .find(|(n, _)| *n == order)
            .expect("built above")
            .1;
        let scale = filter_norms
            .iter()
            .find(|(n, _)| *n == order)
            .expect("built above")
            .1;
        for lambda in eq.lambdas_for(lp.p()) {
            let admissible = lambda > 2.0 / lp.p();
            let mut cell = CellSummary {
                p: lp.p(),
                q: lp.q().value(),
                lambda,
                lambda_admissible: admissible,
                fields: family.len(),
                degenerate_fields: 0,
                min_ratio: None,
                max_ratio: None,
                passed: true,
            };
            for (member, fun) in family.iter().zip(&functions) {
                let quad = norms(fun, dict, lambda, *lp, cell_volume, scale);
                let ratios = quad.ratios();
                let degenerate = ratios.iter().any(Option::is_none);
                let inside = ratios.iter().flatten().all(|&r| r >= 1.0 / c && r <= c);
                if degenerate {
                    cell.degenerate_fields += 1;
                }
                for &r in ratios.iter().flatten() {
                    cell.min_ratio = Some(cell.min_ratio.map_or(r, |v: f64| v.min(r)));
                    cell.max_ratio = Some(cell.max_ratio.map_or(r, |v: f64| v.max(r)));
                }
                cell.passed &= inside;
                let mut row = vec![
                    member.id.to_string(),
                    member.kind.to_string(),
                    num(lp.p()),
                    num(lp.q().value()),
                    num(lambda),
                    admissible.to_string(),
                    num(quad.s),
                    num(quad.g),
                    num(quad.g_star),
                    num(quad.m),
                ];
                row.extend(ratios.iter().map(|r| opt(*r)));
                row.push(degenerate.to_string());
                row.push(inside.to_string());
                table.push(row);
            }
            summaries.push(cell);
        }
    }
    let passed = summaries.iter().all(|c| c.passed);
    let summary = EquivSummary {
        name: cfg.name.clone(),
        seed: cfg.seed,
        max_ratio: c,
        warnings,
        cells: summaries,
        passed,
    };
    Ok(StudyOutcome {
        table,
        summary: serde_json::to_value(summary).expect("plain data"),
        passed,
    })
}

fn field_functions(
    member: &FamilyMember,
    plan: &SquarePlan,
    lambdas: &[f64],
    dict: &FilterDictionary,
    engine: &QuasiNormEngine,
    max_range: ScaleRange,
) -> CliResult<FieldFunctions> {
    let ctx = || format!("field {}", member.id);
    let energies = plan.energies(&member.field).context(ctx)?;
    let s = plan.lusin_from_energies(&energies, 0);
    let g = plan.g_from_energies(&energies);
    let g_star = lambdas
        .iter()
        .map(|&l| (l, plan.g_star_from_energies(&energies, l)))
        .collect();
    let member_maximals = dict
        .members()
        .iter()
        .map(|d| {
            nontangential_maximal(
                &member.field,
                FilterSource::Analytic(&d.filter.inner),
                engine,
                max_range,
            )
            .map(|f| f.real_parts())
            .context(ctx)
        })
        .collect::<CliResult<_>>()?;
    Ok(FieldFunctions {
        s,
        g,
        g_star,
        member_maximals,
    })
}

/// `N = N_(p) + offset`.
pub fn sn_order(p: f64, offset: u32, engine: &QuasiNormEngine) -> CliResult<u32> {
    Ok(grand_n(p, engine.dilation()).context(|| format!("p = {p}"))? + offset)
}

/// Factor applied to `S`, `g` and `g*_λ`: `1/‖φ‖_{𝒮_N}` when normalizing, else 1.
fn filter_scale(
    filter: &FilterSpec,
    normalize: bool,
    engine: &QuasiNormEngine,
    order: u32,
) -> CliResult<f64> {
    if !normalize {
        return Ok(1.0);
    }
    match filter {
        FilterSpec::GaussianHermite(g) => {
            let sn =
                estimate_sn_norm(g, engine, order).context(|| format!("filter 𝒮_{order} norm"))?;
            Ok(1.0 / sn)
        }
        FilterSpec::BandlimitedAnnulus(_) => Err(CliError::ConfigInvalid(
            "normalize_filter needs a Gaussian-Hermite filter".into(),
        )),
    }
}

fn norms(
    fun: &FieldFunctions,
    dict: &FilterDictionary,
    lambda: f64,
    lp: LorentzParams,
    cell: f64,
    scale: f64,
) -> NormQuad {
    let g_star = &fun
        .g_star
        .iter()
        .find(|(l, _)| *l == lambda)
        .expect("computed for every configured λ")
        .1;
    let len = fun.s.len();
    let mut m = vec![0.0f64; len];
    for (raw, member) in fun.member_maximals.iter().zip(dict.members()) {
        let w = member.filter.factor;
        for (o, v) in m.iter_mut().zip(raw) {
            *o = o.max(w * v);
        }
    }
    NormQuad {
        s: scale * lorentz_norm_magnitudes(&fun.s, cell, lp),
        g: scale * lorentz_norm_magnitudes(&fun.g, cell, lp),
        g_star: scale * lorentz_norm_magnitudes(g_star, cell, lp),
        m: lorentz_norm_magnitudes(&m, cell, lp),
    }
}

/// The square and maximal norms of one field on a grid, for direct use by
/// callers that do not go through a config file.
pub fn field_norms(
    field: &anilp_core::lattice::SampledField,
    eq: &EquivConfig,
    engine: &QuasiNormEngine,
    grid: &Grid,
    lp: LorentzParams,
    lambda: f64,
) -> CliResult<NormQuad> {
    let filter = eq.filter.build(engine)?;
    let plan = SquarePlan::new(&filter, eq.scales.range()?, engine, grid)
        .context(|| "square-function scales".into())?;
    let order = sn_order(lp.p(), eq.sn_order_offset, engine)?;
    let dict = FilterDictionary::gaussian_family(engine, order, eq.dictionary_size)
        .context(|| "dictionary".into())?;
    let scale = filter_scale(&filter, eq.normalize_filter, engine, order)?;
    let member = FamilyMember {
        id: 0,
        kind: "given",
        field: field.clone(),
    };
    let fun = field_functions(
        &member,
        &plan,
        &[lambda],
        &dict,
        engine,
        eq.maximal_scales.range()?,
    )?;
    Ok(norms(&fun, &dict, lambda, lp, grid.cell_volume(), scale))
}
