use super::NestedCubeFamily;
use crate::error::{Error, Result};
use crate::lattice::SampledField;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedCube {
    /// Index into the family's levels (0 = coarsest).
    pub level: usize,
    /// Dilation level `j`, `None` for single cells of the terminal level.
    pub j: Option<i32>,
    pub id: usize,
    pub k: Vec<usize>,
    pub average: f64,
    pub parent_average: f64,
}

/// Verdicts for the four decomposition properties.
#[derive(Debug, Clone, PartialEq)]
pub struct CzReport {
    /// The union of selected cubes is exactly `{M_d f > λ}`.
    pub union_matches: bool,
    /// `|f| ≤ λ` at every sample outside the union.
    pub bounded_off_union: bool,
    /// Every average lies in `(λ, Cλ]`.
    pub averages_in_window: bool,
    /// Every parent average is at most `λ`.
    pub parents_below: bool,
    pub disjoint: bool,
    /// `C`: the largest parent/child measure ratio in the family.
    pub c_bound: f64,
}

impl CzReport {
    pub fn all_hold(&self) -> bool {
        self.union_matches
            && self.bounded_off_union
            && self.averages_in_window
            && self.parents_below
            && self.disjoint
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CzDecomposition {
    pub lambda: f64,
    pub cubes: Vec<SelectedCube>,
    pub report: CzReport,
}

/// Top-down stopping time: the maximal family cubes whose `|f|`-average
/// exceeds `λ`. Requires `λ` at least every coarsest-level average so that
/// each selected cube has a parent.
pub fn cz_decompose(
    f: &SampledField,
    lambda: f64,
    family: &NestedCubeFamily,
) -> Result<CzDecomposition> {
    if f.grid() != family.grid() {
        return Err(Error::GridMismatch);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "λ must be positive, got {lambda}"
        )));
    }
    let mags = f.abs();
    let top = family
        .cube_means(0, &mags)
        .into_iter()
        .fold(0.0f64, f64::max);
    if top > lambda {
        return Err(Error::ParameterInadmissible(format!(
            "λ = {lambda} is below the coarsest cube average {top}"
        )));
    }
    let mut covered = vec![false; mags.len()];
    let mut cubes = Vec::new();
    let mut prev_means = family.cube_means(0, &mags);
    for level in 1..family.level_count() {
        let means = family.cube_means(level, &mags);
        for (id, &avg) in means.iter().enumerate() {
            if avg <= lambda {
                continue;
            }
            let members = family.cube_members(level, id);
            if covered[members[0]] {
                continue;
            }
            for &m in &members {
                covered[m] = true;
            }
            let parent = family.parent(level, id).expect("level > 0");
            cubes.push(SelectedCube {
                level,
                j: family.levels()[level].j,
                id,
                k: family.cube_index(level, id),
                average: avg,
                parent_average: prev_means[parent],
            });
        }
        prev_means = means;
    }

    let md = crate::maximal::dyadic_maximal(f, family)?.real_parts();
    let c_bound = family.max_refinement();
    let mut counts = vec![0u32; mags.len()];
    for c in &cubes {
        for m in family.cube_members(c.level, c.id) {
            counts[m] += 1;
        }
    }
    let report = CzReport {
        union_matches: (0..mags.len()).all(|i| (counts[i] > 0) == (md[i] > lambda)),
        bounded_off_union: (0..mags.len()).all(|i| counts[i] > 0 || mags[i] <= lambda),
        averages_in_window: cubes
            .iter()
            .all(|c| c.average > lambda && c.average <= c_bound * lambda),
        parents_below: cubes.iter().all(|c| c.parent_average <= lambda),
        disjoint: counts.iter().all(|&c| c <= 1),
        c_bound,
    };
    Ok(CzDecomposition {
        lambda,
        cubes,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::validate_dilation;
    use crate::lattice::Grid;

    fn family() -> NestedCubeFamily {
        let g = Grid::new(2, 8, 8.0).unwrap();
        let d = validate_dilation(2, &[2.0, 0.0, 0.0, 2.0]).unwrap();
        NestedCubeFamily::new(&g, &d).unwrap()
    }

    #[test]
    fn constant_below_lambda_selects_nothing() {
        let fam = family();
        let f = SampledField::from_real(*fam.grid(), vec![1.0; 64]).unwrap();
        let cz = cz_decompose(&f, 2.0, &fam).unwrap();
        assert!(cz.cubes.is_empty());
        assert!(cz.report.all_hold());
    }

    #[test]
    fn spike_stops_at_hand_computed_level() {
        // 8×8 cells of side 1: levels j = -3 (side 8), -2, -1, 0 (side 1).
        let fam = family();
        let mut v = vec![0.0; 64];
        v[0] = 64.0;
        let f = SampledField::from_real(*fam.grid(), v).unwrap();
        // averages over the cube containing the spike: 1, 4, 16, 64
        let cz = cz_decompose(&f, 5.0, &fam).unwrap();
        assert_eq!(cz.cubes.len(), 1);
        assert_eq!(cz.cubes[0].j, Some(-1));
        assert_eq!(cz.cubes[0].average, 16.0);
        assert_eq!(cz.cubes[0].parent_average, 4.0);
        assert!(cz.report.all_hold());
    }

    #[test]
    fn lambda_below_top_average_is_rejected() {
        let fam = family();
        let f = SampledField::from_real(*fam.grid(), vec![1.0; 64]).unwrap();
        assert!(matches!(
            cz_decompose(&f, 0.5, &fam),
            Err(Error::ParameterInadmissible(_))
        ));
    }
}
