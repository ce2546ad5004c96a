//! Median and oscillation inequalities, plus the half-measure counterexample.

use rand::Rng;
use sparsedom_core::{random, Grid, GridCube, StepFunction};

use super::{trials, ExperimentConfig, SuiteError};
use crate::report::Row;

const NAME: &str = "median";

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<Row>, SuiteError> {
    let n = config.trials_or(1000);
    let mut rows = trials(NAME, config, 0, n, |trial, rng| {
        let d = config.dim.unwrap_or_else(|| rng.gen_range(1..=2));
        let depth = config.depth.unwrap_or_else(|| rng.gen_range(0..=8 / d as u32));
        let grid = Grid::unit(d, depth)?;
        let f = random::mixed_function(rng, &grid);
        let q = grid.cube_of_cell(rng.gen_range(0..grid.cell_count()), rng.gen_range(0..=depth));
        let nu = 0.05 * rng.gen_range(1..=9) as f64;
        let vol = grid.volume(q);
        let m = f.median(q)?;
        let t = rng.gen_range(0.01..1.5);
        Ok(vec![
            Row::bound(NAME, "median_below_rearrangement", trial, m.abs(), f.restrict(q)?.rearrangement(nu * vol)?),
            Row::bound(
                NAME,
                "deviation_below_oscillation",
                trial,
                f.local_rearrangement(q, m, nu * vol)?,
                2.0 * f.oscillation(q, nu)?,
            ),
            Row::bound_rel(NAME, "rearrangement_weak_l1", trial, t * f.rearrangement(t)?, f.weak_l1_norm(), 1e-12),
        ])
    })?;
    rows.extend(counterexample(n as u64).map_err(|source| SuiteError::Trial { suite: NAME, trial: n as u64, source })?);
    Ok(rows)
}

/// `f = 1_{[0,1/2)}` at `ν = 1/2`: `ω_{1/2}(f) = 0`, and `1/2` is a median
/// for which the deviation bound fails, while the canonical median `0` keeps it.
fn counterexample(trial: u64) -> Result<Vec<Row>, sparsedom_core::Error> {
    let grid = Grid::unit(1, 1)?;
    let f = StepFunction::from_lex(grid, &[1.0, 0.0])?;
    let q = GridCube::ROOT;
    let osc = 2.0 * f.oscillation(q, 0.5)?;
    Ok(vec![
        Row::equal(NAME, "counterexample_canonical_median", trial, f.median(q)?, 0.0, 0.0),
        Row::bound(NAME, "counterexample_canonical_holds", trial, f.local_rearrangement(q, 0.0, 0.5)?, osc),
        Row::strict(NAME, "counterexample_other_median_fails", trial, osc, f.local_rearrangement(q, 0.5, 0.5)?),
    ])
}
