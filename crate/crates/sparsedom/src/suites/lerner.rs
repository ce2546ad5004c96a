//! Local-oscillation decomposition on random step functions.

use rand::Rng;
use sparsedom_core::lerner::{decompose, default_lambda, verify_domination};
use sparsedom_core::{random, Grid};

use super::{trials, ExperimentConfig, SuiteError};
use crate::report::Row;

const NAME: &str = "lerner";

/// Largest depth per dimension when none is configured.
fn max_depth(d: usize) -> u32 {
    match d {
        1 => 10,
        2 => 5,
        _ => 3,
    }
}

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<Row>, SuiteError> {
    let n = config.trials_or(500);
    let dims: Vec<usize> = match config.dim {
        Some(d) => vec![d],
        None => vec![1, 2],
    };
    let mut rows = Vec::new();
    for (i, &d) in dims.iter().enumerate() {
        rows.extend(trials(NAME, config, (i * n) as u64, n, |trial, rng| {
            let depth = config.depth.unwrap_or_else(|| rng.gen_range(0..=max_depth(d)));
            let grid = Grid::unit(d, depth)?;
            let f = random::mixed_function(rng, &grid);
            let dec = decompose(&f, default_lambda(d))?;
            let check = verify_domination(&f, &dec)?;
            let gm = dec.generation_measures();
            let decay = gm.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            Ok(vec![
                Row::bound(NAME, "pointwise_domination", trial, -check.min_slack, 1e-12 * f.max_abs().max(1.0)),
                Row::holds(NAME, "major_subsets_half", trial, check.sparseness_ok),
                Row::bound_rel(NAME, "generation_halving", trial, decay, 0.5, 1e-12),
                Row::bound(NAME, "generation_count", trial, gm.len() as f64, (depth + 1) as f64),
                Row::record(NAME, "family_size", trial, dec.family.len() as f64),
            ])
        })?);
    }
    Ok(rows)
}
