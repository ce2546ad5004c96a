//! Two-pass shift evaluation against the defining double sum.

use std::time::{Duration, Instant};

use rand::Rng;
use sparsedom_core::shift::reference::apply_shift_naive;
use sparsedom_core::{random, Grid, ShiftCoefficients, StepFunction};

use super::{trials, ExperimentConfig, SuiteError};
use crate::report::Row;

const NAME: &str = "performance";

pub const TIMING_DEPTH: u32 = 12;
pub const MIN_NONZERO: usize = 1000;
pub const REQUIRED_SPEEDUP: f64 = 10.0;
const TIMING_REPEATS: usize = 5;

fn max_deviation(c: &ShiftCoefficients, f: &StepFunction) -> Result<(f64, f64), sparsedom_core::Error> {
    let fast = c.apply(f)?;
    let slow = apply_shift_naive(c, f);
    let scale = slow.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let dev = fast.values().iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((dev, scale))
}

fn best_of(mut run: impl FnMut()) -> Duration {
    (0..TIMING_REPEATS)
        .map(|_| {
            let t = Instant::now();
            run();
            t.elapsed()
        })
        .min()
        .expect("at least one repeat")
}

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<Row>, SuiteError> {
    let n = config.trials_or(100);
    let mut rows = trials(NAME, config, 0, n, |trial, rng| {
        let d = config.dim.unwrap_or_else(|| rng.gen_range(1..=2));
        let depth = config.depth.unwrap_or_else(|| rng.gen_range(0..=8 / d as u32));
        let grid = Grid::unit(d, depth)?;
        let density = rng.gen_range(0.05..0.9);
        let c = random::coefficients(rng, &grid, density, 3.0);
        let f = random::uniform_function(rng, &grid, -1.0, 1.0);
        let (dev, scale) = max_deviation(&c, &f)?;
        Ok(vec![Row::bound(NAME, "tree_matches_naive", trial, dev, 1e-12 * scale)])
    })?;

    let trial = n as u64;
    let err = |source| SuiteError::Trial { suite: NAME, trial, source };
    let mut rng = crate::seed::trial_rng(config.seed, NAME, trial);
    let grid = Grid::unit(1, TIMING_DEPTH).map_err(err)?;
    let c = random::coefficients(&mut rng, &grid, 0.25, 3.0);
    let f = random::uniform_function(&mut rng, &grid, 0.0, 1.0);
    let (dev, scale) = max_deviation(&c, &f).map_err(err)?;
    let naive = best_of(|| {
        std::hint::black_box(apply_shift_naive(&c, &f));
    });
    let tree = best_of(|| {
        std::hint::black_box(c.apply(&f).expect("same grid"));
    });
    let speedup = naive.as_secs_f64() / tree.as_secs_f64().max(1e-9);
    rows.push(Row::bound(NAME, "timing_instance_size", trial, MIN_NONZERO as f64, c.nonzero_count() as f64));
    rows.push(Row::bound(NAME, "timing_instance_matches", trial, dev, 1e-12 * scale));
    rows.push(Row::bound(NAME, "speedup", trial, REQUIRED_SPEEDUP, speedup).volatile());
    Ok(rows)
}
