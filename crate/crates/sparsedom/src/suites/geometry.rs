//! Shifted dyadic containers for random rational cubes.

use rand::Rng;
use sparsedom_core::dyadic::{container_predicates, find_shifted_container};
use sparsedom_core::{random, RealCube};

use super::{trials, ExperimentConfig, SuiteError};
use crate::report::Row;

pub const NAME: &str = "geometry";

/// The cube and `k` of a trial, drawn from the start of its stream.
pub fn draw_instance<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<(RealCube, u32), sparsedom_core::Error> {
    let d = config.dim.unwrap_or_else(|| rng.gen_range(1..=3));
    let k = rng.gen_range(0..=10);
    Ok((random::rational_cube(rng, d)?, k))
}

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<Row>, SuiteError> {
    trials(NAME, config, 0, config.trials_or(10_000), |trial, rng| {
        let (q, k) = draw_instance(config, rng)?;
        let (_, r) = find_shifted_container(&q, k)?;
        let failed = container_predicates(&q, k, &r).iter().filter(|ok| !**ok).count();
        Ok(vec![
            Row::bound(NAME, "container_predicates", trial, failed as f64, 0.0),
            Row::record(NAME, "container_level", trial, r.level() as f64),
        ])
    })
}
