//! Weak-type ratios of `S_k⁺` and its adjoint as the complexity grows.

use rand::Rng;
use sparsedom_core::lerner::default_lambda;
use num_rational::Ratio;
use sparsedom_core::shift::{extremal_family, extremal_family_exact, oscillation_of_adjoint, weak11_ratio};
use sparsedom_core::{random, Grid, SkPlusSpec, StepFunction};

use super::{trials, ExperimentConfig, SuiteError};
use crate::report::Row;

const NAME: &str = "weak11";

/// Grid depth for the random trials at complexity `k`.
fn depth_for(k: u32) -> u32 {
    (2 * k + 3).min(12)
}

fn nonzero_nonnegative<R: Rng + ?Sized>(rng: &mut R, grid: &Grid) -> Result<StepFunction, sparsedom_core::Error> {
    let f = random::sparse_nonnegative(rng, grid, 0.6, 1.0);
    if !f.is_zero() {
        return Ok(f);
    }
    let mut v = f.into_values();
    let cell = rng.gen_range(0..v.len());
    v[cell] = 1.0;
    StepFunction::from_tree(grid.clone(), v)
}

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<Row>, SuiteError> {
    let n = config.trials_or(200);
    let mut rows = Vec::new();
    for k in config.k.clone() {
        let offset = k as u64 * (n as u64 + 1);
        let target = (k + 1) as f64;
        let block = trials(NAME, config, offset, n, |trial, rng| {
            if trial == offset {
                let (spec, f) = extremal_family(k, 2 * k)?;
                let ratio = weak11_ratio(&spec.adjoint(), &f)?;
                let (_, ints) = extremal_family_exact(k, 2 * k)?;
                let off = spec.apply_adjoint_exact(&ints)?.iter().filter(|v| **v != Ratio::from_integer(k as i128 + 1)).count();
                return Ok(vec![
                    Row::equal(NAME, "extremal_ratio", trial, ratio, target, 1e-12),
                    Row::bound(NAME, "extremal_exact_cells_off", trial, off as f64, 0.0),
                    Row::record(NAME, &format!("adjoint_ratio_over_k_plus_1_k{k}"), trial, ratio / target),
                ]);
            }
            let grid = Grid::unit(1, depth_for(k))?;
            let prob = rng.gen_range(0.05..0.6);
            let spec = SkPlusSpec::new(random::sparse_family(rng, &grid, prob, k), k)?;
            let f = nonzero_nonnegative(rng, &grid)?;
            let mut out = vec![
                Row::record(NAME, &format!("adjoint_ratio_over_k_plus_1_k{k}"), trial, weak11_ratio(&spec.adjoint(), &f)? / target),
                Row::record(NAME, &format!("direct_ratio_over_k_plus_1_k{k}"), trial, weak11_ratio(&spec, &f)? / target),
            ];
            if let Some(&l) = spec.family().cubes().first() {
                let (osc, avg) = oscillation_of_adjoint(&spec, &f, l, default_lambda(1))?;
                if avg > 0.0 {
                    out.push(Row::record(NAME, "adjoint_oscillation_constant", trial, osc / avg));
                }
            }
            Ok(out)
        })?;
        let sup = block
            .iter()
            .filter(|r| r.check.starts_with("adjoint_ratio"))
            .map(|r| r.lhs * target)
            .fold(0.0, f64::max);
        rows.extend(block);
        rows.push(Row::bound_rel(NAME, "sup_ratio_reaches_k_plus_1", offset + n as u64, target, sup, 1e-12));
    }
    Ok(rows)
}
