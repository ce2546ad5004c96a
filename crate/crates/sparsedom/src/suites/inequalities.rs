//! Sparse summation inequalities, maximal-function bounds and the stability
//! of the normalised testing ratio.

use rand::Rng;
use sparsedom_core::weights::{
    lem_max_sides, lem_sum_sides, maximal, maximal_weighted, multout_check, multout_check_exact, testing_condition_sup,
    weighted_norm, Exact,
};
use sparsedom_core::{random, Grid, GridCube};

use super::{trials, ExperimentConfig, SuiteError};
use crate::report::Row;

const NAME: &str = "inequalities";

/// Exponents at which the testing ratio is sampled.
pub const STABILITY_EXPONENTS: [f64; 3] = [1.5, 2.0, 3.0];
/// Relative gap allowed between the maxima over the first fifth and over all trials.
pub const STABILITY_TOLERANCE: f64 = 0.05;

/// `(p, α, β)` cells of the weighted summation inequality.
const SUM_CELLS: [(f64, f64, f64); 4] = [(2.0, 1.0, 1.0), (2.0, 0.5, 1.0), (3.0, 1.0, 1.0), (1.5, 0.25, 1.0)];
const MAX_GAMMAS: [f64; 3] = [0.0, 0.5, 0.9];
const FRACTIONAL_ALPHAS: [f64; 2] = [0.3, 0.7];

// Trial-number blocks keep the streams of the sub-experiments apart.
const MAXIMAL_BLOCK: u64 = 1 << 32;
const STABILITY_BLOCK: u64 = 2 << 32;

fn to_f64(r: &Exact) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn random_cube<R: Rng + ?Sized>(rng: &mut R, grid: &Grid) -> GridCube {
    grid.cube_of_cell(rng.gen_range(0..grid.cell_count()), rng.gen_range(0..=grid.depth()))
}

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<Row>, SuiteError> {
    let mut rows = trials(NAME, config, 0, config.trials_or(10_000), |trial, rng| {
        let len = rng.gen_range(1..=8);
        let k = rng.gen_range(0..=3);
        let a = random::rational_sequence(rng, len);
        let alpha = (trial % 2) as u32;
        let (l, m, r) = multout_check_exact(&a, k, alpha)?;
        let af: Vec<f64> = a.iter().map(to_f64).collect();
        let beta = FRACTIONAL_ALPHAS[(trial % 2) as usize];
        let (fl, fm, fr) = multout_check(&af, k, beta)?;
        Ok(vec![
            Row::decided(NAME, "multout_left_exact", trial, to_f64(&l), to_f64(&m), to_f64(&(m - l)), l <= m),
            Row::decided(NAME, "multout_right_exact", trial, to_f64(&m), to_f64(&r), to_f64(&(r - m)), m <= r),
            Row::bound_rel(NAME, "multout_left_fractional", trial, fl, fm, 1e-12),
            Row::bound_rel(NAME, "multout_right_fractional", trial, fm, fr, 1e-12),
        ])
    })?;

    rows.extend(trials(NAME, config, MAXIMAL_BLOCK, config.trials_or(1000), |trial, rng| {
        let d = config.dim.unwrap_or_else(|| rng.gen_range(1..=2));
        let depth = config.depth.unwrap_or_else(|| rng.gen_range(0..=8 / d as u32));
        let grid = Grid::unit(d, depth)?;
        let w = random::random_weight(rng, &grid);
        let cube = random_cube(rng, &grid);
        let local = w.function().restrict(cube)?;
        let mut out = vec![Row::bound_rel(NAME, "maximal_weak_type", trial, maximal(&local).weak_l1_norm(), w.measure(cube), 1e-12)];

        let p = rng.gen_range(1.1..5.0);
        let f = random::sparse_nonnegative(rng, &grid, 0.5, 1.0);
        let lhs = weighted_norm(&maximal_weighted(&f, &w)?, &w, p)?;
        out.push(Row::bound_rel(NAME, "weighted_maximal_strong", trial, lhs, p / (p - 1.0) * weighted_norm(&f, &w, p)?, 1e-12));

        let prob = rng.gen_range(0.05..0.8);
        let family = random::sparse_family(rng, &grid, prob, 0);
        let top = random_cube(rng, &grid);
        for gamma in MAX_GAMMAS {
            let (l, r) = lem_max_sides(&family, &w, top, gamma)?;
            if gamma == 0.0 {
                out.push(Row::bound_rel(NAME, "sparse_packing", trial, l, 2.0 * r, 1e-12));
            }
            out.push(Row::record(NAME, &format!("max_sum_ratio_gamma_{gamma}"), trial, l / r));
        }
        for (p, alpha, beta) in SUM_CELLS {
            let sigma = w.dual(p)?;
            let (l, r) = lem_sum_sides(&family, &w, &sigma, top, alpha, beta, p)?;
            out.push(Row::record(NAME, &format!("weighted_sum_ratio_p{p}_a{alpha}_b{beta}"), trial, l / r));
        }
        Ok(out)
    })?);

    let n = config.trials_or(1000);
    let head = (n / 5).max(1);
    for (i, p) in STABILITY_EXPONENTS.into_iter().enumerate() {
        let check = format!("testing_ratio_p{p}");
        let offset = STABILITY_BLOCK + (i as u64) * (n as u64 + 1);
        let sample = trials(NAME, config, offset, n, |trial, rng| {
            let d = config.dim.unwrap_or(1);
            let depth = config.depth.unwrap_or(6 / d as u32);
            let grid = Grid::unit(d, depth)?;
            let w = random::random_weight(rng, &grid);
            let sigma = w.dual(p)?;
            let prob = rng.gen_range(0.05..0.8);
            let family = random::sparse_family(rng, &grid, prob, 0);
            let (ratio, _) = testing_condition_sup(&family, &w, &sigma, p)?;
            let mut out = vec![Row::record(NAME, &check, trial, ratio)];
            if p == 2.0 {
                let c = rng.gen_range(0.01..100.0);
                let (scaled, _) = testing_condition_sup(&family, &w.scale(c)?, &sigma, p)?;
                out.push(Row::equal(NAME, "testing_ratio_scale_invariance", trial, scaled, ratio, 1e-10));
                let other = random::random_weight(rng, &grid);
                let (free, _) = testing_condition_sup(&family, &w, &other, p)?;
                out.push(Row::record(NAME, "testing_ratio_free_sigma_p2", trial, free));
            }
            Ok(out)
        })?;
        let values: Vec<f64> = sample.iter().filter(|r| r.check == check).map(|r| r.lhs).collect();
        let max_head = values[..head].iter().copied().fold(0.0, f64::max);
        let max_all = values.iter().copied().fold(0.0, f64::max);
        rows.extend(sample);
        rows.push(Row::bound(
            NAME,
            &format!("testing_ratio_stability_p{p}"),
            offset + n as u64,
            (max_all - max_head) / max_all,
            STABILITY_TOLERANCE,
        ));
    }
    Ok(rows)
}
