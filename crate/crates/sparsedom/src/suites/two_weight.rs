//! Two-weight sandwich for positive shifts and the corona machinery on the
//! same instances.

use rand::Rng;
use sparsedom_core::two_weight::{
    corona_projection, f_estimate_maximal, f_estimate_sides, g_estimate_sides, pairing, pairing_split,
    principal_cubes, verify_lsu, LSU_TOLERANCE,
};
use sparsedom_core::weights::weighted_norm;
use sparsedom_core::{random, CoronaForest, Grid, GridCube, ShiftCoefficients, StepFunction, Weight};

use super::{trials, ExperimentConfig, SuiteError, MAX_DENSE_BITS};
use crate::report::Row;

pub const NAME: &str = "two-weight";

/// Random candidates for the norm search when `(p, q) ≠ (2, 2)`.
const SEARCH_BUDGET: usize = 40;

/// One random two-weight instance.
pub struct Instance {
    pub sigma: Weight,
    pub omega: Weight,
    pub coefficients: ShiftCoefficients,
    pub f: StepFunction,
    pub g: StepFunction,
}

fn max_depth(config: &ExperimentConfig) -> u32 {
    MAX_DENSE_BITS / config.dim.unwrap_or(1) as u32
}

/// The instance of a trial, drawn from the start of its stream.
pub fn draw_instance<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<Instance, sparsedom_core::Error> {
    let depth = config.depth.unwrap_or_else(|| rng.gen_range(1..=6.min(max_depth(config))));
    let grid = Grid::unit(config.dim.unwrap_or(1), depth)?;
    let sigma = random::random_weight(rng, &grid);
    let omega = random::random_weight(rng, &grid);
    let density = rng.gen_range(0.1..0.6);
    let coefficients = random::coefficients(rng, &grid, density, 2.0);
    let f = random::sparse_nonnegative(rng, &grid, 0.4, 1.0);
    let g = random::sparse_nonnegative(rng, &grid, 0.4, 1.0);
    Ok(Instance { sigma, omega, coefficients, f, g })
}

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<Row>, SuiteError> {
    if config.depth.is_some_and(|depth| depth > max_depth(config)) {
        return Err(SuiteError::Config(format!("two-weight needs d * depth <= {MAX_DENSE_BITS}")));
    }
    let (p, q) = (config.p, config.q);
    trials(NAME, config, 0, config.trials_or(500), |trial, rng| {
        let Instance { sigma, omega, coefficients: c, f, g } = draw_instance(config, rng)?;
        let lsu = verify_lsu(&c, &sigma, &omega, p, q, SEARCH_BUDGET, rng)?;
        let mut rows = vec![
            Row::bound_rel(NAME, "testing_below_norm", trial, lsu.testing.max(lsu.testing_dual), lsu.norm, LSU_TOLERANCE),
            Row::bound(NAME, "norm_below_testing_bound", trial, lsu.norm, lsu.upper_bound),
        ];

        let ff = principal_cubes(&f, &sigma)?;
        let fg = principal_cubes(&g, &omega)?;
        rows.push(Row::bound(NAME, "packing_f", trial, 0.5, ff.min_packing_ratio(&sigma)?));
        rows.push(Row::bound(NAME, "packing_g", trial, 0.5, fg.min_packing_ratio(&omega)?));
        rows.push(Row::holds(NAME, "stopping_parents", trial, stopping_parents_ok(&ff) && stopping_parents_ok(&fg)));
        let (l, r) = f_estimate_sides(&ff, &f, &sigma, p)?;
        rows.push(Row::bound_rel(NAME, "f_estimate", trial, l, r, 1e-12));
        let pc = p / (p - 1.0);
        rows.push(Row::bound_rel(
            NAME,
            "maximal_estimate",
            trial,
            f_estimate_maximal(&f, &sigma, p)?,
            pc * weighted_norm(&f, &sigma, p)?,
            1e-12,
        ));
        let (l, r) = g_estimate_sides(&g, &omega, &ff, &fg, q)?;
        rows.push(Row::bound_rel(NAME, "g_estimate", trial, l, r, 1e-12));
        let full = pairing(&c, &f, &sigma, &g, &omega)?;
        let (a, b) = pairing_split(&c, &f, &sigma, &g, &omega)?;
        rows.push(Row::equal(NAME, "pairing_split_sum", trial, a + b, full, 1e-12));
        rows.extend(projection_rows(trial, &g, &omega, &ff, &fg)?);
        Ok(rows)
    })
}

/// `stopping_parent` agrees with a walk up the ancestors.
fn stopping_parents_ok(forest: &CoronaForest) -> bool {
    let grid = forest.grid();
    grid.cubes().all(|q| {
        let mut a = q;
        while !forest.contains(a) {
            a = grid.parent(a).expect("the root is a member");
        }
        forest.stopping_parent(q).ok() == Some(a)
    })
}

/// For `Q` with `π(Q) = (F, G)` and `G ⊆ F`: `g_F` never gains mass on `Q`,
/// and keeps it exactly unless a child of `F` in both forests lies strictly
/// inside `Q`.
fn projection_rows(
    trial: u64,
    g: &StepFunction,
    omega: &Weight,
    ff: &CoronaForest,
    fg: &CoronaForest,
) -> Result<Vec<Row>, sparsedom_core::Error> {
    let grid = ff.grid();
    let gw = g.mul(omega.function())?;
    let projected: Vec<StepFunction> = ff
        .members()
        .iter()
        .map(|&f| corona_projection(g, omega, f, ff, fg)?.mul(omega.function()))
        .collect::<Result<_, _>>()?;
    let (mut worst_gain, mut worst_loss, mut mass) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for q in grid.cubes() {
        let pf = ff.stopping_parent(q)?;
        let pg = fg.stopping_parent(q)?;
        if pg.level < pf.level {
            continue;
        }
        let kept = projected[ff.position(pf).expect("member")].integral_over(q)?;
        let total = gw.integral_over(q)?;
        mass = mass.max(total);
        worst_gain = worst_gain.max(kept - total);
        if !blocked(grid, ff, fg, pf, q)? {
            worst_loss = worst_loss.max(total - kept);
        }
    }
    let scale = 1e-12 * mass.max(f64::MIN_POSITIVE);
    Ok(vec![
        Row::bound(NAME, "projection_no_gain", trial, worst_gain, scale),
        Row::bound(NAME, "projection_preserves_unblocked", trial, worst_loss, scale),
    ])
}

fn blocked(
    grid: &Grid,
    ff: &CoronaForest,
    fg: &CoronaForest,
    pf: GridCube,
    q: GridCube,
) -> Result<bool, sparsedom_core::Error> {
    Ok(ff.children(pf)?.iter().any(|&c| c != q && grid.is_ancestor_or_self(q, c) && fg.contains(c)))
}
