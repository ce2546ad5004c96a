//! Seeded generators for random test instances.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dyadic::{RealCube, Rational};
use crate::error::Result;
use crate::grid::{Grid, GridCube};
use crate::lerner::SparseFamily;
use crate::math::exp;
use crate::shift::ShiftCoefficients;
use crate::step::StepFunction;
use crate::weights::Weight;

/// Cell values uniform on `[lo, hi)`.
pub fn uniform_function<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, lo: f64, hi: f64) -> StepFunction {
    let v = (0..grid.cell_count()).map(|_| rng.gen_range(lo..hi)).collect();
    StepFunction::from_tree(grid.clone(), v).expect("finite values")
}

/// Integer cell values in `[-range, range]`, which produce many ties.
pub fn integer_function<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, range: i32) -> StepFunction {
    let v = (0..grid.cell_count()).map(|_| rng.gen_range(-range..=range) as f64).collect();
    StepFunction::from_tree(grid.clone(), v).expect("finite values")
}

/// Nonnegative values, zero with probability `zero_prob`, else uniform on `(0, hi)`.
pub fn sparse_nonnegative<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, zero_prob: f64, hi: f64) -> StepFunction {
    let v = (0..grid.cell_count())
        .map(|_| if rng.gen_bool(zero_prob) { 0.0 } else { rng.gen_range(0.0..hi) })
        .collect();
    StepFunction::from_tree(grid.clone(), v).expect("finite values")
}

/// Mixture of the shapes above, scaled by a random power of two.
pub fn mixed_function<R: Rng + ?Sized>(rng: &mut R, grid: &Grid) -> StepFunction {
    let f = match rng.gen_range(0..3) {
        0 => uniform_function(rng, grid, -1.0, 1.0),
        1 => {
            let r = rng.gen_range(1..=4);
            integer_function(rng, grid, r)
        }
        _ => sparse_nonnegative(rng, grid, 0.7, 1.0),
    };
    let s = (1u64 << rng.gen_range(0..8)) as f64;
    f.map(|v| v * s).expect("finite values")
}

/// Weight `exp(U)` with `U` uniform on `[-l, l]`.
pub fn log_uniform_weight<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, l: f64) -> Weight {
    let v = (0..grid.cell_count())
        .map(|_| if l == 0.0 { 1.0 } else { exp(rng.gen_range(-l..=l)) })
        .collect();
    Weight::from_tree(grid.clone(), v).expect("positive values")
}

/// Spreads used for random weights.
pub const WEIGHT_SPREADS: [f64; 3] = [1.0, 2.0, 4.0];

/// [`log_uniform_weight`] with a spread drawn from [`WEIGHT_SPREADS`].
pub fn random_weight<R: Rng + ?Sized>(rng: &mut R, grid: &Grid) -> Weight {
    let l = WEIGHT_SPREADS[rng.gen_range(0..WEIGHT_SPREADS.len())];
    log_uniform_weight(rng, grid, l)
}

/// Each cube gets `λ_Q` uniform on `[0, max)` with probability `density`.
pub fn coefficients<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, density: f64, max: f64) -> ShiftCoefficients {
    let mut c = ShiftCoefficients::zero(grid.clone());
    for q in grid.cubes() {
        if rng.gen_bool(density) {
            c.set(q, rng.gen_range(0.0..max)).expect("nonnegative");
        }
    }
    c
}

/// Selects each cube of level at least `min_level` with probability `prob`,
/// then walks the selection top-down. For each kept cube `L`, its nearest
/// selected descendants are kept in tree order while their total measure
/// stays at most `|L|/2`; every other one is dropped together with all
/// selections below it. The nested major subsets then have `|E(L)| ≥ |L|/2`.
pub fn sparse_family<R: Rng + ?Sized>(rng: &mut R, grid: &Grid, prob: f64, min_level: u32) -> SparseFamily {
    let mut selected: Vec<Vec<bool>> = (0..=grid.depth())
        .map(|j| (0..grid.cubes_at(j)).map(|_| j >= min_level && rng.gen_bool(prob)).collect())
        .collect();
    for j in 0..=grid.depth() {
        for code in 0..grid.cubes_at(j) {
            if !selected[j as usize][code] {
                continue;
            }
            let top = GridCube::new(j, code as u32);
            let budget = grid.cells_per_cube(j) / 2;
            let mut used = 0;
            // Preorder over the subtree, stopping at selected cubes.
            let mut stack: Vec<GridCube> = grid.children(top).collect();
            stack.reverse();
            while let Some(q) = stack.pop() {
                if selected[q.level as usize][q.code as usize] {
                    let size = grid.cells_per_cube(q.level);
                    if used + size <= budget {
                        used += size;
                    } else {
                        clear_subtree(grid, &mut selected, q);
                    }
                } else {
                    let mut ch: Vec<GridCube> = grid.children(q).collect();
                    ch.reverse();
                    stack.extend(ch);
                }
            }
        }
    }
    let cubes = grid.cubes().filter(|q| selected[q.level as usize][q.code as usize]);
    SparseFamily::nested(grid.clone(), cubes).expect("cubes lie in the grid")
}

fn clear_subtree(grid: &Grid, selected: &mut [Vec<bool>], q: GridCube) {
    let mut range = q.code as usize..q.code as usize + 1;
    for j in q.level..=grid.depth() {
        selected[j as usize][range.clone()].iter_mut().for_each(|s| *s = false);
        let fan = 1usize << grid.dim();
        range = range.start * fan..range.end * fan;
    }
}

/// A rational with denominator in `1..=max_den` and value in `[lo, hi)`.
pub fn rational<R: Rng + ?Sized>(rng: &mut R, lo: i64, hi: i64, max_den: i64) -> Rational {
    let den = rng.gen_range(1..=max_den);
    let num = rng.gen_range(lo as i128 * den as i128..hi as i128 * den as i128);
    Rational::new(num, den as i128)
}

/// A cube with rational corner in `[-8, 8)^d` and side in `(0, 4]`.
pub fn rational_cube<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<RealCube> {
    let corner = (0..dim).map(|_| rational(rng, -8, 8, 60)).collect();
    let den = rng.gen_range(1..=60i128);
    let side = Rational::new(rng.gen_range(1..=4 * den), den);
    RealCube::new(corner, side)
}

/// Nonnegative rationals with small denominators.
pub fn rational_sequence<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Rational> {
    let mut v = vec![Rational::new(0, 1); len];
    for x in v.iter_mut() {
        if !rng.gen_bool(0.15) {
            *x = rational(rng, 0, 4, 6);
        }
    }
    v
}
