//! Step functions on a rooted grid and their order statistics.
//!
//! All cells have the same measure `m`, so distribution-type quantities
//! reduce to order statistics of the cell values. Throughout, `k*(t)` is the
//! number of whole cells that fit into measure `t` (largest `j` with
//! `j·m ≤ t`): a set of measure `≤ t` can swallow at most `k*` cells.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridCube};
use crate::math::{abs, floor, pow_nonneg};

/// A real function constant on the finest cells of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    grid: Grid,
    /// Cell values in tree order.
    values: Vec<f64>,
}

impl StepFunction {
    /// From cell values in tree order.
    pub fn from_tree(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::Length { expected: grid.cell_count(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(StepFunction { grid, values })
    }

    /// From cell values in lexicographic order of the cell index vector.
    pub fn from_lex(grid: Grid, lex_values: &[f64]) -> Result<Self> {
        if lex_values.len() != grid.cell_count() {
            return Err(Error::Length { expected: grid.cell_count(), found: lex_values.len() });
        }
        let values = (0..grid.cell_count()).map(|t| lex_values[grid.lex_of_tree(t)]).collect();
        Self::from_tree(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        let n = grid.cell_count();
        Self::from_tree(grid, alloc::vec![c; n])
    }

    /// `1_q` (times `height`).
    pub fn indicator(grid: Grid, q: GridCube, height: f64) -> Result<Self> {
        grid.check(q)?;
        let mut values = alloc::vec![0.0; grid.cell_count()];
        values[grid.cell_range(q)].iter_mut().for_each(|v| *v = height);
        Self::from_tree(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Cell values in tree order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Cell values in lexicographic order.
    pub fn to_lex(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.values.len()];
        for (t, &v) in self.values.iter().enumerate() {
            out[self.grid.lex_of_tree(t)] = v;
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<StepFunction> {
        Self::from_tree(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `1_q · f`.
    pub fn restrict(&self, q: GridCube) -> Result<StepFunction> {
        self.grid.check(q)?;
        let range = self.grid.cell_range(q);
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if range.contains(&i) { v } else { 0.0 })
            .collect();
        Ok(StepFunction { grid: self.grid.clone(), values })
    }

    /// Cellwise product.
    pub fn mul(&self, other: &StepFunction) -> Result<StepFunction> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Self::from_tree(self.grid.clone(), values)
    }

    pub fn cube_values(&self, q: GridCube) -> Result<&[f64]> {
        self.grid.check(q)?;
        Ok(&self.values[self.grid.cell_range(q)])
    }

    /// `∫_q f`.
    pub fn integral_over(&self, q: GridCube) -> Result<f64> {
        Ok(self.cube_values(q)?.iter().sum::<f64>() * self.grid.cell_measure())
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    /// `⟨f⟩_q`.
    pub fn average(&self, q: GridCube) -> Result<f64> {
        let vals = self.cube_values(q)?;
        Ok(vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| abs(*v)).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| pow_nonneg(abs(*v), p)).sum();
        pow_nonneg(s * self.grid.cell_measure(), 1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(abs(*v)))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Number of whole cells that fit in measure `t`.
    pub fn discardable_cells(&self, t: f64) -> usize {
        discardable_cells(t, self.grid.cell_measure())
    }

    /// Decreasing rearrangement `f*(t)`.
    pub fn rearrangement(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Parameter("rearrangement needs t >= 0"));
        }
        let mut abs_vals: Vec<f64> = self.values.iter().map(|v| abs(*v)).collect();
        Ok(kth_largest(&mut abs_vals, self.discardable_cells(t)))
    }

    /// `(1_q (f − c))*(t)`.
    pub fn local_rearrangement(&self, q: GridCube, c: f64, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Parameter("rearrangement needs t >= 0"));
        }
        let mut abs_vals: Vec<f64> = self.cube_values(q)?.iter().map(|v| abs(v - c)).collect();
        // Cells outside q carry the value 0 and never beat a kept cell.
        Ok(kth_largest(&mut abs_vals, self.discardable_cells(t)))
    }

    /// The smallest median of `f` on `q`.
    pub fn median(&self, q: GridCube) -> Result<f64> {
        let mut vals = self.cube_values(q)?.to_vec();
        sort(&mut vals);
        Ok(lower_median(&vals))
    }

    /// Oscillation `ω_λ(f; q) = inf_c (1_q (f − c))*(λ|q|)`.
    pub fn oscillation(&self, q: GridCube, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        let mut vals = self.cube_values(q)?.to_vec();
        sort(&mut vals);
        let discard = self.discardable_cells(lambda * self.grid.volume(q));
        Ok(shortest_window(&vals, discard).0)
    }

    /// `sup_α α |{|f| > α}|`, attained as `α` increases to a cell value.
    pub fn weak_l1_norm(&self) -> f64 {
        let mut abs_vals: Vec<f64> = self.values.iter().map(|v| abs(*v)).collect();
        weak_l1_of_abs(&mut abs_vals, self.grid.cell_measure())
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter("lambda must lie in (0, 1)"))
    }
}

/// Largest `j` with `j·m ≤ t`.
pub fn discardable_cells(t: f64, m: f64) -> usize {
    let mut j = floor(t / m) as usize;
    while (j as f64) * m > t && j > 0 {
        j -= 1;
    }
    while ((j + 1) as f64) * m <= t {
        j += 1;
    }
    j
}

/// The `(k+1)`-th largest entry, or `0` when `k ≥ len`. Reorders `vals`.
pub(crate) fn kth_largest(vals: &mut [f64], k: usize) -> f64 {
    if k >= vals.len() {
        return 0.0;
    }
    let (_, v, _) = vals.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    *v
}

pub(crate) fn sort(vals: &mut [f64]) {
    vals.sort_unstable_by(f64::total_cmp);
}

/// Smallest median of ascending `sorted`: the `⌈N/2⌉`-th value.
pub fn lower_median(sorted: &[f64]) -> f64 {
    sorted[sorted.len().div_ceil(2) - 1]
}

/// Among windows of `N − discard` consecutive sorted values, the smallest
/// half-width and its midpoint. `(0, 0)` when everything may be discarded.
pub fn shortest_window(sorted: &[f64], discard: usize) -> (f64, f64) {
    let n = sorted.len();
    if discard >= n {
        return (0.0, 0.0);
    }
    let keep = n - discard;
    let mut best = (f64::INFINITY, 0.0);
    for s in 0..=discard {
        let (lo, hi) = (sorted[s], sorted[s + keep - 1]);
        let half = (hi - lo) / 2.0;
        if half < best.0 {
            best = (half, lo + half);
        }
    }
    best
}

pub(crate) fn weak_l1_of_abs(abs_vals: &mut [f64], cell_measure: f64) -> f64 {
    abs_vals.sort_unstable_by(|a, b| b.total_cmp(a));
    abs_vals
        .iter()
        .enumerate()
        .map(|(j, &a)| a * (j + 1) as f64)
        .fold(0.0, f64::max)
        * cell_measure
}

/// Per-cube sorted cell values for every cube of the grid (a merge-sort
/// tree), so medians and oscillations of many cubes cost a slice lookup.
#[derive(Clone, Debug)]
pub struct SortedCubes {
    grid: Grid,
    /// `levels[j]` holds all cell values, sorted within each level-`j` block.
    levels: Vec<Vec<f64>>,
}

impl SortedCubes {
    pub fn new(f: &StepFunction) -> Self {
        let grid = f.grid().clone();
        let fan = 1usize << grid.dim();
        let depth = grid.depth() as usize;
        let mut levels = alloc::vec![Vec::new(); depth + 1];
        levels[depth] = f.values().to_vec();
        for j in (0..depth).rev() {
            let block = grid.cells_per_cube(j as u32);
            let child = block / fan;
            let below = &levels[j + 1];
            let mut merged = Vec::with_capacity(below.len());
            for chunk in below.chunks_exact(block) {
                merge_sorted_runs(chunk, child, &mut merged);
            }
            levels[j] = merged;
        }
        SortedCubes { grid, levels }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sorted(&self, q: GridCube) -> &[f64] {
        &self.levels[q.level as usize][self.grid.cell_range(q)]
    }

    pub fn median(&self, q: GridCube) -> f64 {
        lower_median(self.sorted(q))
    }

    pub fn oscillation(&self, q: GridCube, lambda: f64) -> f64 {
        let discard = discardable_cells(lambda * self.grid.volume(q), self.grid.cell_measure());
        shortest_window(self.sorted(q), discard).0
    }

    /// `(1_q (f − c))*(t)` from the sorted values: the candidates for the
    /// largest `|v − c|` sit at the two ends.
    pub fn local_rearrangement(&self, q: GridCube, c: f64, t: f64) -> f64 {
        let vals = self.sorted(q);
        let k = discardable_cells(t, self.grid.cell_measure());
        if k >= vals.len() {
            return 0.0;
        }
        let (mut lo, mut hi) = (0usize, vals.len() - 1);
        for _ in 0..k {
            if abs(vals[lo] - c) >= abs(vals[hi] - c) {
                lo += 1;
            } else {
                hi -= 1;
            }
        }
        abs(vals[lo] - c).max(abs(vals[hi] - c))
    }
}

/// Merges consecutive sorted runs of length `run` into one sorted output.
fn merge_sorted_runs(chunk: &[f64], run: usize, out: &mut Vec<f64>) {
    if chunk.len() == run {
        out.extend_from_slice(chunk);
        return;
    }
    let start = out.len();
    out.extend_from_slice(chunk);
    let mut width = run;
    let mut buf = alloc::vec![0.0; chunk.len()];
    while width < chunk.len() {
        let src = &out[start..];
        for (b, pair) in buf.chunks_mut(2 * width).zip(src.chunks(2 * width)) {
            let (a, c) = pair.split_at(width.min(pair.len()));
            merge_two(a, c, b);
        }
        out[start..].copy_from_slice(&buf);
        width *= 2;
    }
}

fn merge_two(a: &[f64], b: &[f64], out: &mut [f64]) {
    let (mut i, mut j) = (0, 0);
    for slot in out.iter_mut() {
        if j >= b.len() || (i < a.len() && a[i].total_cmp(&b[j]).is_le()) {
            *slot = a[i];
            i += 1;
        } else {
            *slot = b[j];
            j += 1;
        }
    }
}
