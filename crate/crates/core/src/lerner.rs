//! Local-oscillation decomposition of a step function.
//!
//! Starting from the root `Q⁰`, the stopping cubes of a base cube `Q` are
//! the maximal proper subcubes `P ⊊ Q` with
//!
//! ```text
//! max_{P' ∈ ch(P)} |m_f(P') − m_f(Q)| > (1_Q (f − m_f(Q)))*(λ|Q|)
//! ```
//!
//! and each of them is decomposed again. The cubes visited form a sparse
//! family `ℒ`, and `|f − m_f(Q⁰)| ≤ 2 Σ_{L∈ℒ} ω_λ(f; L) 1_L` holds at every
//! cell. Medians are always the smallest median. On a finite grid the
//! recursion stops by itself: cells have no children, so they never stop.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridCube};
use crate::math::abs;
use crate::step::{check_lambda, SortedCubes, StepFunction};

/// Cubes with pairwise disjoint major subsets `E(L) ⊆ L`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFamily {
    grid: Grid,
    cubes: Vec<GridCube>,
    /// Tree-ordered cell indices of `E(L)`, aligned with `cubes`.
    major_subsets: Vec<Vec<u32>>,
    gamma: f64,
}

impl SparseFamily {
    /// Family with the canonical major subsets `E(L) = L \ ⋃{L' ∈ family : L' ⊊ L}`.
    /// Duplicates are dropped; cubes are kept in canonical order.
    pub fn nested(grid: Grid, cubes: impl IntoIterator<Item = GridCube>) -> Result<Self> {
        let set: BTreeSet<GridCube> = cubes.into_iter().collect();
        for &q in &set {
            grid.check(q)?;
        }
        let cubes: Vec<GridCube> = set.into_iter().collect();
        let owner = innermost_member(&grid, &cubes);
        let mut major_subsets = vec![Vec::new(); cubes.len()];
        for (cell, o) in owner.iter().enumerate() {
            if let Some(i) = o {
                major_subsets[*i].push(cell as u32);
            }
        }
        Ok(Self::assemble(grid, cubes, major_subsets))
    }

    /// Family with explicit major subsets; checks `E(L) ⊆ L` and disjointness.
    pub fn with_major_subsets(
        grid: Grid,
        cubes: Vec<GridCube>,
        major_subsets: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if cubes.len() != major_subsets.len() {
            return Err(Error::Length { expected: cubes.len(), found: major_subsets.len() });
        }
        let mut seen = vec![false; grid.cell_count()];
        for (q, e) in cubes.iter().zip(&major_subsets) {
            grid.check(*q)?;
            let range = grid.cell_range(*q);
            for &c in e {
                if !range.contains(&(c as usize)) {
                    return Err(Error::Parameter("major subset leaves its cube"));
                }
                if core::mem::replace(&mut seen[c as usize], true) {
                    return Err(Error::Parameter("major subsets overlap"));
                }
            }
        }
        Ok(Self::assemble(grid, cubes, major_subsets))
    }

    fn assemble(grid: Grid, cubes: Vec<GridCube>, major_subsets: Vec<Vec<u32>>) -> Self {
        let gamma = cubes
            .iter()
            .zip(&major_subsets)
            .map(|(q, e)| e.len() as f64 / grid.cells_per_cube(q.level) as f64)
            .fold(1.0, f64::min);
        SparseFamily { grid, cubes, major_subsets, gamma }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cubes(&self) -> &[GridCube] {
        &self.cubes
    }

    pub fn major_subsets(&self) -> &[Vec<u32>] {
        &self.major_subsets
    }

    /// Largest `γ` with `|E(L)| ≥ γ|L|` for all members (1 when empty).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Re-checks disjointness, `E(L) ⊆ L` and `|E(L)| ≥ γ|L|`.
    pub fn is_sparse(&self, gamma: f64) -> bool {
        let mut seen = vec![false; self.grid.cell_count()];
        for (q, e) in self.cubes.iter().zip(&self.major_subsets) {
            let range = self.grid.cell_range(*q);
            for &c in e {
                if !range.contains(&(c as usize)) || core::mem::replace(&mut seen[c as usize], true) {
                    return false;
                }
            }
            if (e.len() as f64) < gamma * range.len() as f64 {
                return false;
            }
        }
        true
    }
}

/// For each cell, the index of the smallest member of `cubes` containing it.
pub(crate) fn innermost_member(grid: &Grid, cubes: &[GridCube]) -> Vec<Option<usize>> {
    let mut owner = vec![None; grid.cell_count()];
    // Coarse to fine, so finer members overwrite their ancestors.
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by_key(|&i| cubes[i].level);
    for i in order {
        owner[grid.cell_range(cubes[i])].iter_mut().for_each(|o| *o = Some(i));
    }
    owner
}

/// `2^{-d-2}`.
pub fn default_lambda(dim: usize) -> f64 {
    libm::exp2(-(dim as f64) - 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LernerDecomposition {
    pub base_median: f64,
    pub family: SparseFamily,
    /// `ω_λ(f; L)` aligned with `family.cubes()`.
    pub coefficients: Vec<f64>,
    /// Stopping generation of each member, aligned with `family.cubes()`.
    pub generations: Vec<u32>,
    pub lambda: f64,
}

impl LernerDecomposition {
    /// Total measure of each stopping generation; entry 0 is `|Q⁰|`.
    pub fn generation_measures(&self) -> Vec<f64> {
        let grid = self.family.grid();
        let top = self.generations.iter().copied().max().unwrap_or(0) as usize;
        let mut out = vec![0.0; top + 1];
        for (q, &g) in self.family.cubes().iter().zip(&self.generations) {
            out[g as usize] += grid.volume(*q);
        }
        out
    }
}

/// Stopping cubes of `q` (see the module docs), in canonical order.
pub fn stopping_children(f: &StepFunction, q: GridCube, lambda: f64) -> Result<Vec<GridCube>> {
    check_lambda(lambda)?;
    f.grid().check(q)?;
    Ok(stopping_children_sorted(&SortedCubes::new(f), q, lambda))
}

fn stopping_children_sorted(stats: &SortedCubes, q: GridCube, lambda: f64) -> Vec<GridCube> {
    let grid = stats.grid();
    let base = stats.median(q);
    let threshold = stats.local_rearrangement(q, base, lambda * grid.volume(q));
    let mut selected = Vec::new();
    let mut stack: Vec<GridCube> = grid.children(q).collect();
    while let Some(p) = stack.pop() {
        if p.level == grid.depth() {
            continue;
        }
        let gap = grid
            .children(p)
            .map(|c| abs(stats.median(c) - base))
            .fold(0.0, f64::max);
        if gap > threshold {
            selected.push(p);
        } else {
            stack.extend(grid.children(p));
        }
    }
    selected.sort();
    selected
}

/// Decomposes `f` on its root with oscillation parameter `lambda`.
pub fn decompose(f: &StepFunction, lambda: f64) -> Result<LernerDecomposition> {
    check_lambda(lambda)?;
    let stats = SortedCubes::new(f);
    let mut cubes = Vec::new();
    let mut generations = Vec::new();
    let mut frontier = vec![GridCube::ROOT];
    let mut generation = 0u32;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &q in &frontier {
            cubes.push(q);
            generations.push(generation);
            next.extend(stopping_children_sorted(&stats, q, lambda));
        }
        frontier = next;
        generation += 1;
    }
    let family = SparseFamily::nested(f.grid().clone(), cubes.iter().copied())?;
    // `nested` sorts; realign the per-cube data.
    let mut gen_of = alloc::collections::BTreeMap::new();
    for (q, g) in cubes.iter().zip(&generations) {
        gen_of.insert(*q, *g);
    }
    let generations = family.cubes().iter().map(|q| gen_of[q]).collect();
    let coefficients = family.cubes().iter().map(|&q| stats.oscillation(q, lambda)).collect();
    Ok(LernerDecomposition {
        base_median: stats.median(GridCube::ROOT),
        family,
        coefficients,
        generations,
        lambda,
    })
}

/// Outcome of [`verify_domination`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominationCheck {
    /// `min_x [2 Σ_L ω_λ(f;L) 1_L(x) − |f(x) − m_f(Q⁰)|]`.
    pub min_slack: f64,
    /// Major subsets disjoint with `|E(L)| ≥ ½|L|`.
    pub sparseness_ok: bool,
}

pub fn verify_domination(f: &StepFunction, dec: &LernerDecomposition) -> Result<DominationCheck> {
    let grid = f.grid();
    if grid != dec.family.grid() {
        return Err(Error::GridMismatch);
    }
    let bound = dominating_sum(dec);
    let min_slack = f
        .values()
        .iter()
        .zip(&bound)
        .map(|(v, b)| b - abs(v - dec.base_median))
        .fold(f64::INFINITY, f64::min);
    Ok(DominationCheck { min_slack, sparseness_ok: dec.family.is_sparse(0.5) })
}

/// `2 Σ_L ω_λ(f;L) 1_L` cellwise, in tree order.
pub fn dominating_sum(dec: &LernerDecomposition) -> Vec<f64> {
    let grid = dec.family.grid();
    let mut bound = vec![0.0; grid.cell_count()];
    for (q, w) in dec.family.cubes().iter().zip(&dec.coefficients) {
        bound[grid.cell_range(*q)].iter_mut().for_each(|b| *b += 2.0 * w);
    }
    bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(depth: u32) -> Grid {
        Grid::unit(1, depth).unwrap()
    }

    /// Maximal subcubes satisfying the stopping condition, by checking every
    /// proper subcube and discarding those with a satisfying proper ancestor.
    fn stopping_by_scan(f: &StepFunction, q: GridCube, lambda: f64) -> Vec<GridCube> {
        let g = f.grid();
        let m = f.median(q).unwrap();
        let t = f.local_rearrangement(q, m, lambda * g.volume(q)).unwrap();
        let satisfies = |p: GridCube| {
            g.children(p).map(|c| abs(f.median(c).unwrap() - m)).fold(0.0, f64::max) > t
        };
        let hits: Vec<GridCube> = g.subcubes(q).filter(|&p| p != q && satisfies(p)).collect();
        let mut out: Vec<GridCube> = hits
            .iter()
            .copied()
            .filter(|&p| !hits.iter().any(|&a| a != p && g.is_ancestor_or_self(a, p)))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn constant_function_never_stops() {
        let f = StepFunction::constant(grid(4), 2.0).unwrap();
        assert!(stopping_children(&f, GridCube::ROOT, 0.125).unwrap().is_empty());
        let dec = decompose(&f, 0.125).unwrap();
        assert_eq!(dec.family.cubes(), &[GridCube::ROOT]);
        assert_eq!(dec.coefficients, vec![0.0]);
        let check = verify_domination(&f, &dec).unwrap();
        assert_eq!(check.min_slack, 0.0);
        assert!(check.sparseness_ok);
    }

    #[test]
    fn half_indicator_is_one_cube() {
        let f = StepFunction::indicator(grid(3), GridCube::new(1, 0), 1.0).unwrap();
        assert!(stopping_children(&f, GridCube::ROOT, 0.125).unwrap().is_empty());
        assert_eq!(stopping_by_scan(&f, GridCube::ROOT, 0.125), vec![]);
        let dec = decompose(&f, 0.125).unwrap();
        assert_eq!(dec.family.cubes(), &[GridCube::ROOT]);
        assert_eq!(dec.coefficients, vec![0.5]);
        assert_eq!(dec.base_median, 0.0);
        assert_eq!(verify_domination(&f, &dec).unwrap().min_slack, 0.0);
    }

    #[test]
    fn spike_in_last_quarter() {
        let f = StepFunction::from_tree(grid(2), vec![0.0, 0.0, 0.0, 8.0]).unwrap();
        let got = stopping_children(&f, GridCube::ROOT, 0.125).unwrap();
        assert_eq!(got, stopping_by_scan(&f, GridCube::ROOT, 0.125));
        // Threshold is 8 (one cell out of four, k* = 0), and no median gap exceeds it.
        assert!(got.is_empty());
        let g = StepFunction::from_tree(grid(4), {
            let mut v = vec![0.0; 16];
            v[12..16].iter_mut().for_each(|x| *x = 8.0);
            v
        })
        .unwrap();
        let got = stopping_children(&g, GridCube::ROOT, 0.125).unwrap();
        assert_eq!(got, stopping_by_scan(&g, GridCube::ROOT, 0.125));
    }

    #[test]
    fn stopping_cubes_match_scan_on_random_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let d = rng.gen_range(1..=2);
            let g = Grid::unit(d, rng.gen_range(1..=7 / d as u32)).unwrap();
            let vals = (0..g.cell_count()).map(|_| rng.gen_range(-4i32..5) as f64).collect();
            let f = StepFunction::from_tree(g.clone(), vals).unwrap();
            let q = g.cube_of_cell(rng.gen_range(0..g.cell_count()), rng.gen_range(0..g.depth()));
            let lambda = default_lambda(d);
            assert_eq!(stopping_children(&f, q, lambda).unwrap(), stopping_by_scan(&f, q, lambda));
        }
    }

    #[test]
    fn random_functions_are_dominated() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let g = grid(rng.gen_range(0..=10));
            let vals = (0..g.cell_count()).map(|_| rng.gen_range(-1.0..1.0) * rng.gen_range(0.0..10.0)).collect();
            let f = StepFunction::from_tree(g, vals).unwrap();
            let dec = decompose(&f, default_lambda(1)).unwrap();
            let check = verify_domination(&f, &dec).unwrap();
            assert!(check.min_slack >= -1e-12 * f.max_abs().max(1.0), "{check:?}");
            assert!(check.sparseness_ok);
            let gens = dec.generation_measures();
            for w in gens.windows(2) {
                assert!(w[1] <= 0.5 * w[0]);
            }
        }
    }

    #[test]
    fn nested_family_major_subsets() {
        let g = grid(2);
        let fam = SparseFamily::nested(g, [GridCube::ROOT, GridCube::new(1, 0), GridCube::ROOT]).unwrap();
        assert_eq!(fam.len(), 2);
        assert_eq!(fam.major_subsets()[0], vec![2, 3]);
        assert_eq!(fam.major_subsets()[1], vec![0, 1]);
        assert_eq!(fam.gamma(), 0.5);
        assert!(fam.is_sparse(0.5));
        assert!(!fam.is_sparse(0.6));
    }

    #[test]
    fn explicit_major_subsets_are_checked() {
        let g = grid(2);
        let cubes = vec![GridCube::ROOT, GridCube::new(1, 0)];
        assert!(SparseFamily::with_major_subsets(g.clone(), cubes.clone(), vec![vec![0], vec![0]]).is_err());
        assert!(SparseFamily::with_major_subsets(g.clone(), cubes.clone(), vec![vec![3], vec![2]]).is_err());
        let fam = SparseFamily::with_major_subsets(g, cubes, vec![vec![3], vec![1]]).unwrap();
        assert_eq!(fam.gamma(), 0.25);
    }

    #[test]
    fn rejects_bad_lambda() {
        let f = StepFunction::constant(grid(1), 1.0).unwrap();
        assert!(decompose(&f, 0.0).is_err());
        assert!(decompose(&f, 1.5).is_err());
    }
}
