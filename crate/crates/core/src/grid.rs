//! Rooted dyadic grids.
//!
//! A [`Grid`] is a root cube together with a depth `n`. Its cubes are the
//! descendants of the root down to `n` generations, addressed by
//! [`GridCube`]: a level `j ∈ 0..=n` relative to the root and a tree code in
//! `0..2^{dj}`. The children of `(j, c)` are `(j+1, c·2^d + e)`, so the
//! cells of any cube occupy one contiguous range of the tree-ordered cell
//! array. Cell values are stored in that tree order; [`Grid::lex_of_tree`]
//! and [`Grid::tree_of_lex`] convert to and from the lexicographic order of
//! the cell index vector used by the file formats.

use core::ops::Range;

use alloc::vec;
use alloc::vec::Vec;

use crate::dyadic::{DyadicCube, MAX_DIM};
use crate::error::{Error, Result};

/// Cap on `d · depth`; `2^24` cells is already 128 MiB of `f64`.
pub const MAX_GRID_BITS: u32 = 24;

/// A cube of a rooted grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCube {
    /// Generations below the root.
    pub level: u32,
    /// Tree code, `0..2^{d·level}`.
    pub code: u32,
}

impl GridCube {
    pub const ROOT: GridCube = GridCube { level: 0, code: 0 };

    pub const fn new(level: u32, code: u32) -> Self {
        GridCube { level, code }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    root: DyadicCube,
    depth: u32,
}

impl Grid {
    pub fn new(root: DyadicCube, depth: u32) -> Result<Self> {
        if root.dim() as u32 * depth > MAX_GRID_BITS {
            return Err(Error::TooLarge("d * depth must be at most 24"));
        }
        Ok(Grid { root, depth })
    }

    /// Grid rooted at `[0,1)^d`.
    pub fn unit(dim: usize, depth: u32) -> Result<Self> {
        Self::new(DyadicCube::unit(dim)?, depth)
    }

    pub fn root(&self) -> &DyadicCube {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    fn bits(&self) -> u32 {
        self.dim() as u32
    }

    pub fn cell_count(&self) -> usize {
        1usize << (self.bits() * self.depth)
    }

    /// Number of cubes at `level`.
    pub fn cubes_at(&self, level: u32) -> usize {
        1usize << (self.bits() * level)
    }

    /// Number of cubes of every level together.
    pub fn cube_count(&self) -> usize {
        (0..=self.depth).map(|j| self.cubes_at(j)).sum()
    }

    /// Measure of one finest cell.
    pub fn cell_measure(&self) -> f64 {
        self.root.volume() * libm::exp2(-((self.bits() * self.depth) as f64))
    }

    pub fn root_measure(&self) -> f64 {
        self.root.volume()
    }

    /// Number of cells inside a cube of `level`.
    pub fn cells_per_cube(&self, level: u32) -> usize {
        1usize << (self.bits() * (self.depth - level))
    }

    pub fn volume(&self, q: GridCube) -> f64 {
        self.cell_measure() * self.cells_per_cube(q.level) as f64
    }

    pub fn contains_cube(&self, q: GridCube) -> bool {
        q.level <= self.depth && (q.code as usize) < self.cubes_at(q.level)
    }

    pub fn check(&self, q: GridCube) -> Result<()> {
        if self.contains_cube(q) {
            Ok(())
        } else {
            Err(Error::NotInGrid)
        }
    }

    /// Tree-ordered cell range covered by `q`.
    pub fn cell_range(&self, q: GridCube) -> Range<usize> {
        let n = self.cells_per_cube(q.level);
        let start = q.code as usize * n;
        start..start + n
    }

    /// The finest cell with tree index `cell`.
    pub fn cell(&self, cell: usize) -> GridCube {
        GridCube::new(self.depth, cell as u32)
    }

    /// The cube of `level` containing cell `cell`.
    pub fn cube_of_cell(&self, cell: usize, level: u32) -> GridCube {
        GridCube::new(level, (cell >> (self.bits() * (self.depth - level))) as u32)
    }

    pub fn parent(&self, q: GridCube) -> Option<GridCube> {
        (q.level > 0).then(|| GridCube::new(q.level - 1, q.code >> self.bits()))
    }

    /// Ancestor `k` generations up, if it is still inside the root.
    pub fn ancestor(&self, q: GridCube, k: u32) -> Option<GridCube> {
        (k <= q.level).then(|| GridCube::new(q.level - k, q.code >> (self.bits() * k)))
    }

    /// Children in tree order; empty for cells.
    pub fn children(&self, q: GridCube) -> impl Iterator<Item = GridCube> {
        let fan = if q.level < self.depth { 1u32 << self.bits() } else { 0 };
        let base = q.code << self.bits();
        (0..fan).map(move |e| GridCube::new(q.level + 1, base + e))
    }

    /// Whether `outer ⊇ inner`.
    pub fn is_ancestor_or_self(&self, outer: GridCube, inner: GridCube) -> bool {
        inner.level >= outer.level
            && inner.code >> (self.bits() * (inner.level - outer.level)) == outer.code
    }

    /// All cubes, level by level, codes ascending.
    pub fn cubes(&self) -> impl Iterator<Item = GridCube> + '_ {
        (0..=self.depth)
            .flat_map(move |j| (0..self.cubes_at(j) as u32).map(move |c| GridCube::new(j, c)))
    }

    /// All cubes contained in `q` (including `q`), level by level.
    pub fn subcubes(&self, q: GridCube) -> impl Iterator<Item = GridCube> + '_ {
        let bits = self.bits();
        (q.level..=self.depth).flat_map(move |j| {
            let shift = bits * (j - q.level);
            let lo = q.code << shift;
            (lo..lo + (1u32 << shift)).map(move |c| GridCube::new(j, c))
        })
    }

    /// Index vector of `q` relative to the root, `0..2^level` per coordinate.
    pub fn relative_index(&self, q: GridCube) -> [u32; MAX_DIM] {
        let d = self.dim();
        let mut idx = [0u32; MAX_DIM];
        for step in 0..q.level {
            let digit = q.code >> (d as u32 * (q.level - 1 - step));
            for (i, slot) in idx.iter_mut().enumerate().take(d) {
                *slot = (*slot << 1) | ((digit >> (d - 1 - i)) & 1);
            }
        }
        idx
    }

    /// Inverse of [`relative_index`](Self::relative_index).
    pub fn from_relative_index(&self, level: u32, idx: &[u32]) -> GridCube {
        let d = self.dim();
        let mut code = 0u32;
        for step in 0..level {
            let bit = level - 1 - step;
            let mut digit = 0u32;
            for (i, &x) in idx.iter().enumerate().take(d) {
                digit |= ((x >> bit) & 1) << (d - 1 - i);
            }
            code = (code << d) | digit;
        }
        GridCube::new(level, code)
    }

    /// Lexicographic cell index of the tree-ordered cell `tree`.
    pub fn lex_of_tree(&self, tree: usize) -> usize {
        let idx = self.relative_index(self.cell(tree));
        let side = self.depth as usize;
        idx[..self.dim()].iter().fold(0usize, |acc, &x| (acc << side) | x as usize)
    }

    /// Tree index of the lexicographic cell index `lex`.
    pub fn tree_of_lex(&self, lex: usize) -> usize {
        let d = self.dim();
        let side = self.depth as usize;
        let mask = (1usize << side) - 1;
        let mut idx = [0u32; MAX_DIM];
        for i in 0..d {
            idx[i] = ((lex >> (side * (d - 1 - i))) & mask) as u32;
        }
        self.from_relative_index(self.depth, &idx[..d]).code as usize
    }

    /// Absolute cube in the root's (possibly shifted) dyadic grid.
    pub fn to_dyadic(&self, q: GridCube) -> DyadicCube {
        let mut cube = self.root;
        let d = self.dim() as u32;
        for step in 0..q.level {
            let digit = (q.code >> (d * (q.level - 1 - step))) & ((1 << d) - 1);
            cube = cube.child(digit as usize);
        }
        cube
    }

    /// Grid cube corresponding to an absolute cube, if it belongs to the grid.
    pub fn locate(&self, cube: &DyadicCube) -> Result<GridCube> {
        if !cube.same_grid(&self.root) {
            return Err(Error::NotInGrid);
        }
        let rel = cube.level() as i64 - self.root.level() as i64;
        if rel < 0 || rel > self.depth as i64 {
            return Err(Error::NotInGrid);
        }
        let mut code = 0u32;
        let mut q = *cube;
        for step in 0..rel as u32 {
            code |= (q.child_digit() as u32) << (self.bits() * step);
            q = q.parent();
        }
        if q != self.root {
            return Err(Error::NotInGrid);
        }
        Ok(GridCube::new(rel as u32, code))
    }

    /// `sums[j][c]` = sum of `cell_values` over the cells of cube `(j, c)`.
    pub fn level_sums(&self, cell_values: &[f64]) -> Vec<Vec<f64>> {
        debug_assert_eq!(cell_values.len(), self.cell_count());
        let fan = 1usize << self.bits();
        let mut levels = vec![Vec::new(); self.depth as usize + 1];
        levels[self.depth as usize] = cell_values.to_vec();
        for j in (0..self.depth as usize).rev() {
            let below = &levels[j + 1];
            let current = below.chunks_exact(fan).map(|ch| ch.iter().sum()).collect();
            levels[j] = current;
        }
        levels
    }

    /// For each cell of `top`, folds `term(Q)` over the cubes `top ⊇ Q ∋ cell`
    /// from the top down. Output covers the cells of `top` in tree order.
    pub fn fold_subtree(
        &self,
        top: GridCube,
        term: impl Fn(GridCube) -> f64,
        combine: impl Fn(f64, f64) -> f64,
    ) -> Vec<f64> {
        let fan = 1usize << self.bits();
        let mut acc = vec![term(top)];
        let mut lo = top.code;
        for j in top.level + 1..=self.depth {
            lo <<= self.bits();
            let mut next = Vec::with_capacity(acc.len() * fan);
            for (i, &a) in acc.iter().enumerate() {
                for e in 0..fan {
                    let code = lo + (i * fan + e) as u32;
                    next.push(combine(a, term(GridCube::new(j, code))));
                }
            }
            acc = next;
        }
        acc
    }
}
