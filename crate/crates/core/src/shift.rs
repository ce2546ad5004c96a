//! Positive dyadic shifts.
//!
//! `S f = Σ_Q λ_Q ⟨f⟩_Q 1_Q` is evaluated in two passes over the cube tree:
//! bottom-up cube sums give every average, then a top-down pass accumulates
//! `λ_Q ⟨f⟩_Q` along each root-to-cell path. That is `O(#cubes)` instead of
//! the `O(#cells · #cubes)` of the defining sum, which [`reference`] keeps
//! as an oracle.

use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridCube};
use crate::lerner::SparseFamily;
use crate::step::{check_lambda, StepFunction};

/// Anything that maps step functions to step functions on the same grid.
pub trait DyadicOperator {
    fn grid(&self) -> &Grid;
    fn apply(&self, f: &StepFunction) -> Result<StepFunction>;
}

/// Nonnegative coefficients `λ_Q` for every cube of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftCoefficients {
    grid: Grid,
    levels: Vec<Vec<f64>>,
}

impl ShiftCoefficients {
    pub fn zero(grid: Grid) -> Self {
        let levels = (0..=grid.depth()).map(|j| vec![0.0; grid.cubes_at(j)]).collect();
        ShiftCoefficients { grid, levels }
    }

    /// Later entries for the same cube overwrite earlier ones.
    pub fn from_entries(grid: Grid, entries: impl IntoIterator<Item = (GridCube, f64)>) -> Result<Self> {
        let mut c = Self::zero(grid);
        for (q, lambda) in entries {
            c.set(q, lambda)?;
        }
        Ok(c)
    }

    /// `λ_Q = 1_ℒ(Q)`.
    pub fn from_family(family: &SparseFamily) -> Self {
        let mut c = Self::zero(family.grid().clone());
        for q in family.cubes() {
            c.levels[q.level as usize][q.code as usize] = 1.0;
        }
        c
    }

    pub fn set(&mut self, q: GridCube, lambda: f64) -> Result<()> {
        self.grid.check(q)?;
        if !lambda.is_finite() {
            return Err(Error::NonFinite);
        }
        if lambda < 0.0 {
            return Err(Error::NegativeCoefficient);
        }
        self.levels[q.level as usize][q.code as usize] = lambda;
        Ok(())
    }

    pub fn get(&self, q: GridCube) -> f64 {
        self.levels[q.level as usize][q.code as usize]
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `levels[j][c] = λ` of cube `(j, c)`.
    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// Nonzero entries in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (GridCube, f64)> + '_ {
        self.levels.iter().enumerate().flat_map(|(j, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &l)| l != 0.0)
                .map(move |(c, &l)| (GridCube::new(j as u32, c as u32), l))
        })
    }

    pub fn nonzero_count(&self) -> usize {
        self.levels.iter().flatten().filter(|&&l| l != 0.0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.nonzero_count() == 0
    }

    /// `S f`.
    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        self.apply_within(GridCube::ROOT, f)
    }

    /// Subshift `S_Q f = Σ_{Q' ⊆ Q} λ_{Q'} ⟨f⟩_{Q'} 1_{Q'}`.
    pub fn apply_subshift(&self, q: GridCube, f: &StepFunction) -> Result<StepFunction> {
        self.apply_within(q, f)
    }

    fn apply_within(&self, top: GridCube, f: &StepFunction) -> Result<StepFunction> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.grid.check(top)?;
        let sums = self.grid.level_sums(f.values());
        let values = self.top_down(top, |q| {
            let lambda = self.get(q);
            if lambda == 0.0 {
                0.0
            } else {
                lambda * sums[q.level as usize][q.code as usize] / self.grid.cells_per_cube(q.level) as f64
            }
        });
        StepFunction::from_tree(self.grid.clone(), values)
    }

    /// Cellwise `Σ_{Q' ⊆ top, Q' ∋ x} term(Q')`; zero outside `top`.
    fn top_down(&self, top: GridCube, term: impl Fn(GridCube) -> f64) -> Vec<f64> {
        accumulate_down(&self.grid, top, term)
    }
}

impl DyadicOperator for ShiftCoefficients {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        ShiftCoefficients::apply(self, f)
    }
}

/// Cellwise `Σ term(Q)` over cubes `top ⊇ Q ∋ x`; zero outside `top`.
pub(crate) fn accumulate_down(grid: &Grid, top: GridCube, term: impl Fn(GridCube) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; grid.cell_count()];
    out[grid.cell_range(top)].copy_from_slice(&grid.fold_subtree(top, term, |a, b| a + b));
    out
}

/// A sparse family with a complexity: `S_k⁺ f = Σ_{K∈𝒦} 1_K ⟨f⟩_{K^{(k)}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkPlusSpec {
    family: SparseFamily,
    k: u32,
}

impl SkPlusSpec {
    pub fn new(family: SparseFamily, k: u32) -> Result<Self> {
        if let Some(q) = family.cubes().iter().find(|q| q.level < k) {
            return Err(Error::NoAncestor { level: q.level as i32, generations: k });
        }
        Ok(SkPlusSpec { family, k })
    }

    pub fn family(&self) -> &SparseFamily {
        &self.family
    }

    pub fn complexity(&self) -> u32 {
        self.k
    }

    pub fn grid(&self) -> &Grid {
        self.family.grid()
    }

    fn ancestor(&self, q: GridCube) -> GridCube {
        self.grid().ancestor(q, self.k).expect("checked at construction")
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        let grid = self.grid();
        if f.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let sums = grid.level_sums(f.values());
        let mut add = level_buffer(grid);
        for &q in self.family.cubes() {
            let a = self.ancestor(q);
            add[q.level as usize][q.code as usize] +=
                sums[a.level as usize][a.code as usize] / grid.cells_per_cube(a.level) as f64;
        }
        let values = accumulate_down(grid, GridCube::ROOT, |q| add[q.level as usize][q.code as usize]);
        StepFunction::from_tree(grid.clone(), values)
    }

    /// `(S_k⁺)* g = Σ_K 1_{K^{(k)}} |K^{(k)}|^{-1} ∫_K g`.
    pub fn apply_adjoint(&self, g: &StepFunction) -> Result<StepFunction> {
        let grid = self.grid();
        if g.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let sums = grid.level_sums(g.values());
        let mut add = level_buffer(grid);
        for &q in self.family.cubes() {
            let a = self.ancestor(q);
            // ∫_K g / |K^{(k)}| = (cell sum over K) / (cells in K^{(k)}).
            add[a.level as usize][a.code as usize] +=
                sums[q.level as usize][q.code as usize] / grid.cells_per_cube(a.level) as f64;
        }
        let values = accumulate_down(grid, GridCube::ROOT, |q| add[q.level as usize][q.code as usize]);
        StepFunction::from_tree(grid.clone(), values)
    }

    /// The adjoint in exact rational arithmetic for integer cell values.
    pub fn apply_adjoint_exact(&self, g: &[i64]) -> Result<Vec<Ratio<i128>>> {
        let grid = self.grid();
        if g.len() != grid.cell_count() {
            return Err(Error::Length { expected: grid.cell_count(), found: g.len() });
        }
        let mut add: Vec<Vec<Ratio<i128>>> =
            (0..=grid.depth()).map(|j| vec![Ratio::zero(); grid.cubes_at(j)]).collect();
        for &q in self.family.cubes() {
            let a = self.ancestor(q);
            let cell_sum: i128 = g[grid.cell_range(q)].iter().map(|&v| v as i128).sum();
            add[a.level as usize][a.code as usize] +=
                Ratio::new(cell_sum, grid.cells_per_cube(a.level) as i128);
        }
        let mut out = vec![Ratio::zero(); grid.cell_count()];
        for (cell, slot) in out.iter_mut().enumerate() {
            for j in 0..=grid.depth() {
                let q = grid.cube_of_cell(cell, j);
                *slot += add[j as usize][q.code as usize];
            }
        }
        Ok(out)
    }

    /// Borrowing view that applies the adjoint.
    pub fn adjoint(&self) -> Adjoint<'_> {
        Adjoint(self)
    }
}

impl DyadicOperator for SkPlusSpec {
    fn grid(&self) -> &Grid {
        SkPlusSpec::grid(self)
    }

    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        SkPlusSpec::apply(self, f)
    }
}

/// `(S_k⁺)*` as an operator.
#[derive(Clone, Copy, Debug)]
pub struct Adjoint<'a>(pub &'a SkPlusSpec);

impl DyadicOperator for Adjoint<'_> {
    fn grid(&self) -> &Grid {
        self.0.grid()
    }

    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        self.0.apply_adjoint(f)
    }
}

fn level_buffer(grid: &Grid) -> Vec<Vec<f64>> {
    (0..=grid.depth()).map(|j| vec![0.0; grid.cubes_at(j)]).collect()
}

/// `⟨u, v⟩ = ∫ u v`.
pub fn pairing(u: &StepFunction, v: &StepFunction) -> Result<f64> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum::<f64>() * u.grid().cell_measure())
}

/// The weak-type extremal example on `[0,1)` for complexity `k`.
///
/// `ℒ` is the set of intervals `L` with `L^{(k)} = [0,1)`, `L_{(j)}` is the
/// leftmost descendant of `L` that is `j` generations down, the family is
/// `𝒦 = {L_{(j)} : L ∈ ℒ, 0 ≤ j ≤ k}` and `f = 2^k Σ_L 1_{L_{(k)}}`. Then
/// `‖f‖₁ = 1` and `(S_k⁺)* f ≡ k + 1`.
pub fn extremal_family(k: u32, depth: u32) -> Result<(SkPlusSpec, StepFunction)> {
    let (spec, ints) = extremal_family_exact(k, depth)?;
    let f = StepFunction::from_tree(spec.grid().clone(), ints.iter().map(|&v| v as f64).collect())?;
    Ok((spec, f))
}

/// [`extremal_family`] with the integer cell values of `f`.
pub fn extremal_family_exact(k: u32, depth: u32) -> Result<(SkPlusSpec, Vec<i64>)> {
    if depth < 2 * k {
        return Err(Error::Parameter("extremal family needs depth >= 2k"));
    }
    if k > 30 {
        return Err(Error::TooLarge("extremal family supports k <= 30"));
    }
    let grid = Grid::unit(1, depth)?;
    let mut cubes = Vec::new();
    for l in 0..1u32 << k {
        for j in 0..=k {
            cubes.push(GridCube::new(k + j, l << j));
        }
    }
    let mut values = vec![0i64; grid.cell_count()];
    for l in 0..1u32 << k {
        let bottom = GridCube::new(2 * k, l << k);
        values[grid.cell_range(bottom)].iter_mut().for_each(|v| *v = 1i64 << k);
    }
    let family = SparseFamily::nested(grid, cubes)?;
    Ok((SkPlusSpec::new(family, k)?, values))
}

/// `‖T f‖_{L^{1,∞}} / ‖f‖_{L¹}`.
pub fn weak11_ratio(op: &impl DyadicOperator, f: &StepFunction) -> Result<f64> {
    let norm = f.l1_norm();
    if norm == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(op.apply(f)?.weak_l1_norm() / norm)
}

/// `(ω_λ((S_k⁺)* g; L), (1 + k) ⟨g⟩_L)`.
pub fn oscillation_of_adjoint(
    spec: &SkPlusSpec,
    g: &StepFunction,
    l: GridCube,
    lambda: f64,
) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    let out = spec.apply_adjoint(g)?;
    Ok((out.oscillation(l, lambda)?, (1 + spec.complexity()) as f64 * g.average(l)?))
}

/// Direct evaluation of the defining sums, quadratic in the grid size.
pub mod reference {
    use super::*;

    /// `S f` by looping over every cell and every nonzero coefficient.
    pub fn apply_shift_naive(c: &ShiftCoefficients, f: &StepFunction) -> Vec<f64> {
        let grid = c.grid();
        let entries: Vec<(GridCube, f64, f64)> = c
            .entries()
            .map(|(q, l)| {
                let vals = &f.values()[grid.cell_range(q)];
                (q, l, vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        (0..grid.cell_count())
            .map(|cell| {
                let x = grid.cell(cell);
                entries
                    .iter()
                    .filter(|(q, _, _)| grid.is_ancestor_or_self(*q, x))
                    .map(|(_, l, avg)| l * avg)
                    .sum()
            })
            .collect()
    }

    /// `S_k⁺ f` by the same double loop.
    pub fn apply_skplus_naive(spec: &SkPlusSpec, f: &StepFunction) -> Vec<f64> {
        let grid = spec.grid();
        (0..grid.cell_count())
            .map(|cell| {
                let x = grid.cell(cell);
                spec.family()
                    .cubes()
                    .iter()
                    .filter(|q| grid.is_ancestor_or_self(**q, x))
                    .map(|q| {
                        let a = grid.ancestor(*q, spec.complexity()).unwrap();
                        let vals = &f.values()[grid.cell_range(a)];
                        vals.iter().sum::<f64>() / vals.len() as f64
                    })
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::reference::*;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= rel * scale)
    }

    fn random_coeffs(rng: &mut ChaCha8Rng, grid: &Grid) -> ShiftCoefficients {
        crate::random::coefficients(rng, grid, 0.3, 2.0)
    }

    #[test]
    fn single_average() {
        let g = Grid::unit(1, 3).unwrap();
        let c = ShiftCoefficients::from_entries(g.clone(), [(GridCube::ROOT, 1.0)]).unwrap();
        let one = StepFunction::constant(g.clone(), 1.0).unwrap();
        assert!(c.apply(&one).unwrap().values().iter().all(|&v| v == 1.0));
        let zero = ShiftCoefficients::zero(g);
        assert!(zero.apply(&one).unwrap().is_zero());
    }

    #[test]
    fn negative_coefficients_rejected() {
        let g = Grid::unit(1, 2).unwrap();
        assert_eq!(
            ShiftCoefficients::from_entries(g, [(GridCube::ROOT, -1.0)]),
            Err(Error::NegativeCoefficient)
        );
    }

    #[test]
    fn tree_pass_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let d = rng.gen_range(1..=2);
            let g = Grid::unit(d, rng.gen_range(0..=8 / d as u32)).unwrap();
            let c = random_coeffs(&mut rng, &g);
            let f = StepFunction::from_tree(g.clone(), (0..g.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            assert!(close(c.apply(&f).unwrap().values(), &apply_shift_naive(&c, &f), 1e-12));
        }
    }

    #[test]
    fn subshift_restricts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Grid::unit(1, 6).unwrap();
        let c = random_coeffs(&mut rng, &g);
        let f = StepFunction::from_tree(g.clone(), (0..g.cell_count()).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        assert_eq!(c.apply_subshift(GridCube::ROOT, &f).unwrap(), c.apply(&f).unwrap());
        let cell = g.cell(17);
        let out = c.apply_subshift(cell, &f).unwrap();
        for (i, v) in out.values().iter().enumerate() {
            let want = if i == 17 { c.get(cell) * f.values()[17] } else { 0.0 };
            assert_eq!(*v, want);
        }
        for _ in 0..20 {
            let q = g.cube_of_cell(rng.gen_range(0..64), rng.gen_range(0..=6));
            let restricted = ShiftCoefficients::from_entries(
                g.clone(),
                c.entries().filter(|(p, _)| g.is_ancestor_or_self(q, *p)),
            )
            .unwrap();
            assert!(close(c.apply_subshift(q, &f).unwrap().values(), &apply_shift_naive(&restricted, &f), 1e-12));
        }
    }

    #[test]
    fn positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::unit(2, 3).unwrap();
        let c = random_coeffs(&mut rng, &g);
        let f = StepFunction::from_tree(g.clone(), (0..g.cell_count()).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        assert!(c.apply(&f).unwrap().values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn complexity_zero_is_self_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Grid::unit(1, 5).unwrap();
        let fam = SparseFamily::nested(g.clone(), g.cubes().filter(|_| rng.gen_bool(0.2))).unwrap();
        let s = SkPlusSpec::new(fam, 0).unwrap();
        let f = StepFunction::from_tree(g.clone(), (0..32).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        assert!(close(s.apply(&f).unwrap().values(), s.apply_adjoint(&f).unwrap().values(), 1e-14));
    }

    #[test]
    fn skplus_matches_naive_and_adjoint_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let g = Grid::unit(rng.gen_range(1..=2), 4).unwrap();
            let k = rng.gen_range(0..=3);
            let fam = SparseFamily::nested(g.clone(), g.cubes().filter(|q| q.level >= k && rng.gen_bool(0.2))).unwrap();
            let s = SkPlusSpec::new(fam, k).unwrap();
            let n = g.cell_count();
            let f = StepFunction::from_tree(g.clone(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let h = StepFunction::from_tree(g.clone(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            assert!(close(s.apply(&f).unwrap().values(), &apply_skplus_naive(&s, &f), 1e-12));
            let lhs = pairing(&s.apply(&f).unwrap(), &h).unwrap();
            let rhs = pairing(&f, &s.apply_adjoint(&h).unwrap()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn missing_ancestor_rejected() {
        let g = Grid::unit(1, 3).unwrap();
        let fam = SparseFamily::nested(g, [GridCube::new(1, 0)]).unwrap();
        assert!(SkPlusSpec::new(fam, 2).is_err());
    }

    #[test]
    fn extremal_identity() {
        for k in 0..=6 {
            let (spec, f) = extremal_family(k, 2 * k).unwrap();
            assert_eq!(f.l1_norm(), 1.0);
            assert!(spec.family().is_sparse(0.5));
            let out = spec.apply_adjoint(&f).unwrap();
            assert!(out.values().iter().all(|&v| v == (k + 1) as f64));
            assert_eq!(out.weak_l1_norm(), (k + 1) as f64);
            assert_eq!(weak11_ratio(&spec.adjoint(), &f).unwrap(), (k + 1) as f64);
            let (_, ints) = extremal_family_exact(k, 2 * k).unwrap();
            let exact = spec.apply_adjoint_exact(&ints).unwrap();
            assert!(exact.iter().all(|r| *r == Ratio::from_integer((k + 1) as i128)));
        }
        let (spec, _) = extremal_family(5, 10).unwrap();
        let (_, ints) = extremal_family_exact(5, 10).unwrap();
        assert!(spec.apply_adjoint_exact(&ints).unwrap().iter().all(|r| *r == Ratio::from_integer(6)));
        assert!(extremal_family(3, 5).is_err());
    }

    #[test]
    fn extremal_family_is_k0_trivial() {
        let (spec, f) = extremal_family(0, 0).unwrap();
        assert_eq!(spec.family().cubes(), &[GridCube::ROOT]);
        assert_eq!(f.values(), &[1.0]);
    }

    #[test]
    fn oscillation_of_adjoint_trivial_cases() {
        let g = Grid::unit(1, 3).unwrap();
        let s = SkPlusSpec::new(SparseFamily::nested(g.clone(), [GridCube::ROOT]).unwrap(), 0).unwrap();
        let zero = StepFunction::constant(g.clone(), 0.0).unwrap();
        assert_eq!(oscillation_of_adjoint(&s, &zero, GridCube::ROOT, 0.125).unwrap(), (0.0, 0.0));
        let one = StepFunction::constant(g, 1.0).unwrap();
        assert_eq!(oscillation_of_adjoint(&s, &one, GridCube::ROOT, 0.125).unwrap(), (0.0, 1.0));
        assert_eq!(weak11_ratio(&s, &one).unwrap(), 1.0);
        assert_eq!(weak11_ratio(&s, &zero), Err(Error::ZeroFunction));
    }
}
