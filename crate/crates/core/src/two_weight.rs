//! Principal cubes, corona projections and two-weight norm bounds for
//! `T(·σ)` with `T = S` a positive dyadic shift.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridCube};
use crate::linalg::{spectral_norm, SquareMatrix};
use crate::math::{conjugate, pow_nonneg, powf, sqrt};
use crate::shift::ShiftCoefficients;
use crate::step::StepFunction;
use crate::weights::{check_exponent, maximal_weighted, testing_constants, weighted_norm, Weight};

/// Largest cell count accepted by the dense `L²` norm.
pub const MAX_DENSE_CELLS: usize = 4096;

/// Principal cubes of `(f, σ)` over the grid root.
#[derive(Clone, Debug, PartialEq)]
pub struct CoronaForest {
    grid: Grid,
    members: Vec<GridCube>,
    index: BTreeMap<GridCube, usize>,
    children: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    generation: Vec<u32>,
    cell_owner: Vec<usize>,
    averages: Vec<f64>,
}

/// `⟨f⟩^σ_Q = ∫_Q f σ / σ(Q)` for every cube, indexed `[level][code]`.
fn weighted_averages(f: &StepFunction, sigma: &Weight) -> Vec<Vec<f64>> {
    let grid = f.grid();
    let prod: Vec<f64> = f.values().iter().zip(sigma.values()).map(|(a, b)| a * b).collect();
    let mut num = grid.level_sums(&prod);
    let den = grid.level_sums(sigma.values());
    for (nr, dr) in num.iter_mut().zip(&den) {
        for (n, d) in nr.iter_mut().zip(dr) {
            *n /= d;
        }
    }
    num
}

impl CoronaForest {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Principal cubes in canonical order; the root comes first.
    pub fn members(&self) -> &[GridCube] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, q: GridCube) -> bool {
        self.index.contains_key(&q)
    }

    /// Position of `q` in [`members`](Self::members).
    pub fn position(&self, q: GridCube) -> Option<usize> {
        self.index.get(&q).copied()
    }

    /// `ch_ℱ(F)`.
    pub fn children(&self, f: GridCube) -> Result<Vec<GridCube>> {
        let i = self.position(f).ok_or(Error::NotInGrid)?;
        Ok(self.children[i].iter().map(|&c| self.members[c]).collect())
    }

    /// Parent in the forest; `None` for the root.
    pub fn parent(&self, f: GridCube) -> Option<GridCube> {
        self.position(f).and_then(|i| self.parent[i]).map(|p| self.members[p])
    }

    /// Generation `k` with `F ∈ ℱ_k`.
    pub fn generation(&self, f: GridCube) -> Option<u32> {
        self.position(f).map(|i| self.generation[i])
    }

    /// `⟨f⟩^σ_F` of a member.
    pub fn average(&self, f: GridCube) -> Option<f64> {
        self.position(f).map(|i| self.averages[i])
    }

    /// `π_ℱ(Q)`: the smallest principal cube containing `Q`.
    pub fn stopping_parent(&self, q: GridCube) -> Result<GridCube> {
        self.grid.check(q)?;
        let mut c = q;
        loop {
            if self.index.contains_key(&c) {
                return Ok(c);
            }
            c = self.grid.parent(c).expect("root is a member");
        }
    }

    /// Cells of `E_ℱ(F) = F ∖ ⋃ ch_ℱ(F)`, in tree order.
    pub fn carleson_set(&self, f: GridCube) -> Result<Vec<usize>> {
        let i = self.position(f).ok_or(Error::NotInGrid)?;
        Ok(self.grid.cell_range(f).filter(|&c| self.cell_owner[c] == i).collect())
    }

    /// Member index owning each cell, i.e. `π_ℱ` of the cell.
    pub fn cell_owner(&self) -> &[usize] {
        &self.cell_owner
    }

    /// Smallest ratio `σ(E_ℱ(F)) / σ(F)` over the members.
    pub fn min_packing_ratio(&self, sigma: &Weight) -> Result<f64> {
        if sigma.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut e = vec![0.0; self.members.len()];
        for (cell, &owner) in self.cell_owner.iter().enumerate() {
            e[owner] += sigma.values()[cell];
        }
        let m = self.grid.cell_measure();
        Ok(self
            .members
            .iter()
            .zip(&e)
            .map(|(&f, &ef)| ef * m / sigma.measure(f))
            .fold(f64::INFINITY, f64::min))
    }
}

/// Stopping family where the `σ`-average of `f` more than doubles.
pub fn principal_cubes(f: &StepFunction, sigma: &Weight) -> Result<CoronaForest> {
    let grid = f.grid().clone();
    if sigma.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Parameter("principal cubes need f >= 0"));
    }
    let avg = weighted_averages(f, sigma);
    let at = |q: GridCube| avg[q.level as usize][q.code as usize];
    let mut members = vec![GridCube::ROOT];
    let mut parent = vec![None];
    let mut generation = vec![0];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for fi in frontier {
            let top = members[fi];
            let threshold = 2.0 * at(top);
            let mut stack: Vec<GridCube> = grid.children(top).collect();
            let mut found = Vec::new();
            while let Some(q) = stack.pop() {
                if at(q) > threshold {
                    found.push(q);
                } else {
                    stack.extend(grid.children(q));
                }
            }
            found.sort();
            for q in found {
                let i = members.len();
                members.push(q);
                parent.push(Some(fi));
                generation.push(generation[fi] + 1);
                children.push(Vec::new());
                children[fi].push(i);
                next.push(i);
            }
        }
        frontier = next;
    }

    // Canonical order with the index permutation applied to every link.
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by_key(|&i| members[i]);
    let mut rank = vec![0; members.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let sorted_members: Vec<GridCube> = order.iter().map(|&i| members[i]).collect();
    let sorted_children = order
        .iter()
        .map(|&i| {
            let mut c: Vec<usize> = children[i].iter().map(|&j| rank[j]).collect();
            c.sort_unstable();
            c
        })
        .collect();
    let sorted_parent = order.iter().map(|&i| parent[i].map(|p| rank[p])).collect();
    let sorted_generation = order.iter().map(|&i| generation[i]).collect();
    let index: BTreeMap<GridCube, usize> = sorted_members.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let averages = sorted_members.iter().map(|&q| at(q)).collect();

    // Innermost member over each cell, scanning members from coarse to fine.
    let mut cell_owner = vec![0usize; grid.cell_count()];
    for (i, &q) in sorted_members.iter().enumerate() {
        cell_owner[grid.cell_range(q)].iter_mut().for_each(|o| *o = i);
    }

    Ok(CoronaForest {
        grid,
        members: sorted_members,
        index,
        children: sorted_children,
        parent: sorted_parent,
        generation: sorted_generation,
        cell_owner,
        averages,
    })
}

/// `ch*_ℱ(F) = {F' ∈ ch_ℱ(F) : π_ℱ π_𝒢(F') = F}`.
pub fn restricted_children(f: GridCube, forest_f: &CoronaForest, forest_g: &CoronaForest) -> Result<Vec<GridCube>> {
    if forest_f.grid() != forest_g.grid() {
        return Err(Error::GridMismatch);
    }
    let mut out = Vec::new();
    for c in forest_f.children(f)? {
        let g = forest_g.stopping_parent(c)?;
        if forest_f.stopping_parent(g)? == f {
            out.push(c);
        }
    }
    Ok(out)
}

/// `g_F = g 1_{E_ℱ(F)} + Σ_{F' ∈ ch*_ℱ(F)} ⟨g⟩^ω_{F'} 1_{F'}`.
pub fn corona_projection(
    g: &StepFunction,
    omega: &Weight,
    f: GridCube,
    forest_f: &CoronaForest,
    forest_g: &CoronaForest,
) -> Result<StepFunction> {
    let grid = forest_f.grid();
    if g.grid() != grid || omega.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let fi = forest_f.position(f).ok_or(Error::NotInGrid)?;
    let mut values = vec![0.0; grid.cell_count()];
    for cell in grid.cell_range(f) {
        if forest_f.cell_owner[cell] == fi {
            values[cell] = g.values()[cell];
        }
    }
    for c in restricted_children(f, forest_f, forest_g)? {
        let r = grid.cell_range(c);
        let num: f64 = g.values()[r.clone()].iter().zip(&omega.values()[r.clone()]).map(|(a, b)| a * b).sum();
        let den: f64 = omega.values()[r.clone()].iter().sum();
        values[r].iter_mut().for_each(|v| *v = num / den);
    }
    StepFunction::from_tree(grid.clone(), values)
}

fn check_pairing_inputs(c: &ShiftCoefficients, f: &StepFunction, sigma: &Weight, g: &StepFunction, omega: &Weight) -> Result<()> {
    let grid = c.grid();
    for other in [f.grid(), sigma.grid(), g.grid(), omega.grid()] {
        if other != grid {
            return Err(Error::GridMismatch);
        }
    }
    if f.values().iter().chain(g.values()).any(|&v| v < 0.0) {
        return Err(Error::Parameter("pairing needs f, g >= 0"));
    }
    Ok(())
}

/// Terms `λ_Q ⟨fσ⟩_Q ⟨gω⟩_Q |Q|` of every nonzero coefficient.
fn pairing_terms(c: &ShiftCoefficients, f: &StepFunction, sigma: &Weight, g: &StepFunction, omega: &Weight) -> Vec<(GridCube, f64)> {
    let grid = c.grid();
    let fs: Vec<f64> = f.values().iter().zip(sigma.values()).map(|(a, b)| a * b).collect();
    let go: Vec<f64> = g.values().iter().zip(omega.values()).map(|(a, b)| a * b).collect();
    let sf = grid.level_sums(&fs);
    let sg = grid.level_sums(&go);
    let m = grid.cell_measure();
    c.entries()
        .map(|(q, lambda)| {
            let (j, k) = (q.level as usize, q.code as usize);
            // ⟨u⟩_Q ⟨v⟩_Q |Q| = (Σu m)(Σv m) / |Q|.
            (q, lambda * sf[j][k] * sg[j][k] * m * m / grid.volume(q))
        })
        .collect()
}

/// `⟨T(fσ), gω⟩ = Σ_Q λ_Q ⟨fσ⟩_Q ⟨gω⟩_Q |Q|`.
pub fn pairing(c: &ShiftCoefficients, f: &StepFunction, sigma: &Weight, g: &StepFunction, omega: &Weight) -> Result<f64> {
    check_pairing_inputs(c, f, sigma, g, omega)?;
    Ok(pairing_terms(c, f, sigma, g, omega).iter().map(|t| t.1).sum())
}

/// The pairing split by `π(Q) = (F, G)` into the parts with `G ⊆ F` and
/// with `F ⊊ G`. Zero terms go to the first part.
pub fn pairing_split(c: &ShiftCoefficients, f: &StepFunction, sigma: &Weight, g: &StepFunction, omega: &Weight) -> Result<(f64, f64)> {
    check_pairing_inputs(c, f, sigma, g, omega)?;
    let forest_f = principal_cubes(f, sigma)?;
    let forest_g = principal_cubes(g, omega)?;
    let (mut first, mut second) = (0.0, 0.0);
    for (q, term) in pairing_terms(c, f, sigma, g, omega) {
        if term == 0.0 {
            continue;
        }
        let pf = forest_f.stopping_parent(q)?;
        let pg = forest_g.stopping_parent(q)?;
        // Both contain Q, so they are nested and the finer one is inside.
        if pg.level >= pf.level {
            first += term;
        } else {
            second += term;
        }
    }
    Ok((first, second))
}

/// Both sides of `(Σ_F (⟨f⟩^σ_F)^p σ(F))^{1/p} ≤ 2p' ‖f‖_{L^p(σ)}`.
pub fn f_estimate_sides(forest: &CoronaForest, f: &StepFunction, sigma: &Weight, p: f64) -> Result<(f64, f64)> {
    check_exponent(p)?;
    if f.grid() != forest.grid() || sigma.grid() != forest.grid() {
        return Err(Error::GridMismatch);
    }
    let avg = weighted_averages(f, sigma);
    let s: f64 = forest
        .members()
        .iter()
        .map(|&q| pow_nonneg(avg[q.level as usize][q.code as usize], p) * sigma.measure(q))
        .sum();
    Ok((powf(s, 1.0 / p), 2.0 * conjugate(p) * weighted_norm(f, sigma, p)?))
}

/// The middle term `(∫ (M_σ f)^p σ)^{1/p}` of the same chain.
pub fn f_estimate_maximal(f: &StepFunction, sigma: &Weight, p: f64) -> Result<f64> {
    weighted_norm(&maximal_weighted(f, sigma)?, sigma, p)
}

/// Both sides of `(Σ_F ‖g_F‖^{q'}_{L^{q'}(ω)})^{1/q'} ≤ 5q ‖g‖_{L^{q'}(ω)}`.
pub fn g_estimate_sides(
    g: &StepFunction,
    omega: &Weight,
    forest_f: &CoronaForest,
    forest_g: &CoronaForest,
    q: f64,
) -> Result<(f64, f64)> {
    check_exponent(q)?;
    let qc = conjugate(q);
    let mut s = 0.0;
    for &f in forest_f.members() {
        let gf = corona_projection(g, omega, f, forest_f, forest_g)?;
        s += powf(weighted_norm(&gf, omega, qc)?, qc);
    }
    Ok((powf(s, 1.0 / qc), 5.0 * q * weighted_norm(g, omega, qc)?))
}

/// `A_ij = Σ_{Q ∋ i, j} λ_Q m / |Q|`, so that `T(fσ)_i = Σ_j A_ij σ_j f_j`.
fn kernel_matrix(c: &ShiftCoefficients) -> SquareMatrix {
    let grid = c.grid();
    let n = grid.cell_count();
    let depth = grid.depth();
    let bits = grid.dim() as u32;
    let m = grid.cell_measure();
    let levels = c.levels();
    let prefix: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            (0..=depth)
                .map(|j| {
                    let q = grid.cube_of_cell(i, j);
                    acc += levels[j as usize][q.code as usize] * m / grid.volume(q);
                    acc
                })
                .collect()
        })
        .collect();
    let mut a = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let diff = (i ^ j) as u32;
            let shared = if diff == 0 { depth } else { depth - (32 - diff.leading_zeros()).div_ceil(bits) };
            a.set(i, j, prefix[i][shared as usize]);
        }
    }
    a
}

/// `B = D_{(ω m)^{1/2}} A D_{(σ/m)^{1/2}}`, an isometric copy of `f ↦ T(fσ)`
/// from `L²(σ)` to `L²(ω)`.
pub fn similarity_matrix(c: &ShiftCoefficients, sigma: &Weight, omega: &Weight) -> Result<SquareMatrix> {
    let grid = c.grid();
    if sigma.grid() != grid || omega.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if grid.cell_count() > MAX_DENSE_CELLS {
        return Err(Error::TooLarge("dense L2 norm supports at most 4096 cells"));
    }
    let m = grid.cell_measure();
    let mut b = kernel_matrix(c);
    let n = grid.cell_count();
    let left: Vec<f64> = omega.values().iter().map(|&w| sqrt(w * m)).collect();
    let right: Vec<f64> = sigma.values().iter().map(|&s| sqrt(s / m)).collect();
    for i in 0..n {
        for j in 0..n {
            b.set(i, j, left[i] * b.get(i, j) * right[j]);
        }
    }
    Ok(b)
}

/// `‖T(·σ)‖_{L²(σ) → L²(ω)}`.
pub fn operator_norm_l2(c: &ShiftCoefficients, sigma: &Weight, omega: &Weight) -> Result<f64> {
    spectral_norm(&similarity_matrix(c, sigma, omega)?)
}

/// `‖T(fσ)‖_{L^q(ω)} / ‖f‖_{L^p(σ)}`; zero for `f = 0`.
pub fn norm_ratio(c: &ShiftCoefficients, sigma: &Weight, omega: &Weight, f: &StepFunction, p: f64, q: f64) -> Result<f64> {
    let den = weighted_norm(f, sigma, p)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    let tf = c.apply(&f.mul(sigma.function())?)?;
    Ok(weighted_norm(&tf, omega, q)? / den)
}

/// Refinement steps applied to each seed of the local ascent.
const ASCENT_STEPS: usize = 20;

/// Lower bound for `‖T(·σ)‖_{L^p(σ) → L^q(ω)}` from explicit test functions.
///
/// Every run evaluates the indicator `1_Q` and the dual profile
/// `T(1_Q ω)^{p'-1}` of every grid cube, which already dominate both testing
/// constants. `budget` further candidates follow: random positive functions
/// refined by the nonlinear power step `f ← T(ω T(fσ)^{q-1})^{p'-1}`.
pub fn norm_lower_bound_search<R: Rng + ?Sized>(
    c: &ShiftCoefficients,
    sigma: &Weight,
    omega: &Weight,
    p: f64,
    q: f64,
    budget: usize,
    rng: &mut R,
) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    if p > q {
        return Err(Error::Parameter("norm search needs p <= q"));
    }
    let grid = c.grid();
    if sigma.grid() != grid || omega.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let pc = conjugate(p);
    let mut best = 0.0f64;
    for cube in grid.cubes() {
        let ind = StepFunction::indicator(grid.clone(), cube, 1.0)?;
        best = best.max(norm_ratio(c, sigma, omega, &ind, p, q)?);
        let dual = c.apply(&ind.mul(omega.function())?)?.map(|v| pow_nonneg(v, pc - 1.0))?;
        best = best.max(norm_ratio(c, sigma, omega, &dual, p, q)?);
    }
    let step = |f: &StepFunction| -> Result<StepFunction> {
        let tf = c.apply(&f.mul(sigma.function())?)?;
        let inner = tf.map(|v| pow_nonneg(v, q - 1.0))?.mul(omega.function())?;
        let next = c.apply(&inner)?.map(|v| pow_nonneg(v, pc - 1.0))?;
        let scale = next.max_abs();
        if scale > 0.0 {
            next.map(|v| v / scale)
        } else {
            Ok(next)
        }
    };
    let mut used = 0;
    while used < budget {
        let mut f = StepFunction::from_tree(grid.clone(), (0..grid.cell_count()).map(|_| rng.gen::<f64>()).collect())?;
        best = best.max(norm_ratio(c, sigma, omega, &f, p, q)?);
        used += 1;
        for _ in 0..ASCENT_STEPS {
            if used >= budget {
                break;
            }
            f = step(&f)?;
            if f.is_zero() {
                break;
            }
            best = best.max(norm_ratio(c, sigma, omega, &f, p, q)?);
            used += 1;
        }
    }
    Ok(best)
}

/// Outcome of checking `max(𝔗, 𝔗*) ≤ ‖T(·σ)‖ ≤ 20(p'q𝔗 + pq'𝔗*)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsuReport {
    pub p: f64,
    pub q: f64,
    /// Exact for `p = q = 2`, otherwise a lower bound.
    pub norm: f64,
    pub norm_is_exact: bool,
    pub testing: f64,
    pub testing_dual: f64,
    pub upper_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `norm - max(𝔗, 𝔗*)`.
    pub lower_margin: f64,
    /// `upper_bound - norm`.
    pub upper_margin: f64,
}

/// Relative slack granted to floating-point comparisons of equal quantities.
pub const LSU_TOLERANCE: f64 = 1e-10;

/// Computes the norm (exactly when `p = q = 2`) and both testing constants.
pub fn verify_lsu<R: Rng + ?Sized>(
    c: &ShiftCoefficients,
    sigma: &Weight,
    omega: &Weight,
    p: f64,
    q: f64,
    budget: usize,
    rng: &mut R,
) -> Result<LsuReport> {
    let (t, ts) = testing_constants(c, sigma, omega, p, q)?;
    let exact = p == 2.0 && q == 2.0;
    let norm = if exact {
        operator_norm_l2(c, sigma, omega)?
    } else {
        norm_lower_bound_search(c, sigma, omega, p, q, budget, rng)?
    };
    let upper = 20.0 * (conjugate(p) * q * t + p * conjugate(q) * ts);
    let tmax = t.max(ts);
    Ok(LsuReport {
        p,
        q,
        norm,
        norm_is_exact: exact,
        testing: t,
        testing_dual: ts,
        upper_bound: upper,
        lower_ok: tmax <= norm * (1.0 + LSU_TOLERANCE),
        upper_ok: norm <= upper,
        lower_margin: norm - tmax,
        upper_margin: upper - norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::reference::apply_shift_naive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn weight(rng: &mut ChaCha8Rng, g: &Grid, l: f64) -> Weight {
        Weight::from_tree(g.clone(), (0..g.cell_count()).map(|_| crate::math::exp(rng.gen_range(-l..l))).collect()).unwrap()
    }

    fn nonneg(rng: &mut ChaCha8Rng, g: &Grid) -> StepFunction {
        StepFunction::from_tree(
            g.clone(),
            (0..g.cell_count()).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..4.0) }).collect(),
        )
        .unwrap()
    }

    fn coeffs(rng: &mut ChaCha8Rng, g: &Grid) -> ShiftCoefficients {
        crate::random::coefficients(rng, g, 0.3, 2.0)
    }

    /// Maximal strict subcubes with average above the threshold, by full scan.
    fn scan_children(g: &Grid, avg: &dyn Fn(GridCube) -> f64, f: GridCube) -> Vec<GridCube> {
        let t = 2.0 * avg(f);
        let hits: Vec<GridCube> = g.subcubes(f).filter(|&q| q != f && avg(q) > t).collect();
        let mut out: Vec<GridCube> = hits
            .iter()
            .copied()
            .filter(|&q| !hits.iter().any(|&r| r != q && g.is_ancestor_or_self(r, q)))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn constant_function_has_trivial_forest() {
        let g = Grid::unit(1, 4).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let forest = principal_cubes(&StepFunction::constant(g.clone(), 1.0).unwrap(), &one).unwrap();
        assert_eq!(forest.members(), &[GridCube::ROOT]);
        let zero = principal_cubes(&StepFunction::constant(g, 0.0).unwrap(), &one).unwrap();
        assert_eq!(zero.members(), &[GridCube::ROOT]);
    }

    #[test]
    fn quarter_indicator() {
        let g = Grid::unit(1, 4).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let f = StepFunction::indicator(g.clone(), GridCube::new(2, 0), 1.0).unwrap();
        let forest = principal_cubes(&f, &one).unwrap();
        assert_eq!(forest.children(GridCube::ROOT).unwrap(), vec![GridCube::new(2, 0)]);
        assert_eq!(forest.stopping_parent(GridCube::new(1, 0)).unwrap(), GridCube::ROOT);
        assert_eq!(forest.stopping_parent(GridCube::new(4, 1)).unwrap(), GridCube::new(2, 0));
        assert_eq!(forest.carleson_set(GridCube::ROOT).unwrap(), (4..16).collect::<Vec<_>>());
        assert_eq!(forest.min_packing_ratio(&one).unwrap(), 0.75);
    }

    #[test]
    fn forest_matches_scan_and_packs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let d = rng.gen_range(1..=2);
            let g = Grid::unit(d, 6 / d as u32).unwrap();
            let s = weight(&mut rng, &g, 2.0);
            let f = nonneg(&mut rng, &g);
            let forest = principal_cubes(&f, &s).unwrap();
            let avg = weighted_averages(&f, &s);
            let at = |q: GridCube| avg[q.level as usize][q.code as usize];
            for &m in forest.members() {
                assert_eq!(forest.children(m).unwrap(), scan_children(&g, &at, m));
            }
            assert!(forest.min_packing_ratio(&s).unwrap() >= 0.5);
            for q in g.cubes() {
                let scan = forest
                    .members()
                    .iter()
                    .copied()
                    .filter(|&m| g.is_ancestor_or_self(m, q))
                    .max_by_key(|m| m.level)
                    .unwrap();
                assert_eq!(forest.stopping_parent(q).unwrap(), scan);
            }
            let (lhs, rhs) = f_estimate_sides(&forest, &f, &s, 2.0).unwrap();
            let mid = f_estimate_maximal(&f, &s, 2.0).unwrap();
            assert!(lhs <= 2.0 * mid * (1.0 + 1e-12) && 2.0 * mid <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn projection_with_trivial_forest_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let g = Grid::unit(1, 5).unwrap();
        let w = weight(&mut rng, &g, 1.0);
        let gf = nonneg(&mut rng, &g);
        let trivial = principal_cubes(&StepFunction::constant(g.clone(), 1.0).unwrap(), &w).unwrap();
        let forest_g = principal_cubes(&gf, &w).unwrap();
        assert_eq!(corona_projection(&gf, &w, GridCube::ROOT, &trivial, &forest_g).unwrap(), gf);
        assert!(corona_projection(&gf, &w, GridCube::new(1, 0), &trivial, &forest_g).is_err());
    }

    #[test]
    fn projection_of_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = Grid::unit(1, 5).unwrap();
        let s = weight(&mut rng, &g, 2.0);
        let w = weight(&mut rng, &g, 2.0);
        let one = StepFunction::constant(g.clone(), 1.0).unwrap();
        let ff = principal_cubes(&nonneg(&mut rng, &g), &s).unwrap();
        let fg = principal_cubes(&one, &w).unwrap();
        for &f in ff.members() {
            let gf = corona_projection(&one, &w, f, &ff, &fg).unwrap();
            let starred = restricted_children(f, &ff, &fg).unwrap();
            let e = ff.carleson_set(f).unwrap();
            for (cell, &v) in gf.values().iter().enumerate() {
                let inside = e.contains(&cell) || starred.iter().any(|&c| g.cell_range(c).contains(&cell));
                assert!((v - if inside { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    /// `∫_Q g_F ω = ∫_Q g ω` whenever `π(Q) = (F, G)`, `G ⊆ F`, and no
    /// `F' ∈ ch_ℱ(F) ∩ 𝒢` lies strictly inside `Q`.
    #[test]
    fn projection_preserves_integrals() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let mut checked = 0;
        for _ in 0..60 {
            let g = Grid::unit(1, 6).unwrap();
            let s = weight(&mut rng, &g, 2.0);
            let w = weight(&mut rng, &g, 2.0);
            let f = nonneg(&mut rng, &g);
            let gg = nonneg(&mut rng, &g);
            let ff = principal_cubes(&f, &s).unwrap();
            let fg = principal_cubes(&gg, &w).unwrap();
            for q in g.cubes() {
                let pf = ff.stopping_parent(q).unwrap();
                let pg = fg.stopping_parent(q).unwrap();
                if pg.level < pf.level {
                    continue;
                }
                let blocked = ff
                    .children(pf)
                    .unwrap()
                    .iter()
                    .any(|&c| c != q && g.is_ancestor_or_self(q, c) && fg.contains(c));
                if blocked {
                    continue;
                }
                let gf = corona_projection(&gg, &w, pf, &ff, &fg).unwrap();
                let a = gf.mul(w.function()).unwrap().integral_over(q).unwrap();
                let b = gg.mul(w.function()).unwrap().integral_over(q).unwrap();
                assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
                checked += 1;
            }
        }
        assert!(checked > 1000);
    }

    /// A child of `F` that is also a principal cube for `g` is dropped from
    /// `ch*_ℱ(F)`, so `g_F` loses its mass inside a cube with `π(Q) = (F, F)`.
    #[test]
    fn projection_can_lose_mass_of_shared_children() {
        let g = Grid::unit(1, 3).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let quarter = StepFunction::indicator(g.clone(), GridCube::new(2, 0), 1.0).unwrap();
        let ff = principal_cubes(&quarter, &one).unwrap();
        let fg = principal_cubes(&quarter, &one).unwrap();
        let q = GridCube::new(1, 0);
        assert_eq!(ff.stopping_parent(q).unwrap(), GridCube::ROOT);
        assert_eq!(fg.stopping_parent(q).unwrap(), GridCube::ROOT);
        assert!(restricted_children(GridCube::ROOT, &ff, &fg).unwrap().is_empty());
        let gf = corona_projection(&quarter, &one, GridCube::ROOT, &ff, &fg).unwrap();
        assert_eq!(gf.integral_over(q).unwrap(), 0.0);
        assert_eq!(quarter.integral_over(q).unwrap(), 0.25);
    }

    #[test]
    fn pairing_and_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let g = Grid::unit(1, 3).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let c = ShiftCoefficients::from_entries(g.clone(), [(GridCube::new(1, 1), 2.0)]).unwrap();
        let f = StepFunction::constant(g.clone(), 3.0).unwrap();
        let h = StepFunction::constant(g.clone(), 5.0).unwrap();
        assert!((pairing(&c, &f, &one, &h, &one).unwrap() - 15.0).abs() < 1e-13);
        let zero = StepFunction::constant(g.clone(), 0.0).unwrap();
        assert_eq!(pairing(&c, &zero, &one, &h, &one).unwrap(), 0.0);
        assert_eq!(pairing_split(&c, &zero, &one, &h, &one).unwrap(), (0.0, 0.0));
        for _ in 0..50 {
            let g = Grid::unit(rng.gen_range(1..=2), 4).unwrap();
            let c = coeffs(&mut rng, &g);
            let (s, w) = (weight(&mut rng, &g, 2.0), weight(&mut rng, &g, 2.0));
            let (f, h) = (nonneg(&mut rng, &g), nonneg(&mut rng, &g));
            let full = pairing(&c, &f, &s, &h, &w).unwrap();
            let tf = apply_shift_naive(&c, &f.mul(s.function()).unwrap());
            let direct: f64 = tf.iter().zip(h.mul(w.function()).unwrap().values()).map(|(a, b)| a * b).sum::<f64>()
                * g.cell_measure();
            assert!((full - direct).abs() <= 1e-12 * full.max(1e-300));
            let (a, b) = pairing_split(&c, &f, &s, &h, &w).unwrap();
            assert!((a + b - full).abs() <= 1e-12 * full.max(1e-300));
        }
    }

    fn power_iteration_norm(b: &SquareMatrix) -> f64 {
        let n = b.size();
        let mut x = vec![1.0; n];
        let mut prev = 0.0;
        for _ in 0..200_000 {
            let y = b.transpose_mul_vec(&b.mul_vec(&x));
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            x = y.iter().map(|v| v / norm).collect();
            let est = b.mul_vec(&x).iter().map(|v| v * v).sum::<f64>().sqrt();
            if (est - prev).abs() <= 1e-14 * est {
                return est;
            }
            prev = est;
        }
        prev
    }

    #[test]
    fn l2_norm_examples() {
        let g = Grid::unit(1, 4).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let c = ShiftCoefficients::from_entries(g.clone(), [(GridCube::ROOT, 1.0)]).unwrap();
        assert!((operator_norm_l2(&c, &one, &one).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(operator_norm_l2(&ShiftCoefficients::zero(g.clone()), &one, &one).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let lb = norm_lower_bound_search(&c, &one, &one, 2.0, 2.0, 10, &mut rng).unwrap();
        assert!((lb - 1.0).abs() < 1e-12);
        let big = Grid::unit(1, 13).unwrap();
        let w = Weight::constant(big.clone(), 1.0).unwrap();
        assert!(operator_norm_l2(&ShiftCoefficients::zero(big), &w, &w).is_err());
    }

    #[test]
    fn kernel_matrix_reproduces_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for d in [1, 2, 3] {
            let g = Grid::unit(d, 6 / d as u32).unwrap();
            let c = coeffs(&mut rng, &g);
            let f: Vec<f64> = (0..g.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = kernel_matrix(&c).mul_vec(&f);
            let direct = c.apply(&StepFunction::from_tree(g.clone(), f).unwrap()).unwrap();
            assert!(a.iter().zip(direct.values()).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn l2_norm_matches_power_iteration_and_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for _ in 0..20 {
            let g = Grid::unit(1, 6).unwrap();
            let c = coeffs(&mut rng, &g);
            let (s, w) = (weight(&mut rng, &g, 2.0), weight(&mut rng, &g, 2.0));
            let exact = operator_norm_l2(&c, &s, &w).unwrap();
            let oracle = power_iteration_norm(&similarity_matrix(&c, &s, &w).unwrap());
            assert!((exact - oracle).abs() <= 1e-8 * exact);
            let lb = norm_lower_bound_search(&c, &s, &w, 2.0, 2.0, 40, &mut rng).unwrap();
            assert!(lb <= exact * (1.0 + 1e-8));
            let rep = verify_lsu(&c, &s, &w, 2.0, 2.0, 0, &mut rng).unwrap();
            assert!(rep.lower_ok && rep.upper_ok, "{rep:?}");
        }
    }

    #[test]
    fn lsu_general_exponents() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let g = Grid::unit(1, 4).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let c = ShiftCoefficients::from_entries(g.clone(), [(GridCube::ROOT, 1.0)]).unwrap();
        let rep = verify_lsu(&c, &one, &one, 2.0, 2.0, 0, &mut rng).unwrap();
        assert!((rep.norm - 1.0).abs() < 1e-12 && (rep.upper_bound - 160.0).abs() < 1e-9);
        let zero = verify_lsu(&ShiftCoefficients::zero(g.clone()), &one, &one, 2.0, 2.0, 0, &mut rng).unwrap();
        assert_eq!((zero.norm, zero.testing, zero.testing_dual), (0.0, 0.0, 0.0));
        for _ in 0..10 {
            let c = coeffs(&mut rng, &g);
            let (s, w) = (weight(&mut rng, &g, 1.0), weight(&mut rng, &g, 1.0));
            let p = rng.gen_range(1.3..3.0);
            let q = rng.gen_range(p..4.0);
            let rep = verify_lsu(&c, &s, &w, p, q, 30, &mut rng).unwrap();
            assert!(!rep.norm_is_exact && rep.lower_ok && rep.upper_ok, "{rep:?}");
        }
    }
}
