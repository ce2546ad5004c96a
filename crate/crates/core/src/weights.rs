//! Weights, dyadic maximal functions, Muckenhoupt and testing constants,
//! and the finite forms of the summation lemmas behind the `A_p` bound.
//!
//! Every supremum over cubes runs over the cubes of the rooted grid.

use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridCube};
use crate::lerner::SparseFamily;
use crate::math::{conjugate, pow_nonneg, powf};
use crate::shift::ShiftCoefficients;
use crate::step::StepFunction;

/// A step function with strictly positive finite values.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight(StepFunction);

impl Weight {
    pub fn new(f: StepFunction) -> Result<Self> {
        if f.values().iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NonPositive);
        }
        Ok(Weight(f))
    }

    pub fn from_tree(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(StepFunction::from_tree(grid, values)?)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(StepFunction::constant(grid, c)?)
    }

    pub fn function(&self) -> &StepFunction {
        &self.0
    }

    pub fn into_function(self) -> StepFunction {
        self.0
    }

    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    /// `w(Q)`.
    pub fn measure(&self, q: GridCube) -> f64 {
        self.0.integral_over(q).unwrap_or(0.0)
    }

    /// `w^{1-p'}`, cellwise.
    pub fn dual(&self, p: f64) -> Result<Weight> {
        check_exponent(p)?;
        let e = 1.0 - conjugate(p);
        Weight::new(self.0.map(|v| powf(v, e))?)
    }

    pub fn scale(&self, c: f64) -> Result<Weight> {
        Weight::new(self.0.map(|v| c * v)?)
    }

    /// `w(Q)` for every cube, indexed `[level][code]`.
    pub fn cube_measures(&self) -> Vec<Vec<f64>> {
        let m = self.grid().cell_measure();
        let mut s = self.grid().level_sums(self.values());
        s.iter_mut().flatten().for_each(|v| *v *= m);
        s
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter("exponent must lie in (1, inf)"))
    }
}

fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `(∫ |f|^p w)^{1/p}`.
pub fn weighted_norm(f: &StepFunction, w: &Weight, p: f64) -> Result<f64> {
    check_exponent(p)?;
    same_grid(f.grid(), w.grid())?;
    let s: f64 = f.values().iter().zip(w.values()).map(|(&v, &wv)| pow_nonneg(v.abs(), p) * wv).sum();
    Ok(powf(s * f.grid().cell_measure(), 1.0 / p))
}

/// `sup_t t · w({|f| > t})^{1/p}`.
pub fn weighted_weak_norm(f: &StepFunction, w: &Weight, p: f64) -> Result<f64> {
    check_exponent(p)?;
    same_grid(f.grid(), w.grid())?;
    let mut pairs: Vec<(f64, f64)> = f.values().iter().map(|v| v.abs()).zip(w.values().iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let m = f.grid().cell_measure();
    let mut mass = 0.0;
    let mut best = 0.0f64;
    for (a, wv) in pairs {
        mass += wv * m;
        best = best.max(a * powf(mass, 1.0 / p));
    }
    Ok(best)
}

/// Dyadic maximal function `M f(x) = max_{Q ∋ x} ⟨|f|⟩_Q`.
pub fn maximal(f: &StepFunction) -> StepFunction {
    let grid = f.grid();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let sums = grid.level_sums(&abs);
    let values = grid.fold_subtree(
        GridCube::ROOT,
        |q| sums[q.level as usize][q.code as usize] / grid.cells_per_cube(q.level) as f64,
        f64::max,
    );
    StepFunction::from_tree(grid.clone(), values).expect("same grid")
}

/// `M_σ f(x) = max_{Q ∋ x} σ(Q)^{-1} ∫_Q |f| σ`.
pub fn maximal_weighted(f: &StepFunction, sigma: &Weight) -> Result<StepFunction> {
    same_grid(f.grid(), sigma.grid())?;
    let grid = f.grid();
    let prod: Vec<f64> = f.values().iter().zip(sigma.values()).map(|(v, s)| v.abs() * s).collect();
    let num = grid.level_sums(&prod);
    let den = grid.level_sums(sigma.values());
    let values = grid.fold_subtree(
        GridCube::ROOT,
        |q| num[q.level as usize][q.code as usize] / den[q.level as usize][q.code as usize],
        f64::max,
    );
    StepFunction::from_tree(grid.clone(), values)
}

fn averages(w: &Weight) -> Vec<Vec<f64>> {
    let grid = w.grid();
    let mut s = grid.level_sums(w.values());
    for (j, row) in s.iter_mut().enumerate() {
        let n = grid.cells_per_cube(j as u32) as f64;
        row.iter_mut().for_each(|v| *v /= n);
    }
    s
}

/// `[w, σ]_{A_p} = sup_Q ⟨w⟩_Q ⟨σ⟩_Q^{p-1}`.
pub fn ap_constant(w: &Weight, sigma: &Weight, p: f64) -> Result<f64> {
    check_exponent(p)?;
    same_grid(w.grid(), sigma.grid())?;
    let aw = averages(w);
    let asg = averages(sigma);
    Ok(aw
        .iter()
        .flatten()
        .zip(asg.iter().flatten())
        .map(|(&a, &b)| a * powf(b, p - 1.0))
        .fold(0.0, f64::max))
}

/// `[σ]_{A_∞} = sup_Q σ(Q)^{-1} ∫_Q M(1_Q σ)`.
///
/// On `Q`, `M(1_Q σ)` only sees cubes inside `Q`: a larger cube `R` gives
/// `σ(Q)/|R| ≤ ⟨σ⟩_Q`.
pub fn ainfty_constant(sigma: &Weight) -> f64 {
    let grid = sigma.grid();
    let avg = averages(sigma);
    let sums = grid.level_sums(sigma.values());
    grid.cubes()
        .map(|q| {
            let m = grid.fold_subtree(q, |r| avg[r.level as usize][r.code as usize], f64::max);
            m.iter().sum::<f64>() / sums[q.level as usize][q.code as usize]
        })
        .fold(0.0, f64::max)
}

/// Testing constants `(𝔗, 𝔗*)` of `T = S` with coefficients `c`:
/// `𝔗 = sup_Q ‖T_Q σ‖_{L^q(ω)} / σ(Q)^{1/p}` and
/// `𝔗* = sup_Q ‖T_Q ω‖_{L^{p'}(σ)} / ω(Q)^{1/q'}`.
pub fn testing_constants(c: &ShiftCoefficients, sigma: &Weight, omega: &Weight, p: f64, q: f64) -> Result<(f64, f64)> {
    check_exponent(p)?;
    check_exponent(q)?;
    if p > q {
        return Err(Error::Parameter("testing constants need p <= q"));
    }
    same_grid(c.grid(), sigma.grid())?;
    same_grid(c.grid(), omega.grid())?;
    let t = one_sided_testing(c, sigma, omega, p, q);
    let t_star = one_sided_testing(c, omega, sigma, conjugate(q), conjugate(p));
    Ok((t, t_star))
}

/// `sup_Q ‖T_Q u‖_{L^r(v)} / u(Q)^{1/s}`.
fn one_sided_testing(c: &ShiftCoefficients, u: &Weight, v: &Weight, s: f64, r: f64) -> f64 {
    let grid = c.grid();
    let avg = averages(u);
    let meas = u.cube_measures();
    let cm = grid.cell_measure();
    let levels = c.levels();
    grid.cubes()
        .map(|q| {
            let tq = grid.fold_subtree(
                q,
                |x| levels[x.level as usize][x.code as usize] * avg[x.level as usize][x.code as usize],
                |a, b| a + b,
            );
            let vv = &v.values()[grid.cell_range(q)];
            let norm = powf(tq.iter().zip(vv).map(|(&t, &wv)| pow_nonneg(t, r) * wv).sum::<f64>() * cm, 1.0 / r);
            norm / powf(meas[q.level as usize][q.code as usize], 1.0 / s)
        })
        .fold(0.0, f64::max)
}

/// Both Muckenhoupt-type constants that normalise the testing condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestingNormalisation {
    pub ap: f64,
    pub ainfty: f64,
}

impl TestingNormalisation {
    pub fn new(w: &Weight, sigma: &Weight, p: f64) -> Result<Self> {
        Ok(TestingNormalisation { ap: ap_constant(w, sigma, p)?, ainfty: ainfty_constant(sigma) })
    }
}

/// `‖S_0⁺(1_Q σ)‖^p_{L^p(w)} / ([w,σ]_{A_p} [σ]_{A_∞} σ(Q))`.
pub fn testing_condition_ratio(family: &SparseFamily, w: &Weight, sigma: &Weight, p: f64, q: GridCube) -> Result<f64> {
    let norm = TestingNormalisation::new(w, sigma, p)?;
    let c = ShiftCoefficients::from_family(family);
    testing_ratio_with(&c, w, sigma, p, q, norm)
}

/// Maximum of [`testing_condition_ratio`] over all grid cubes `Q`, with the maximiser.
pub fn testing_condition_sup(family: &SparseFamily, w: &Weight, sigma: &Weight, p: f64) -> Result<(f64, GridCube)> {
    let norm = TestingNormalisation::new(w, sigma, p)?;
    let c = ShiftCoefficients::from_family(family);
    let mut best = (0.0, GridCube::ROOT);
    for q in family.grid().cubes() {
        let r = testing_ratio_with(&c, w, sigma, p, q, norm)?;
        if r > best.0 {
            best = (r, q);
        }
    }
    Ok(best)
}

fn testing_ratio_with(
    c: &ShiftCoefficients,
    w: &Weight,
    sigma: &Weight,
    p: f64,
    q: GridCube,
    norm: TestingNormalisation,
) -> Result<f64> {
    same_grid(c.grid(), w.grid())?;
    same_grid(c.grid(), sigma.grid())?;
    c.grid().check(q)?;
    let f = sigma.function().restrict(q)?;
    let sf = c.apply(&f)?;
    let num = powf(weighted_norm(&sf, w, p)?, p);
    Ok(num / (norm.ap * norm.ainfty * sigma.measure(q)))
}

/// Largest `len^k` accepted by the multiplied-out chain.
pub const MULTOUT_MAX_LEN: usize = 12;
pub const MULTOUT_MAX_K: u32 = 4;

fn check_multout(len: usize, k: u32) -> Result<()> {
    if len > MULTOUT_MAX_LEN || k > MULTOUT_MAX_K {
        return Err(Error::TooLarge("multiplied-out chain needs len <= 12 and k <= 4"));
    }
    Ok(())
}

/// Visits every `k`-tuple of indices below `n` in lexicographic order.
fn for_each_tuple(n: usize, k: u32, mut visit: impl FnMut(&[usize])) {
    let mut t = vec![0usize; k as usize];
    if n == 0 && k > 0 {
        return;
    }
    loop {
        visit(&t);
        let mut i = k as usize;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < n {
                break;
            }
            t[i] = 0;
        }
    }
}

fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// The two-step chain
/// `(Σ a)^{k+α} ≤ (k+1) Σ_{i⃗} a_{i⃗} A_{min i⃗}^α ≤ (k+1)! Σ_{i_1≥…≥i_k≥j} a_{i⃗} a_j^α`
/// with `A_i = Σ_{j≤i} a_j`. Returns `(lhs, mid, rhs)`.
pub fn multout_check(a: &[f64], k: u32, alpha: f64) -> Result<(f64, f64, f64)> {
    check_multout(a.len(), k)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter("alpha must lie in [0, 1]"));
    }
    if a.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::NonPositive);
    }
    let n = a.len();
    let prefix: Vec<f64> = a.iter().scan(0.0, |s, &v| {
        *s += v;
        Some(*s)
    }).collect();
    let total = prefix.last().copied().unwrap_or(0.0);
    let pw = |x: f64| if alpha == 0.0 { 1.0 } else { pow_nonneg(x, alpha) };
    let lhs = pow_nonneg(total, k as f64 + alpha);
    let mut mid = 0.0;
    let mut rhs = 0.0;
    if k == 0 {
        mid = pw(total);
        rhs = a.iter().map(|&v| pw(v)).sum();
    } else {
        for_each_tuple(n, k, |t| {
            let prod: f64 = t.iter().map(|&i| a[i]).product();
            let lo = *t.iter().min().unwrap();
            mid += prod * pw(prefix[lo]);
            if t.windows(2).all(|w| w[0] >= w[1]) {
                rhs += prod * a[..=lo].iter().map(|&v| pw(v)).sum::<f64>();
            }
        });
    }
    Ok((lhs, (k + 1) as f64 * mid, factorial(k + 1) as f64 * rhs))
}

/// Rational quantities of the multiplied-out chain.
pub type Exact = Ratio<i128>;

/// [`multout_check`] in exact arithmetic for `α ∈ {0, 1}`.
pub fn multout_check_exact(a: &[Exact], k: u32, alpha: u32) -> Result<(Exact, Exact, Exact)> {
    check_multout(a.len(), k)?;
    if alpha > 1 {
        return Err(Error::Parameter("exact chain supports alpha in {0, 1}"));
    }
    if a.iter().any(|v| *v < Exact::zero()) {
        return Err(Error::NonPositive);
    }
    let pw = |x: Exact| if alpha == 0 { Exact::one() } else { x };
    let mut prefix = Vec::with_capacity(a.len());
    let mut s = Exact::zero();
    for v in a {
        s += v;
        prefix.push(s);
    }
    let lhs = (0..k + alpha).fold(Exact::one(), |acc, _| acc * s);
    let mut mid = Exact::zero();
    let mut rhs = Exact::zero();
    if k == 0 {
        mid = pw(s);
        rhs = a.iter().map(|&v| pw(v)).sum();
    } else {
        for_each_tuple(a.len(), k, |t| {
            let prod: Exact = t.iter().map(|&i| a[i]).product();
            let lo = *t.iter().min().unwrap();
            mid += prod * pw(prefix[lo]);
            if t.windows(2).all(|w| w[0] >= w[1]) {
                rhs += prod * a[..=lo].iter().map(|&v| pw(v)).sum::<Exact>();
            }
        });
    }
    let k1 = Exact::from_integer((k + 1) as i128);
    let kf = Exact::from_integer(factorial(k + 1) as i128);
    Ok((lhs, k1 * mid, kf * rhs))
}

fn members_inside(family: &SparseFamily, p: GridCube) -> Result<impl Iterator<Item = GridCube> + '_> {
    family.grid().check(p)?;
    let grid = family.grid();
    Ok(family.cubes().iter().copied().filter(move |l| grid.is_ancestor_or_self(p, *l)))
}

/// `(Σ_{L∈ℒ, L⊆P} ⟨w⟩_L^γ |L|, ⟨w⟩_P^γ |P|)`.
pub fn lem_max_sides(family: &SparseFamily, w: &Weight, p: GridCube, gamma: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Parameter("gamma must lie in [0, 1)"));
    }
    same_grid(family.grid(), w.grid())?;
    let grid = family.grid();
    let avg = averages(w);
    let term = |q: GridCube| pow_nonneg(avg[q.level as usize][q.code as usize], gamma) * grid.volume(q);
    let lhs = members_inside(family, p)?.map(term).sum();
    Ok((lhs, term(p)))
}

/// `(Σ_{L⊆P} ⟨σ⟩_L^α ⟨w⟩_L^β |L|, [w,σ]_{A_p}^{α/(p-1)} ⟨w⟩_P^{β-α/(p-1)} |P|)`.
pub fn lem_sum_sides(
    family: &SparseFamily,
    w: &Weight,
    sigma: &Weight,
    p_cube: GridCube,
    alpha: f64,
    beta: f64,
    p: f64,
) -> Result<(f64, f64)> {
    check_exponent(p)?;
    if !(0.0 <= alpha && alpha <= beta * (p - 1.0) && beta * (p - 1.0) < alpha + p - 1.0) {
        return Err(Error::Parameter("need 0 <= alpha <= beta(p-1) < alpha + p - 1"));
    }
    same_grid(family.grid(), w.grid())?;
    same_grid(family.grid(), sigma.grid())?;
    let grid = family.grid();
    let aw = averages(w);
    let asg = averages(sigma);
    let lhs = members_inside(family, p_cube)?
        .map(|l| {
            let (j, c) = (l.level as usize, l.code as usize);
            pow_nonneg(asg[j][c], alpha) * pow_nonneg(aw[j][c], beta) * grid.volume(l)
        })
        .sum();
    let e = alpha / (p - 1.0);
    let ap = ap_constant(w, sigma, p)?;
    let wp = aw[p_cube.level as usize][p_cube.code as usize];
    Ok((lhs, pow_nonneg(ap, e) * pow_nonneg(wp, beta - e) * grid.volume(p_cube)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_weight(rng: &mut ChaCha8Rng, g: &Grid, l: f64) -> Weight {
        Weight::from_tree(g.clone(), (0..g.cell_count()).map(|_| crate::math::exp(rng.gen_range(-l..l))).collect()).unwrap()
    }

    fn avg_naive(v: &[f64], g: &Grid, q: GridCube) -> f64 {
        let s = &v[g.cell_range(q)];
        s.iter().sum::<f64>() / s.len() as f64
    }

    #[test]
    fn norms() {
        let g = Grid::unit(1, 3).unwrap();
        let one = StepFunction::constant(g.clone(), 1.0).unwrap();
        let w1 = Weight::constant(g.clone(), 1.0).unwrap();
        assert_eq!(weighted_norm(&one, &w1, 2.0).unwrap(), 1.0);
        let half = StepFunction::indicator(g.clone(), GridCube::new(1, 0), 1.0).unwrap();
        let w2 = Weight::constant(g.clone(), 2.0).unwrap();
        assert!((weighted_norm(&half, &w2, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((weighted_weak_norm(&half, &w2, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(Weight::constant(g.clone(), 0.0).is_err());
        assert!(weighted_norm(&one, &w1, 1.0).is_err());
    }

    #[test]
    fn weighted_norm_vs_naive_and_weak_below_strong() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = Grid::unit(2, 3).unwrap();
        for _ in 0..20 {
            let w = random_weight(&mut rng, &g, 2.0);
            let f = StepFunction::from_tree(g.clone(), (0..64).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
            let p = rng.gen_range(1.1..4.0);
            let naive: f64 = (0..64).map(|i| powf(f.values()[i].abs(), p) * w.values()[i] / 64.0).sum();
            let strong = weighted_norm(&f, &w, p).unwrap();
            assert!((strong - powf(naive, 1.0 / p)).abs() < 1e-12 * strong);
            assert!(weighted_weak_norm(&f, &w, p).unwrap() <= strong * (1.0 + 1e-12));
        }
    }

    #[test]
    fn maximal_examples() {
        let g = Grid::unit(1, 3).unwrap();
        let c = StepFunction::constant(g.clone(), -2.5).unwrap();
        assert!(maximal(&c).values().iter().all(|&v| v == 2.5));
        let half = StepFunction::indicator(g.clone(), GridCube::new(1, 0), 1.0).unwrap();
        assert_eq!(maximal(&half).values(), &[1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn maximal_vs_all_cube_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = Grid::unit(1, 6).unwrap();
        for _ in 0..10 {
            let f = StepFunction::from_tree(g.clone(), (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let s = random_weight(&mut rng, &g, 2.0);
            let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
            let prod: Vec<f64> = abs.iter().zip(s.values()).map(|(a, b)| a * b).collect();
            let m = maximal(&f);
            let ms = maximal_weighted(&f, &s).unwrap();
            for cell in 0..64 {
                let x = g.cell(cell);
                let cubes = g.cubes().filter(|q| g.is_ancestor_or_self(*q, x));
                let (mut a, mut b) = (0.0f64, 0.0f64);
                for q in cubes {
                    a = a.max(avg_naive(&abs, &g, q));
                    b = b.max(avg_naive(&prod, &g, q) / avg_naive(s.values(), &g, q));
                }
                assert!((m.values()[cell] - a).abs() < 1e-14);
                assert!((ms.values()[cell] - b).abs() < 1e-12 * b.max(1e-300));
            }
        }
    }

    #[test]
    fn ap_examples() {
        let g = Grid::unit(1, 1).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        assert_eq!(ap_constant(&one, &one, 2.0).unwrap(), 1.0);
        let w = Weight::from_tree(g.clone(), vec![1.0, 4.0]).unwrap();
        let s = Weight::from_tree(g.clone(), vec![1.0, 0.25]).unwrap();
        assert_eq!(ap_constant(&w, &s, 2.0).unwrap(), 25.0 / 16.0);
        assert_eq!(w.dual(2.0).unwrap(), s);
    }

    #[test]
    fn ap_vs_scan_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = Grid::unit(2, 3).unwrap();
        for _ in 0..20 {
            let p = rng.gen_range(1.2..4.0);
            let w = random_weight(&mut rng, &g, 4.0);
            let s = w.dual(p).unwrap();
            let naive = g
                .cubes()
                .map(|q| avg_naive(w.values(), &g, q) * powf(avg_naive(s.values(), &g, q), p - 1.0))
                .fold(0.0, f64::max);
            let ap = ap_constant(&w, &s, p).unwrap();
            assert!((ap - naive).abs() < 1e-12 * naive);
            assert!(ap >= 1.0 - 1e-12);
            let scaled = ap_constant(&w.scale(3.0).unwrap(), &s, p).unwrap();
            assert!((scaled - 3.0 * ap).abs() < 1e-12 * scaled);
        }
    }

    #[test]
    fn ainfty_examples() {
        let g = Grid::unit(1, 1).unwrap();
        assert_eq!(ainfty_constant(&Weight::constant(g.clone(), 1.0).unwrap()), 1.0);
        let s = Weight::from_tree(g, vec![1.0, 3.0]).unwrap();
        assert_eq!(ainfty_constant(&s), 1.25);
    }

    #[test]
    fn ainfty_vs_scan_and_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = Grid::unit(1, 5).unwrap();
        for _ in 0..10 {
            let s = random_weight(&mut rng, &g, 2.0);
            let naive = g
                .cubes()
                .map(|q| {
                    let local = s.function().restrict(q).unwrap();
                    let m = maximal(&local);
                    m.integral_over(q).unwrap() / s.measure(q)
                })
                .fold(0.0, f64::max);
            let a = ainfty_constant(&s);
            assert!((a - naive).abs() < 1e-12 * naive);
            assert!(a >= 1.0);
            let b = ainfty_constant(&s.scale(5.0).unwrap());
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn testing_examples() {
        let g = Grid::unit(1, 3).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let c = ShiftCoefficients::from_entries(g.clone(), [(GridCube::ROOT, 1.0)]).unwrap();
        let (t, ts) = testing_constants(&c, &one, &one, 2.0, 2.0).unwrap();
        assert!((t - 1.0).abs() < 1e-15 && (ts - 1.0).abs() < 1e-15);
        let z = ShiftCoefficients::zero(g);
        assert_eq!(testing_constants(&z, &one, &one, 2.0, 2.0).unwrap(), (0.0, 0.0));
        assert!(testing_constants(&z, &one, &one, 3.0, 2.0).is_err());
    }

    #[test]
    fn testing_vs_per_cube_subshift() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid::unit(1, 5).unwrap();
        for _ in 0..10 {
            let c = crate::random::coefficients(&mut rng, &g, 0.3, 2.0);
            let s = random_weight(&mut rng, &g, 2.0);
            let o = random_weight(&mut rng, &g, 2.0);
            let p = rng.gen_range(1.2..2.5);
            let q = rng.gen_range(p..4.0);
            let (mut t, mut ts) = (0.0f64, 0.0f64);
            for cube in g.cubes() {
                let a = c.apply_subshift(cube, s.function()).unwrap();
                t = t.max(weighted_norm(&a, &o, q).unwrap() / powf(s.measure(cube), 1.0 / p));
                let b = c.apply_subshift(cube, o.function()).unwrap();
                ts = ts.max(weighted_norm(&b, &s, conjugate(p)).unwrap() / powf(o.measure(cube), 1.0 / conjugate(q)));
            }
            let (et, ets) = testing_constants(&c, &s, &o, p, q).unwrap();
            assert!((et - t).abs() <= 1e-12 * t.max(1e-300));
            assert!((ets - ts).abs() <= 1e-12 * ts.max(1e-300));
        }
    }

    #[test]
    fn testing_condition_trivial_cases() {
        let g = Grid::unit(1, 3).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let q = GridCube::new(1, 1);
        for p in [1.5, 2.0, 3.0] {
            let fam = SparseFamily::nested(g.clone(), [q]).unwrap();
            assert!((testing_condition_ratio(&fam, &one, &one, p, q).unwrap() - 1.0).abs() < 1e-14);
            let empty = SparseFamily::nested(g.clone(), []).unwrap();
            assert_eq!(testing_condition_ratio(&empty, &one, &one, p, q).unwrap(), 0.0);
        }
    }

    #[test]
    fn testing_condition_scales_with_w() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = Grid::unit(1, 5).unwrap();
        let fam = SparseFamily::nested(g.clone(), g.cubes().filter(|_| rng.gen_bool(0.2))).unwrap();
        let w = random_weight(&mut rng, &g, 2.0);
        let s = w.dual(2.0).unwrap();
        let (r, q) = testing_condition_sup(&fam, &w, &s, 2.0).unwrap();
        let r2 = testing_condition_ratio(&fam, &w.scale(7.0).unwrap(), &s, 2.0, q).unwrap();
        assert!((r - r2).abs() < 1e-12 * r);
    }

    #[test]
    fn multout_examples() {
        let (l, m, r) = multout_check(&[1.0, 1.0], 1, 1.0).unwrap();
        assert_eq!((l, m, r), (4.0, 6.0, 6.0));
        let (l, m, _) = multout_check(&[1.0, 2.0, 3.0], 2, 0.0).unwrap();
        assert_eq!((l, m), (36.0, 108.0));
        let one = Exact::one();
        let (l, m, r) = multout_check_exact(&[one, one], 1, 1).unwrap();
        assert_eq!((l, m, r), (Exact::from_integer(4), Exact::from_integer(6), Exact::from_integer(6)));
        assert!(multout_check(&[1.0; 13], 1, 1.0).is_err());
        assert!(multout_check(&[1.0], 5, 1.0).is_err());
        assert!(multout_check(&[1.0], 1, 1.5).is_err());
    }

    #[test]
    fn multout_chain_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let n = rng.gen_range(1..=8);
            let k = rng.gen_range(0..=3);
            let alpha = [0.0, 0.3, 0.7, 1.0][rng.gen_range(0..4)];
            let a: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..5.0) }).collect();
            let (l, m, r) = multout_check(&a, k, alpha).unwrap();
            assert!(l <= m * (1.0 + 1e-12) && m <= r * (1.0 + 1e-12), "{a:?} {k} {alpha}");
            let ex: Vec<Exact> = (0..n).map(|_| Exact::new(rng.gen_range(0..20), rng.gen_range(1..7))).collect();
            let (l, m, r) = multout_check_exact(&ex, k, rng.gen_range(0..=1)).unwrap();
            assert!(l <= m && m <= r);
        }
    }

    #[test]
    fn lemma_sides() {
        let g = Grid::unit(1, 4).unwrap();
        let one = Weight::constant(g.clone(), 1.0).unwrap();
        let p = GridCube::new(1, 0);
        let fam = SparseFamily::nested(g.clone(), [p]).unwrap();
        assert_eq!(lem_max_sides(&fam, &one, p, 0.5).unwrap(), (0.5, 0.5));
        assert_eq!(lem_sum_sides(&fam, &one, &one, p, 0.5, 1.0, 2.0).unwrap(), (0.5, 0.5));
        assert!(lem_max_sides(&fam, &one, p, 1.0).is_err());
        assert!(lem_sum_sides(&fam, &one, &one, p, 2.0, 1.0, 2.0).is_err());
        let chain = SparseFamily::nested(g.clone(), (0..=4).map(|j| GridCube::new(j, 0))).unwrap();
        let (l, r) = lem_max_sides(&chain, &one, GridCube::ROOT, 0.0).unwrap();
        assert!(l <= 2.0 * r);
    }

    #[test]
    fn maximal_weak_and_weighted_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let g = Grid::unit(1, 7).unwrap();
        for _ in 0..20 {
            let w = random_weight(&mut rng, &g, 4.0);
            let p = g.cube_of_cell(rng.gen_range(0..128), rng.gen_range(0..=7));
            let local = w.function().restrict(p).unwrap();
            assert!(maximal(&local).weak_l1_norm() <= w.measure(p) * (1.0 + 1e-12));
            let e = rng.gen_range(1.1..4.0);
            let f = StepFunction::from_tree(g.clone(), (0..128).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
            let lhs = weighted_norm(&maximal_weighted(&f, &w).unwrap(), &w, e).unwrap();
            assert!(lhs <= conjugate(e) * weighted_norm(&f, &w, e).unwrap());
        }
    }
}
