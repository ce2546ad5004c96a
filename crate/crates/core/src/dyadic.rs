//! Standard and shifted dyadic cubes.
//!
//! A cube of the grid shifted by `α = a/3`, `a ∈ {0,1,2}^d`, at level `ℓ`
//! and index `m` is `2^{-ℓ}([0,1)^d + m + (-1)^ℓ α)`. The alternating sign
//! makes every shifted grid nested: the children of `(ℓ, m)` are
//! `(ℓ+1, 2m + e + (-1)^ℓ a)` for `e ∈ {0,1}^d`, so parent and child
//! arithmetic stays in the integers. Real-valued geometry (corners, sides,
//! containment) is done in exact rationals.

use core::cmp::Ordering;
use core::fmt;

use alloc::vec::Vec;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 6;

pub type Rational = Ratio<i128>;

/// Bound on numerators and denominators accepted by [`RealCube`]; keeps all
/// intermediate rationals of the container search inside `i128`.
pub const REAL_CUBE_BOUND: i128 = 1 << 24;

/// Largest `k` accepted by [`find_shifted_container`].
pub const MAX_CONTAINER_GENERATIONS: u32 = 20;

/// A cube in a standard or shifted dyadic grid.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicCube {
    dim: u8,
    level: i32,
    index: [i64; MAX_DIM],
    shift: [u8; MAX_DIM],
}

impl DyadicCube {
    /// Standard (unshifted) cube.
    pub fn new(level: i32, index: &[i64]) -> Result<Self> {
        Self::with_shift(level, index, &[0; MAX_DIM][..index.len()])
    }

    /// Cube of the grid shifted by `shift[i] / 3` in coordinate `i`.
    pub fn with_shift(level: i32, index: &[i64], shift: &[u8]) -> Result<Self> {
        let dim = index.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(dim));
        }
        if shift.len() != dim {
            return Err(Error::Parameter("shift length must equal the dimension"));
        }
        if shift.iter().any(|&a| a > 2) {
            return Err(Error::Parameter("shift numerators must be 0, 1 or 2"));
        }
        let mut cube = DyadicCube {
            dim: dim as u8,
            level,
            index: [0; MAX_DIM],
            shift: [0; MAX_DIM],
        };
        cube.index[..dim].copy_from_slice(index);
        cube.shift[..dim].copy_from_slice(shift);
        Ok(cube)
    }

    /// The unit cube `[0,1)^d`.
    pub fn unit(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(dim));
        }
        Self::new(0, &[0; MAX_DIM][..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn index(&self) -> &[i64] {
        &self.index[..self.dim()]
    }

    /// Numerators of the shift in thirds.
    pub fn shift(&self) -> &[u8] {
        &self.shift[..self.dim()]
    }

    pub fn same_grid(&self, other: &DyadicCube) -> bool {
        self.dim == other.dim && self.shift() == other.shift()
    }

    /// `(-1)^level`.
    fn parity(level: i32) -> i64 {
        if level.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }

    /// The `2^d` children in lexicographic order of the offset vector
    /// (coordinate 0 most significant).
    pub fn children(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        (0..1usize << d).map(|e| self.child(e)).collect()
    }

    /// Child number `digit`, where bit `d-1-i` of `digit` is the offset in
    /// coordinate `i`.
    pub fn child(&self, digit: usize) -> DyadicCube {
        let d = self.dim();
        let sign = Self::parity(self.level);
        let mut child = *self;
        child.level = self.level + 1;
        for i in 0..d {
            let e = ((digit >> (d - 1 - i)) & 1) as i64;
            child.index[i] = 2 * self.index[i] + e + sign * self.shift[i] as i64;
        }
        child
    }

    pub fn parent(&self) -> DyadicCube {
        let parent_level = self.level - 1;
        let sign = Self::parity(parent_level);
        let mut parent = *self;
        parent.level = parent_level;
        for i in 0..self.dim() {
            parent.index[i] = (self.index[i] - sign * self.shift[i] as i64).div_euclid(2);
        }
        parent
    }

    /// Position of `self` among its parent's children (see [`child`](Self::child)).
    pub fn child_digit(&self) -> usize {
        let d = self.dim();
        let sign = Self::parity(self.level - 1);
        let mut digit = 0;
        for i in 0..d {
            let e = (self.index[i] - sign * self.shift[i] as i64).mod_floor(&2) as usize;
            digit |= e << (d - 1 - i);
        }
        digit
    }

    /// The ancestor `k` generations up; `k = 0` returns `self`.
    pub fn ancestor(&self, k: u32) -> Result<DyadicCube> {
        if (self.level as i64) - (k as i64) < i32::MIN as i64 {
            return Err(Error::NoAncestor { level: self.level, generations: k });
        }
        let mut q = *self;
        for _ in 0..k {
            q = q.parent();
        }
        Ok(q)
    }

    /// Whether `self ⊆ other` (both in the same grid).
    pub fn is_contained_in(&self, other: &DyadicCube) -> bool {
        if !self.same_grid(other) || other.level > self.level {
            return false;
        }
        let k = (self.level - other.level) as u32;
        matches!(self.ancestor(k), Ok(a) if a == *other)
    }

    /// Side length `2^{-level}`.
    pub fn side(&self) -> Rational {
        pow2(-self.level)
    }

    /// Lower corner coordinate `2^{-ℓ}(m_i + (-1)^ℓ a_i/3)`.
    pub fn corner(&self, i: usize) -> Rational {
        let numer = 3 * self.index[i] as i128 + Self::parity(self.level) as i128 * self.shift[i] as i128;
        Rational::new(numer, 3) * self.side()
    }

    /// Lebesgue measure as a float.
    pub fn volume(&self) -> f64 {
        libm::exp2(-(self.level as f64) * self.dim() as f64)
    }
}

/// `2^e` as an exact rational.
pub(crate) fn pow2(e: i32) -> Rational {
    assert!(e.abs() < 126, "power of two 2^{e} does not fit in i128");
    if e >= 0 {
        Rational::from_integer(1i128 << e)
    } else {
        Rational::new(1, 1i128 << (-e))
    }
}

impl Ord for DyadicCube {
    /// Canonical order: level, then index, then grid.
    fn cmp(&self, other: &Self) -> Ordering {
        self.level
            .cmp(&other.level)
            .then_with(|| self.index().cmp(other.index()))
            .then_with(|| self.dim.cmp(&other.dim))
            .then_with(|| self.shift().cmp(other.shift()))
    }
}

impl PartialOrd for DyadicCube {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D(l={}, m={:?}", self.level, self.index())?;
        if self.shift().iter().any(|&a| a != 0) {
            write!(f, ", a={:?}/3", self.shift())?;
        }
        f.write_str(")")
    }
}

/// An arbitrary axis-parallel cube `corner + [0, side)^d` with rational data.
#[derive(Clone, Debug, PartialEq)]
pub struct RealCube {
    corner: Vec<Rational>,
    side: Rational,
}

impl RealCube {
    pub fn new(corner: Vec<Rational>, side: Rational) -> Result<Self> {
        if corner.is_empty() || corner.len() > MAX_DIM {
            return Err(Error::Dimension(corner.len()));
        }
        if side <= Rational::zero() {
            return Err(Error::Parameter("cube side must be positive"));
        }
        let in_bounds = |r: &Rational| {
            r.numer().abs() <= REAL_CUBE_BOUND && *r.denom() <= REAL_CUBE_BOUND
        };
        if !corner.iter().all(in_bounds) || !in_bounds(&side) {
            return Err(Error::Parameter("rational data exceeds 2^24 in numerator or denominator"));
        }
        Ok(RealCube { corner, side })
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn corner(&self) -> &[Rational] {
        &self.corner
    }

    pub fn side(&self) -> Rational {
        self.side
    }

    /// Concentric dilate: same center, side multiplied by `factor`.
    pub fn dilate(&self, factor: Rational) -> RealCube {
        let half_growth = (factor - Rational::one()) * self.side / Rational::from_integer(2);
        RealCube {
            corner: self.corner.iter().map(|c| c - half_growth).collect(),
            side: self.side * factor,
        }
    }

    /// Whether this half-open cube lies inside the dyadic cube `r`.
    pub fn is_inside(&self, r: &DyadicCube) -> bool {
        if r.dim() != self.dim() {
            return false;
        }
        let side = r.side();
        (0..self.dim()).all(|i| {
            let lo = r.corner(i);
            self.corner[i] >= lo && self.corner[i] + self.side <= lo + side
        })
    }
}

/// The three conclusions of the shifted-container lemma for a candidate `r`:
/// `q ⊆ r`, `2^k q ⊆ r^{(k)}` and `side(r) ≤ 6 side(q)`.
pub fn container_predicates(q: &RealCube, k: u32, r: &DyadicCube) -> [bool; 3] {
    let inside = q.is_inside(r);
    let dilated_inside = match r.ancestor(k) {
        Ok(anc) => q.dilate(pow2(k as i32)).is_inside(&anc),
        Err(_) => false,
    };
    let small = r.side() <= Rational::from_integer(6) * q.side();
    [inside, dilated_inside, small]
}

/// Finds a shift `a ∈ {0,1,2}^d` (in thirds) and a cube `R` of that shifted
/// grid with `Q ⊆ R`, `2^k Q ⊆ R^{(k)}` and `side(R) ≤ 6 side(Q)`.
///
/// Shifts are scanned in lexicographic order and, for each shift, sides from
/// the smallest admissible one upwards; the first hit is returned.
///
/// # Panics
///
/// If no candidate passes. A solution always exists, so this is a bug.
pub fn find_shifted_container(q: &RealCube, k: u32) -> Result<(Vec<u8>, DyadicCube)> {
    if k > MAX_CONTAINER_GENERATIONS {
        return Err(Error::Parameter("container search supports k <= 20"));
    }
    let d = q.dim();
    let s = q.side();
    // Finest level whose side is still >= s.
    let mut finest = 0i32;
    while pow2(-finest) < s {
        finest -= 1;
    }
    while pow2(-(finest + 1)) >= s {
        finest += 1;
    }
    let six_s = Rational::from_integer(6) * s;
    let levels: Vec<i32> = (0..3).map(|j| finest - j).filter(|&l| pow2(-l) <= six_s).collect();

    let total = 3usize.pow(d as u32);
    let mut shift = [0u8; MAX_DIM];
    for code in 0..total {
        let mut c = code;
        for i in (0..d).rev() {
            shift[i] = (c % 3) as u8;
            c /= 3;
        }
        for &level in &levels {
            let r = locate_corner(q, level, &shift[..d]);
            if container_predicates(q, k, &r) == [true; 3] {
                return Ok((shift[..d].to_vec(), r));
            }
        }
    }
    panic!("shifted container search failed for {q:?} with k = {k}");
}

/// Cube of the given shifted grid and level that contains `q`'s lower corner.
fn locate_corner(q: &RealCube, level: i32, shift: &[u8]) -> DyadicCube {
    let sign = DyadicCube::parity(level) as i128;
    let scale = pow2(level);
    let mut index = [0i64; MAX_DIM];
    for (i, c) in q.corner().iter().enumerate() {
        // m = floor(c 2^ℓ - (-1)^ℓ a/3)
        let t = c * scale - Rational::new(sign * shift[i] as i128, 3);
        index[i] = t.floor().to_integer() as i64;
    }
    DyadicCube::with_shift(level, &index[..q.dim()], shift).expect("valid shift")
}
