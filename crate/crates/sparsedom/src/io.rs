//! JSON file formats for cubes, functions, weights, shift coefficients and
//! decompositions, plus a CSV export of cell values.
//!
//! Cells are listed in lexicographic order (the last coordinate varies
//! fastest). Cubes are written as absolute dyadic cubes and listed by level,
//! then by lexicographic position.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sparsedom_core::lerner::DominationCheck;
use sparsedom_core::{DyadicCube, Grid, GridCube, LernerDecomposition, ShiftCoefficients, StepFunction, Weight};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Core(#[from] sparsedom_core::Error),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON in {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, FormatError>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeJson {
    pub d: usize,
    pub level: i32,
    pub index: Vec<i64>,
    /// Shift in thirds per coordinate; all zeros if omitted.
    #[serde(default)]
    pub shift: Vec<u8>,
}

impl CubeJson {
    pub fn from_cube(q: &DyadicCube) -> Self {
        CubeJson { d: q.dim(), level: q.level(), index: q.index().to_vec(), shift: q.shift().to_vec() }
    }

    pub fn to_cube(&self) -> Result<DyadicCube> {
        if self.index.len() != self.d {
            return Err(FormatError::Invalid(format!("cube has d = {} but {} indices", self.d, self.index.len())));
        }
        if self.shift.is_empty() {
            Ok(DyadicCube::new(self.level, &self.index)?)
        } else {
            Ok(DyadicCube::with_shift(self.level, &self.index, &self.shift)?)
        }
    }
}

fn grid_from(d: usize, depth: u32, root: &CubeJson) -> Result<Grid> {
    let root = root.to_cube()?;
    if root.dim() != d {
        return Err(FormatError::Invalid(format!("root has dimension {} but d = {d}", root.dim())));
    }
    Ok(Grid::new(root, depth)?)
}

/// Position of `q` in the listing order of cubes: level, then lexicographic index.
pub fn cube_order_key(grid: &Grid, q: GridCube) -> (u32, u64) {
    let idx = grid.relative_index(q);
    let lex = idx[..grid.dim()].iter().fold(0u64, |acc, &x| (acc << q.level) | x as u64);
    (q.level, lex)
}

fn sorted_cubes(grid: &Grid, cubes: impl IntoIterator<Item = GridCube>) -> Vec<GridCube> {
    let mut v: Vec<GridCube> = cubes.into_iter().collect();
    v.sort_by_key(|&q| cube_order_key(grid, q));
    v
}

/// A step function (or weight) on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionJson {
    pub d: usize,
    pub depth: u32,
    pub root: CubeJson,
    pub values: Vec<f64>,
}

impl FunctionJson {
    pub fn from_function(f: &StepFunction) -> Self {
        let g = f.grid();
        FunctionJson { d: g.dim(), depth: g.depth(), root: CubeJson::from_cube(g.root()), values: f.to_lex() }
    }

    pub fn to_function(&self) -> Result<StepFunction> {
        let grid = grid_from(self.d, self.depth, &self.root)?;
        Ok(StepFunction::from_lex(grid, &self.values)?)
    }

    pub fn to_weight(&self) -> Result<Weight> {
        Ok(Weight::new(self.to_function()?)?)
    }
}

/// `cell_index,value` lines in lexicographic cell order.
pub fn function_csv(f: &StepFunction) -> String {
    let mut out = String::from("cell_index,value\n");
    for (i, v) in f.to_lex().iter().enumerate() {
        out.push_str(&format!("{i},{v:.16e}\n"));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub cube: CubeJson,
    pub lambda: f64,
}

/// Nonzero shift coefficients; omitted cubes have `λ_Q = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientsJson {
    pub d: usize,
    pub depth: u32,
    pub root: CubeJson,
    pub entries: Vec<CoefficientEntry>,
}

impl CoefficientsJson {
    pub fn from_coefficients(c: &ShiftCoefficients) -> Self {
        let g = c.grid();
        let entries = sorted_cubes(g, c.entries().map(|(q, _)| q))
            .into_iter()
            .map(|q| CoefficientEntry { cube: CubeJson::from_cube(&g.to_dyadic(q)), lambda: c.get(q) })
            .collect();
        CoefficientsJson { d: g.dim(), depth: g.depth(), root: CubeJson::from_cube(g.root()), entries }
    }

    pub fn to_coefficients(&self) -> Result<ShiftCoefficients> {
        let grid = grid_from(self.d, self.depth, &self.root)?;
        let mut c = ShiftCoefficients::zero(grid.clone());
        for e in &self.entries {
            let q = grid.locate(&e.cube.to_cube()?)?;
            c.set(q, e.lambda)?;
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCube {
    pub cube: CubeJson,
    pub oscillation: f64,
    pub generation: u32,
    /// Lexicographic cell indices of `E(L)`, ascending.
    pub major_subset: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub d: usize,
    pub depth: u32,
    pub root: CubeJson,
    pub lambda: f64,
    pub base_median: f64,
    pub min_slack: f64,
    pub sparseness_ok: bool,
    pub cubes: Vec<DecompositionCube>,
}

impl DecompositionJson {
    pub fn new(dec: &LernerDecomposition, check: &DominationCheck) -> Self {
        let fam = &dec.family;
        let g = fam.grid();
        let mut cubes: Vec<(usize, GridCube)> = fam.cubes().iter().copied().enumerate().collect();
        cubes.sort_by_key(|&(_, q)| cube_order_key(g, q));
        let cubes = cubes
            .into_iter()
            .map(|(i, q)| {
                let mut major: Vec<usize> = fam.major_subsets()[i].iter().map(|&c| g.lex_of_tree(c as usize)).collect();
                major.sort_unstable();
                DecompositionCube {
                    cube: CubeJson::from_cube(&g.to_dyadic(q)),
                    oscillation: dec.coefficients[i],
                    generation: dec.generations[i],
                    major_subset: major,
                }
            })
            .collect();
        DecompositionJson {
            d: g.dim(),
            depth: g.depth(),
            root: CubeJson::from_cube(g.root()),
            lambda: dec.lambda,
            base_median: dec.base_median,
            min_slack: check.min_slack,
            sparseness_ok: check.sparseness_ok,
            cubes,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json { path: path.display().to_string(), source })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| FormatError::Io { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
