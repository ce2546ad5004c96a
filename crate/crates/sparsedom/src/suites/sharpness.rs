//! The extremal pair for `S_k⁺`: `‖f‖₁ = 1` and `(S_k⁺)* f ≡ k + 1`.

use num_rational::Ratio;
use sparsedom_core::shift::{extremal_family, extremal_family_exact, weak11_ratio};

use super::{trials, ExperimentConfig, SuiteError};
use crate::report::Row;

const NAME: &str = "sharpness";

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<Row>, SuiteError> {
    let ks: Vec<u32> = config.k.clone().collect();
    let start = *config.k.start() as u64;
    trials(NAME, config, start, ks.len(), |trial, _| {
        let k = trial as u32;
        let depth = config.depth.unwrap_or(0).max(2 * k);
        let (spec, f) = extremal_family(k, depth)?;
        let out = spec.apply_adjoint(&f)?;
        let target = (k + 1) as f64;
        let (_, ints) = extremal_family_exact(k, depth)?;
        let exact = spec.apply_adjoint_exact(&ints)?;
        let mismatches = exact.iter().filter(|v| **v != Ratio::from_integer((k + 1) as i128)).count();
        Ok(vec![
            Row::equal(NAME, "l1_norm_is_one", trial, f.l1_norm(), 1.0, 1e-12),
            Row::equal(NAME, "adjoint_weak_norm", trial, out.weak_l1_norm(), target, 1e-12),
            Row::equal(NAME, "adjoint_weak_ratio", trial, weak11_ratio(&spec.adjoint(), &f)?, target, 1e-12),
            Row::bound(NAME, "exact_cells_off_k_plus_1", trial, mismatches as f64, 0.0),
        ])
    })
}
