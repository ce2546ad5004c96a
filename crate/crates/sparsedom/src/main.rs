use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sparsedom::io::{
    function_csv, read_json, to_json_string, write_output, CoefficientsJson, DecompositionJson, FunctionJson,
};
use sparsedom::report::{to_csv, to_json, to_text};
use sparsedom::{run, ExperimentConfig, SuiteReport, SUITE_NAMES};
use sparsedom_core::lerner::{decompose, default_lambda, verify_domination};
use sparsedom_core::two_weight::verify_lsu;
use sparsedom_core::weights::{ainfty_constant, ap_constant};

#[derive(Parser)]
#[command(name = "sparsedom", version, about = "Sparse domination and two-weight experiments on finite dyadic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiment suites (all of them when none is named).
    Suite {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITE_NAMES))]
        names: Vec<String>,
        /// Same as a positional name; may be repeated.
        #[arg(long = "suite", value_parser = clap::builder::PossibleValuesParser::new(SUITE_NAMES))]
        selected: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the extremal weak-type identity for a range of complexities.
    Sharpness {
        #[command(flatten)]
        common: Common,
    },
    /// Decompose a step function into a sparse family.
    Lerner {
        #[arg(long)]
        input: PathBuf,
        /// Oscillation parameter; defaults to 2^{-d-2}.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a positive dyadic shift to a step function.
    ShiftApply {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: ValueFormat,
    },
    /// Weight characteristics of a weight and its dual.
    Constants {
        #[arg(long)]
        weight: PathBuf,
        /// Defaults to the dual weight `w^{1-p'}`.
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Norm of `T(·σ)` against its testing constants.
    TwoWeight {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        omega: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// Random candidates for the norm search when `(p, q) ≠ (2, 2)`.
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = ExperimentConfig::default().seed)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long = "d")]
    dim: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Complexity `K` or inclusive range `a..b`.
    #[arg(long, value_parser = parse_k, default_value = "0..6")]
    k: RangeInclusive<u32>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ValueFormat {
    Json,
    Csv,
}

fn parse_k(s: &str) -> Result<RangeInclusive<u32>, String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad complexity `{t}`: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty range {a}..{b}"));
            }
            Ok(a..=b)
        }
        None => num(s).map(|k| k..=k),
    }
}

impl Common {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            trials: self.trials,
            depth: self.depth,
            dim: self.dim,
            p: self.p,
            q: self.q,
            k: self.k.clone(),
            threads: self.threads,
        }
    }
}

fn emit_reports(reports: &[SuiteReport], common: &Common) -> Result<bool> {
    let text = to_text(reports);
    let body = match common.format {
        ReportFormat::Text => text.clone(),
        ReportFormat::Json => to_json(reports),
        ReportFormat::Csv => to_csv(reports),
    };
    write_output(common.out.as_deref(), &body)?;
    if !matches!(common.format, ReportFormat::Text) || common.out.is_some() {
        eprint!("{text}");
    }
    Ok(reports.iter().all(SuiteReport::passed))
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    Ok(write_output(out, &to_json_string(value))?)
}

#[derive(Serialize)]
struct ConstantsOut {
    p: f64,
    ap: f64,
    ainfty_w: f64,
    ainfty_sigma: f64,
}

#[derive(Serialize)]
struct TwoWeightOut {
    p: f64,
    q: f64,
    norm: f64,
    norm_is_exact: bool,
    testing: f64,
    testing_dual: f64,
    upper_bound: f64,
    lower_ok: bool,
    upper_ok: bool,
}

/// `Ok(true)` when every checked inequality held.
fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Suite { names, selected, common } => {
            let chosen: Vec<&str> = names.iter().chain(&selected).map(String::as_str).collect();
            let names = if chosen.is_empty() { SUITE_NAMES.to_vec() } else { chosen };
            let reports = run(&names, &common.config())?;
            emit_reports(&reports, &common)
        }
        Command::Sharpness { common } => {
            let reports = run(&["sharpness"], &common.config())?;
            emit_reports(&reports, &common)
        }
        Command::Lerner { input, lambda, out } => {
            let f = read_json::<FunctionJson>(&input)?.to_function()?;
            let lambda = lambda.unwrap_or_else(|| default_lambda(f.grid().dim()));
            let dec = decompose(&f, lambda)?;
            let check = verify_domination(&f, &dec)?;
            emit(out.as_deref(), &DecompositionJson::new(&dec, &check))?;
            Ok(check.sparseness_ok && check.min_slack >= -1e-12 * f.max_abs().max(1.0))
        }
        Command::ShiftApply { coeffs, input, out, format } => {
            let c = read_json::<CoefficientsJson>(&coeffs)?.to_coefficients()?;
            let f = read_json::<FunctionJson>(&input)?.to_function()?;
            let g = c.apply(&f).context("coefficients and function must share a grid")?;
            match format {
                ValueFormat::Json => emit(out.as_deref(), &FunctionJson::from_function(&g))?,
                ValueFormat::Csv => write_output(out.as_deref(), &function_csv(&g))?,
            }
            Ok(true)
        }
        Command::Constants { weight, sigma, p, out } => {
            let w = read_json::<FunctionJson>(&weight)?.to_weight()?;
            let sigma = match sigma {
                Some(path) => read_json::<FunctionJson>(&path)?.to_weight()?,
                None => w.dual(p)?,
            };
            let result = ConstantsOut { p, ap: ap_constant(&w, &sigma, p)?, ainfty_w: ainfty_constant(&w), ainfty_sigma: ainfty_constant(&sigma) };
            emit(out.as_deref(), &result)?;
            Ok(true)
        }
        Command::TwoWeight { coeffs, sigma, omega, p, q, budget, seed, out } => {
            if p > q {
                bail!("two-weight needs p <= q");
            }
            let c = read_json::<CoefficientsJson>(&coeffs)?.to_coefficients()?;
            let sigma = read_json::<FunctionJson>(&sigma)?.to_weight()?;
            let omega = read_json::<FunctionJson>(&omega)?.to_weight()?;
            let r = verify_lsu(&c, &sigma, &omega, p, q, budget, &mut ChaCha8Rng::seed_from_u64(seed))?;
            emit(
                out.as_deref(),
                &TwoWeightOut {
                    p,
                    q,
                    norm: r.norm,
                    norm_is_exact: r.norm_is_exact,
                    testing: r.testing,
                    testing_dual: r.testing_dual,
                    upper_bound: r.upper_bound,
                    lower_ok: r.lower_ok,
                    upper_ok: r.upper_ok,
                },
            )?;
            Ok(r.lower_ok && r.upper_ok)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
