//! Monte Carlo harness for coverage probability, expected length, and the
//! uniformity diagnostic of the NIM auxiliary distribution.
//!
//! Every (grid cell, replicate) pair owns an independent substream keyed
//! by its indices, so runs are reproducible cell by cell and identical
//! grids produce byte-identical CSV output regardless of thread count.

use crate::error::{domain, Error, Result};
use crate::interval::Method;
use crate::normal::{bayes_normal_ci, im_normal_ci, NormalData};
use crate::poisson::bayes::{bayes_poisson_ci, PriorSpec};
use crate::poisson::im::{build_endpoint_sample, im_poisson_ci_from};
use crate::poisson::nim::{build_nim_sample, nim_poisson_ci_from};
use crate::poisson::PoissonData;
use crate::rng::{substream_id, RngStream};
use crate::empirical;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridModel {
    #[serde(rename = "normal")]
    Normal,
    #[serde(rename = "poisson")]
    Poisson,
}

impl fmt::Display for GridModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridModel::Normal => "normal",
            GridModel::Poisson => "poisson",
        })
    }
}

/// One truth point of the constrained-normal grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalCell {
    pub theta: f64,
    pub sigma2: f64,
    pub r: u32,
}

/// One truth point of the Poisson grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonCell {
    pub lambda: f64,
    pub epsilon: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TruthGrid {
    Normal(Vec<NormalCell>),
    Poisson(Vec<PoissonCell>),
}

/// A full experiment description: truth grid, levels, methods, replicate
/// count M, per-interval Monte Carlo size n, and the root seed.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub truth: TruthGrid,
    pub levels: Vec<f64>,
    pub methods: Vec<Method>,
    /// Number of simulated datasets per cell (M).
    pub replicates: usize,
    /// Monte Carlo draws per IM/NIM interval (n).
    pub mc_samples: usize,
    pub seed: u64,
    /// Prior used by the Bayesian Poisson method; recorded in JSON rows.
    pub prior: PriorSpec,
}

/// One output record: a (cell, method, level) aggregate.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageRow {
    pub model: GridModel,
    pub method: Method,
    pub level: f64,
    pub theta_or_lambda: f64,
    /// epsilon for the Poisson model, sigma^2 for the normal model.
    pub epsilon: f64,
    /// m for the Poisson model, r for the normal model.
    pub m_or_r: f64,
    pub coverage: f64,
    pub expected_length: f64,
    pub mc_stderr: f64,
    #[serde(rename = "M")]
    pub replicates: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_b: Option<f64>,
}

/// Coverage and expected length over the constrained-normal grid, for the
/// Bayesian and IM methods.
pub fn run_normal_coverage(grid: &ExperimentGrid) -> Result<Vec<CoverageRow>> {
    let cells = match &grid.truth {
        TruthGrid::Normal(cells) => cells,
        TruthGrid::Poisson(_) => {
            return Err(domain("run_normal_coverage requires a normal truth grid"))
        }
    };
    validate_common(grid, &[Method::Bayes, Method::Im])?;
    let offenders: Vec<String> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            if !(c.theta >= 0.0) || !(c.sigma2 > 0.0) || c.r < 1 {
                Some(format!(
                    "cell {i}: theta={} sigma2={} r={}",
                    c.theta, c.sigma2, c.r
                ))
            } else {
                None
            }
        })
        .collect();
    if !offenders.is_empty() {
        return Err(Error::Grid(offenders.join("; ")));
    }

    let mut rows = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let sigma = cell.sigma2.sqrt();
        // (covered, width) per replicate, ordered (method-major, level-minor).
        let per_rep: Vec<Vec<(bool, f64)>> = (0..grid.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut stream = RngStream::new(grid.seed, substream_id(ci as u64, rep as u64));
                let z = stream.std_normal();
                let chi = stream.chi_square(cell.r).expect("r validated");
                let x = cell.theta + sigma * z;
                let w = (cell.sigma2 * chi).max(f64::MIN_POSITIVE);
                let d = NormalData::new(x, w, cell.r).expect("validated");
                let mut out = Vec::with_capacity(grid.methods.len() * grid.levels.len());
                for method in &grid.methods {
                    for &level in &grid.levels {
                        let alpha = 1.0 - level;
                        let iv = match method {
                            Method::Bayes => bayes_normal_ci(&d, alpha),
                            Method::Im => im_normal_ci(&d, alpha),
                            Method::Nim => unreachable!("validated"),
                        }
                        .expect("inputs validated");
                        out.push((iv.contains(cell.theta), iv.width()));
                    }
                }
                out
            })
            .collect();
        aggregate_cell(
            grid,
            GridModel::Normal,
            cell.theta,
            cell.sigma2,
            cell.r as f64,
            None,
            &per_rep,
            &mut rows,
        );
    }
    Ok(rows)
}

/// Coverage and expected length over the Poisson grid, for the Bayesian,
/// IM, and NIM methods.
pub fn run_poisson_coverage(grid: &ExperimentGrid) -> Result<Vec<CoverageRow>> {
    let cells = match &grid.truth {
        TruthGrid::Poisson(cells) => cells,
        TruthGrid::Normal(_) => {
            return Err(domain("run_poisson_coverage requires a Poisson truth grid"))
        }
    };
    validate_common(grid, &[Method::Bayes, Method::Im, Method::Nim])?;
    let offenders: Vec<String> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            if !(c.lambda >= 0.0) || !(c.epsilon >= 0.0) || !(c.m > 0.0) {
                Some(format!(
                    "cell {i}: lambda={} epsilon={} m={}",
                    c.lambda, c.epsilon, c.m
                ))
            } else {
                None
            }
        })
        .collect();
    if !offenders.is_empty() {
        return Err(Error::Grid(offenders.join("; ")));
    }

    let mut rows = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let per_rep: Vec<Vec<(bool, f64)>> = (0..grid.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut stream = RngStream::new(grid.seed, substream_id(ci as u64, rep as u64));
                let x = stream.poisson(cell.epsilon + cell.lambda).expect("validated");
                let w = stream.poisson(cell.m * cell.epsilon).expect("validated");
                // Derived seeds are drawn unconditionally so that each
                // method sees the same data regardless of which methods run.
                let im_seed = stream.derive_seed();
                let nim_seed = stream.derive_seed();
                let d = PoissonData::new(x, w, cell.m).expect("validated");
                let mut out = Vec::with_capacity(grid.methods.len() * grid.levels.len());
                for method in &grid.methods {
                    match method {
                        Method::Bayes => {
                            for &level in &grid.levels {
                                let iv = bayes_poisson_ci(&d, &grid.prior, 1.0 - level)
                                    .expect("inputs validated");
                                out.push((iv.contains(cell.lambda), iv.width()));
                            }
                        }
                        Method::Im => {
                            let sample = build_endpoint_sample(&d, grid.mc_samples, im_seed)
                                .expect("n validated");
                            for &level in &grid.levels {
                                let iv = im_poisson_ci_from(&sample, 1.0 - level)
                                    .expect("inputs validated");
                                out.push((iv.contains(cell.lambda), iv.width()));
                            }
                        }
                        Method::Nim => {
                            let sample = build_nim_sample(&d, grid.mc_samples, nim_seed)
                                .expect("n validated");
                            for &level in &grid.levels {
                                let iv = nim_poisson_ci_from(&sample, 1.0 - level)
                                    .expect("inputs validated");
                                out.push((iv.contains(cell.lambda), iv.width()));
                            }
                        }
                    }
                }
                out
            })
            .collect();
        aggregate_cell(
            grid,
            GridModel::Poisson,
            cell.lambda,
            cell.epsilon,
            cell.m,
            Some(grid.prior),
            &per_rep,
            &mut rows,
        );
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn aggregate_cell(
    grid: &ExperimentGrid,
    model: GridModel,
    truth: f64,
    nuisance: f64,
    scale: f64,
    prior: Option<PriorSpec>,
    per_rep: &[Vec<(bool, f64)>],
    rows: &mut Vec<CoverageRow>,
) {
    let m_reps = per_rep.len();
    let mut slot = 0;
    for method in &grid.methods {
        for &level in &grid.levels {
            let mut hits = 0usize;
            let mut width_sum = 0.0;
            for rep in per_rep {
                let (covered, width) = rep[slot];
                hits += covered as usize;
                width_sum += width;
            }
            let coverage = hits as f64 / m_reps as f64;
            rows.push(CoverageRow {
                model,
                method: *method,
                level,
                theta_or_lambda: truth,
                epsilon: nuisance,
                m_or_r: scale,
                coverage,
                expected_length: width_sum / m_reps as f64,
                mc_stderr: (coverage * (1.0 - coverage) / m_reps as f64).sqrt(),
                replicates: m_reps,
                n: grid.mc_samples,
                seed: grid.seed,
                prior_a: prior.map(|p| p.a),
                prior_b: prior.map(|p| p.b),
            });
            slot += 1;
        }
    }
}

fn validate_common(grid: &ExperimentGrid, allowed: &[Method]) -> Result<()> {
    if grid.replicates < 1 {
        return Err(Error::Grid("replicates M must be >= 1".into()));
    }
    if grid.mc_samples < 1 {
        return Err(Error::Grid("mc_samples n must be >= 1".into()));
    }
    if grid.methods.is_empty() {
        return Err(Error::Grid("no methods requested".into()));
    }
    for m in &grid.methods {
        if !allowed.contains(m) {
            return Err(Error::Grid(format!("method {m} not available for this model")));
        }
    }
    for &l in &grid.levels {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::Grid(format!("level {l} must lie in (0, 1)")));
        }
    }
    if grid.levels.is_empty() {
        return Err(Error::Grid("no levels requested".into()));
    }
    Ok(())
}

/// Result of the NIM auxiliary-uniformity diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct UniformityDiagnostic {
    /// Two-sided KS distance of H-hat values to Unif(0,1).
    pub ks_distance: f64,
    /// Sorted (H-hat value, empirical cdf) pairs.
    pub ecdf: Vec<(f64, f64)>,
}

/// Draw `samples` fresh (x, w) pairs at truth (lambda, epsilon, m),
/// evaluate H-hat_{x,w}(lambda) with a NIM sample of size n for each pair,
/// and measure the KS distance of those values to Unif(0,1).
pub fn uniformity_diagnostic(
    lambda: f64,
    epsilon: f64,
    m: f64,
    samples: usize,
    n: usize,
    seed: u64,
) -> Result<UniformityDiagnostic> {
    if !(lambda >= 0.0) || !(epsilon >= 0.0) || !(m > 0.0) {
        return Err(domain(format!(
            "invalid truth point: lambda={lambda} epsilon={epsilon} m={m}"
        )));
    }
    if samples < 100 {
        return Err(domain("uniformity diagnostic needs samples >= 100"));
    }
    if n < 1 {
        return Err(domain("NIM sample size n must be >= 1"));
    }
    let mut values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(seed, i as u64);
            let x = stream.poisson(epsilon + lambda).expect("validated");
            let w = stream.poisson(m * epsilon).expect("validated");
            let nim_seed = stream.derive_seed();
            let d = PoissonData::new(x, w, m).expect("validated");
            let sample = build_nim_sample(&d, n, nim_seed).expect("n validated");
            empirical::fraction_at_or_below(&sample.draws, lambda)
        })
        .collect();
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    let ks_distance = empirical::ks_distance_uniform01(&values);
    let count = values.len();
    let ecdf = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / count as f64))
        .collect();
    Ok(UniformityDiagnostic { ks_distance, ecdf })
}

/// CSV encoding of coverage rows; one row per (cell, method, level), with
/// the fixed column set shared by every run.
pub fn rows_to_csv(rows: &[CoverageRow]) -> String {
    let mut out = String::from(
        "model,method,level,theta_or_lambda,epsilon,m_or_r,coverage,expected_length,mc_stderr,M,n,seed\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.model,
            r.method,
            r.level,
            r.theta_or_lambda,
            r.epsilon,
            r.m_or_r,
            r.coverage,
            r.expected_length,
            r.mc_stderr,
            r.replicates,
            r.n,
            r.seed
        ));
    }
    out
}

/// JSON mirror of the same records (includes the Bayesian prior fields on
/// Poisson rows).
pub fn rows_to_json(rows: &[CoverageRow]) -> Result<String> {
    serde_json::to_string_pretty(rows)
        .map_err(|e| Error::Numerical(format!("JSON encoding failed: {e}")))
}
