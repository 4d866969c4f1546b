//! Flat key = value grid-file parser for the `coverage` subcommand.
//!
//! The format is a sequence of `key = value` lines; list-valued keys take
//! comma-separated entries and the experiment runs their cartesian
//! product. `#` starts a comment. Example:
//!
//! ```text
//! model = poisson
//! lambda = 0.0, 1.0, 5.0
//! epsilon = 3.0
//! m = 20, 100
//! levels = 0.90, 0.95
//! methods = bayes, im, nim
//! replicates = 2000
//! mc_samples = 2000
//! seed = 42
//! prior_a = 1.0
//! prior_b = 0.0
//! ```

use imci_core::poisson::bayes::PriorSpec;
use imci_core::sim::{ExperimentGrid, NormalCell, PoissonCell, TruthGrid};
use imci_core::Method;
use std::collections::BTreeMap;

#[derive(Debug)]
pub struct ParsedGrid {
    pub grid: ExperimentGrid,
    /// True when the file carried its own seed (no fallback applied).
    pub seed_from_file: bool,
}

pub fn parse_grid_file(text: &str, fallback_seed: u64) -> Result<ParsedGrid, String> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected 'key = value', got '{raw}'", lineno + 1));
        };
        let key = k.trim().to_ascii_lowercase();
        if kv.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key '{key}'", lineno + 1));
        }
    }

    let model = kv
        .remove("model")
        .ok_or_else(|| "missing key 'model' (normal or poisson)".to_string())?;
    let levels = take_f64_list(&mut kv, "levels")?
        .ok_or_else(|| "missing key 'levels'".to_string())?;
    let methods_raw = kv
        .remove("methods")
        .ok_or_else(|| "missing key 'methods'".to_string())?;
    let methods = methods_raw
        .split(',')
        .map(|s| s.trim().parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    // Desk-scale defaults; full-scale runs set both to 10000 explicitly.
    let replicates = take_usize(&mut kv, "replicates")?.unwrap_or(2000);
    let mc_samples = take_usize(&mut kv, "mc_samples")?.unwrap_or(2000);
    let seed = take_u64(&mut kv, "seed")?;
    let prior_a = take_f64(&mut kv, "prior_a")?.unwrap_or(1.0);
    let prior_b = take_f64(&mut kv, "prior_b")?.unwrap_or(0.0);
    let prior = PriorSpec::new(prior_a, prior_b).map_err(|e| e.to_string())?;

    let truth = match model.as_str() {
        "normal" => {
            let thetas = take_f64_list(&mut kv, "theta")?
                .ok_or_else(|| "normal model: missing key 'theta'".to_string())?;
            let sigma2s = take_f64_list(&mut kv, "sigma2")?.unwrap_or_else(|| vec![1.0]);
            let rs = take_f64_list(&mut kv, "r")?
                .ok_or_else(|| "normal model: missing key 'r'".to_string())?;
            let mut cells = Vec::new();
            for &theta in &thetas {
                for &sigma2 in &sigma2s {
                    for &r in &rs {
                        if r < 1.0 || r.fract() != 0.0 {
                            return Err(format!("r must be a positive integer, got {r}"));
                        }
                        cells.push(NormalCell { theta, sigma2, r: r as u32 });
                    }
                }
            }
            TruthGrid::Normal(cells)
        }
        "poisson" => {
            let lambdas = take_f64_list(&mut kv, "lambda")?
                .ok_or_else(|| "poisson model: missing key 'lambda'".to_string())?;
            let epsilons = take_f64_list(&mut kv, "epsilon")?
                .ok_or_else(|| "poisson model: missing key 'epsilon'".to_string())?;
            let ms = take_f64_list(&mut kv, "m")?
                .ok_or_else(|| "poisson model: missing key 'm'".to_string())?;
            let mut cells = Vec::new();
            for &lambda in &lambdas {
                for &epsilon in &epsilons {
                    for &m in &ms {
                        cells.push(PoissonCell { lambda, epsilon, m });
                    }
                }
            }
            TruthGrid::Poisson(cells)
        }
        other => return Err(format!("unknown model '{other}' (expected normal or poisson)")),
    };

    if let Some(stray) = kv.keys().next() {
        return Err(format!("unknown key '{stray}'"));
    }

    Ok(ParsedGrid {
        grid: ExperimentGrid {
            truth,
            levels,
            methods,
            replicates,
            mc_samples,
            seed: seed.unwrap_or(fallback_seed),
            prior,
        },
        seed_from_file: seed.is_some(),
    })
}

fn take_f64(kv: &mut BTreeMap<String, String>, key: &str) -> Result<Option<f64>, String> {
    kv.remove(key)
        .map(|v| v.parse::<f64>().map_err(|_| format!("key '{key}': invalid number '{v}'")))
        .transpose()
}

fn take_u64(kv: &mut BTreeMap<String, String>, key: &str) -> Result<Option<u64>, String> {
    kv.remove(key)
        .map(|v| v.parse::<u64>().map_err(|_| format!("key '{key}': invalid integer '{v}'")))
        .transpose()
}

fn take_usize(kv: &mut BTreeMap<String, String>, key: &str) -> Result<Option<usize>, String> {
    kv.remove(key)
        .map(|v| v.parse::<usize>().map_err(|_| format!("key '{key}': invalid count '{v}'")))
        .transpose()
}

fn take_f64_list(kv: &mut BTreeMap<String, String>, key: &str) -> Result<Option<Vec<f64>>, String> {
    let Some(v) = kv.remove(key) else { return Ok(None) };
    let parsed = v
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("key '{key}': invalid number '{}'", s.trim()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if parsed.is_empty() {
        return Err(format!("key '{key}': empty list"));
    }
    Ok(Some(parsed))
}
