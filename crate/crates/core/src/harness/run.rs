use std::time::Instant;

use rayon::prelude::*;

use super::config::{ScenarioConfig, TruncationKind, VarianceMode};
use super::records::TrialRecord;
use crate::block::{BlockStructure, DataVector};
use crate::estimate::{exact_minimizer, sa_minimizer, tan_witten_minimizer, EstimateResult, Method};
use crate::inference::{known_variance_test, unknown_variance_test, Truncation};
use crate::specfun::SeededRng;
use crate::{Error, Result};

const DATA_STREAM: u64 = 0;
const ESTIMATE_STREAM: u64 = 1;
const TRUNCATION_STREAM: u64 = 2;

/// `(i mod K) + 1` for `i = 1..=len`.
pub fn round_robin_labels(len: usize, k: usize) -> Vec<usize> {
    (1..=len).map(|i| i % k + 1).collect()
}

/// Round-robin null memberships in canonical form.
pub fn null_memberships(n: usize, p: usize, k_null: usize, h_null: usize) -> Result<BlockStructure> {
    crate::enumerate::check_caps(n, p, k_null, h_null)?;
    BlockStructure::new(&round_robin_labels(n, k_null), &round_robin_labels(p, h_null), k_null, h_null)
}

/// Column-major entry means `(1 - (l - 1)/5) (B - 0.5) + 0.5`, with `B`
/// looked up by the given (1-based) row and column labels.
pub fn mean_vector(level: u8, base: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> Result<Vec<f64>> {
    if !(1..=5).contains(&level) {
        return Err(Error::Domain(format!("level must lie in 1..=5, got {level}")));
    }
    let shrink = 1.0 - (level as f64 - 1.0) / 5.0;
    let mut mu = Vec::with_capacity(rows.len() * cols.len());
    for &h in cols {
        for &k in rows {
            let b = base
                .get(k - 1)
                .and_then(|r| r.get(h - 1))
                .ok_or_else(|| Error::Domain(format!("no base mean for block ({k}, {h})")))?;
            mu.push(shrink * (b - 0.5) + 0.5);
        }
    }
    Ok(mu)
}

/// Trial `index` of the scenario, drawn from its own derived stream.
pub fn generate_trial(config: &ScenarioConfig, index: usize) -> Result<DataVector> {
    let rows = round_robin_labels(config.n, config.k_null);
    let cols = round_robin_labels(config.p, config.h_null);
    let mu = mean_vector(config.level, &config.base_means, &rows, &cols)?;
    let mut rng = SeededRng::derive(config.seed, &[index as u64, DATA_STREAM]);
    let x = mu.iter().map(|m| m + config.sigma0 * rng.standard_normal()).collect();
    DataVector::new(config.n, config.p, x)
}

fn estimate(config: &ScenarioConfig, x: &DataVector, index: usize) -> Result<EstimateResult> {
    let mut rng = SeededRng::derive(config.seed, &[index as u64, ESTIMATE_STREAM]);
    match config.estimator {
        Method::Exact => exact_minimizer(x, config.k, config.h),
        Method::Anneal => sa_minimizer(x, config.k, config.h, &config.schedule, &mut rng),
        Method::TanWitten => Ok(tan_witten_minimizer(x, config.k, config.h, &mut rng)?.result),
    }
}

/// Runs one trial: generate, estimate, test.
///
/// Failures of the test itself (a degenerate residual, a reference block
/// too small for the F ratio) yield p-values of 1 with the degenerate flag.
pub fn run_trial(config: &ScenarioConfig, index: usize, g_null: &BlockStructure) -> Result<TrialRecord> {
    let start = Instant::now();
    let x = generate_trial(config, index)?;
    let est = estimate(config, &x, index)?;
    let mut record = TrialRecord {
        trial: index,
        seed: config.seed,
        n: config.n,
        p: config.p,
        k: config.k,
        h: config.h,
        k_null: config.k_null,
        h_null: config.h_null,
        level: config.level,
        estimator: config.estimator,
        matched_null: est.g_hat == *g_null,
        t: 0.0,
        beta: f64::INFINITY,
        p_selective: 1.0,
        p_naive: 1.0,
        residue: est.residue,
        degenerate: true,
        elapsed_ms: 0.0,
    };
    match config.variance {
        VarianceMode::Known => {
            let truncation = match config.truncation {
                TruncationKind::Exact => Truncation::Exact,
                TruncationKind::Anneal => Truncation::Anneal(config.schedule),
            };
            let mut rng = SeededRng::derive(config.seed, &[index as u64, TRUNCATION_STREAM]);
            let rep = known_variance_test(&x, &est.g_hat, config.k, config.h, config.sigma0, &truncation, &mut rng)?;
            record.t = rep.t;
            record.beta = rep.beta;
            record.p_selective = rep.p_selective;
            record.p_naive = rep.p_naive;
            record.degenerate = rep.degenerate;
        }
        VarianceMode::Unknown(reference) => match unknown_variance_test(&x, &est.g_hat, config.k, config.h, reference) {
            Ok(rep) => {
                record.t = rep.t_f;
                record.beta = rep.intervals.last().map_or(f64::INFINITY, |iv| iv.hi);
                record.p_selective = rep.p_selective;
                record.p_naive = rep.p_naive;
                record.degenerate = rep.degenerate;
            }
            Err(Error::Domain(_) | Error::ZeroMass) => {}
            Err(e) => return Err(e),
        },
    }
    if config.timing {
        record.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(record)
}

/// All trials of a scenario in trial order. Trials run in parallel; the
/// output depends only on the configuration.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let g_null = null_memberships(config.n, config.p, config.k_null, config.h_null)?;
    (0..config.trials).into_par_iter().map(|i| run_trial(config, i, &g_null)).collect()
}
