//! Ensembles of quotients over dyadic shells and the log-log fit of their maxima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimates::{quotient, sample_inputs, EnsembleSpec, EstimateId, EstimateParams, EvalOptions};
use crate::error::{Result, ZkError};
use crate::projectors::Dyadic;
use crate::stats::{loglog_fit, Fit};

/// One CSV row of an estimate run. Failed samples carry NaN values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub estimate_id: EstimateId,
    pub k: Option<u32>,
    pub s: Option<f64>,
    pub b: f64,
    pub eps: f64,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub quotient: f64,
}

/// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn sample_seed(base: u64, n: u64, index: usize) -> u64 {
    mix(mix(base ^ n.rotate_left(32)) ^ index as u64)
}

/// Quotients for `samples` draws on every shell, ordered by (N, sample index).
pub fn ensemble_rows(
    id: EstimateId,
    params: &EstimateParams,
    ens: &EnsembleSpec,
    ns: &[Dyadic],
    samples: usize,
    seed: u64,
    opt: &EvalOptions,
) -> Vec<(EstimateRow, Option<ZkError>)> {
    let jobs: Vec<(Dyadic, usize)> = ns.iter().flat_map(|&n| (0..samples).map(move |i| (n, i))).collect();
    jobs.par_iter()
        .map(|&(n, i)| {
            let sd = sample_seed(seed, n.get(), i);
            let res = sample_inputs(id, params, ens, n, sd).and_then(|inp| quotient(id, params, &inp, opt));
            let (lhs, rhs, q, err) = match res {
                Ok(q) => (q.lhs, q.rhs, q.quotient, None),
                Err(e) => (f64::NAN, f64::NAN, f64::NAN, Some(e)),
            };
            let row = EstimateRow {
                estimate_id: id,
                k: params.k,
                s: params.s,
                b: params.b,
                eps: params.eps,
                p: params.p,
                alpha: params.alpha,
                n: n.get(),
                l: ens.l,
                seed: sd,
                lhs,
                rhs,
                quotient: q,
            };
            (row, err)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellStats {
    #[serde(rename = "N")]
    pub n: u64,
    pub max: f64,
    pub median: f64,
    pub valid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub estimate: EstimateId,
    pub params: EstimateParams,
    pub rows: Vec<EstimateRow>,
    pub shells: Vec<ShellStats>,
    /// log max-quotient against log N.
    pub fit: Fit,
    pub max_quotient: f64,
}

pub fn shell_stats(rows: &[EstimateRow]) -> Vec<ShellStats> {
    let mut ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let mut q: Vec<f64> = rows.iter().filter(|r| r.n == n && r.quotient.is_finite()).map(|r| r.quotient).collect();
            q.sort_by(f64::total_cmp);
            let median = if q.is_empty() { f64::NAN } else { q[q.len() / 2] };
            ShellStats { n, max: q.last().copied().unwrap_or(f64::NAN), median, valid: q.len() }
        })
        .collect()
}

/// Sweep over at least four shells with at least 20 samples each.
pub fn scaling_sweep(
    id: EstimateId,
    params: &EstimateParams,
    ens: &EnsembleSpec,
    ns: &[Dyadic],
    samples: usize,
    seed: u64,
    opt: &EvalOptions,
) -> Result<SweepReport> {
    if ns.len() < 4 || samples < 20 {
        return Err(ZkError::contract("a sweep needs at least 4 shells and 20 samples per shell"));
    }
    params.check(id)?;
    let rows: Vec<EstimateRow> = ensemble_rows(id, params, ens, ns, samples, seed, opt).into_iter().map(|r| r.0).collect();
    summarize(id, params, rows)
}

/// Shell maxima and their log-log fit for rows of one (estimate, params) run.
pub fn summarize(id: EstimateId, params: &EstimateParams, rows: Vec<EstimateRow>) -> Result<SweepReport> {
    let shells = shell_stats(&rows);
    let pts: Vec<(f64, f64)> = shells.iter().filter(|s| s.max.is_finite()).map(|s| (s.n as f64, s.max)).collect();
    let fit = loglog_fit(&pts)?;
    let max_quotient = shells.iter().map(|s| s.max).filter(|m| m.is_finite()).fold(0.0, f64::max);
    Ok(SweepReport { estimate: id, params: *params, rows, shells, fit, max_quotient })
}
