//! Coverage table of the two ratio intervals.

use std::path::Path;

use dpaudit_core::stats::coverage_simulate;
use dpaudit_core::types::IntervalMethod;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_P1: [f64; 6] = [0.01, 0.015, 0.02, 0.03, 0.04, 0.05];
pub const DEFAULT_N: [u64; 3] = [1000, 10_000, 50_000];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub method: IntervalMethod,
    pub samples_n: u64,
    pub p1: f64,
    pub p0: f64,
    pub trials: usize,
    pub coverage: f64,
}

/// Coverage at p0 = p1 for every (method, N, p1). Each grid point gets its
/// own seed so rows do not depend on the order they run in.
pub fn coverage_report(p1s: &[f64], ns: &[u64], alpha: f64, trials: usize, seed: u64) -> anyhow::Result<Vec<CoverageRow>> {
    let mut points = Vec::new();
    for method in [IntervalMethod::ClopperPearsonRatio, IntervalMethod::KatzLog] {
        for &n in ns {
            for &p1 in p1s {
                points.push((method, n, p1));
            }
        }
    }
    points
        .par_iter()
        .enumerate()
        .map(|(i, &(method, n, p1))| {
            let s = dpaudit_core::rng::derive_seed(seed, &[i as u64]);
            Ok(CoverageRow {
                method,
                samples_n: n,
                p1,
                p0: p1,
                trials,
                coverage: coverage_simulate(p1, p1, n, alpha, trials, method, s)?,
            })
        })
        .collect()
}

pub fn write_coverage_csv(rows: &[CoverageRow], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
