//! The (attack × ε_th × replicate) sweep and its report files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use dpaudit_core::attacks::{select_k, AttackContext};
use dpaudit_core::estimator::audit_pair;
use dpaudit_core::float_repr;
use dpaudit_core::rng::derive_seed;
use dpaudit_core::stats::max_detectable_eps;
use dpaudit_core::types::Witness;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const REPORT_SCHEMA: &str = "dpaudit-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub schema: String,
    /// Seconds since the epoch; the only field that varies between runs.
    pub created_unix: u64,
    pub config: RunConfig,
    pub dataset_n: usize,
    pub dataset_d: usize,
    #[serde(with = "float_repr")]
    pub max_detectable_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mechanism: String,
    pub attack: String,
    pub eps_th: f64,
    pub k: u32,
    pub replicate: usize,
    pub seed: u64,
    #[serde(with = "float_repr")]
    pub eps_lb: f64,
    pub n1: usize,
    pub n0: usize,
    pub samples_n: usize,
    pub used_complement: bool,
    pub threshold: f64,
    #[serde(with = "float_repr")]
    pub eps_lb_search: f64,
    pub c_hat: f64,
    pub posterior_degenerate: bool,
    pub witness: Option<Witness>,
    pub error: Option<String>,
}

/// Summary of one (attack, ε_th) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub attack: String,
    pub eps_th: f64,
    pub k: u32,
    pub replicates: usize,
    pub median_eps_lb: f64,
    /// min(ε_th, max_detectable/k): the largest bound this audit could show.
    pub reference: f64,
}

#[derive(Clone, Debug)]
pub struct GridReport {
    pub header: ReportHeader,
    pub rows: Vec<ReportRow>,
    /// Wall time per row, same order as `rows`.
    pub wall_seconds: Vec<f64>,
}

impl GridReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Seed of one audit, derived from the master seed and its grid position.
pub fn job_seed(master: u64, attack: usize, eps: f64, replicate: usize) -> u64 {
    derive_seed(master, &[attack as u64, eps.to_bits(), replicate as u64])
}

/// Runs every audit on the current rayon pool. Failures become rows with
/// `error` set.
pub fn run_grid(cfg: &RunConfig) -> anyhow::Result<GridReport> {
    let cfg = cfg.clone().resolved();
    cfg.validate()?;
    let data = cfg.load_dataset().context("loading dataset")?;
    let jobs: Vec<(usize, f64, usize)> = (0..cfg.attacks.len())
        .flat_map(|a| cfg.eps_grid.iter().flat_map(move |&e| (0..cfg.replicates).map(move |r| (a, e, r))))
        .collect();
    let mech_name = serde_json::to_value(cfg.mechanism.kind())?.as_str().unwrap_or_default().to_string();
    let results: Vec<(ReportRow, f64)> = jobs
        .par_iter()
        .map(|&(a, eps, rep)| {
            let attack = &cfg.attacks[a];
            let seed = job_seed(cfg.audit.master_seed, a, eps, rep);
            let start = Instant::now();
            let mut row = ReportRow {
                mechanism: mech_name.clone(),
                attack: attack.kind.name().to_string(),
                eps_th: eps,
                k: select_k(eps, &cfg.audit.k_policy).unwrap_or(0),
                replicate: rep,
                seed,
                eps_lb: f64::NAN,
                n1: 0,
                n0: 0,
                samples_n: cfg.audit.samples_n,
                used_complement: false,
                threshold: f64::NAN,
                eps_lb_search: f64::NAN,
                c_hat: f64::NAN,
                posterior_degenerate: false,
                witness: None,
                error: None,
            };
            let ctx = AttackContext {
                surrogate_c: cfg.audit.surrogate_c,
                seed,
            };
            let outcome = cfg
                .audit_config(eps, seed)
                .and_then(|ac| Ok(audit_pair(&data, &cfg.mechanism, attack, &ctx, &ac)?));
            match outcome {
                Ok(r) => {
                    row.k = r.k;
                    row.eps_lb = r.eps_lb;
                    row.n1 = r.n1;
                    row.n0 = r.n0;
                    row.used_complement = r.used_complement;
                    row.threshold = r.threshold_t;
                    row.eps_lb_search = r.eps_lb_search;
                    row.c_hat = r.c_hat;
                    row.posterior_degenerate = r.posterior_degenerate;
                    row.witness = Some(r.witness);
                }
                Err(e) => row.error = Some(format!("{e:#}")),
            }
            (row, start.elapsed().as_secs_f64())
        })
        .collect();
    let (rows, wall_seconds) = results.into_iter().unzip();
    let header = ReportHeader {
        schema: REPORT_SCHEMA.to_string(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        max_detectable_eps: max_detectable_eps(cfg.audit.samples_n as u64, cfg.audit.alpha),
        dataset_n: data.n(),
        dataset_d: data.d(),
        config: cfg,
    };
    Ok(GridReport {
        header,
        rows,
        wall_seconds,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median ε̂_lb per (attack, ε_th) over the replicates that succeeded.
pub fn summarize(report: &GridReport) -> Vec<SummaryRow> {
    let max_det = report.header.max_detectable_eps;
    let mut out: Vec<SummaryRow> = Vec::new();
    for row in &report.rows {
        if out.last().is_some_and(|s| s.attack == row.attack && s.eps_th == row.eps_th) {
            continue;
        }
        let cell: Vec<&ReportRow> = report
            .rows
            .iter()
            .filter(|r| r.attack == row.attack && r.eps_th == row.eps_th && r.error.is_none())
            .collect();
        let k = cell.first().map_or(row.k, |r| r.k);
        out.push(SummaryRow {
            attack: row.attack.clone(),
            eps_th: row.eps_th,
            k,
            replicates: cell.len(),
            median_eps_lb: median(cell.iter().map(|r| r.eps_lb).collect()),
            reference: if k > 0 { row.eps_th.min(max_det / k as f64) } else { f64::NAN },
        });
    }
    out
}

pub struct WrittenReport {
    pub report: PathBuf,
    pub summary: PathBuf,
    pub timings: PathBuf,
}

/// Writes report.jsonl (header line, then one row per line), summary.csv
/// and timings.csv. Wall times live in their own file so the report is
/// reproducible byte for byte.
pub fn write_report(report: &GridReport, dir: &Path) -> anyhow::Result<WrittenReport> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let paths = WrittenReport {
        report: dir.join("report.jsonl"),
        summary: dir.join("summary.csv"),
        timings: dir.join("timings.csv"),
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(&paths.report)?);
    serde_json::to_writer(&mut f, &report.header)?;
    f.write_all(b"\n")?;
    for row in &report.rows {
        serde_json::to_writer(&mut f, row)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;

    let mut w = csv::Writer::from_path(&paths.summary)?;
    for s in summarize(report) {
        w.serialize(s)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths.timings)?;
    w.write_record(["attack", "eps_th", "replicate", "wall_seconds"])?;
    for (row, secs) in report.rows.iter().zip(&report.wall_seconds) {
        w.write_record([row.attack.clone(), row.eps_th.to_string(), row.replicate.to_string(), format!("{secs:.6}")])?;
    }
    w.flush()?;
    Ok(paths)
}
