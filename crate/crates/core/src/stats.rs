//! Statistical primitives: group privacy, binomial-ratio intervals, the
//! largest detectable ε for a sample size, and interval coverage simulation.

use std::collections::HashMap;

use rand_distr::{Binomial, Distribution};
use statrs::function::beta::inv_beta_reg;
use statrs::function::erf::erfc_inv;

use crate::error::{AuditError, Result};
use crate::rng::{stream_rng, Stream};
use crate::types::{ConfidenceInterval, IntervalMethod, PrivacySpec};

/// z such that P(Z > z) = p for a standard normal Z.
pub fn normal_upper_quantile(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Upper bound on P[M(D) ∈ S] given P[M(D′) ∈ S] = p′ when D, D′ differ in k rows.
pub fn group_privacy_bound(spec: &PrivacySpec, k: u32, p_prime: f64) -> Result<f64> {
    if k == 0 {
        return Err(AuditError::invalid("k must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p_prime) {
        return Err(AuditError::invalid(format!("p_prime must be a probability, got {p_prime}")));
    }
    Ok(group_bound(spec.epsilon(), spec.delta(), k, p_prime))
}

fn group_bound(eps: f64, delta: f64, k: u32, p_prime: f64) -> f64 {
    let kf = k as f64;
    let slack = if delta == 0.0 {
        0.0
    } else if eps == 0.0 {
        delta * kf
    } else {
        // δ(1 − e^{kε})/(1 − e^{ε}) without cancellation for small ε
        delta * (kf * eps).exp_m1() / eps.exp_m1()
    };
    (kf * eps).exp() * p_prime + slack
}

fn check_counts(n1: u64, n0: u64, n: u64) -> Result<()> {
    if n == 0 || n1 > n || n0 > n {
        return Err(AuditError::invalid(format!("counts ({n1}, {n0}) must lie in [0, N={n}]")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AuditError::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Two-sided (1−α) Katz log interval for the ratio (n1/N)/(n0/N). The lower
/// endpoint is the one-sided α/2 lower bound that audits report.
pub fn katz_log_interval(n1: u64, n0: u64, n: u64, alpha: f64) -> Result<ConfidenceInterval> {
    check_counts(n1, n0, n)?;
    check_alpha(alpha)?;
    if n1 == 0 || n0 == 0 {
        return Ok(ConfidenceInterval {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            level: 1.0 - alpha,
            method: IntervalMethod::KatzLog,
        });
    }
    let (lower, upper) = katz_endpoints(n1 as f64, n0 as f64, n as f64, normal_upper_quantile(alpha / 2.0));
    Ok(ConfidenceInterval {
        lower,
        upper,
        level: 1.0 - alpha,
        method: IntervalMethod::KatzLog,
    })
}

fn katz_endpoints(n1: f64, n0: f64, n: f64, z: f64) -> (f64, f64) {
    let center = (n1 / n0).ln();
    let var = (1.0 / n1 + 1.0 / n0 - 2.0 / n).max(0.0);
    let half = z * var.sqrt();
    (center - half, center + half)
}

/// Katz interval with the audit's zero-count policy: a zero denominator is
/// clamped to one (the upper endpoint becomes +∞) and a zero numerator sends
/// the lower endpoint to −∞.
pub fn clamped_katz_interval(n1: u64, n0: u64, n: u64, alpha: f64) -> Result<ConfidenceInterval> {
    check_counts(n1, n0, n)?;
    check_alpha(alpha)?;
    let z = normal_upper_quantile(alpha / 2.0);
    let (mut lower, mut upper) = katz_endpoints(n1.max(1) as f64, n0.max(1) as f64, n as f64, z);
    if n1 == 0 {
        lower = f64::NEG_INFINITY;
    }
    if n0 == 0 {
        upper = f64::INFINITY;
    }
    Ok(ConfidenceInterval {
        lower,
        upper,
        level: 1.0 - alpha,
        method: IntervalMethod::KatzLog,
    })
}

/// Exact binomial bounds for x successes out of n, each tail at α/2.
pub fn clopper_pearson_bounds(x: u64, n: u64, alpha: f64) -> (f64, f64) {
    let lo = if x == 0 {
        0.0
    } else {
        inv_beta_reg(x as f64, (n - x + 1) as f64, alpha / 2.0)
    };
    let hi = if x == n {
        1.0
    } else {
        inv_beta_reg((x + 1) as f64, (n - x) as f64, 1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// ln(CP-lower(n1) / CP-upper(n0)); the conservative baseline.
pub fn clopper_pearson_ratio_lb(n1: u64, n0: u64, n: u64, alpha: f64) -> Result<f64> {
    check_counts(n1, n0, n)?;
    check_alpha(alpha)?;
    let (lo1, _) = clopper_pearson_bounds(n1, n, alpha);
    let (_, hi0) = clopper_pearson_bounds(n0, n, alpha);
    Ok((lo1 / hi0).ln())
}

pub fn clopper_pearson_ratio_interval(n1: u64, n0: u64, n: u64, alpha: f64) -> Result<ConfidenceInterval> {
    check_counts(n1, n0, n)?;
    check_alpha(alpha)?;
    let (lo1, hi1) = clopper_pearson_bounds(n1, n, alpha);
    let (lo0, hi0) = clopper_pearson_bounds(n0, n, alpha);
    Ok(ratio_interval(lo1, hi1, lo0, hi0, alpha))
}

fn ratio_interval(lo1: f64, hi1: f64, lo0: f64, hi0: f64, alpha: f64) -> ConfidenceInterval {
    ConfidenceInterval {
        lower: (lo1 / hi0).ln(),
        upper: (hi1 / lo0).ln(),
        level: 1.0 - alpha,
        method: IntervalMethod::ClopperPearsonRatio,
    }
}

/// Largest lower bound an audit with N samples per arm can report:
/// ln N − z_{α/2}·√(1 − 1/N), the Katz bound at n1 = N, n0 = 1.
///
/// # Panics
/// If `samples_n < 2`.
pub fn max_detectable_eps(samples_n: u64, alpha: f64) -> f64 {
    assert!(samples_n >= 2, "max_detectable_eps needs N >= 2");
    let n = samples_n as f64;
    n.ln() - normal_upper_quantile(alpha / 2.0) * (1.0 - 1.0 / n).sqrt()
}

/// Fraction of `trials` simulated count pairs whose interval covers ln(p1/p0).
pub fn coverage_simulate(
    p1: f64,
    p0: f64,
    samples_n: u64,
    alpha: f64,
    trials: usize,
    method: IntervalMethod,
    seed: u64,
) -> Result<f64> {
    for p in [p1, p0] {
        if !(p > 0.0 && p < 1.0) {
            return Err(AuditError::invalid(format!("probabilities must lie in (0, 1), got {p}")));
        }
    }
    if trials < 1000 {
        return Err(AuditError::invalid("coverage needs at least 1000 trials"));
    }
    check_alpha(alpha)?;
    let truth = (p1 / p0).ln();
    let b1 = Binomial::new(samples_n, p1).map_err(|e| AuditError::invalid(e.to_string()))?;
    let b0 = Binomial::new(samples_n, p0).map_err(|e| AuditError::invalid(e.to_string()))?;
    let mut rng = stream_rng(seed, Stream::Coverage);
    let mut cp_cache: HashMap<u64, (f64, f64)> = HashMap::new();
    let mut covered = 0usize;
    for _ in 0..trials {
        let n1 = b1.sample(&mut rng);
        let n0 = b0.sample(&mut rng);
        let ci = match method {
            IntervalMethod::KatzLog => clamped_katz_interval(n1, n0, samples_n, alpha)?,
            IntervalMethod::ClopperPearsonRatio => {
                let (lo1, hi1) = *cp_cache
                    .entry(n1)
                    .or_insert_with(|| clopper_pearson_bounds(n1, samples_n, alpha));
                let (lo0, hi0) = *cp_cache
                    .entry(n0)
                    .or_insert_with(|| clopper_pearson_bounds(n0, samples_n, alpha));
                ratio_interval(lo1, hi1, lo0, hi0, alpha)
            }
        };
        if ci.contains(truth) {
            covered += 1;
        }
    }
    Ok(covered as f64 / trials as f64)
}
