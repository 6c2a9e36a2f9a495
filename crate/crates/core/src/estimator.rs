//! The audit estimator: sample both arms, learn p(D|z), pick the rejection
//! set S = {z : p(D|z) > t} on the search batch, then count hits of the
//! frozen S on a fresh verification batch.

use rayon::prelude::*;

use crate::attacks::{run_attack, select_k, AttackContext, AttackSpec};
use crate::dataset::{Dataset, NeighborPair};
use crate::error::{AuditError, Result};
use crate::mechanisms::{MechanismConfig, PreparedMechanism, SummaryVector};
use crate::optim::{sigmoid, Logistic};
use crate::rng::{stream_rng, Stream};
use crate::stats::{clamped_katz_interval, katz_log_interval};
use crate::types::{Arm, AuditConfig, AuditResult, ConfidenceInterval, Phase, PosteriorConfig, PrivacySpec};

/// N summaries from each arm.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub from_d: Vec<SummaryVector>,
    pub from_dprime: Vec<SummaryVector>,
    pub phase: Phase,
}

impl SampleBatch {
    pub fn samples_n(&self) -> usize {
        self.from_d.len()
    }

    /// The same batch with the roles of D and D′ exchanged.
    pub fn swapped(&self) -> SampleBatch {
        SampleBatch {
            from_d: self.from_dprime.clone(),
            from_dprime: self.from_d.clone(),
            phase: self.phase,
        }
    }
}

/// A mechanism prepared on both datasets of a pair, plus the probe point
/// used by summaries that read predictions.
pub struct PreparedArms {
    original: PreparedMechanism,
    poisoned: PreparedMechanism,
    probe: Vec<f64>,
}

impl PreparedArms {
    pub fn new(original: &Dataset, poisoned: &Dataset, probe: &[f64], mech: &MechanismConfig, spec: &PrivacySpec) -> Result<Self> {
        Ok(PreparedArms {
            original: mech.prepare(original, spec)?,
            poisoned: mech.prepare(poisoned, spec)?,
            probe: probe.to_vec(),
        })
    }

    pub fn from_pair(pair: &NeighborPair, mech: &MechanismConfig, spec: &PrivacySpec) -> Result<Self> {
        Self::new(&pair.original, &pair.poisoned, &pair.witness.probe, mech, spec)
    }

    fn arm(&self, arm: Arm) -> &PreparedMechanism {
        match arm {
            Arm::Original => &self.original,
            Arm::Poisoned => &self.poisoned,
        }
    }

    /// N retrainings per arm. Sample i of an arm always uses the stream
    /// (phase, arm, i), so the batch does not depend on the thread schedule.
    pub fn sample(&self, samples_n: usize, phase: Phase, master_seed: u64) -> Result<SampleBatch> {
        let draw = |arm: Arm| -> Result<Vec<SummaryVector>> {
            let mech = self.arm(arm);
            let out: Vec<Result<SummaryVector>> = (0..samples_n as u64)
                .into_par_iter()
                .map(|index| {
                    let mut rng = stream_rng(master_seed, Stream::Sample { phase, arm, index });
                    mech.release(Some(&self.probe), &mut rng).map_err(|e| AuditError::SampleFailed {
                        index,
                        phase: phase.name(),
                        arm: arm.name(),
                        source: Box::new(e),
                    })
                })
                .collect();
            out.into_iter().collect()
        };
        Ok(SampleBatch {
            from_d: draw(Arm::Original)?,
            from_dprime: draw(Arm::Poisoned)?,
            phase,
        })
    }
}

pub fn generate_samples(
    pair: &NeighborPair,
    mech: &MechanismConfig,
    spec: &PrivacySpec,
    samples_n: usize,
    phase: Phase,
    master_seed: u64,
) -> Result<SampleBatch> {
    PreparedArms::from_pair(pair, mech, spec)?.sample(samples_n, phase, master_seed)
}

/// Standardized linear logistic classifier for p(D|z).
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorModel {
    pub mean: Vec<f64>,
    /// Per-feature scale; zero marks a constant feature, which is ignored.
    pub scale: Vec<f64>,
    /// Feature weights followed by the intercept.
    pub theta: Vec<f64>,
    /// Every feature was constant, so the model is the constant 1/2.
    pub degenerate: bool,
}

impl PosteriorModel {
    fn standardize(&self, z: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(z.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { 0.0 }));
        out.push(1.0);
    }

    /// log-odds of D given z.
    pub fn logit(&self, z: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(z.len() + 1);
        self.standardize(z, &mut buf);
        crate::optim::dot(&buf, &self.theta)
    }

    pub fn probability(&self, z: &[f64]) -> f64 {
        sigmoid(self.logit(z))
    }

    pub fn logits(&self, zs: &[SummaryVector]) -> Vec<f64> {
        zs.iter().map(|z| self.logit(z.values())).collect()
    }
}

/// Intercept penalty, small enough to leave the fit unpenalized in effect
/// but keeping the Hessian invertible when the arms separate perfectly.
const INTERCEPT_RIDGE: f64 = 1e-12;

pub fn fit_posterior(batch: &SampleBatch, config: &PosteriorConfig) -> Result<PosteriorModel> {
    let n = batch.samples_n();
    if n == 0 || batch.from_dprime.len() != n {
        return Err(AuditError::invalid("posterior needs equal, nonempty arms"));
    }
    let m = batch.from_d[0].len();
    let all = || batch.from_d.iter().chain(&batch.from_dprime);
    if all().any(|z| z.len() != m) {
        return Err(AuditError::DimensionMismatch {
            expected: m,
            got: all().find(|z| z.len() != m).map_or(0, |z| z.len()),
        });
    }
    let total = (2 * n) as f64;
    let mut mean = vec![0.0; m];
    for z in all() {
        for (a, v) in mean.iter_mut().zip(z.values()) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= total);
    let mut var = vec![0.0; m];
    for z in all() {
        for ((a, v), mu) in var.iter_mut().zip(z.values()).zip(&mean) {
            *a += (v - mu).powi(2);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .zip(&mean)
        .map(|(v, mu)| {
            let s = (v / total).sqrt();
            if s > 1e-12 * mu.abs().max(1.0) {
                s
            } else {
                0.0
            }
        })
        .collect();
    let mut model = PosteriorModel {
        mean,
        scale,
        theta: vec![0.0; m + 1],
        degenerate: false,
    };
    if model.scale.iter().all(|&s| s == 0.0) {
        model.degenerate = true;
        return Ok(model);
    }
    let p = m + 1;
    let mut x = Vec::with_capacity(2 * n * p);
    let mut buf = Vec::with_capacity(p);
    for z in all() {
        model.standardize(z.values(), &mut buf);
        x.extend_from_slice(&buf);
    }
    let targets: Vec<f64> = (0..2 * n).map(|i| if i < n { 1.0 } else { 0.0 }).collect();
    let mut ridge = vec![config.ridge * total; p];
    ridge[m] = INTERCEPT_RIDGE * total;
    let prob = Logistic {
        x: &x,
        p,
        targets: &targets,
        weights: None,
        ridge: &ridge,
        linear: None,
    };
    model.theta = prob.fit(None, config.iterations, 1e-10)?.theta;
    Ok(model)
}

/// The chosen rejection set. With `used_complement` the set is
/// {z : logit < threshold_logit} and the roles of the arms are exchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSearchResult {
    pub threshold_logit: f64,
    /// The threshold as a probability: S = {p(D|z) > t}, or with the
    /// complement S = {p(D′|z) > t}.
    pub threshold_t: f64,
    pub eps_lb_search: f64,
    pub n1: usize,
    pub n0: usize,
    pub used_complement: bool,
    /// n0/N at the chosen threshold.
    pub c_hat: f64,
}

struct SideBest {
    eps: f64,
    t: f64,
    n1: usize,
    n0: usize,
}

/// Best S = {s > t} where `num` is the arm whose rate is the numerator.
fn scan_upper(num: &[f64], den: &[f64], alpha: f64, min_count: f64) -> Result<Option<SideBest>> {
    let n = num.len();
    let mut a = num.to_vec();
    let mut b = den.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut cands: Vec<f64> = a.iter().chain(&b).copied().collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let mut best: Option<SideBest> = None;
    let (mut ia, mut ib) = (0usize, 0usize);
    for t in std::iter::once(f64::NEG_INFINITY).chain(cands) {
        while ia < n && a[ia] <= t {
            ia += 1;
        }
        while ib < n && b[ib] <= t {
            ib += 1;
        }
        let (n1, n0) = (n - ia, n - ib);
        if (n0 as f64) < min_count {
            // n0 only shrinks from here on
            break;
        }
        let eps = katz_log_interval(n1 as u64, n0 as u64, n as u64, alpha)?.lower;
        if best.as_ref().is_none_or(|b| eps > b.eps) {
            best = Some(SideBest { eps, t, n1, n0 });
        }
    }
    Ok(best)
}

/// Scans every distinct score as a threshold on both sides and keeps the
/// largest Katz lower bound among thresholds with n0/N ≥ r. Scores may be
/// any strictly monotone function of p(D|z).
pub fn optimize_threshold(scores_d: &[f64], scores_dprime: &[f64], cfg: &AuditConfig) -> Result<ThresholdSearchResult> {
    let n = scores_d.len();
    if n < 2 || scores_dprime.len() != n {
        return Err(AuditError::invalid("threshold search needs equal arms of at least 2 scores"));
    }
    if scores_d.iter().chain(scores_dprime).any(|s| s.is_nan()) {
        return Err(AuditError::invalid("posterior produced a NaN score"));
    }
    // r·N up to rounding, so r = 1/N admits a single crossing
    let min_count = cfg.min_prob_r * n as f64 - 1e-9;
    let upper = scan_upper(scores_d, scores_dprime, cfg.alpha, min_count)?;
    let neg = |s: &[f64]| s.iter().map(|v| -v).collect::<Vec<_>>();
    let lower = scan_upper(&neg(scores_dprime), &neg(scores_d), cfg.alpha, min_count)?;
    let pick = match (upper, lower) {
        (Some(u), Some(l)) if l.eps > u.eps => Some((l, true)),
        (Some(u), _) => Some((u, false)),
        (None, Some(l)) => Some((l, true)),
        (None, None) => None,
    };
    Ok(match pick {
        Some((b, complement)) => ThresholdSearchResult {
            threshold_logit: if complement { -b.t } else { b.t },
            threshold_t: sigmoid(b.t),
            eps_lb_search: b.eps,
            n1: b.n1,
            n0: b.n0,
            used_complement: complement,
            c_hat: b.n0 as f64 / n as f64,
        },
        None => ThresholdSearchResult {
            threshold_logit: f64::INFINITY,
            threshold_t: 1.0,
            eps_lb_search: f64::NEG_INFINITY,
            n1: 0,
            n0: 0,
            used_complement: false,
            c_hat: 0.0,
        },
    })
}

/// (n1, n0) of the frozen rejection set on a batch of scores.
pub fn count_hits(search: &ThresholdSearchResult, scores_d: &[f64], scores_dprime: &[f64]) -> (usize, usize) {
    let t = search.threshold_logit;
    if search.used_complement {
        let n1 = scores_dprime.iter().filter(|&&s| s < t).count();
        let n0 = scores_d.iter().filter(|&&s| s < t).count();
        (n1, n0)
    } else {
        let n1 = scores_d.iter().filter(|&&s| s > t).count();
        let n0 = scores_dprime.iter().filter(|&&s| s > t).count();
        (n1, n0)
    }
}

/// Outcome of the estimator on one pair of datasets.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    /// Katz lower bound divided by k; −∞ when no verification sample from
    /// the numerator arm fell in S.
    pub eps_lb: f64,
    pub interval: ConfidenceInterval,
    pub n1: usize,
    pub n0: usize,
    pub k: u32,
    pub search: ThresholdSearchResult,
    pub posterior_degenerate: bool,
}

/// Counts the frozen set on fresh verification samples and divides the
/// bound by k for group privacy. A zero n0 is clamped to 1.
pub fn verify_final(
    arms: &PreparedArms,
    search: &ThresholdSearchResult,
    model: &PosteriorModel,
    cfg: &AuditConfig,
    k: u32,
) -> Result<Estimate> {
    let batch = arms.sample(cfg.samples_n, Phase::Verify, cfg.master_seed)?;
    let (n1, n0) = count_hits(search, &model.logits(&batch.from_d), &model.logits(&batch.from_dprime));
    let interval = clamped_katz_interval(n1 as u64, n0 as u64, cfg.samples_n as u64, cfg.alpha)?;
    Ok(Estimate {
        eps_lb: interval.lower / k as f64,
        interval,
        n1,
        n0,
        k,
        search: search.clone(),
        posterior_degenerate: model.degenerate,
    })
}

/// Search, fit, threshold and verify on an already constructed pair of
/// datasets. `original` and `poisoned` may be equal (a null audit).
pub fn estimate(
    original: &Dataset,
    poisoned: &Dataset,
    probe: &[f64],
    k: u32,
    mech: &MechanismConfig,
    cfg: &AuditConfig,
) -> Result<Estimate> {
    if cfg.delta_split {
        return Err(AuditError::DeltaUnsupported);
    }
    let arms = PreparedArms::new(original, poisoned, probe, mech, &cfg.spec).map_err(AuditError::at("prepare"))?;
    let batch = arms
        .sample(cfg.samples_n, Phase::Search, cfg.master_seed)
        .map_err(AuditError::at("search sampling"))?;
    let model = fit_posterior(&batch, &cfg.posterior).map_err(AuditError::at("posterior"))?;
    let search = optimize_threshold(&model.logits(&batch.from_d), &model.logits(&batch.from_dprime), cfg)
        .map_err(AuditError::at("threshold search"))?;
    verify_final(&arms, &search, &model, cfg, k).map_err(AuditError::at("verification"))
}

fn into_result(e: Estimate, samples_n: usize, witness: crate::types::Witness) -> AuditResult {
    AuditResult {
        eps_lb: e.eps_lb,
        threshold_t: e.search.threshold_t,
        used_complement: e.search.used_complement,
        n1: e.n1,
        n0: e.n0,
        samples_n,
        k: e.k,
        interval: e.interval,
        eps_lb_search: e.search.eps_lb_search,
        c_hat: e.search.c_hat,
        posterior_degenerate: e.posterior_degenerate,
        witness,
    }
}

/// Audit of a pair built elsewhere; k comes from the pair.
pub fn audit_neighbors(pair: &NeighborPair, mech: &MechanismConfig, cfg: &AuditConfig) -> Result<AuditResult> {
    cfg.validate()?;
    let e = estimate(&pair.original, &pair.poisoned, &pair.witness.probe, pair.k, mech, cfg)?;
    Ok(into_result(e, cfg.samples_n, pair.witness.clone()))
}

/// Full audit: attack, group size from the k policy, then estimation.
pub fn audit_pair(
    data: &Dataset,
    mech: &MechanismConfig,
    attack: &AttackSpec,
    ctx: &AttackContext,
    cfg: &AuditConfig,
) -> Result<AuditResult> {
    cfg.validate()?;
    mech.validate()?;
    let k = select_k(cfg.spec.epsilon(), &cfg.k_policy)?;
    let spec = AttackSpec { k, ..attack.clone() };
    let pair = run_attack(data, &spec, cfg.neighbor_def, ctx).map_err(AuditError::at("attack"))?;
    audit_neighbors(&pair, mech, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::synth_blobs;
    use crate::stats::max_detectable_eps;
    use proptest::prelude::*;

    fn cfg(n: usize) -> AuditConfig {
        AuditConfig::new(PrivacySpec::pure(1.0).unwrap(), n, 7)
    }

    // every threshold on both sides, no shortcuts
    fn brute_force(d: &[f64], dp: &[f64], c: &AuditConfig) -> f64 {
        let n = d.len();
        let mut best = f64::NEG_INFINITY;
        let mut ts: Vec<f64> = d.iter().chain(dp).copied().collect();
        ts.push(f64::NEG_INFINITY);
        ts.push(f64::INFINITY);
        for &t in &ts {
            let sides = [
                (d.iter().filter(|&&s| s > t).count(), dp.iter().filter(|&&s| s > t).count()),
                (dp.iter().filter(|&&s| s < t).count(), d.iter().filter(|&&s| s < t).count()),
            ];
            for (n1, n0) in sides {
                if (n0 as f64) < c.min_prob_r * n as f64 - 1e-9 {
                    continue;
                }
                let e = katz_log_interval(n1 as u64, n0 as u64, n as u64, c.alpha).unwrap().lower;
                best = best.max(e);
            }
        }
        best
    }

    #[test]
    fn identical_scores_give_zero() {
        let s = vec![0.3; 50];
        let r = optimize_threshold(&s, &s, &cfg(50)).unwrap();
        assert_eq!((r.n1, r.n0), (50, 50));
        assert_eq!(r.eps_lb_search, 0.0);
    }

    #[test]
    fn chosen_threshold_sits_at_the_r_boundary() {
        let n = 1000;
        let mut c = cfg(n);
        c.min_prob_r = 0.01;
        let d: Vec<f64> = (0..n).map(|i| 10.0 + i as f64 * 1e-3).collect();
        // exactly 10 of D′ cross into D's range
        let dp: Vec<f64> = (0..n).map(|i| if i < 10 { 20.0 + i as f64 } else { -(i as f64) }).collect();
        let r = optimize_threshold(&d, &dp, &c).unwrap();
        assert_eq!(r.n0, 10);
        assert!((r.c_hat - 0.01).abs() < 1e-12);
        let want = katz_log_interval(r.n1 as u64, 10, n as u64, c.alpha).unwrap().lower;
        assert_eq!(r.eps_lb_search, want);
        assert_eq!(r.eps_lb_search, brute_force(&d, &dp, &c));
    }

    #[test]
    fn perfectly_separated_batch_is_separated() {
        let batch = SampleBatch {
            from_d: (0..40).map(|i| SummaryVector(vec![1.0 + i as f64 * 0.01])).collect(),
            from_dprime: (0..40).map(|i| SummaryVector(vec![-1.0 - i as f64 * 0.01])).collect(),
            phase: Phase::Search,
        };
        let m = fit_posterior(&batch, &PosteriorConfig::default()).unwrap();
        let lo = m.logits(&batch.from_d).into_iter().fold(f64::INFINITY, f64::min);
        let hi = m.logits(&batch.from_dprime).into_iter().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo > hi);
    }

    #[test]
    fn constant_batch_is_degenerate() {
        let batch = SampleBatch {
            from_d: vec![SummaryVector(vec![1.0, 2.0]); 10],
            from_dprime: vec![SummaryVector(vec![1.0, 2.0]); 10],
            phase: Phase::Search,
        };
        let m = fit_posterior(&batch, &PosteriorConfig::default()).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.probability(&[5.0, 5.0]), 0.5);
    }

    #[test]
    fn posterior_is_order_invariant() {
        let data = synth_blobs(60, 2, 2.0, 1).unwrap();
        let pair = crate::attacks::run_attack(
            &data,
            &AttackSpec::new(crate::attacks::AttackKind::NbCornerFlip),
            crate::types::NeighborDef::ReplaceOne,
            &AttackContext::default(),
        )
        .unwrap();
        let spec = PrivacySpec::pure(1.0).unwrap();
        let batch = generate_samples(&pair, &MechanismConfig::gaussian_nb(), &spec, 200, Phase::Search, 3).unwrap();
        let mut rev = batch.clone();
        rev.from_d.reverse();
        rev.from_dprime.reverse();
        let a = fit_posterior(&batch, &PosteriorConfig::default()).unwrap();
        let b = fit_posterior(&rev, &PosteriorConfig::default()).unwrap();
        for z in batch.from_d.iter().chain(&batch.from_dprime) {
            assert!((a.probability(z.values()) - b.probability(z.values())).abs() < 1e-9);
        }
    }

    #[test]
    fn batches_are_reproducible_and_phases_differ() {
        let data = synth_blobs(40, 2, 2.0, 2).unwrap();
        let pair = crate::attacks::run_attack(
            &data,
            &AttackSpec::new(crate::attacks::AttackKind::NbCornerFlip),
            crate::types::NeighborDef::ReplaceOne,
            &AttackContext::default(),
        )
        .unwrap();
        let spec = PrivacySpec::pure(1.0).unwrap();
        let mech = MechanismConfig::gaussian_nb();
        let a = generate_samples(&pair, &mech, &spec, 30, Phase::Search, 5).unwrap();
        let b = generate_samples(&pair, &mech, &spec, 30, Phase::Search, 5).unwrap();
        let v = generate_samples(&pair, &mech, &spec, 30, Phase::Verify, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.from_d, v.from_d);
    }

    #[test]
    fn k_divides_the_bound() {
        let data = synth_blobs(60, 2, 2.0, 3).unwrap();
        let pair = crate::attacks::run_attack(
            &data,
            &AttackSpec::new(crate::attacks::AttackKind::NbCornerFlip),
            crate::types::NeighborDef::ReplaceOne,
            &AttackContext::default(),
        )
        .unwrap();
        let mut c = AuditConfig::new(PrivacySpec::pure(4.0).unwrap(), 300, 11);
        c.min_prob_r = 0.05;
        let mech = MechanismConfig::gaussian_nb();
        let one = estimate(&pair.original, &pair.poisoned, &pair.witness.probe, 1, &mech, &c).unwrap();
        let two = estimate(&pair.original, &pair.poisoned, &pair.witness.probe, 2, &mech, &c).unwrap();
        assert_eq!((one.n1, one.n0), (two.n1, two.n0));
        assert_eq!(two.eps_lb, one.eps_lb / 2.0);
        assert!(one.eps_lb <= max_detectable_eps(300, c.alpha) + 1e-12);
    }

    fn scores(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-20i32..20, n).prop_map(|v| v.into_iter().map(|x| x as f64 / 4.0).collect()),
            prop::collection::vec(-20i32..20, n).prop_map(|v| v.into_iter().map(|x| x as f64 / 4.0).collect()),
        )
    }

    proptest! {
        #[test]
        fn matches_exhaustive_oracle((d, dp) in scores(40), r in 1usize..8) {
            let mut c = cfg(40);
            c.min_prob_r = r as f64 / 40.0;
            let got = optimize_threshold(&d, &dp, &c).unwrap();
            prop_assert_eq!(got.eps_lb_search, brute_force(&d, &dp, &c));
            prop_assert!(got.c_hat >= c.min_prob_r - 1e-12);
            prop_assert!(got.eps_lb_search <= max_detectable_eps(40, c.alpha) + 1e-12);
        }

        #[test]
        fn invariant_to_monotone_transforms((d, dp) in scores(30)) {
            let c = cfg(30);
            let f = |s: &Vec<f64>| s.iter().map(|v| (v * 0.7).exp() + v.powi(3)).collect::<Vec<_>>();
            let a = optimize_threshold(&d, &dp, &c).unwrap();
            let b = optimize_threshold(&f(&d), &f(&dp), &c).unwrap();
            prop_assert_eq!(a.eps_lb_search, b.eps_lb_search);
            prop_assert_eq!((a.n1, a.n0, a.used_complement), (b.n1, b.n0, b.used_complement));
        }

        #[test]
        fn quantile_consistency((d, dp) in scores(30)) {
            let c = cfg(30);
            let r = optimize_threshold(&d, &dp, &c).unwrap();
            let (n1, n0) = count_hits(&r, &d, &dp);
            prop_assert_eq!((n1, n0), (r.n1, r.n0));
            prop_assert!((n0 as f64 / 30.0 - r.c_hat).abs() < 1e-12);
        }

        #[test]
        fn swapping_arms_flips_the_side((d, dp) in scores(30)) {
            let c = cfg(30);
            let neg = |s: &Vec<f64>| s.iter().map(|v| -v).collect::<Vec<_>>();
            let a = optimize_threshold(&d, &dp, &c).unwrap();
            // p(D′|z) = 1 − p(D|z), so the swapped problem sees negated logits
            let b = optimize_threshold(&neg(&dp), &neg(&d), &c).unwrap();
            prop_assert_eq!(a.eps_lb_search, b.eps_lb_search);
            let min = c.min_prob_r * 30.0 - 1e-9;
            let up = scan_upper(&d, &dp, c.alpha, min).unwrap().unwrap().eps;
            let lo = scan_upper(&neg(&dp), &neg(&d), c.alpha, min).unwrap().unwrap().eps;
            if up != lo {
                prop_assert_eq!(a.used_complement, !b.used_complement);
                prop_assert_eq!((a.n1, a.n0), (b.n1, b.n0));
            }
        }

        #[test]
        fn counts_are_monotone_in_t((d, dp) in scores(25), t1 in -6.0f64..6.0, dt in 0.0f64..4.0) {
            let at = |t: f64| {
                let r = ThresholdSearchResult {
                    threshold_logit: t, threshold_t: sigmoid(t), eps_lb_search: 0.0,
                    n1: 0, n0: 0, used_complement: false, c_hat: 0.0,
                };
                count_hits(&r, &d, &dp)
            };
            let (a1, a0) = at(t1);
            let (b1, b0) = at(t1 + dt);
            prop_assert!(b1 <= a1 && b0 <= a0);
        }
    }
}
