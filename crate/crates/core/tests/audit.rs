use dpaudit_core::attacks::{run_attack, AttackContext, AttackKind, AttackSpec};
use dpaudit_core::data_io::synth_blobs;
use dpaudit_core::estimator::{audit_neighbors, audit_pair, estimate};
use dpaudit_core::mechanisms::MechanismConfig;
use dpaudit_core::stats::max_detectable_eps;
use dpaudit_core::types::{AuditConfig, KPolicy, NeighborDef, PrivacySpec};
use dpaudit_core::AuditError;

fn cfg(eps: f64, n: usize, seed: u64) -> AuditConfig {
    let mut c = AuditConfig::new(PrivacySpec::pure(eps).unwrap(), n, seed);
    c.k_policy = KPolicy::Fixed { k: 1 };
    c
}

#[test]
fn identical_arms_rarely_show_leakage() {
    let data = synth_blobs(60, 3, 2.0, 4).unwrap();
    let mech = MechanismConfig::LaplaceMean { noise_multiplier: 1.0 };
    let probe = vec![0.0; 3];
    let positive = (0..40)
        .filter(|&s| {
            let e = estimate(&data, &data, &probe, 1, &mech, &cfg(1.0, 1000, s)).unwrap();
            e.eps_lb > 0.0
        })
        .count();
    // Each audit claims ε > 0 with probability about α/2 under exchangeability.
    assert!(positive <= 4, "{positive}/40 audits claimed leakage on identical arms");
}

#[test]
fn broken_noise_is_detected() {
    let data = synth_blobs(100, 2, 2.0, 5).unwrap();
    let mech = MechanismConfig::LaplaceMean { noise_multiplier: 0.05 };
    // The mean ignores labels, so the attack has to move features.
    let spec = AttackSpec::new(AttackKind::NbMeanShift);
    let r = audit_pair(&data, &mech, &spec, &AttackContext::default(), &cfg(0.5, 2000, 1)).unwrap();
    assert!(r.eps_lb > 0.5, "{}", r.eps_lb);
    assert!(r.eps_lb <= max_detectable_eps(2000, 0.05));
}

#[test]
fn audit_is_reproducible_and_seed_sensitive() {
    let data = synth_blobs(100, 3, 2.0, 6).unwrap();
    let mech = MechanismConfig::gaussian_nb();
    let spec = AttackSpec::new(AttackKind::NbCornerFlip);
    let ctx = AttackContext::default();
    let a = audit_pair(&data, &mech, &spec, &ctx, &cfg(2.0, 1000, 7)).unwrap();
    let b = audit_pair(&data, &mech, &spec, &ctx, &cfg(2.0, 1000, 7)).unwrap();
    let c = audit_pair(&data, &mech, &spec, &ctx, &cfg(2.0, 1000, 8)).unwrap();
    assert_eq!(a, b);
    assert_ne!((a.n1, a.n0), (c.n1, c.n0));
}

#[test]
fn group_size_divides_the_bound() {
    let data = synth_blobs(100, 2, 2.0, 9).unwrap();
    let mech = MechanismConfig::LaplaceMean { noise_multiplier: 0.1 };
    let spec = AttackSpec::new(AttackKind::NbMeanShift).with_k(4);
    let pair = run_attack(&data, &spec, NeighborDef::ReplaceOne, &AttackContext::default()).unwrap();
    let c = cfg(1.0, 1000, 3);
    let r4 = audit_neighbors(&pair, &mech, &c).unwrap();
    let single = estimate(&pair.original, &pair.poisoned, &pair.witness.probe, 1, &mech, &c).unwrap();
    assert_eq!(r4.k, 4);
    assert!(single.eps_lb > 0.0);
    assert!((4.0 * r4.eps_lb - single.eps_lb).abs() < 1e-12);
}

#[test]
fn delta_split_is_refused() {
    let data = synth_blobs(40, 2, 2.0, 1).unwrap();
    let mut c = cfg(1.0, 500, 1);
    c.delta_split = true;
    let err = estimate(&data, &data, &[0.0, 0.0], 1, &MechanismConfig::gaussian_nb(), &c).unwrap_err();
    assert!(matches!(err, AuditError::DeltaUnsupported));
}
