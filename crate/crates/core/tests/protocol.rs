use priroagg::adversary::{synthetic_updates, AdversarySpec, ProtocolAttack, ValueAttack};
use priroagg::protocol::{
    run_iteration, IterationOutcome, NoRecord, ProtocolConfig, Reason, RunOptions, Setup, Verdict,
};
use priroagg::robust::{rfa_aggregate, rlr_mask, RobustAlg};
use priroagg::{Fe, Field};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn updates(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    synthetic_updates(n, d, &mut ChaCha20Rng::seed_from_u64(seed)).1
}

fn run(cfg: &ProtocolConfig, ups: &[Vec<f64>], adv: &AdversarySpec, seed: u64) -> IterationOutcome {
    let setup = Setup::generate(cfg, seed).unwrap();
    run_iteration(&setup, seed, 0, ups, adv, RunOptions::default(), &mut NoRecord).unwrap()
}

/// Plaintext masked sum over `users`, computed with integers.
fn rlr_oracle(cfg: &ProtocolConfig, out: &IterationOutcome, users: &[usize]) -> Vec<Fe> {
    let f = Field::new(cfg.field.q).unwrap();
    let d = cfg.d;
    let xs: Vec<Vec<i64>> = users
        .iter()
        .map(|&i| out.quantized[i].as_ref().unwrap().iter().map(|v| f.centered(*v)).collect())
        .collect();
    let sums: Vec<u64> = (0..d).map(|k| xs.iter().filter(|x| x[k] >= 0).count() as u64).collect();
    let mask = rlr_mask(&sums, users.len(), cfg.t(), cfg.rlr_mode);
    (0..d)
        .map(|k| f.from_i64(mask[k] as i64 * xs.iter().map(|x| x[k]).sum::<i64>()))
        .collect()
}

fn rfa_oracle(cfg: &ProtocolConfig, out: &IterationOutcome, users: &[usize]) -> Vec<f64> {
    let f = Field::new(cfg.field.q).unwrap();
    let p = cfg.field.p as f64;
    let xs: Vec<Vec<f64>> = users
        .iter()
        .map(|&i| out.quantized[i].as_ref().unwrap().iter().map(|v| f.centered(*v) as f64 / p).collect())
        .collect();
    rfa_aggregate(&xs, cfg.rfa_min_norm).unwrap()
}

#[test]
fn honest_rlr_matches_plaintext() {
    let cfg = ProtocolConfig::new(6, 9).with_threshold(3, 1);
    let out = run(&cfg, &updates(6, 9, 1), &AdversarySpec::honest(), 11);
    let r = &out.report;
    assert_eq!(r.verdict, Verdict::Done, "{:?}", r.abort_reason);
    assert!(r.excluded.is_empty());
    assert_eq!(r.passes, 1);
    assert_eq!(r.aggregate_field.as_ref().unwrap(), &rlr_oracle(&cfg, &out, &(0..6).collect::<Vec<_>>()));
    assert_eq!(r.residuals.sign_nonzero, Some(0));
}

#[test]
fn honest_rfa_is_close_to_plaintext() {
    let cfg = ProtocolConfig::new(6, 8).with_threshold(3, 1).with_alg(RobustAlg::Rfa);
    let out = run(&cfg, &updates(6, 8, 2), &AdversarySpec::honest(), 12);
    let r = &out.report;
    assert_eq!(r.verdict, Verdict::Done, "{:?}", r.abort_reason);
    let oracle = rfa_oracle(&cfg, &out, &(0..6).collect::<Vec<_>>());
    let got = r.aggregate.as_ref().unwrap();
    let worst = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 10.0 / cfg.field.p as f64, "{worst}");
    assert!(r.residuals.rfa_scaled.unwrap() <= r.residuals.rfa_tau.unwrap());
}

#[test]
fn rfa_with_range_check_and_self_dealt_triples() {
    let mut cfg = ProtocolConfig::new(6, 8).with_threshold(3, 1).with_alg(RobustAlg::Rfa);
    cfg.range_check = true;
    cfg.beaver = priroagg::protocol::BeaverSource::SelfDealt;
    let out = run(&cfg, &updates(6, 8, 3), &AdversarySpec::honest(), 13);
    assert_eq!(out.report.verdict, Verdict::Done, "{:?}", out.report.abort_reason);
    assert_eq!(out.report.residuals.range_nonzero, Some(0));
}

#[test]
fn cheating_prover_is_excluded_and_rerun_matches_honest_oracle() {
    let cfg = ProtocolConfig::new(6, 9).with_threshold(3, 1);
    let adv = AdversarySpec {
        corrupted: vec![2],
        value_attack: ValueAttack::None,
        protocol_attack: ProtocolAttack::CheatCircuit,
    };
    let out = run(&cfg, &updates(6, 9, 4), &adv, 14);
    let r = &out.report;
    assert_eq!(r.verdict, Verdict::Rerun, "{:?}", r.abort_reason);
    assert_eq!(r.malicious_set(), vec![2]);
    assert_eq!(r.excluded[0].reason, Reason::SigmaCheat);
    assert_eq!(r.aggregate_field.as_ref().unwrap(), &rlr_oracle(&cfg, &out, &[0, 1, 3, 4, 5]));
}

#[test]
fn over_tagging_user_is_excluded() {
    let cfg = ProtocolConfig::new(6, 4).with_threshold(2, 2);
    let adv = AdversarySpec {
        corrupted: vec![0],
        value_attack: ValueAttack::None,
        protocol_attack: ProtocolAttack::FalseTag { targets: Some(vec![1, 2, 3]) },
    };
    let out = run(&cfg, &updates(6, 4, 5), &adv, 15);
    let r = &out.report;
    assert_eq!(r.verdict, Verdict::Rerun, "{:?}", r.abort_reason);
    assert_eq!(r.malicious_set(), vec![0]);
    assert_eq!(r.excluded[0].reason, Reason::OverTagging { count: 3 });
    assert_eq!(r.aggregate_field.as_ref().unwrap(), &rlr_oracle(&cfg, &out, &[1, 2, 3, 4, 5]));
}

#[test]
fn bad_share_victim_alone_tags_and_reveal_convicts() {
    let cfg = ProtocolConfig::new(6, 4).with_threshold(3, 1);
    let adv = AdversarySpec {
        corrupted: vec![2],
        value_attack: ValueAttack::None,
        protocol_attack: ProtocolAttack::BadShare { victim: Some(3) },
    };
    let out = run(&cfg, &updates(6, 4, 6), &adv, 16);
    let r = &out.report;
    assert_eq!(r.tag_counts[0], vec![0, 0, 1, 0, 0, 0]);
    assert_eq!(r.malicious_set(), vec![2]);
    assert_eq!(r.excluded[0].reason, Reason::FailedReveal { holder: 3 });
    assert_eq!(r.verdict, Verdict::Rerun);
}

#[test]
fn too_many_cheaters_abort() {
    let cfg = ProtocolConfig::new(6, 4).with_threshold(3, 1);
    let adv = AdversarySpec {
        corrupted: vec![1, 4],
        value_attack: ValueAttack::None,
        protocol_attack: ProtocolAttack::CheatCircuit,
    };
    let out = run(&cfg, &updates(6, 4, 7), &adv, 17);
    assert_eq!(out.report.verdict, Verdict::Abort);
    assert!(out.report.aggregate.is_none());
}

#[test]
fn drops_in_either_round_are_excluded() {
    for round in [1u8, 2] {
        let cfg = ProtocolConfig::new(8, 6).with_threshold(3, 2);
        let adv = AdversarySpec {
            corrupted: vec![5],
            value_attack: ValueAttack::None,
            protocol_attack: ProtocolAttack::Drop { round },
        };
        let out = run(&cfg, &updates(8, 6, 8), &adv, 18);
        let r = &out.report;
        assert_eq!(r.verdict, Verdict::Rerun, "round {round}: {:?}", r.abort_reason);
        assert_eq!(r.malicious_set(), vec![5]);
        let honest: Vec<usize> = (0..8).filter(|&i| i != 5).collect();
        assert_eq!(r.aggregate_field.as_ref().unwrap(), &rlr_oracle(&cfg, &out, &honest));
    }
}

#[test]
fn bad_sigma_verifier_is_excluded() {
    let cfg = ProtocolConfig::new(8, 6).with_threshold(2, 2);
    let adv = AdversarySpec {
        corrupted: vec![6],
        value_attack: ValueAttack::None,
        protocol_attack: ProtocolAttack::BadSigma,
    };
    let out = run(&cfg, &updates(8, 6, 9), &adv, 19);
    let r = &out.report;
    assert_eq!(r.malicious_set(), vec![6], "{:?}", r.excluded);
    assert_eq!(r.excluded[0].reason, Reason::BadSigmaShare);
    assert_eq!(r.verdict, Verdict::Rerun);
}

#[test]
fn bad_commit_pair_is_tagged_by_everyone() {
    let cfg = ProtocolConfig::new(8, 6).with_threshold(3, 2);
    let adv = AdversarySpec {
        corrupted: vec![0],
        value_attack: ValueAttack::None,
        protocol_attack: ProtocolAttack::BadCommitPair,
    };
    let out = run(&cfg, &updates(8, 6, 10), &adv, 20);
    let r = &out.report;
    assert_eq!(r.malicious_set(), vec![0]);
    assert_eq!(r.excluded[0].reason, Reason::Tagged { count: 7 });
}

#[test]
fn runs_are_deterministic_across_thread_modes() {
    let cfg = ProtocolConfig::new(6, 5).with_threshold(3, 1);
    let ups = updates(6, 5, 11);
    let setup = Setup::generate(&cfg, 5).unwrap();
    let adv = AdversarySpec::honest();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let ra = run_iteration(&setup, 5, 3, &ups, &adv, RunOptions { parallel: true }, &mut a).unwrap();
    let rb = run_iteration(&setup, 5, 3, &ups, &adv, RunOptions { parallel: false }, &mut b).unwrap();
    assert_eq!(ra.report, rb.report);
    assert_eq!(a, b);
}
