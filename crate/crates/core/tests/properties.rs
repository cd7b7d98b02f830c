use proptest::prelude::*;

use mqpec::adversary::AttackModel;
use mqpec::bitcore::BitVector;
use mqpec::protocol::{run_protocol, run_two_party, BatchPlan, ProtocolConfig};
use mqpec::report::compute_efficiency;

fn fortunes(n: usize, m: usize) -> impl Strategy<Value = Vec<BitVector>> {
    let pool = proptest::collection::vec(0u64..(1 << m), 1..=3);
    (pool, proptest::collection::vec(any::<prop::sample::Index>(), n)).prop_map(move |(pool, picks)| {
        picks
            .iter()
            .map(|i| BitVector::new(m, pool[i.index(pool.len())]).unwrap())
            .collect()
    })
}

fn case() -> impl Strategy<Value = (usize, usize, Vec<BitVector>, u64, f64)> {
    (2usize..=6, 1usize..=10)
        .prop_flat_map(|(n, m)| (Just(n), Just(m), fortunes(n, m), any::<u64>(), 0.0..0.6f64))
}

/// Random partition of `0..n` into non-empty blocks.
fn plan(n: usize) -> impl Strategy<Value = BatchPlan> {
    (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), proptest::collection::vec(any::<bool>(), n))
        .prop_map(|(order, cuts)| {
            let mut batches: Vec<Vec<usize>> = vec![Vec::new()];
            for (k, i) in order.into_iter().enumerate() {
                if k > 0 && cuts[k] {
                    batches.push(Vec::new());
                }
                batches.last_mut().unwrap().push(i);
            }
            BatchPlan::new(batches)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn honest_verdicts_match_equality((n, m, f, seed, rate) in case()) {
        let config = ProtocolConfig::new(n, m).with_seed(seed).with_decoy_rate(rate);
        let run = run_protocol(&config, &f, None).unwrap();
        prop_assert!(!run.report.aborted);
        prop_assert_eq!(run.report.detection.mismatches, 0);
        prop_assert_eq!(run.report.verdicts.len(), n * (n - 1) / 2);
        for v in &run.report.verdicts {
            prop_assert_eq!(v.equal, f[v.i] == f[v.j]);
        }
        let s = run.secret.unwrap();
        for (i, out) in run.outcomes.iter().enumerate() {
            prop_assert_eq!(out.parity(), s.xor(&f[i]).unwrap());
        }
        prop_assert!(run.transcript.verify());
    }

    #[test]
    fn batch_plan_never_changes_the_report(
        (n, m, f, seed, rate) in case(),
        split in any::<prop::sample::Index>(),
    ) {
        let base = ProtocolConfig::new(n, m)
            .with_seed(seed)
            .with_decoy_rate(rate)
            .with_tolerance(1.0)
            .with_attack(AttackModel::entangle_measure());
        let reference = run_protocol(&base, &f, None).unwrap();
        let size = split.index(n) + 1;
        let other = run_protocol(&base.with_batch_plan(BatchPlan::chunked(n, size)), &f, None).unwrap();
        prop_assert_eq!(reference.report.to_json(), other.report.to_json());
        prop_assert_eq!(reference.transcript.to_json(), other.transcript.to_json());
    }

    #[test]
    fn any_partition_is_a_valid_schedule(p in (1usize..=8).prop_flat_map(|n| (Just(n), plan(n))), seed in any::<u64>()) {
        let (n, plan) = p;
        prop_assert!(plan.validate(n).is_ok());
        let f: Vec<BitVector> = (0..n).map(|i| BitVector::new(3, (i % 3) as u64).unwrap()).collect();
        let base = ProtocolConfig::new(n, 3).with_seed(seed).with_decoy_rate(0.25);
        let a = run_protocol(&base, &f, None).unwrap();
        let b = run_protocol(&base.with_batch_plan(plan), &f, None).unwrap();
        prop_assert_eq!(a.report.to_json(), b.report.to_json());
    }

    #[test]
    fn any_wrong_decoy_reading_is_reported(
        (n, m, f, seed, _rate) in case(),
        attack in prop_oneof![
            Just(AttackModel::measure_resend()),
            Just(AttackModel::intercept_resend()),
            Just(AttackModel::entangle_measure()),
        ],
    ) {
        let config = ProtocolConfig::new(n, m).with_seed(seed).with_decoy_rate(0.5).with_attack(attack);
        let run = run_protocol(&config, &f, None).unwrap();
        let d = run.report.detection;
        if d.mismatches > 0 {
            prop_assert!(run.report.aborted);
            prop_assert!(run.report.verdicts.is_empty());
        }
        if !run.report.aborted {
            prop_assert_eq!(d.mismatches, 0);
        }
    }

    #[test]
    fn two_party_sum_is_the_difference(m in 1usize..=12, a in any::<u64>(), b in any::<u64>(), seed in any::<u64>()) {
        let mask = (1u64 << m) - 1;
        let fa = BitVector::new(m, a & mask).unwrap();
        let fb = BitVector::new(m, b & mask).unwrap();
        let config = ProtocolConfig::two_party(m).with_seed(seed).with_decoy_rate(0.25);
        let run = run_two_party(&fa, &fb, &config).unwrap();
        prop_assert_eq!(run.outcomes[0].parity(), fa.xor(&fb).unwrap());
        prop_assert_eq!(run.report.verdict(0, 1), Some(fa == fb));
    }

    #[test]
    fn efficiency_is_m_over_3m_plus_2(n in 1u64..=1000, m in 1u64..=1000) {
        let e = compute_efficiency(n, m);
        prop_assert_eq!(e.eta_cb, n * m);
        prop_assert_eq!(e.eta_tq, n * (3 * m + 2));
        prop_assert_eq!(e.eta, num_rational::Ratio::new(m, 3 * m + 2));
        prop_assert!(e.eta < num_rational::Ratio::new(1, 3));
    }
}
