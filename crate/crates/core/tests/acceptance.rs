//! Acceptance gate: ten criteria, each reported as one PASS/FAIL line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;

use mqpec::adversary::{run_attack_experiment, AttackModel, ExperimentConfig};
use mqpec::bitcore::BitVector;
use mqpec::protocol::{run_protocol, run_two_party, BatchPlan, ProtocolConfig, SimulationPath};
use mqpec::qsim::{factored_distribution, run_qc_factored, run_qc_full, total_variation, GhzCircuit};
use mqpec::report::compute_efficiency;
use mqpec::rng::{from_seed, stream, Domain};
use mqpec::stats::{chi_square_uniform, mutual_information_bits};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn bv(s: &str) -> BitVector {
    s.parse().unwrap()
}

fn c1_worked_example() -> Check {
    let fortunes = [bv("11"), bv("11"), bv("01")];
    let secret = bv("10");
    let expected_sums = [bv("01"), bv("01"), bv("11")];
    let start = Instant::now();
    for seed in 0..100 {
        let config = ProtocolConfig::new(3, 2).with_seed(seed);
        let run = run_protocol(&config, &fortunes, Some(secret)).map_err(|e| e.to_string())?;
        ensure(run.trent.sums == expected_sums, || format!("seed {seed}: sums {:?}", run.trent.sums))?;
        let r = &run.report;
        ensure(
            r.verdict(0, 1) == Some(true) && r.verdict(0, 2) == Some(false) && r.verdict(1, 2) == Some(false),
            || format!("seed {seed}: verdicts {:?}", r.verdicts),
        )?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("100 seeds, sums 01/01/11, YES NO NO in {elapsed:?}"))
}

fn c2_parity_property() -> Check {
    let start = Instant::now();
    let factored = (0..100_000u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = stream(2, Domain::Quantum, t);
            let m = rng.random_range(1..=16);
            let s = BitVector::random(m, &mut rng).unwrap();
            let f = BitVector::random(m, &mut rng).unwrap();
            let out = run_qc_factored(m, &s, &f, &mut rng).unwrap();
            out.parity() != s.xor(&f).unwrap()
        })
        .count();
    let full = (0..2_000u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = stream(3, Domain::Quantum, t);
            let m = rng.random_range(1..=4);
            let s = BitVector::random(m, &mut rng).unwrap();
            let f = BitVector::random(m, &mut rng).unwrap();
            let out = run_qc_full(m, &s, &f, &mut rng).unwrap();
            out.parity() != s.xor(&f).unwrap()
        })
        .count();
    let elapsed = start.elapsed();
    ensure(factored == 0 && full == 0, || {
        format!("{factored} factored and {full} state-vector violations")
    })?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("100000 factored + 2000 state-vector samples, 0 violations in {elapsed:?}"))
}

fn c3_oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for m in 1..=3 {
        for s in BitVector::enumerate(m).unwrap() {
            for f in BitVector::enumerate(m).unwrap() {
                let exact = GhzCircuit::millionaire(s, f).unwrap().exact_distribution().unwrap();
                let analytic = factored_distribution(3, &s.xor(&f).unwrap()).unwrap();
                let tv = total_variation(&exact, &analytic);
                ensure(tv < 1e-9, || format!("m={m} s={s} f={f}: tv {tv:e}"))?;
                worst = worst.max(tv);
                pairs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("{pairs} pairs, max tv {worst:.2e} in {elapsed:?}"))
}

fn c4_uniformity() -> Check {
    let m = 4;
    let mut rng = from_seed(4);
    let s = BitVector::random(m, &mut rng).unwrap();
    let f = BitVector::random(m, &mut rng).unwrap();
    let target = s.xor(&f).unwrap();
    let mut counts = vec![[0u64; 4]; m];
    for _ in 0..100_000 {
        let out = run_qc_factored(m, &s, &f, &mut rng).unwrap();
        for (k, cell) in counts.iter_mut().enumerate() {
            let (a, b, c) = (out.y2.bit(k), out.y1.bit(k), out.y0.bit(k));
            ensure(a ^ b ^ c == target.bit(k), || format!("bit {k} breaks parity"))?;
            cell[(a as usize) << 1 | b as usize] += 1;
        }
    }
    let mut worst = 1.0f64;
    for (k, cell) in counts.iter().enumerate() {
        let test = chi_square_uniform(cell);
        ensure(test.accepts(0.001), || format!("bit {k}: counts {cell:?}, p = {}", test.p_value))?;
        worst = worst.min(test.p_value);
    }
    Ok(format!("100000 samples at m=4, min p = {worst:.4}"))
}

fn c5_end_to_end() -> Check {
    let mismatches: Vec<String> = (0..1_000u64)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = stream(5, Domain::Experiment, t);
            let n = rng.random_range(2..=8);
            let m = rng.random_range(1..=16);
            let pool: Vec<BitVector> = (0..rng.random_range(1..=3))
                .map(|_| BitVector::random(m, &mut rng).unwrap())
                .collect();
            let fortunes: Vec<BitVector> = (0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect();
            let config = ProtocolConfig::new(n, m)
                .with_seed(rng.random())
                .with_decoy_rate(rng.random_range(0.0..0.5));
            let run = run_protocol(&config, &fortunes, None).unwrap();
            let bad = run.report.aborted
                || run.report.verdicts.len() != n * (n - 1) / 2
                || run.report.verdicts.iter().any(|v| v.equal != (fortunes[v.i] == fortunes[v.j]));
            bad.then(|| format!("trial {t}: n={n} m={m}"))
        })
        .collect();
    ensure(mismatches.is_empty(), || format!("{} mismatches, first {}", mismatches.len(), mismatches[0]))?;
    Ok("1000 runs, 0 mismatches".into())
}

fn c6_efficiency() -> Check {
    let e = compute_efficiency(3, 2);
    ensure(e.eta_tq == 24, || format!("eta_tq(3,2) = {}", e.eta_tq))?;
    for m in 1..=2_000u64 {
        let eta = compute_efficiency(3, m).eta;
        ensure(eta == Ratio::new(m, 3 * m + 2), || format!("eta({m}) = {eta}"))?;
    }
    let eta = compute_efficiency(3, 1_000).eta;
    let gap = Ratio::new(1, 3) - eta;
    ensure(gap < Ratio::new(1, 10_000), || {
        format!("|eta(1000) - 1/3| = {gap} ≈ {:.3e}, not below 1e-4", *gap.numer() as f64 / *gap.denom() as f64)
    })?;
    Ok(format!("eta_tq(3,2) = 24, |eta(1000) - 1/3| = {gap}"))
}

fn c7_decoy_detection() -> Check {
    let mut lines = Vec::new();
    for attack in [AttackModel::measure_resend(), AttackModel::intercept_resend()] {
        let cfg = ExperimentConfig::new(attack.clone(), 4, 8, 1_100)
            .with_decoy_rate(0.75)
            .with_seed(7);
        let r = run_attack_experiment(&cfg).map_err(|e| e.to_string())?;
        ensure(r.decoys >= 100_000, || format!("{attack}: only {} decoys", r.decoys))?;
        ensure((r.detection_rate - 0.25).abs() <= 0.02, || {
            format!("{attack}: detection {:.4} over {} decoys", r.detection_rate, r.decoys)
        })?;
        lines.push(format!("{attack} {:.4} over {} decoys", r.detection_rate, r.decoys));
    }
    Ok(lines.join(", "))
}

fn c8_zero_leakage() -> Check {
    let m = 2;
    let mut lines = Vec::new();
    for attack in [AttackModel::entangle_measure(), AttackModel::pns(1.0), AttackModel::pns(0.5)] {
        let views: Vec<(BitVector, BitVector, BitVector)> = (0..10_000u64)
            .into_par_iter()
            .flat_map_iter(|t| {
                let mut rng = stream(8, Domain::Experiment, t);
                let fortunes: Vec<BitVector> = (0..3).map(|_| BitVector::random(m, &mut rng).unwrap()).collect();
                let config = ProtocolConfig::new(3, m)
                    .with_seed(rng.random())
                    .with_decoy_rate(0.5)
                    .with_tolerance(1.0)
                    .with_attack(attack.clone());
                let run = run_protocol(&config, &fortunes, None).unwrap();
                let s = run.secret.unwrap();
                (0..3)
                    .filter_map(|i| {
                        let e = run.eve.estimate(i)?;
                        Some((fortunes[i], s.xor(&fortunes[i]).unwrap(), e))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        ensure(views.len() >= 10_000, || format!("{attack}: only {} views", views.len()))?;
        let mut joint = vec![0u64; 1 << (2 * m)];
        for (_, sum, e) in &views {
            joint[(sum.value() << m | e.value()) as usize] += 1;
        }
        let test = chi_square_uniform(&joint);
        ensure(test.accepts(0.001), || format!("{attack}: (s⊕f, estimate) χ² p = {}", test.p_value))?;
        let pairs: Vec<(BitVector, BitVector)> = views.iter().map(|&(f, _, e)| (f, e)).collect();
        let mi = mutual_information_bits(&pairs);
        ensure(mi < 0.01, || format!("{attack}: I(f; estimate) = {mi:.5} bits"))?;
        lines.push(format!("{attack} p={:.3} I={mi:.5}", test.p_value));
    }
    Ok(lines.join(", "))
}

fn c9_schedule_invariance() -> Check {
    let fortunes = [bv("1011"), bv("0110"), bv("1011")];
    for attack in [AttackModel::None, AttackModel::entangle_measure(), AttackModel::pns(0.5)] {
        for seed in 0..20 {
            let base = ProtocolConfig::new(3, 4)
                .with_seed(seed)
                .with_decoy_rate(0.5)
                .with_tolerance(1.0)
                .with_attack(attack.clone());
            let parallel = run_protocol(&base.clone().with_batch_plan(BatchPlan::parallel(3)), &fortunes, None)
                .map_err(|e| e.to_string())?;
            let batched = run_protocol(&base.with_batch_plan(BatchPlan::sequential(3)), &fortunes, None)
                .map_err(|e| e.to_string())?;
            ensure(parallel.report.to_json() == batched.report.to_json(), || {
                format!("{attack} seed {seed}: reports differ")
            })?;
            ensure(parallel.transcript.to_json() == batched.transcript.to_json(), || {
                format!("{attack} seed {seed}: transcripts differ")
            })?;
        }
    }
    Ok("60 seeded runs, reports and transcripts byte-identical".into())
}

fn c10_two_party() -> Check {
    let mut runs = 0;
    for m in 1..=4 {
        for fa in BitVector::enumerate(m).unwrap() {
            for fb in BitVector::enumerate(m).unwrap() {
                for path in [SimulationPath::Factored, SimulationPath::StateVector] {
                    let seed = (fa.value() << 8 | fb.value()) ^ m as u64;
                    let config = ProtocolConfig::two_party(m).with_seed(seed).with_path(path);
                    let run = run_two_party(&fa, &fb, &config).map_err(|e| e.to_string())?;
                    let diff = fa.xor(&fb).unwrap();
                    ensure(run.report.verdict(0, 1) == Some(fa == fb), || {
                        format!("fa={fa} fb={fb}: verdict {:?}", run.report.verdict(0, 1))
                    })?;
                    ensure(run.outcomes[0].parity() == diff && run.trent.sums[0] == diff, || {
                        format!("fa={fa} fb={fb}: parity {}", run.outcomes[0].parity())
                    })?;
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} runs over all pairs at m ≤ 4"))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("worked example", c1_worked_example),
        ("parity property", c2_parity_property),
        ("oracle equivalence", c3_oracle_equivalence),
        ("uniformity", c4_uniformity),
        ("end-to-end correctness", c5_end_to_end),
        ("efficiency formulas", c6_efficiency),
        ("decoy detection", c7_decoy_detection),
        ("zero leakage", c8_zero_leakage),
        ("schedule invariance", c9_schedule_invariance),
        ("two-party mode", c10_two_party),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
