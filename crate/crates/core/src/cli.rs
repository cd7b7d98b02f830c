//! Command-line front end: protocol runs, attack experiments, simulator
//! cross-checks and efficiency tables.
//!
//! Exit codes: 0 success, 1 configuration error, 2 run aborted by a failed
//! check, 3 verification violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::Rng;

use crate::adversary::{run_attack_experiment, AttackModel, ChannelSelect, ExperimentConfig};
use crate::bitcore::BitVector;
use crate::protocol::{run_protocol, ConfigFile, ProtocolConfig, ProtocolRun};
use crate::qsim::{factored_distribution, total_variation, GhzCircuit, FULL_PATH_QUBIT_CAP};
use crate::report::{compute_efficiency, render_summary, system_label, Histogram};
use crate::rng::{stream, Domain};

#[derive(Debug, Parser)]
#[command(name = "mqpec", version, about = "Quantum private equality comparison over GHZ triplets")]
pub struct Cli {
    /// Worker threads for circuits within a batch and for experiment trials.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the comparison protocol once and write report.json and histogram.csv.
    Run(RunArgs),
    /// Measure detection and information gain of an attack over many runs.
    Attack(AttackArgs),
    /// Cross-check the state-vector circuit against the factored sampler.
    Verify(VerifyArgs),
    /// Print the efficiency table.
    Efficiency(EfficiencyArgs),
    /// Compare two fortunes without Sophia.
    TwoParty(TwoPartyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Millionaires, when no config file is given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Bits per fortune, when no config file is given.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub attack: Option<String>,
    #[arg(long)]
    pub multi_photon_prob: Option<f64>,
    #[arg(long)]
    pub decoy_rate: Option<f64>,
    /// Runs folded into the histogram; the report describes the first.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long)]
    pub two_party: bool,
    /// Draw fortunes from the seed when the config has none.
    #[arg(long)]
    pub random: bool,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub attack: String,
    #[arg(long)]
    pub multi_photon_prob: Option<f64>,
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub decoy_rate: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Largest m checked; exhaustive up to 3, sampled above.
    #[arg(long, default_value_t = 3)]
    pub max_m: usize,
    /// Sampled cases per m above the exhaustive range.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct EfficiencyArgs {
    /// Range of n, as `a..b` (inclusive), `a-b` or a single value.
    #[arg(long, default_value = "1..4")]
    pub n: String,
    #[arg(long, default_value = "1..8")]
    pub m: String,
}

#[derive(Debug, Args)]
pub struct TwoPartyArgs {
    #[arg(long)]
    pub fa: String,
    #[arg(long)]
    pub fb: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub decoy_rate: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Violation(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    Aborted,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Attack(args) => cmd_attack(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Efficiency(args) => cmd_efficiency(&args),
        Command::TwoParty(args) => cmd_two_party(&args),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Aborted) => ExitCode::from(2),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(3)
        }
    }
}

fn entropy_seed() -> u64 {
    rand::rng().random()
}

fn parse_attack(name: &str, multi_photon_prob: Option<f64>, channel: Option<&str>) -> Result<AttackModel> {
    let mut attack: AttackModel = name.parse().map_err(anyhow::Error::msg)?;
    if let Some(p) = multi_photon_prob {
        match &mut attack {
            AttackModel::Pns {
                multi_photon_prob, ..
            } => *multi_photon_prob = p,
            _ => bail!("--multi-photon-prob only applies to pns"),
        }
    }
    if let Some(c) = channel {
        let select: ChannelSelect = serde_json::from_value(serde_json::Value::String(c.to_string()))
            .with_context(|| format!("unknown channel {c:?}; expected sophia, alice or both"))?;
        attack = attack.with_channel(select);
    }
    attack.validate().map_err(anyhow::Error::msg)?;
    Ok(attack)
}

fn write_outputs(out: &Path, run: &ProtocolRun, histogram: &Histogram) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("report.json"), run.report.to_json() + "\n")?;
    fs::write(out.join("histogram.csv"), histogram.to_csv())?;
    Ok(())
}

/// The first run plus `trials − 1` reruns on derived seeds, each labelled
/// with the whole system's readings.
fn run_with_histogram(
    config: &ProtocolConfig,
    fortunes: &[BitVector],
    secret: Option<BitVector>,
    trials: usize,
) -> Result<(ProtocolRun, Histogram)> {
    let first = run_protocol(config, fortunes, secret)?;
    let mut labels = Vec::with_capacity(trials);
    if !first.report.aborted {
        labels.push(system_label(&first.outcomes));
    }
    for t in 1..trials {
        let seed = stream(config.seed, Domain::Histogram, t as u64).random();
        let run = run_protocol(&config.clone().with_seed(seed), fortunes, secret)?;
        if !run.report.aborted {
            labels.push(system_label(&run.outcomes));
        }
    }
    Ok((first, Histogram::from_labels(labels)))
}

fn finish(out: &Path, run: &ProtocolRun, histogram: &Histogram) -> Result<Status, Failure> {
    write_outputs(out, run, histogram)?;
    print!("{}", render_summary(&run.report));
    Ok(if run.report.aborted {
        Status::Aborted
    } else {
        Status::Ok
    })
}

fn cmd_run(args: &RunArgs) -> Result<Status, Failure> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => {
            let (Some(n), Some(m)) = (args.n, args.m) else {
                return Err(anyhow::anyhow!("give --config, or both --n and --m").into());
            };
            ConfigFile {
                n,
                m,
                decoy_rate: 0.0,
                batch_plan: None,
                attack: Default::default(),
                seed: None,
                two_party_mode: false,
                fortunes: None,
                sophia_secret: None,
                decoy_tolerance: None,
                sacrifice_count: None,
            }
        }
    };
    let seed = args.seed.or(file.seed).unwrap_or_else(entropy_seed);
    let mut config = file.to_config(seed)?;
    config.seed = seed;
    if let Some(name) = &args.attack {
        config.attack = parse_attack(name, args.multi_photon_prob, None)?;
    } else if args.multi_photon_prob.is_some() {
        return Err(anyhow::anyhow!("--multi-photon-prob needs --attack pns").into());
    }
    if let Some(rate) = args.decoy_rate {
        config.decoy_rate = rate;
    }
    if args.two_party {
        config.two_party_mode = true;
    }
    config.validate()?;
    let fortunes = match (&file.fortunes, args.random) {
        (Some(f), _) => f.clone(),
        (None, true) => {
            let mut rng = stream(seed, Domain::Fortunes, 0);
            (0..config.n)
                .map(|_| BitVector::random(config.m, &mut rng))
                .collect::<Result<_, _>>()?
        }
        (None, false) => {
            return Err(anyhow::anyhow!("no fortunes in the config; pass --random to draw them").into())
        }
    };
    let (run, histogram) = run_with_histogram(&config, &fortunes, file.sophia_secret, args.trials.max(1))?;
    finish(&args.out, &run, &histogram)
}

fn cmd_two_party(args: &TwoPartyArgs) -> Result<Status, Failure> {
    let fa: BitVector = args.fa.parse()?;
    let fb: BitVector = args.fb.parse()?;
    if fa.len() != fb.len() {
        return Err(anyhow::anyhow!("fortunes differ in length: {} vs {}", fa.len(), fb.len()).into());
    }
    let seed = args.seed.unwrap_or_else(entropy_seed);
    let mut config = ProtocolConfig::two_party(fa.len()).with_seed(seed);
    if let Some(rate) = args.decoy_rate {
        config.decoy_rate = rate;
    }
    config.validate()?;
    let (run, histogram) = run_with_histogram(&config, &[fa, fb], None, args.trials.max(1))?;
    finish(&args.out, &run, &histogram)
}

fn cmd_attack(args: &AttackArgs) -> Result<Status, Failure> {
    let attack = parse_attack(&args.attack, args.multi_photon_prob, args.channel.as_deref())?;
    let cfg = ExperimentConfig::new(attack, args.n, args.m, args.trials)
        .with_decoy_rate(args.decoy_rate)
        .with_seed(args.seed.unwrap_or_else(entropy_seed));
    let result = run_attack_experiment(&cfg)?;
    let json = serde_json::to_string_pretty(&result)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("attack.json"), json.clone() + "\n")?;
    println!("{json}");
    Ok(Status::Ok)
}

/// Largest `m` whose three-party circuit fits the state-vector cap.
fn full_path_max_m() -> usize {
    (FULL_PATH_QUBIT_CAP - 2) / 3
}

fn check_pair(s: BitVector, f: BitVector, fault: bool) -> Result<f64, Failure> {
    let circuit = GhzCircuit::millionaire(s, f)?;
    let exact = circuit.exact_distribution()?;
    let mut target = circuit.target();
    if fault {
        target = target.xor(&BitVector::new(target.len(), 1)?)?;
    }
    let analytic = factored_distribution(3, &target)?;
    Ok(total_variation(&exact, &analytic))
}

fn cmd_verify(args: &VerifyArgs) -> Result<Status, Failure> {
    let cap = full_path_max_m();
    if args.max_m == 0 || args.max_m > cap {
        return Err(anyhow::anyhow!(
            "--max-m must be in 1..={cap} ({FULL_PATH_QUBIT_CAP}-qubit state-vector cap)"
        )
        .into());
    }
    const TOLERANCE: f64 = 1e-9;
    for m in 1..=args.max_m.min(3) {
        let mut worst = 0.0f64;
        let mut pairs = 0;
        for s in BitVector::enumerate(m)? {
            for f in BitVector::enumerate(m)? {
                let tv = check_pair(s, f, args.inject_fault)?;
                if tv >= TOLERANCE {
                    return Err(Failure::Violation(format!("m={m} s={s} f={f}: total variation {tv:e}")));
                }
                worst = worst.max(tv);
                pairs += 1;
            }
        }
        println!("m={m}: {pairs} pairs exhaustive, max total variation {worst:.3e}");
    }
    let seed = args.seed.unwrap_or_else(entropy_seed);
    for m in 4..=args.max_m {
        let mut rng = stream(seed, Domain::Experiment, m as u64);
        let mut worst = 0.0f64;
        for _ in 0..args.trials {
            let s = BitVector::random(m, &mut rng)?;
            let f = BitVector::random(m, &mut rng)?;
            let tv = check_pair(s, f, args.inject_fault)?;
            if tv >= TOLERANCE {
                return Err(Failure::Violation(format!("m={m} s={s} f={f}: total variation {tv:e}")));
            }
            worst = worst.max(tv);
        }
        println!("m={m}: {} pairs sampled, max total variation {worst:.3e}", args.trials);
    }
    println!("ok");
    Ok(Status::Ok)
}

/// `a..b` and `a-b` are inclusive; a bare number is a single value.
fn parse_range(text: &str) -> Result<std::ops::RangeInclusive<u64>> {
    let text = text.trim();
    let (lo, hi) = if let Some((a, b)) = text.split_once("..") {
        (a, b.trim_start_matches('='))
    } else if let Some((a, b)) = text.split_once('-') {
        (a, b)
    } else {
        (text, text)
    };
    let lo: u64 = lo.trim().parse().with_context(|| format!("bad range {text:?}"))?;
    let hi: u64 = hi.trim().parse().with_context(|| format!("bad range {text:?}"))?;
    if lo == 0 || hi < lo {
        bail!("range {text:?} must be positive and non-empty");
    }
    Ok(lo..=hi)
}

fn cmd_efficiency(args: &EfficiencyArgs) -> Result<Status, Failure> {
    let ns = parse_range(&args.n)?;
    let ms = parse_range(&args.m)?;
    println!("{:>6} {:>6} {:>8} {:>8} {:>8}", "n", "m", "eta_cb", "eta_tq", "eta");
    for n in ns {
        for m in ms.clone() {
            let e = compute_efficiency(n, m);
            println!(
                "{:>6} {:>6} {:>8} {:>8} {:>8.4}",
                n,
                m,
                e.eta_cb,
                e.eta_tq,
                e.eta_f64()
            );
        }
    }
    println!("asymptote: eta -> 1/3 (0.3333) as m grows");
    Ok(Status::Ok)
}
