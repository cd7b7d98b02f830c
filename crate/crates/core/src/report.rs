//! Public run reports, efficiency metrics, histograms and text summaries.
//!
//! Everything here is the *public* view of a run. Trent's register readings
//! and encoded sums, Sophia's secret and the fortunes never reach these types.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::qsim::MeasurementOutcome;

/// Qubit efficiency of a run: compared bits over qubits used, decoys excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EfficiencyMetrics {
    pub eta_cb: u64,
    pub eta_tq: u64,
    pub eta: Ratio<u64>,
}

impl EfficiencyMetrics {
    pub fn new(eta_cb: u64, eta_tq: u64) -> Self {
        Self {
            eta_cb,
            eta_tq,
            eta: Ratio::new(eta_cb, eta_tq),
        }
    }

    pub fn eta_f64(&self) -> f64 {
        *self.eta.numer() as f64 / *self.eta.denom() as f64
    }
}

/// `η_cb = nm`, `η_tq = 3nm + 2n`, `η = m / (3m + 2)`.
pub fn compute_efficiency(n: u64, m: u64) -> EfficiencyMetrics {
    assert!(n >= 1 && m >= 1, "n and m must be positive");
    EfficiencyMetrics::new(n * m, 3 * n * m + 2 * n)
}

#[derive(Serialize, Deserialize)]
struct EfficiencyWire {
    eta_cb: u64,
    eta_tq: u64,
    eta: f64,
}

impl Serialize for EfficiencyMetrics {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        EfficiencyWire {
            eta_cb: self.eta_cb,
            eta_tq: self.eta_tq,
            eta: self.eta_f64(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EfficiencyMetrics {
    /// `eta` is rebuilt exactly from the two counts; the float is only checked.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = EfficiencyWire::deserialize(deserializer)?;
        if wire.eta_tq == 0 {
            return Err(serde::de::Error::custom("eta_tq must be positive"));
        }
        let metrics = EfficiencyMetrics::new(wire.eta_cb, wire.eta_tq);
        if (metrics.eta_f64() - wire.eta).abs() > 1e-12 {
            return Err(serde::de::Error::custom(format!(
                "eta {} inconsistent with {}/{}",
                wire.eta, wire.eta_cb, wire.eta_tq
            )));
        }
        Ok(metrics)
    }
}

/// Trent's announcement for one pair `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub i: usize,
    pub j: usize,
    pub equal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionStats {
    pub decoys: u64,
    pub mismatches: u64,
    pub error_rate: f64,
}

impl DetectionStats {
    pub fn from_counts(decoys: u64, mismatches: u64) -> Self {
        let error_rate = if decoys == 0 {
            0.0
        } else {
            mismatches as f64 / decoys as f64
        };
        Self {
            decoys,
            mismatches,
            error_rate,
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self::from_counts(self.decoys + other.decoys, self.mismatches + other.mismatches)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortStage {
    DecoyCheck,
    EntanglementValidation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub stage: AbortStage,
    /// Decoy error rate, or for validation the fraction of sacrificed
    /// triplets whose readings disagreed.
    pub error_rate: f64,
}

/// The public outcome of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub verdicts: Vec<Verdict>,
    pub efficiency: EfficiencyMetrics,
    pub detection: DetectionStats,
    pub aborted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort: Option<AbortInfo>,
    pub seed: u64,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn verdict(&self, i: usize, j: usize) -> Option<bool> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.verdicts
            .iter()
            .find(|v| v.i == i && v.j == j)
            .map(|v| v.equal)
    }
}

/// Counts per label in first-seen-sorted (lexicographic) order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Histogram {
    counts: BTreeMap<String, u64>,
}

impl Histogram {
    pub fn from_labels<I: IntoIterator<Item = String>>(labels: I) -> Self {
        let mut counts = BTreeMap::new();
        for label in labels {
            *counts.entry(label).or_insert(0) += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    /// `(label, count, frequency)` rows.
    pub fn rows(&self) -> Vec<(String, u64, f64)> {
        let total = self.total() as f64;
        self.counts
            .iter()
            .map(|(l, &c)| (l.clone(), c, c as f64 / total))
            .collect()
    }

    /// CSV with header `label,count,frequency`.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["label", "count", "frequency"])
            .expect("in-memory write");
        for (label, count, freq) in self.rows() {
            writer
                .write_record([label, count.to_string(), freq.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Histogram of single-circuit outcomes labelled `y2 ∥ y1 ∥ y0`.
pub fn render_histogram(outcomes: &[MeasurementOutcome]) -> String {
    Histogram::from_labels(outcomes.iter().map(MeasurementOutcome::label)).to_csv()
}

/// Whole-system label for one run: circuit `n−1` first, circuit 0 last,
/// each contributing `y2 ∥ y1 ∥ y0`.
pub fn system_label(outcomes: &[MeasurementOutcome]) -> String {
    outcomes.iter().rev().map(MeasurementOutcome::label).collect()
}

/// Human-readable summary: verdicts, efficiency, detection, abort state.
pub fn render_summary(report: &ComparisonReport) -> String {
    let mut out = String::new();
    if report.aborted {
        let _ = writeln!(out, "run ABORTED (seed {})", report.seed);
        if let Some(abort) = &report.abort {
            let stage = match abort.stage {
                AbortStage::DecoyCheck => "decoy check",
                AbortStage::EntanglementValidation => "entanglement validation",
            };
            let _ = writeln!(out, "  stage: {stage}");
            let _ = writeln!(out, "  error rate: {:.4}", abort.error_rate);
        }
    } else {
        let _ = writeln!(out, "verdicts (seed {}):", report.seed);
        for v in &report.verdicts {
            let rel = if v.equal { "=" } else { "≠" };
            let word = if v.equal { "YES" } else { "NO" };
            let _ = writeln!(out, "  {} {} {}  {}", v.i, rel, v.j, word);
        }
    }
    let e = &report.efficiency;
    let _ = writeln!(
        out,
        "efficiency: eta_cb = {}, eta_tq = {}, eta = {} ≈ {:.4}",
        e.eta_cb,
        e.eta_tq,
        e.eta,
        e.eta_f64()
    );
    let d = &report.detection;
    let _ = writeln!(
        out,
        "decoys: {} checked, {} mismatched, error rate {:.4}",
        d.decoys, d.mismatches, d.error_rate
    );
    out
}
