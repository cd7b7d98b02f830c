//! Goodness-of-fit and information estimates used by the experiment harness.

use std::collections::HashMap;
use std::hash::Hash;

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    /// True when uniformity is not rejected at the given significance.
    pub fn accepts(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Pearson χ² against the uniform distribution over `counts.len()` cells.
///
/// Cells with zero observations still count toward the degrees of freedom.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquareTest {
    assert!(counts.len() >= 2, "need at least two cells");
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum::<f64>();
    let dof = counts.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    }
}

/// Miller–Madow corrected plug-in entropy, in bits.
pub fn entropy_bits<K: Eq + Hash>(counts: &HashMap<K, u64>) -> f64 {
    let n: u64 = counts.values().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let plug_in = -counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>();
    let occupied = counts.values().filter(|&&c| c > 0).count() as f64;
    (plug_in + (occupied - 1.0) / (2.0 * n)) / std::f64::consts::LN_2
}

/// I(X;Y) = H(X) + H(Y) − H(X,Y) from paired samples, each entropy
/// Miller–Madow corrected. Clamped at zero.
pub fn mutual_information_bits<X, Y>(pairs: &[(X, Y)]) -> f64
where
    X: Eq + Hash + Clone,
    Y: Eq + Hash + Clone,
{
    let mut hx: HashMap<X, u64> = HashMap::new();
    let mut hy: HashMap<Y, u64> = HashMap::new();
    let mut hxy: HashMap<(X, Y), u64> = HashMap::new();
    for (x, y) in pairs {
        *hx.entry(x.clone()).or_default() += 1;
        *hy.entry(y.clone()).or_default() += 1;
        *hxy.entry((x.clone(), y.clone())).or_default() += 1;
    }
    (entropy_bits(&hx) + entropy_bits(&hy) - entropy_bits(&hxy)).max(0.0)
}
