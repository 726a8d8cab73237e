//! Comparison of two cluster assignments over the same points: contingency
//! table, Adjusted Rand Index, and a greedy best-overlap cluster matching.

use super::{ClusterAssignment, ClusterError};
use crate::Scalar;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContingencyCell {
    pub a: i32,
    pub b: i32,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchedPair {
    pub a: i32,
    pub b: i32,
    pub size_a: usize,
    pub size_b: usize,
    pub overlap: usize,
    /// size_a − size_b for the matched pair.
    pub size_delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport<S> {
    pub ari: S,
    pub contingency: Vec<ContingencyCell>,
    pub matches: Vec<MatchedPair>,
    /// Outlier counts in (a, b).
    pub outliers: (usize, usize),
}

fn pairs2(x: usize) -> u128 {
    let x = x as u128;
    x * x.saturating_sub(1) / 2
}

/// Adjusted Rand Index where every outlier counts as its own singleton
/// cluster. Two singletons never share a pair, so only real-cluster labels
/// contribute to the pair sums; degenerate comparisons (no pair information
/// on either side) score 1 exactly when the partitions coincide.
fn adjusted_rand<S: Scalar>(a: &[i32], b: &[i32]) -> S {
    let n = a.len();
    if n < 2 {
        return S::one();
    }
    let mut cells: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    let mut sizes_a: BTreeMap<i32, usize> = BTreeMap::new();
    let mut sizes_b: BTreeMap<i32, usize> = BTreeMap::new();
    for (&la, &lb) in a.iter().zip(b) {
        if la >= 0 && lb >= 0 {
            *cells.entry((la, lb)).or_insert(0) += 1;
        }
        if la >= 0 {
            *sizes_a.entry(la).or_insert(0) += 1;
        }
        if lb >= 0 {
            *sizes_b.entry(lb).or_insert(0) += 1;
        }
    }
    let index: u128 = cells.values().map(|&c| pairs2(c)).sum();
    let sum_a: u128 = sizes_a.values().map(|&c| pairs2(c)).sum();
    let sum_b: u128 = sizes_b.values().map(|&c| pairs2(c)).sum();
    let total = pairs2(n);
    let to_s = |x: u128| S::from_f64(x as f64).expect("pair count representable");
    let expected = to_s(sum_a) * to_s(sum_b) / to_s(total);
    let max = (to_s(sum_a) + to_s(sum_b)) / S::from_count(2);
    let denom = max - expected;
    if denom == S::zero() {
        S::one()
    } else {
        (to_s(index) - expected) / denom
    }
}

/// Builds the full agreement report between two assignments.
pub fn compare_assignments<S: Scalar>(
    a: &ClusterAssignment,
    b: &ClusterAssignment,
) -> Result<AgreementReport<S>, ClusterError> {
    if a.len() != b.len() {
        return Err(ClusterError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let mut table: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    let mut sizes_a: BTreeMap<i32, usize> = BTreeMap::new();
    let mut sizes_b: BTreeMap<i32, usize> = BTreeMap::new();
    for (&la, &lb) in a.labels().iter().zip(b.labels()) {
        *table.entry((la, lb)).or_insert(0) += 1;
        *sizes_a.entry(la).or_insert(0) += 1;
        *sizes_b.entry(lb).or_insert(0) += 1;
    }
    let contingency: Vec<ContingencyCell> = table
        .iter()
        .map(|(&(a, b), &count)| ContingencyCell { a, b, count })
        .collect();

    // Greedy best-overlap matching between real clusters (outliers excluded):
    // largest overlap first, ties toward the lowest (a, b) pair.
    let mut candidates: Vec<(usize, i32, i32)> = table
        .iter()
        .filter(|(&(la, lb), _)| la >= 0 && lb >= 0)
        .map(|(&(la, lb), &count)| (count, la, lb))
        .collect();
    candidates.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a: std::collections::BTreeSet<i32> = Default::default();
    let mut used_b: std::collections::BTreeSet<i32> = Default::default();
    let mut matches = Vec::new();
    for (overlap, la, lb) in candidates {
        if used_a.contains(&la) || used_b.contains(&lb) {
            continue;
        }
        used_a.insert(la);
        used_b.insert(lb);
        let size_a = sizes_a[&la];
        let size_b = sizes_b[&lb];
        matches.push(MatchedPair {
            a: la,
            b: lb,
            size_a,
            size_b,
            overlap,
            size_delta: size_a as i64 - size_b as i64,
        });
    }

    Ok(AgreementReport {
        ari: adjusted_rand(a.labels(), b.labels()),
        contingency,
        matches,
        outliers: (a.n_outliers(), b.n_outliers()),
    })
}

/// Serializes the agreement report as pretty JSON.
pub fn write_agreement_json<S: Scalar + Serialize, W: std::io::Write>(
    report: &AgreementReport<S>,
    writer: W,
) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(writer, report)
}
