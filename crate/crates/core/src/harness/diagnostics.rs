//! Runtime diagnostics relating classifier-vector similarity to label
//! counts, and convergence-speed helpers.

use crate::harness::experiment::{ExperimentResult, RoundLog};
use crate::metrics::spearman;
use crate::numkit::Matrix;

/// Per-round relation between similarity and label counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationStats {
    pub round: usize,
    /// Mean over clients of the rank correlation, across classes, between
    /// `N_k^c` and `d_{k,c}`.
    pub within_client: Option<f64>,
    /// Rank correlation, across classes, between `N^c` and global `d_c`.
    pub global: Option<f64>,
    /// Mean over classes of the rank correlation, across clients, between
    /// `N_k^c` and `d_{k,c}`.
    pub across_clients: Option<f64>,
    /// Mean `|d_{k,c} - d_c|` over clients and classes.
    pub spread: f64,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Mean over classes of the Spearman correlation across clients between
/// `counts[k][c]` and `sim[k][c]`; classes where either column is constant
/// are skipped.
pub fn across_client_correlation(counts: &[Vec<usize>], sim: &Matrix) -> Option<f64> {
    let classes = sim.cols();
    mean_defined((0..classes).map(|c| {
        let n: Vec<f64> = counts.iter().map(|r| r[c] as f64).collect();
        let d: Vec<f64> = (0..sim.rows()).map(|k| sim[(k, c)]).collect();
        spearman(&n, &d)
    }))
}

pub fn within_client_correlation(counts: &[Vec<usize>], sim: &Matrix) -> Option<f64> {
    mean_defined(counts.iter().enumerate().map(|(k, row)| {
        let n: Vec<f64> = row.iter().map(|&x| x as f64).collect();
        spearman(&n, sim.row(k))
    }))
}

pub fn observation_stats(counts: &[Vec<usize>], log: &RoundLog) -> ObservationStats {
    let sim = &log.similarity.local;
    let classes = sim.cols();
    let totals: Vec<f64> = (0..classes)
        .map(|c| counts.iter().map(|r| r[c]).sum::<usize>() as f64)
        .collect();
    let mut spread = 0.0;
    for k in 0..sim.rows() {
        for c in 0..classes {
            spread += (sim[(k, c)] - log.similarity.global[c]).abs();
        }
    }
    ObservationStats {
        round: log.round,
        within_client: within_client_correlation(counts, sim),
        global: spearman(&totals, &log.similarity.global),
        across_clients: across_client_correlation(counts, sim),
        spread: spread / (sim.rows() * classes) as f64,
    }
}

/// Mean across-client correlation over the given rounds (1-based,
/// inclusive).
pub fn mean_across_client_correlation(
    result: &ExperimentResult,
    first: usize,
    last: usize,
) -> Option<f64> {
    mean_defined(
        result
            .rounds
            .iter()
            .filter(|r| (first..=last).contains(&r.round))
            .map(|r| across_client_correlation(&result.partition.counts, &r.similarity.local)),
    )
}

/// First round (1-based) whose value reaches `target`.
pub fn rounds_to_reach(series: &[(usize, f64)], target: f64) -> Option<usize> {
    series.iter().find(|(_, v)| *v >= target).map(|(r, _)| *r)
}
