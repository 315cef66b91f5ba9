//! Tail-of-run summaries across seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::output::{read_metrics_csv, MetricsRow};
use crate::metrics::{MetricsAccumulator, MetricsRecord, Summary};
use crate::{Error, Result};

pub const DEFAULT_TAIL_EPISODES: usize = 10;

/// Cross-seed statistics of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation across seeds (0 for a single seed).
    pub std: f64,
    /// Number of seeds with a defined value.
    pub n: usize,
}

/// One line per metric column, in CSV column order.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<(&'static str, Option<MetricSummary>)>,
}

impl SummaryTable {
    pub fn get(&self, metric: &str) -> Option<MetricSummary> {
        self.rows.iter().find(|(name, _)| *name == metric).and_then(|(_, s)| *s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,mean,std,n\n");
        for (name, s) in &self.rows {
            match s {
                Some(s) => {
                    let _ = writeln!(out, "{name},{:.6},{:.6},{}", s.mean, s.std, s.n);
                }
                None => {
                    let _ = writeln!(out, "{name},,,0");
                }
            }
        }
        out
    }
}

/// Per-seed tail means: the last `tail` emitted episodes of each arena are
/// averaged, then arenas are averaged within a seed. Missing values are
/// skipped, so a metric is absent for a seed only if no arena ever defined it.
pub fn seed_tail_means(rows: &[MetricsRow], tail: usize) -> BTreeMap<u64, [Option<f64>; 15]> {
    let mut trajectories: BTreeMap<(u64, usize), Vec<&MetricsRow>> = BTreeMap::new();
    for row in rows {
        trajectories.entry((row.seed, row.arena)).or_default().push(row);
    }

    let mut per_seed: BTreeMap<u64, Vec<[Option<f64>; 15]>> = BTreeMap::new();
    for ((seed, _), mut traj) in trajectories {
        traj.sort_by_key(|r| r.episode);
        let start = traj.len().saturating_sub(tail);
        per_seed.entry(seed).or_default().push(column_means(traj[start..].iter().map(|r| r.metrics.values())));
    }
    per_seed
        .into_iter()
        .map(|(seed, arenas)| (seed, column_means(arenas.into_iter())))
        .collect()
}

fn column_means(rows: impl Iterator<Item = [Option<f64>; 15]>) -> [Option<f64>; 15] {
    let mut acc = MetricsAccumulator::default();
    for row in rows {
        acc.add(&MetricsRecord::from_values(row));
    }
    acc.mean().values()
}

/// Summarise rows already in memory.
pub fn summarize_rows(rows: &[MetricsRow], tail: usize) -> Result<SummaryTable> {
    if tail == 0 {
        return Err(Error::config("tail_episodes", "must be at least 1"));
    }
    let seeds = seed_tail_means(rows, tail);
    let rows = MetricsRecord::COLUMNS
        .iter()
        .enumerate()
        .map(|(k, &name)| {
            let values: Vec<f64> = seeds.values().filter_map(|v| v[k]).collect();
            let stat = Summary::of(&values).map(|s| MetricSummary {
                mean: s.mean,
                std: s.std,
                n: values.len(),
            });
            (name, stat)
        })
        .collect();
    Ok(SummaryTable { rows })
}

/// Read metrics CSVs of one configuration and summarise them.
pub fn aggregate_runs<P: AsRef<Path>>(paths: &[P], tail: usize) -> Result<SummaryTable> {
    if paths.is_empty() {
        return Err(Error::usage("aggregate needs at least one metrics CSV"));
    }
    let mut rows = Vec::new();
    for path in paths {
        rows.extend(read_metrics_csv(path.as_ref())?);
    }
    summarize_rows(&rows, tail)
}
