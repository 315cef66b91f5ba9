//! Run orchestration: configuration, the per-arena training loop, parallel
//! arenas, and every file a run writes.

mod aggregate;
mod arena;
mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use aggregate::{aggregate_runs, seed_tail_means, summarize_rows, MetricSummary, SummaryTable, DEFAULT_TAIL_EPISODES};
pub use arena::{Arena, ArenaCounters};
pub use config::{ExperimentConfig, CONFIG_KEYS};
pub use output::{
    manifest_text, metrics_csv, read_metrics_csv, write_snapshot, MetricsRow, Snapshot, SnapshotRow, METRICS_HEADER,
    SNAPSHOT_HEADER,
};

use crate::agents::AgentVariant;
use crate::metrics::MetricsAccumulator;
use crate::{Error, Result};
use output::write_file;

/// Marker present in the output directory while a run is in progress, and
/// left behind (holding the failure reason) when it aborts.
pub const PARTIAL_MARKER: &str = ".partial";

/// Train one arena to the end of the configured schedule, returning the
/// final arena state and its emitted rows. Each row is the mean of every
/// timestep in its episode.
pub fn run_arena(config: &ExperimentConfig, seed: u64, index: usize) -> Result<(Arena<f64>, Vec<MetricsRow>)> {
    let mut arena = Arena::<f64>::new(config, seed, index)?;
    let stride = config.emit_stride.max(1);
    let mut rows = Vec::with_capacity((config.episodes / stride + 1) as usize);
    let mut acc = MetricsAccumulator::default();
    for episode in 0..config.episodes {
        acc.clear();
        arena.run_steps(config.steps_per_episode, &mut acc)?;
        if (episode + 1) % stride == 0 || episode + 1 == config.episodes {
            rows.push(MetricsRow {
                arena: index,
                seed,
                episode,
                timestep: arena.timestep(),
                metrics: acc.mean(),
            });
        }
    }
    Ok((arena, rows))
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub metrics: PathBuf,
    pub arena_metrics: Vec<PathBuf>,
    pub snapshots: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub summary: PathBuf,
    pub rows: Vec<MetricsRow>,
}

fn arena_stem(seed: u64, index: usize) -> String {
    format!("s{seed}_a{index}")
}

/// Run every `(seed, arena)` pair of `config` and write its outputs.
///
/// `threads` bounds the worker pool (`None` uses rayon's default). Arenas
/// own their RNG streams and results are written in `(seed, arena)` order,
/// so the output bytes do not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunReport> {
    config.validate()?;
    let out_dir = config.out_dir.clone();
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let marker = out_dir.join(PARTIAL_MARKER);
    write_file(&marker, "running\n")?;

    match run_and_write(config, threads, &out_dir) {
        Ok(report) => {
            fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            Ok(report)
        }
        Err(err) => {
            // best effort: the original error is what the caller needs
            let _ = fs::write(&marker, format!("aborted: {err}\n"));
            Err(err)
        }
    }
}

fn run_and_write(config: &ExperimentConfig, threads: Option<usize>, out_dir: &Path) -> Result<RunReport> {
    let jobs: Vec<(u64, usize)> = config
        .seed_list()
        .into_iter()
        .flat_map(|seed| (0..config.arenas).map(move |a| (seed, a)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;

    // keep only what gets written; a finished arena's replay buffers are large
    let results: Vec<Result<(Snapshot, Vec<MetricsRow>)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, index)| run_arena(config, seed, index).map(|(arena, rows)| (Snapshot::of_arena(&arena), rows)))
            .collect()
    });

    let mut all_rows = Vec::new();
    let mut arena_metrics = Vec::with_capacity(jobs.len());
    let mut snapshots = Vec::with_capacity(jobs.len());
    for (&(seed, index), result) in jobs.iter().zip(results) {
        let (snapshot, rows) = result?;
        let stem = arena_stem(seed, index);
        let path = out_dir.join(format!("metrics_{stem}.csv"));
        write_file(&path, &metrics_csv(&rows))?;
        arena_metrics.push(path);
        let (grid, csv) = snapshot.write(&out_dir.join(format!("snapshot_{stem}")))?;
        snapshots.extend([grid, csv]);
        all_rows.extend(rows);
    }

    let metrics = out_dir.join("metrics.csv");
    write_file(&metrics, &metrics_csv(&all_rows))?;
    let summary = out_dir.join("summary.csv");
    write_file(&summary, &summarize_rows(&all_rows, DEFAULT_TAIL_EPISODES)?.to_csv())?;
    let manifest = out_dir.join("manifest.txt");
    write_file(&manifest, &manifest_text(config))?;

    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        metrics,
        arena_metrics,
        snapshots,
        manifest,
        summary,
        rows: all_rows,
    })
}

/// One cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub b: f64,
    pub variant: AgentVariant,
    pub out_dir: PathBuf,
    pub summary: SummaryTable,
}

fn sweep_dir_name(b: f64, variant: AgentVariant) -> String {
    format!("b{b:.4}_{}", variant.name())
}

/// Run the Cartesian product of `bs` and `variants`, each in its own
/// subdirectory of `base.out_dir`, and write `sweep_summary.csv` with one
/// row per cell and metric.
pub fn run_sweep(
    base: &ExperimentConfig,
    bs: &[f64],
    variants: &[AgentVariant],
    threads: Option<usize>,
) -> Result<Vec<SweepCell>> {
    if bs.is_empty() || variants.is_empty() {
        return Err(Error::usage("sweep needs at least one b and one variant"));
    }
    let root = base.out_dir.clone();
    let mut cells = Vec::with_capacity(bs.len() * variants.len());
    for &b in bs {
        for &variant in variants {
            let mut config = base.clone();
            config.b = b;
            config.variant = variant;
            let dir = root.join(sweep_dir_name(b, variant));
            config.out_dir = dir.clone();
            let report = run_experiment(&config, threads)?;
            cells.push(SweepCell {
                b,
                variant,
                out_dir: dir,
                summary: summarize_rows(&report.rows, DEFAULT_TAIL_EPISODES)?,
            });
        }
    }

    let mut text = String::from("b,variant,metric,mean,std,n\n");
    for cell in &cells {
        for (name, stat) in &cell.summary.rows {
            match stat {
                Some(s) => text.push_str(&format!(
                    "{:.6},{},{name},{:.6},{:.6},{}\n",
                    cell.b,
                    cell.variant.name(),
                    s.mean,
                    s.std,
                    s.n
                )),
                None => text.push_str(&format!("{:.6},{},{name},,,0\n", cell.b, cell.variant.name())),
            }
        }
    }
    write_file(&root.join("sweep_summary.csv"), &text)?;
    Ok(cells)
}
