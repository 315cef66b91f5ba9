//! File formats: the metrics CSV, lattice snapshots, and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::arena::Arena;
use super::config::ExperimentConfig;
use crate::lattice::{offers_toward, DilemmaAction};
use crate::metrics::{connectivity_ratio, MetricsRecord};
use crate::{Error, Real, Result};

/// Fixed header of every metrics CSV.
pub const METRICS_HEADER: &str = "arena,seed,episode,timestep,coop_frac,gini,pay_mean,pay_coop,pay_def,cr_c,cr_d,ec_c,ec_d,lc_cc,lc_cd,lc_dd,lp_cc,lp_cd,lp_dd";

/// Header of the per-agent snapshot CSV.
pub const SNAPSHOT_HEADER: &str = "row,col,strategy,cr,payoff";

/// One emitted metrics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub arena: usize,
    pub seed: u64,
    pub episode: u64,
    pub timestep: u64,
    pub metrics: MetricsRecord,
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl MetricsRow {
    /// CSV line without a trailing newline. Absent values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut line = format!("{},{},{},{}", self.arena, self.seed, self.episode, self.timestep);
        for v in self.metrics.values() {
            line.push(',');
            line.push_str(&fmt_value(v));
        }
        line
    }

    pub fn parse(line: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + MetricsRecord::COLUMNS.len() {
            return Err(format!("expected {} fields, found {}", 4 + MetricsRecord::COLUMNS.len(), fields.len()));
        }
        let int = |k: usize| fields[k].trim().parse::<u64>().map_err(|_| format!("bad integer `{}`", fields[k]));
        let mut values = [None; 15];
        for (k, slot) in values.iter_mut().enumerate() {
            let raw = fields[4 + k].trim();
            if !raw.is_empty() {
                *slot = Some(raw.parse::<f64>().map_err(|_| format!("bad number `{raw}`"))?);
            }
        }
        Ok(MetricsRow {
            arena: int(0)? as usize,
            seed: int(1)?,
            episode: int(2)?,
            timestep: int(3)?,
            metrics: MetricsRecord::from_values(values),
        })
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == METRICS_HEADER => {}
        Some(h) => {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                reason: format!("unexpected header `{h}`"),
            })
        }
        None => {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                reason: "empty file".into(),
            })
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            MetricsRow::parse(l).map_err(|reason| Error::Parse {
                path: path.to_path_buf(),
                line: k + 2,
                reason,
            })
        })
        .collect()
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// One agent in a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub row: usize,
    pub col: usize,
    pub strategy: DilemmaAction,
    pub cr: f64,
    pub payoff: f64,
}

/// A lattice snapshot: the strategy grid plus per-agent details.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub side: usize,
    /// Row-major strategies from the grid file.
    pub grid: Vec<DilemmaAction>,
    pub agents: Vec<SnapshotRow>,
}

impl Snapshot {
    /// Snapshot of the arena's most recent round.
    pub fn of_arena<F: Real>(arena: &Arena<F>) -> Self {
        let lattice = arena.lattice();
        let last = arena.last_outcome();
        let agents = (0..lattice.len())
            .map(|i| {
                let (row, col) = lattice.coords(i);
                SnapshotRow {
                    row,
                    col,
                    strategy: last.dilemmas[i],
                    cr: connectivity_ratio::<f64>(offers_toward(lattice, &last.selections, i)),
                    payoff: last.raw_payoffs[i].as_f64(),
                }
            })
            .collect();
        Snapshot {
            side: lattice.side(),
            grid: last.dilemmas.clone(),
            agents,
        }
    }

    /// One line per lattice row, `C`/`D` per cell.
    pub fn grid_text(&self) -> String {
        let mut out = String::with_capacity(self.side * (self.side + 1));
        for row in self.grid.chunks(self.side) {
            out.extend(row.iter().map(|a| a.symbol()));
            out.push('\n');
        }
        out
    }

    pub fn agents_csv(&self) -> String {
        let mut out = String::from(SNAPSHOT_HEADER);
        out.push('\n');
        for a in &self.agents {
            let _ = writeln!(out, "{},{},{},{:.6},{:.6}", a.row, a.col, a.strategy, a.cr, a.payoff);
        }
        out
    }

    /// Write `<prefix>.txt` and `<prefix>.csv`.
    pub fn write(&self, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
        let grid = prefix.with_extension("txt");
        let csv = prefix.with_extension("csv");
        write_file(&grid, &self.grid_text())?;
        write_file(&csv, &self.agents_csv())?;
        Ok((grid, csv))
    }

    pub fn read(grid_path: &Path, csv_path: &Path) -> Result<Self> {
        let parse_err = |path: &Path, line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let grid_text = fs::read_to_string(grid_path).map_err(|e| Error::io(grid_path, e))?;
        let mut grid = Vec::new();
        let mut side = 0;
        for (k, line) in grid_text.lines().filter(|l| !l.is_empty()).enumerate() {
            let row: Vec<DilemmaAction> = line
                .chars()
                .map(|c| DilemmaAction::from_symbol(c).ok_or_else(|| parse_err(grid_path, k + 1, format!("bad cell `{c}`"))))
                .collect::<Result<_>>()?;
            if k == 0 {
                side = row.len();
            } else if row.len() != side {
                return Err(parse_err(grid_path, k + 1, "ragged grid".into()));
            }
            grid.extend(row);
        }
        if grid.len() != side * side {
            return Err(Error::Schema {
                path: grid_path.to_path_buf(),
                reason: "grid is not square".into(),
            });
        }

        let csv_text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let mut lines = csv_text.lines();
        if lines.next().map(str::trim) != Some(SNAPSHOT_HEADER) {
            return Err(Error::Schema {
                path: csv_path.to_path_buf(),
                reason: "unexpected snapshot header".into(),
            });
        }
        let mut agents = Vec::with_capacity(grid.len());
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| parse_err(csv_path, k + 2, format!("bad {what}"));
            if f.len() != 5 {
                return Err(bad("field count"));
            }
            let strategy = f[2]
                .chars()
                .next()
                .and_then(DilemmaAction::from_symbol)
                .ok_or_else(|| bad("strategy"))?;
            agents.push(SnapshotRow {
                row: f[0].parse().map_err(|_| bad("row"))?,
                col: f[1].parse().map_err(|_| bad("col"))?,
                strategy,
                cr: f[3].parse().map_err(|_| bad("cr"))?,
                payoff: f[4].parse().map_err(|_| bad("payoff"))?,
            });
        }
        Ok(Snapshot { side, grid, agents })
    }
}

/// Write the snapshot of `arena` to `<prefix>.txt` / `<prefix>.csv`.
pub fn write_snapshot<F: Real>(arena: &Arena<F>, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
    Snapshot::of_arena(arena).write(prefix)
}

pub fn manifest_text(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# coevo run manifest");
    let _ = writeln!(out, "# version {}", env!("CARGO_PKG_VERSION"));
    let seeds: Vec<String> = config.seed_list().iter().map(u64::to_string).collect();
    let _ = writeln!(out, "# seeds {}", seeds.join(" "));
    out.push_str(&config.to_text());
    out
}
