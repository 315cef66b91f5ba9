//! Run configuration in a flat `key = value` text format. `#` starts a
//! comment; blank lines are ignored; unknown keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agents::AgentVariant;
use crate::qlearn::{LinearSchedule, DEFAULT_HIDDEN};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Lattice side length L (N = L² agents).
    pub side: usize,
    /// Dilemma strength b.
    pub b: f64,
    pub variant: AgentVariant,
    /// Payoff memory weight.
    pub alpha: f64,
    /// Observation window W in rounds.
    pub window: usize,
    pub episodes: u64,
    pub steps_per_episode: u64,
    pub arenas: usize,
    /// Number of consecutive seeds starting at `seed`.
    pub seeds: usize,
    pub seed: u64,
    pub gamma: f64,
    /// Base Adam learning rate; the multiplier schedule scales it.
    pub lr: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub eps_dilemma_start: f64,
    pub eps_dilemma_end: f64,
    pub eps_selection_start: f64,
    pub eps_selection_end: f64,
    /// Timesteps over which both epsilons decay.
    pub eps_duration: u64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub update_every: usize,
    pub tau: f64,
    pub per_alpha: f64,
    pub per_beta_start: f64,
    pub per_beta_end: f64,
    /// Fermi noise K for the imitation baseline.
    pub fermi_k: f64,
    pub hidden: usize,
    pub out_dir: PathBuf,
    /// Episodes per emitted metrics row.
    pub emit_stride: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            side: 30,
            b: 1.2,
            variant: AgentVariant::Dual,
            alpha: 0.6,
            window: 4,
            episodes: 6000,
            steps_per_episode: 10,
            arenas: 10,
            seeds: 5,
            seed: 0,
            gamma: 0.99,
            lr: 1e-3,
            lr_start: 1.0,
            lr_end: 0.05,
            eps_dilemma_start: 1.0,
            eps_dilemma_end: 0.05,
            eps_selection_start: 1.0,
            eps_selection_end: 0.1,
            eps_duration: 2000,
            buffer_capacity: 10_000,
            batch_size: 32,
            update_every: 5,
            tau: 0.01,
            per_alpha: 0.6,
            per_beta_start: 0.4,
            per_beta_end: 1.0,
            fermi_k: 0.1,
            hidden: DEFAULT_HIDDEN,
            out_dir: PathBuf::from("runs/default"),
            emit_stride: 1,
        }
    }
}

/// Every config key with a one-line description, in file order.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("side", "lattice side length L (alias: L)"),
    ("b", "dilemma strength in [1, 2]"),
    ("variant", "dual | single | dilemma-only | egt"),
    ("alpha", "payoff memory weight in [0, 1)"),
    ("window", "rounds of experience fed to the networks"),
    ("episodes", "episodes per arena"),
    ("steps_per_episode", "timesteps per episode"),
    ("arenas", "independent arenas per seed"),
    ("seeds", "number of consecutive seeds"),
    ("seed", "first seed"),
    ("gamma", "reward discount"),
    ("lr", "base Adam learning rate"),
    ("lr_start", "learning-rate multiplier at t = 0"),
    ("lr_end", "learning-rate multiplier at the end of the run"),
    ("eps_dilemma_start", "dilemma exploration rate at t = 0"),
    ("eps_dilemma_end", "dilemma exploration floor"),
    ("eps_selection_start", "selection exploration rate at t = 0"),
    ("eps_selection_end", "selection exploration floor"),
    ("eps_duration", "timesteps of epsilon decay"),
    ("buffer_capacity", "replay buffer capacity"),
    ("batch_size", "minibatch size"),
    ("update_every", "transitions stored per gradient step"),
    ("tau", "Polyak coefficient for target networks"),
    ("per_alpha", "prioritization exponent"),
    ("per_beta_start", "importance-sampling exponent at t = 0"),
    ("per_beta_end", "importance-sampling exponent at the end of the run"),
    ("fermi_k", "Fermi imitation noise K"),
    ("hidden", "hidden units per layer"),
    ("out_dir", "output directory"),
    ("emit_stride", "episodes per metrics row"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{}`", value.trim())))
}

impl ExperimentConfig {
    /// Canonical key for `key`, resolving aliases and dashes.
    pub fn canonical_key(key: &str) -> Option<&'static str> {
        let k = key.trim().replace('-', "_");
        let k = if k == "L" { "side".to_string() } else { k };
        CONFIG_KEYS.iter().map(|(name, _)| *name).find(|name| *name == k)
    }

    /// Set one field from its textual value. Does not validate ranges.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let Some(key) = Self::canonical_key(key) else {
            return Err(Error::config(key.trim(), "unknown key"));
        };
        let v = value.trim();
        match key {
            "side" => self.side = parse(key, v)?,
            "b" => self.b = parse(key, v)?,
            "variant" => self.variant = v.parse()?,
            "alpha" => self.alpha = parse(key, v)?,
            "window" => self.window = parse(key, v)?,
            "episodes" => self.episodes = parse(key, v)?,
            "steps_per_episode" => self.steps_per_episode = parse(key, v)?,
            "arenas" => self.arenas = parse(key, v)?,
            "seeds" => self.seeds = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "gamma" => self.gamma = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "lr_start" => self.lr_start = parse(key, v)?,
            "lr_end" => self.lr_end = parse(key, v)?,
            "eps_dilemma_start" => self.eps_dilemma_start = parse(key, v)?,
            "eps_dilemma_end" => self.eps_dilemma_end = parse(key, v)?,
            "eps_selection_start" => self.eps_selection_start = parse(key, v)?,
            "eps_selection_end" => self.eps_selection_end = parse(key, v)?,
            "eps_duration" => self.eps_duration = parse(key, v)?,
            "buffer_capacity" => self.buffer_capacity = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "update_every" => self.update_every = parse(key, v)?,
            "tau" => self.tau = parse(key, v)?,
            "per_alpha" => self.per_alpha = parse(key, v)?,
            "per_beta_start" => self.per_beta_start = parse(key, v)?,
            "per_beta_end" => self.per_beta_end = parse(key, v)?,
            "fermi_k" => self.fermi_k = parse(key, v)?,
            "hidden" => self.hidden = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "emit_stride" => self.emit_stride = parse(key, v)?,
            _ => unreachable!("every listed key is handled"),
        }
        Ok(())
    }

    /// Textual value of a field, in the form [`set`](Self::set) accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        let key = Self::canonical_key(key)?;
        Some(match key {
            "side" => self.side.to_string(),
            "b" => self.b.to_string(),
            "variant" => self.variant.to_string(),
            "alpha" => self.alpha.to_string(),
            "window" => self.window.to_string(),
            "episodes" => self.episodes.to_string(),
            "steps_per_episode" => self.steps_per_episode.to_string(),
            "arenas" => self.arenas.to_string(),
            "seeds" => self.seeds.to_string(),
            "seed" => self.seed.to_string(),
            "gamma" => self.gamma.to_string(),
            "lr" => self.lr.to_string(),
            "lr_start" => self.lr_start.to_string(),
            "lr_end" => self.lr_end.to_string(),
            "eps_dilemma_start" => self.eps_dilemma_start.to_string(),
            "eps_dilemma_end" => self.eps_dilemma_end.to_string(),
            "eps_selection_start" => self.eps_selection_start.to_string(),
            "eps_selection_end" => self.eps_selection_end.to_string(),
            "eps_duration" => self.eps_duration.to_string(),
            "buffer_capacity" => self.buffer_capacity.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "update_every" => self.update_every.to_string(),
            "tau" => self.tau.to_string(),
            "per_alpha" => self.per_alpha.to_string(),
            "per_beta_start" => self.per_beta_start.to_string(),
            "per_beta_end" => self.per_beta_end.to_string(),
            "fermi_k" => self.fermi_k.to_string(),
            "hidden" => self.hidden.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "emit_stride" => self.emit_stride.to_string(),
            _ => unreachable!("every listed key is handled"),
        })
    }

    /// Apply `key = value` lines on top of `self`. `origin` names the
    /// source in errors.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno + 1,
                    reason: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Defaults overridden by `text`, then validated.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text, Path::new("<text>"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in CONFIG_KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::config(field, reason))
            }
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        check(self.side >= 3, "side", "must be at least 3")?;
        check((1.0..=2.0).contains(&self.b), "b", "must lie in [1, 2]")?;
        check((0.0..1.0).contains(&self.alpha), "alpha", "must lie in [0, 1)")?;
        check(self.window >= 1, "window", "must be at least 1")?;
        check(self.episodes >= 1, "episodes", "must be at least 1")?;
        check(self.steps_per_episode >= 1, "steps_per_episode", "must be at least 1")?;
        check(self.arenas >= 1, "arenas", "must be at least 1")?;
        check(self.seeds >= 1, "seeds", "must be at least 1")?;
        check(unit(self.gamma), "gamma", "must lie in [0, 1]")?;
        check(self.lr > 0.0 && self.lr.is_finite(), "lr", "must be positive")?;
        check(self.lr_start > 0.0, "lr_start", "must be positive")?;
        check(self.lr_end > 0.0, "lr_end", "must be positive")?;
        check(unit(self.eps_dilemma_start), "eps_dilemma_start", "must lie in [0, 1]")?;
        check(unit(self.eps_dilemma_end), "eps_dilemma_end", "must lie in [0, 1]")?;
        check(unit(self.eps_selection_start), "eps_selection_start", "must lie in [0, 1]")?;
        check(unit(self.eps_selection_end), "eps_selection_end", "must lie in [0, 1]")?;
        check(self.buffer_capacity >= 1, "buffer_capacity", "must be at least 1")?;
        check(self.batch_size >= 1, "batch_size", "must be at least 1")?;
        check(self.update_every >= 1, "update_every", "must be at least 1")?;
        check(self.tau > 0.0 && self.tau <= 1.0, "tau", "must lie in (0, 1]")?;
        check(self.per_alpha >= 0.0, "per_alpha", "must be non-negative")?;
        check(unit(self.per_beta_start), "per_beta_start", "must lie in [0, 1]")?;
        check(unit(self.per_beta_end), "per_beta_end", "must lie in [0, 1]")?;
        check(self.fermi_k > 0.0, "fermi_k", "must be positive")?;
        check(self.hidden >= 1, "hidden", "must be at least 1")?;
        check(self.emit_stride >= 1, "emit_stride", "must be at least 1")?;
        Ok(())
    }

    pub fn total_timesteps(&self) -> u64 {
        self.episodes * self.steps_per_episode
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|k| self.seed + k).collect()
    }

    pub fn eps_dilemma(&self) -> LinearSchedule {
        LinearSchedule::new(self.eps_dilemma_start, self.eps_dilemma_end, self.eps_duration)
    }

    pub fn eps_selection(&self) -> LinearSchedule {
        LinearSchedule::new(self.eps_selection_start, self.eps_selection_end, self.eps_duration)
    }

    /// Learning-rate multiplier over the whole run.
    pub fn lr_schedule(&self) -> LinearSchedule {
        LinearSchedule::new(self.lr_start, self.lr_end, self.total_timesteps())
    }

    /// Importance-sampling exponent over the whole run.
    pub fn beta_schedule(&self) -> LinearSchedule {
        LinearSchedule::new(self.per_beta_start, self.per_beta_end, self.total_timesteps())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_defaults() {
        let cfg = ExperimentConfig::from_text("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.gamma, 0.99);
        assert_eq!(cfg.tau, 0.01);
        assert_eq!(cfg.buffer_capacity, 10_000);
        assert_eq!(cfg.batch_size, 32);
        assert_eq!(cfg.update_every, 5);
        assert_eq!(cfg.per_alpha, 0.6);
        assert_eq!((cfg.per_beta_start, cfg.per_beta_end), (0.4, 1.0));
        assert_eq!((cfg.eps_dilemma_end, cfg.eps_selection_end, cfg.eps_duration), (0.05, 0.1, 2000));
        assert_eq!((cfg.lr_start, cfg.lr_end), (1.0, 0.05));
        assert_eq!(cfg.fermi_k, 0.1);
    }

    #[test]
    fn out_of_range_b_names_the_field() {
        let err = ExperimentConfig::from_text("b = 0.5").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overrides_echo_back() {
        let cfg = ExperimentConfig::from_text("b=1.2\nL=30\nvariant=dual  # main model\n").unwrap();
        assert_eq!((cfg.b, cfg.side, cfg.variant), (1.2, 30, AgentVariant::Dual));
        let again = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_key_and_bad_lines_rejected() {
        assert!(matches!(
            ExperimentConfig::from_text("bogus = 1"),
            Err(Error::Config { field, .. }) if field == "bogus"
        ));
        assert!(matches!(ExperimentConfig::from_text("side 3"), Err(Error::Parse { line: 1, .. })));
        assert!(ExperimentConfig::from_text("side = three").is_err());
        assert!(ExperimentConfig::from_text("side = 2").is_err());
    }

    #[test]
    fn every_key_round_trips() {
        let cfg = ExperimentConfig::default();
        for (key, _) in CONFIG_KEYS {
            let mut other = ExperimentConfig::default();
            other.set(key, &cfg.get(key).unwrap()).unwrap();
            assert_eq!(other, cfg, "{key}");
        }
    }

    #[test]
    fn run_length_schedules() {
        let cfg = ExperimentConfig::from_text("episodes = 100\nsteps_per_episode = 10").unwrap();
        assert_eq!(cfg.total_timesteps(), 1000);
        assert_eq!(cfg.beta_schedule().value(500), 0.7);
        assert_eq!(cfg.lr_schedule().value(1000), 0.05);
    }
}
