//! Seeded trial matrices over smoothed coordination games.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nashlab_core::dynamics::{run_bra, Outcome, PivotRule};
use nashlab_core::rng::{self, RNG_NAME, TAG_INITIAL};
use nashlab_core::smoothing::{perturb_instance, sample_instance, GameGraph};
use nashlab_core::{GameInstance, StrategyProfile};

use crate::formats::{load_game, SpecFile};

pub const TOOL_VERSION: &str = concat!("nashlab ", env!("CARGO_PKG_VERSION"));

/// Stream tag for per-trial seeds; distinct from the tags used in the core.
const TAG_TRIAL: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    Complete,
    ErdosRenyi { p: f64 },
    Path,
    /// A game file whose payoffs are perturbed by the spec in every trial.
    File { path: PathBuf },
}

impl Topology {
    pub fn label(&self) -> String {
        match self {
            Topology::Complete => "complete".into(),
            Topology::ErdosRenyi { p } => format!("erdos_renyi({p})"),
            Topology::Path => "path".into(),
            Topology::File { path } => format!("file({})", path.display()),
        }
    }
}

fn default_cap() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub topology: Topology,
    /// Ignored for file topologies.
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    pub spec: SpecFile,
    pub rules: Vec<String>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_cap")]
    pub step_cap: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.rules.is_empty() {
            bail!("no pivot rules given");
        }
        for r in &self.rules {
            if PivotRule::from_name(r).is_none() {
                bail!("unknown pivot rule {r:?}");
            }
        }
        if !matches!(self.topology, Topology::File { .. }) {
            if self.n.is_empty() || self.k.is_empty() {
                bail!("n and k ranges must be non-empty");
            }
            if self.n.contains(&0) || self.k.contains(&0) {
                bail!("n and k must be positive");
            }
        }
        self.spec.to_spec()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone)]
struct Cell {
    n: usize,
    k: usize,
    rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub phi: String,
    pub topology: String,
    pub rule: String,
    pub steps: usize,
    pub converged: bool,
    pub total_gain: String,
    /// Empty when no step was taken.
    pub min_step: String,
    pub wall_ms: f64,
}

pub fn trial_seed(base_seed: u64, cell: usize, trial: usize) -> u64 {
    base_seed ^ rng::stream_id(TAG_TRIAL, cell as u64, trial as u64, 0)
}

/// Uniform initial profile from the seed's initial-profile stream.
pub fn random_profile(game: &GameInstance, seed: u64) -> StrategyProfile {
    let mut r = rng::stream(seed, TAG_INITIAL, 0, 0, 0);
    let lo = game.base() as i128;
    let hi = game.k() as i128;
    StrategyProfile((0..game.n()).map(|_| rng::uniform_inclusive(&mut r, lo, hi) as usize).collect())
}

pub struct Experiment {
    config: ExperimentConfig,
    cells: Vec<Cell>,
    file_game: Option<GameInstance>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let file_game = match &config.topology {
            Topology::File { path } => Some(load_game(path).with_context(|| "loading instance file")?),
            _ => None,
        };
        let sizes: Vec<(usize, usize)> = match &file_game {
            Some(g) => vec![(g.n(), g.k())],
            None => config.n.iter().flat_map(|&n| config.k.iter().map(move |&k| (n, k))).collect(),
        };
        let cells = sizes
            .into_iter()
            .flat_map(|(n, k)| config.rules.iter().map(move |r| Cell { n, k, rule: r.clone() }))
            .collect();
        Ok(Experiment { config, cells, file_game })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    fn instance(&self, cell: &Cell, seed: u64) -> Result<GameInstance> {
        let spec = self.config.spec.to_spec()?;
        let game = match &self.config.topology {
            Topology::Complete => sample_instance(&GameGraph::complete(cell.n, cell.k), &spec, seed)?,
            Topology::Path => sample_instance(&GameGraph::path(cell.n, cell.k), &spec, seed)?,
            Topology::ErdosRenyi { p } => {
                sample_instance(&GameGraph::erdos_renyi(cell.n, cell.k, *p, seed), &spec, seed)?
            }
            Topology::File { .. } => perturb_instance(self.file_game.as_ref().unwrap(), &spec, seed)?,
        };
        Ok(game)
    }

    fn run_trial(&self, cell_idx: usize, trial: usize) -> Result<TrialRow> {
        let cell = &self.cells[cell_idx];
        let seed = trial_seed(self.config.base_seed, cell_idx, trial);
        let game = self.instance(cell, seed)?;
        let rule = PivotRule::from_name(&cell.rule).unwrap();
        let initial = random_profile(&game, seed);
        let start = Instant::now();
        let trace = run_bra(&game, &initial, &rule, self.config.step_cap, seed)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(TrialRow {
            cell: cell_idx,
            trial,
            seed,
            n: cell.n,
            k: cell.k,
            phi: self.config.spec.phi_label(),
            topology: self.config.topology.label(),
            rule: rule.name().into(),
            steps: trace.len(),
            converged: trace.outcome == Outcome::Converged,
            total_gain: trace.total_gain().to_string(),
            min_step: trace.min_step().map(|m| m.to_string()).unwrap_or_default(),
            wall_ms,
        })
    }

    /// Runs every (cell, trial) pair on `workers` threads (0 = all cores);
    /// rows come back ordered by (cell, trial).
    pub fn run(&self, workers: usize) -> Result<Vec<TrialRow>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        let jobs: Vec<(usize, usize)> = (0..self.cells.len())
            .flat_map(|c| (0..self.config.trials).map(move |t| (c, t)))
            .collect();
        pool.install(|| jobs.par_iter().map(|&(c, t)| self.run_trial(c, t)).collect())
    }
}

pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Vec<TrialRow>> {
    Experiment::new(config.clone())?.run(workers)
}

pub const COLUMNS: [&str; 11] = [
    "seed", "n", "k", "phi", "topology", "rule", "steps", "converged", "total_gain", "min_step", "wall_ms",
];

fn metadata<W: Write>(out: &mut W, config: &ExperimentConfig) -> Result<()> {
    writeln!(out, "# tool: {TOOL_VERSION}")?;
    writeln!(out, "# config_sha256: {}", config.hash())?;
    writeln!(out, "# base_seed: {}", config.base_seed)?;
    writeln!(out, "# rng: {RNG_NAME}")?;
    Ok(())
}

/// Result table: `#` metadata lines, a header row, one row per trial.
pub fn write_csv<W: Write>(mut out: W, config: &ExperimentConfig, rows: &[TrialRow]) -> Result<()> {
    metadata(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.phi.clone(),
            r.topology.clone(),
            r.rule.clone(),
            r.steps.to_string(),
            r.converged.to_string(),
            r.total_gain.clone(),
            r.min_step.clone(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub k: usize,
    pub phi: String,
    pub topology: String,
    pub rule: String,
    pub trials: usize,
    pub converged: usize,
    pub median_steps: f64,
    pub max_steps: usize,
}

fn median(sorted: &[usize]) -> f64 {
    let m = sorted.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        sorted[m / 2] as f64
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) as f64 / 2.0
    }
}

pub fn summarize(rows: &[TrialRow]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for group in rows.chunk_by(|a, b| a.cell == b.cell) {
        let mut steps: Vec<usize> = group.iter().map(|r| r.steps).collect();
        steps.sort_unstable();
        let first = &group[0];
        out.push(CellSummary {
            n: first.n,
            k: first.k,
            phi: first.phi.clone(),
            topology: first.topology.clone(),
            rule: first.rule.clone(),
            trials: group.len(),
            converged: group.iter().filter(|r| r.converged).count(),
            median_steps: median(&steps),
            max_steps: *steps.last().unwrap(),
        });
    }
    out
}

pub fn write_summary_csv<W: Write>(mut out: W, config: &ExperimentConfig, summary: &[CellSummary]) -> Result<()> {
    metadata(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    for s in summary {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: Vec<usize>, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            topology: Topology::Complete,
            n,
            k: vec![2],
            spec: SpecFile { phi_num: 1, phi_den: 2, distribution: "uniform_full".into(), grid_log2: 30 },
            rules: vec!["best".into()],
            trials,
            base_seed: 11,
            step_cap: 1_000_000,
        }
    }

    fn strip_wall(csv: &str) -> Vec<String> {
        csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()).collect()
    }

    #[test]
    fn one_cell_one_trial() {
        let cfg = config(vec![4], 1);
        let rows = run_experiment(&cfg, 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &cfg, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0], COLUMNS.join(","));
    }

    #[test]
    fn deterministic_apart_from_wall_time() {
        let cfg = config(vec![4, 5], 3);
        let render = |workers| {
            let mut buf = Vec::new();
            write_csv(&mut buf, &cfg, &run_experiment(&cfg, workers).unwrap()).unwrap();
            strip_wall(&String::from_utf8(buf).unwrap())
        };
        assert_eq!(render(1), render(4));
    }

    #[test]
    fn complete_graphs_converge() {
        let cfg = config(vec![4, 5, 6, 7, 8], 4);
        let rows = run_experiment(&cfg, 0).unwrap();
        assert_eq!(rows.len(), 20);
        assert!(rows.iter().all(|r| r.converged && r.steps < cfg.step_cap));
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 5);
        assert!(summary.iter().all(|s| s.converged == s.trials));
    }

    #[test]
    fn invalid_configs() {
        assert!(Experiment::new(config(vec![], 1)).is_err());
        assert!(Experiment::new(config(vec![3], 0)).is_err());
        let mut bad = config(vec![3], 1);
        bad.rules = vec!["sideways".into()];
        assert!(Experiment::new(bad).is_err());
        let mut missing = config(vec![3], 1);
        missing.topology = Topology::File { path: "/nonexistent/game.json".into() };
        assert!(Experiment::new(missing).is_err());
    }

    #[test]
    fn seeds_differ_across_cells_and_trials() {
        let a = trial_seed(0, 0, 1);
        assert_ne!(a, trial_seed(0, 1, 0));
        assert_ne!(a, trial_seed(0, 0, 2));
        assert_eq!(trial_seed(5, 3, 4) ^ 5, trial_seed(0, 3, 4));
    }
}
