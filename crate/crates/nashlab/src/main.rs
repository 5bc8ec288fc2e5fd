use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use nashlab::experiment::{random_profile, run_experiment, summarize, write_csv, write_summary_csv, ExperimentConfig};
use nashlab::formats::{
    from_dimacs, load_game, read_json, to_dimacs, write_json, ArtifactsFile, CongestionFile, CutFile, CutSetFile,
    Frac, GameFile, SpecFile, TraceFile,
};
use nashlab::verify::{replay, verify_artifacts_file, verify_criterion, verify_suite, VerifyConfig, VerifyReport};
use nashlab_core::analysis::{classify, find_critical_subsequence, rank_report};
use nashlab_core::congestion::{run_bra_congestion, sample_congestion};
use nashlab_core::dynamics::{replay as replay_moves, run_bra, PivotRule, Replay};
use nashlab_core::maxcut::{run_flip, Cut, CutInstance};
use nashlab_core::reduction::{
    check_weak_smoothness, map_cut_to_profile, normalize_payoffs, reduce_2_to_1flip, reduce_k_to_2flip,
    sample_binary_aux, AuxRandomness, ReductionKind,
};
use nashlab_core::rng;
use nashlab_core::smoothing::{sample_instance, GameGraph, PerturbationSpec};
use nashlab_core::StrategyProfile;

#[derive(Parser)]
#[command(name = "nashlab", version, about = "Better-response dynamics, local max-cut and reductions between them")]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if omitted; a directory for `verify`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Step cap for dynamics and local search.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    cap: usize,
    /// JSON config for `experiment` and `verify`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Complete,
    Path,
    ErdosRenyi,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Game,
    Cut,
    Congestion,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceKind {
    #[value(name = "k-to-2")]
    KTo2,
    #[value(name = "2-to-1")]
    TwoTo1,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an instance.
    Gen {
        #[arg(long, value_enum, default_value = "game")]
        kind: GenKind,
        #[arg(long, value_enum, default_value = "complete")]
        topology: TopologyArg,
        /// Edge probability for Erdős–Rényi graphs.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, short)]
        n: usize,
        #[arg(long, short, default_value_t = 2)]
        k: usize,
        /// Perturbation spec JSON; uniform-full on a 2^-30 grid if omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Resources of a congestion game.
        #[arg(long, default_value_t = 4)]
        resources: usize,
        /// Per-resource membership cap of a congestion game.
        #[arg(long, default_value_t = 4)]
        ell: usize,
        /// Write cut instances as DIMACS text instead of JSON.
        #[arg(long)]
        dimacs: bool,
    },
    /// Run better-response dynamics on a game.
    RunBra {
        #[arg(long)]
        game: PathBuf,
        /// first, best, random or script.
        #[arg(long, default_value = "best")]
        rule: String,
        /// Comma-separated initial strategies; random if omitted.
        #[arg(long)]
        initial: Option<String>,
        /// Trace file whose moves are replayed (with `--rule script`).
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Classify a trace range and report its rank bounds.
    Analyze {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        from: Option<usize>,
        #[arg(long)]
        to: Option<usize>,
    },
    /// Normalize a game and reduce it to a local max-cut instance.
    Reduce {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum, default_value = "k-to-2")]
        kind: ReduceKind,
        /// Grid for the auxiliary randomness is 2^-aux_log2.
        #[arg(long, default_value_t = 20)]
        aux_log2: u32,
        /// Skip the linear-system certificate.
        #[arg(long)]
        no_certificate: bool,
    },
    /// Map a cut of a reduction back to a strategy profile.
    Lift {
        #[arg(long)]
        artifacts: PathBuf,
        /// Cut-set JSON (`members` = s side).
        #[arg(long)]
        cut: PathBuf,
    },
    /// FLIP local search on a cut instance (JSON or DIMACS).
    RunFlip {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long, default_value = "best")]
        rule: String,
        /// Cut-set JSON to start from; random if omitted.
        #[arg(long)]
        initial: Option<PathBuf>,
    },
    /// Better-response dynamics on a congestion game.
    RunCongestion {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value = "best")]
        rule: String,
    },
    /// Run a trial matrix from `--config` and write the CSV table.
    Experiment {
        /// Also write per-cell medians here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the invariant suite (acceptance sizes unless `--config` is given).
    Verify {
        /// Run one criterion only.
        #[arg(long)]
        criterion: Option<usize>,
        /// Re-run the single instance with this seed (needs `--criterion`).
        #[arg(long, value_parser = parse_u64)]
        replay: Option<u64>,
        /// Check stored reduction artifacts instead.
        #[arg(long)]
        artifacts: Vec<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => emit_text(out, &(serde_json::to_string_pretty(value)? + "\n")),
    }
}

fn rule(name: &str) -> Result<PivotRule> {
    PivotRule::from_name(name).ok_or_else(|| anyhow!("unknown rule {name:?} (first, best, random)"))
}

fn load_cut_instance(path: &Path) -> Result<CutInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        serde_json::from_str::<CutFile>(&text)?.to_instance()
    } else {
        from_dimacs(&text)
    }
}

fn random_cut(instance: &CutInstance, seed: u64) -> Cut {
    let m = instance.vertices();
    let mut r = rng::stream(seed, rng::TAG_INITIAL, 1, 0, 0);
    let mut side: Vec<bool> = (0..m).map(|_| rng::uniform_inclusive(&mut r, 0, 1) == 1).collect();
    match instance.terminals() {
        Some((s, t)) => {
            side[s] = true;
            side[t] = false;
        }
        None if m >= 2 && side.iter().all(|&b| b == side[0]) => side[0] = !side[0],
        None => {}
    }
    Cut(side)
}

fn spec_from(path: &Option<PathBuf>) -> Result<PerturbationSpec> {
    match path {
        Some(p) => read_json::<SpecFile>(p)?.to_spec(),
        None => Ok(PerturbationSpec::uniform_full(30)),
    }
}

fn print_report(report: &VerifyReport, as_json: bool) -> Result<()> {
    if as_json {
        println!("{}", serde_json::to_string_pretty(report)?);
    } else {
        print!("{}", report.render());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let seed = cli.seed;
    match cli.command {
        Command::Gen { kind, topology, p, n, k, spec, resources, ell, dimacs } => {
            let graph = match topology {
                TopologyArg::Complete => GameGraph::complete(n, k),
                TopologyArg::Path => GameGraph::path(n, k),
                TopologyArg::ErdosRenyi => GameGraph::erdos_renyi(n, k, p, seed),
            };
            match kind {
                GenKind::Game => {
                    let spec = spec_from(&spec)?;
                    let game = sample_instance(&graph, &spec, seed)?;
                    let meta = json!({ "seed": seed, "spec": SpecFile::from_spec(&spec) });
                    emit(&cli.out, &GameFile::from_game(&game, Some(meta)))?;
                }
                GenKind::Cut => {
                    let mut r = rng::stream(seed, rng::TAG_GRAPH, 1, 0, 0);
                    let res = 1i128 << 10;
                    let edges = graph
                        .edges
                        .iter()
                        .map(|&(u, v)| (u, v, nashlab_core::rational::rat(rng::uniform_inclusive(&mut r, 0, res), res)))
                        .collect();
                    let inst = CutInstance::new(n, edges, None)?;
                    if dimacs {
                        emit_text(&cli.out, &to_dimacs(&inst))?;
                    } else {
                        emit(&cli.out, &CutFile::from_instance(&inst))?;
                    }
                }
                GenKind::Congestion => {
                    let game = sample_congestion(resources, n, k, ell, 1 << 20, seed)?;
                    emit(&cli.out, &CongestionFile::from_game(&game))?;
                }
            }
        }
        Command::RunBra { game, rule: rule_name, initial, script } => {
            let game = load_game(&game)?;
            let start = match initial {
                Some(list) => StrategyProfile(
                    list.split(',').map(|s| s.trim().parse::<usize>()).collect::<std::result::Result<_, _>>()?,
                ),
                None => random_profile(&game, seed),
            };
            if rule_name == "script" {
                let file: TraceFile = read_json(&script.ok_or_else(|| anyhow!("--rule script needs --script"))?)?;
                let start = if file.initial.is_empty() { start } else { file.initial() };
                match replay_moves(&game, &start, &file.moves())? {
                    Replay::Valid(trace) => {
                        emit(&cli.out, &TraceFile::from_trace(&trace, &PivotRule::Script(file.moves()), seed))?
                    }
                    Replay::Violation { step, delta } => {
                        bail!("move {step} is not improving (delta {delta})")
                    }
                }
            } else {
                let rule = rule(&rule_name)?;
                let trace = run_bra(&game, &start, &rule, cli.cap, seed)?;
                emit(&cli.out, &TraceFile::from_trace(&trace, &rule, seed))?;
            }
        }
        Command::Analyze { game, trace, from, to } => {
            let game = load_game(&game)?;
            let file: TraceFile = read_json(&trace)?;
            let trace = match replay_moves(&game, &file.initial(), &file.moves())? {
                Replay::Valid(t) => t,
                Replay::Violation { step, delta } => bail!("trace move {step} is not improving (delta {delta})"),
            };
            let range = from.unwrap_or(0)..to.unwrap_or(trace.len());
            let stats = classify(&game, &trace, range.clone())?;
            let critical = find_critical_subsequence(&trace, range.clone()).ok();
            let rank = rank_report(&game, &trace, range.clone())?;
            emit(
                &cli.out,
                &json!({
                    "range": [range.start, range.end],
                    "stats": {
                        "p": stats.p, "p1": stats.p1, "p2": stats.p2, "d": stats.d, "q0": stats.q0,
                        "d1": stats.d1, "length": stats.length, "repeat_moves": stats.repeat_moves,
                        "log_repeating": stats.log_repeating, "diverse": stats.is_diverse(),
                    },
                    "critical": critical.map(|b| [b.start, b.end]),
                    "rank": {
                        "rank": rank.rank,
                        "complete_graph": rank.complete_graph,
                        "separated_bound": rank.separated_bound,
                        "all_active_bound": rank.all_active_bound,
                        "cyclic_count": rank.cyclic_count,
                        "cyclic_rank": rank.cyclic_rank,
                        "cyclic_bound": rank.cyclic_bound,
                        "cyclic_nonzero": rank.cyclic_nonzero,
                        "cyclic_inactive_zero": rank.cyclic_inactive_zero,
                        "all_ok": rank.all_ok(),
                    },
                }),
            )?;
        }
        Command::Reduce { game, kind, aux_log2, no_certificate } => {
            let game = normalize_payoffs(&load_game(&game)?)?;
            let art = match kind {
                ReduceKind::KTo2 => {
                    let aux = AuxRandomness::sample(game.n(), game.k(), 1i128 << aux_log2, seed)?;
                    reduce_k_to_2flip(&game, &aux)?
                }
                ReduceKind::TwoTo1 => reduce_2_to_1flip(&game, &sample_binary_aux(game.n(), 1i128 << aux_log2, seed)?)?,
            };
            let report = match (art.kind, no_certificate) {
                (ReductionKind::KTo2Flip, false) => Some(check_weak_smoothness(&art)?),
                _ => None,
            };
            let meta = json!({ "seed": seed, "aux_log2": aux_log2 });
            emit(&cli.out, &ArtifactsFile::from_artifacts(&art, report.as_ref(), Some(meta)))?;
        }
        Command::Lift { artifacts, cut } => {
            let art = read_json::<ArtifactsFile>(&artifacts)?.to_artifacts()?;
            let cut = read_json::<CutSetFile>(&cut)?.to_cut()?;
            let (profile, valid) = map_cut_to_profile(&art, &cut)?;
            emit(&cli.out, &json!({ "profile": profile.0, "valid": valid }))?;
        }
        Command::RunFlip { instance, radius, rule: rule_name, initial } => {
            let inst = load_cut_instance(&instance)?;
            let start = match initial {
                Some(p) => read_json::<CutSetFile>(&p)?.to_cut()?,
                None => random_cut(&inst, seed),
            };
            let rule = rule(&rule_name)?;
            let trace = run_flip(&inst, radius, &start, &rule, cli.cap, seed)?;
            emit(
                &cli.out,
                &json!({
                    "initial": start.members(),
                    "flips": trace.flips,
                    "deltas": trace.deltas.iter().map(Frac::from).collect::<Vec<_>>(),
                    "final": trace.final_cut.members(),
                    "value": Frac::from(trace.values.last().unwrap()),
                    "outcome": trace.outcome.name(),
                    "rule": rule.name(),
                    "radius": radius,
                    "seed": seed,
                }),
            )?;
        }
        Command::RunCongestion { game, rule: rule_name } => {
            let game = read_json::<CongestionFile>(&game)?.to_game()?;
            let mut r = rng::stream(seed, rng::TAG_INITIAL, 2, 0, 0);
            let start: Vec<usize> = (0..game.players())
                .map(|p| rng::uniform_inclusive(&mut r, 0, game.strategies(p).len() as i128 - 1) as usize)
                .collect();
            let rule = rule(&rule_name)?;
            let trace = run_bra_congestion(&game, &start, &rule, cli.cap, seed)?;
            emit(
                &cli.out,
                &json!({
                    "initial": trace.initial,
                    "moves": trace.moves.iter().map(|m| [m.player, m.strategy]).collect::<Vec<_>>(),
                    "gains": trace.gains.iter().map(Frac::from).collect::<Vec<_>>(),
                    "final": trace.final_profile(),
                    "potential": Frac::from(trace.potentials.last().unwrap()),
                    "outcome": trace.outcome.name(),
                    "rule": rule.name(),
                    "seed": seed,
                }),
            )?;
        }
        Command::Experiment { summary } => {
            let path = cli.config.ok_or_else(|| anyhow!("experiment needs --config"))?;
            let config: ExperimentConfig = read_json(&path)?;
            let rows = run_experiment(&config, cli.workers)?;
            match &cli.out {
                Some(p) => write_csv(fs::File::create(p)?, &config, &rows)?,
                None => write_csv(io::stdout().lock(), &config, &rows)?,
            }
            if let Some(p) = summary {
                write_summary_csv(fs::File::create(p)?, &config, &summarize(&rows))?;
            }
            let failed = rows.iter().filter(|r| !r.converged).count();
            if failed > 0 {
                eprintln!("{failed} of {} trials hit the step cap", rows.len());
            }
        }
        Command::Verify { criterion, replay: replay_seed, artifacts, json } => {
            if !artifacts.is_empty() {
                let mut ok = true;
                for path in &artifacts {
                    let rep = verify_artifacts_file(&read_json(path)?)?;
                    ok &= rep.passed();
                    print_report(&VerifyReport { criteria: vec![rep] }, json)?;
                }
                return Ok(ok);
            }
            if let Some(s) = replay_seed {
                let id = criterion.ok_or_else(|| anyhow!("--replay needs --criterion"))?;
                let sample = replay(id, s)?;
                println!("criterion {id}, seed {s:#x}: {} checks, {} failures", sample.checks, sample.failures.len());
                for (k, v) in &sample.tallies {
                    println!("  {k} = {v}");
                }
                for f in &sample.failures {
                    println!("  violated {}: {}", f.invariant, f.detail);
                }
                return Ok(sample.failures.is_empty());
            }
            let mut cfg = match &cli.config {
                Some(p) => read_json::<VerifyConfig>(p)?,
                None => VerifyConfig::acceptance(),
            };
            if seed != 0 {
                cfg.seed = seed;
            }
            if cfg.workers == 0 {
                cfg.workers = cli.workers;
            }
            let report = match criterion {
                Some(id) => VerifyReport { criteria: vec![verify_criterion(id, &cfg, cli.out.as_ref())?] },
                None => verify_suite(&cfg, cli.out.as_ref())?,
            };
            print_report(&report, json)?;
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
