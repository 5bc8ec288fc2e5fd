//! Randomized invariant suite. Every check draws its instance from a single
//! seed, and failures carry that seed so [`replay`] reproduces them.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nashlab_core::analysis::{
    classify, find_critical_subsequence, inner_product, is_complete_graph, is_critical, rank_report,
    transformation_set,
};
use nashlab_core::congestion::{
    congestion_move_vector, run_bra_congestion, sample_congestion, CongestionGame,
};
use nashlab_core::dynamics::{run_bra, Outcome, PivotRule};
use nashlab_core::game::{for_each_profile, Move};
use nashlab_core::maxcut::{for_each_valid_cut, is_local_opt_mask, CutInstance};
use nashlab_core::rational::{int, rat};
use nashlab_core::reduction::{
    check_weak_smoothness, extended_game, map_cut_to_profile, normalize_payoffs, reduce_2_to_1flip,
    reduce_k_to_2flip, sample_binary_aux, AuxRandomness, ReductionArtifacts,
};
use nashlab_core::rng;
use nashlab_core::smoothing::{from_maxcut, sample_instance, GameGraph, PerturbationSpec};
use nashlab_core::{GameInstance, Rational, StrategyProfile};

use crate::experiment::{random_profile, run_experiment, summarize, write_csv, write_summary_csv, ExperimentConfig, Topology};
use crate::formats::{ArtifactsFile, SpecFile};

const TAG_VERIFY: u64 = 100;
const TAG_PARAMS: u64 = 101;
/// Failures kept per criterion; the rest are only counted.
const KEEP_FAILURES: usize = 12;

/// Instance counts per criterion. Fields missing from a JSON config are 0,
/// so `{}` runs nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub potential_triples: usize,
    pub transformation_traces: usize,
    pub oracle_instances: usize,
    pub critical_traces: usize,
    /// Ranges per class (inactive player present / all players active).
    pub rank_ranges: usize,
    pub k_flip_instances: usize,
    pub binary_instances: usize,
    pub embedding_graphs: usize,
    pub congestion_deviations: usize,
    pub congestion_moves: usize,
    pub congestion_trials: usize,
    /// Player counts for the convergence measurement.
    pub convergence_n: Vec<usize>,
    pub convergence_trials: usize,
    pub convergence_cap: usize,
    pub workers: usize,
}

impl VerifyConfig {
    /// Sizes used by the acceptance suite.
    pub fn acceptance() -> Self {
        VerifyConfig {
            seed: 0x5eed,
            potential_triples: 1000,
            transformation_traces: 200,
            oracle_instances: 200,
            critical_traces: 200,
            rank_ranges: 200,
            k_flip_instances: 100,
            binary_instances: 100,
            embedding_graphs: 100,
            congestion_deviations: 1000,
            congestion_moves: 500,
            congestion_trials: 200,
            convergence_n: vec![4, 6, 8, 10, 12],
            convergence_trials: 50,
            convergence_cap: 1_000_000,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub invariant: String,
    pub seed: u64,
    pub detail: String,
}

impl Failure {
    fn new(invariant: &str, seed: u64, detail: impl Into<String>) -> Self {
        Failure { invariant: invariant.into(), seed, detail: detail.into() }
    }
}

/// Result of one seeded instance.
#[derive(Debug, Clone, Default)]
pub struct Sample {
    /// False when the seed produced nothing usable (e.g. too short a trace).
    pub used: bool,
    pub checks: u64,
    pub failures: Vec<Failure>,
    /// Criterion-specific tallies (e.g. the precondition class of a range).
    pub tallies: Vec<(String, u64)>,
}

impl Sample {
    fn used() -> Self {
        Sample { used: true, ..Default::default() }
    }

    fn check(&mut self, ok: bool, invariant: &str, seed: u64, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(Failure::new(invariant, seed, detail()));
        }
    }

    fn tally(&mut self, key: &str, by: u64) {
        match self.tallies.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v += by,
            None => self.tallies.push((key.into(), by)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: String,
    pub required: usize,
    pub instances: usize,
    pub checks: u64,
    pub failure_count: usize,
    pub failures: Vec<Failure>,
    pub tallies: Vec<(String, u64)>,
    pub notes: Vec<String>,
    #[serde(serialize_with = "as_secs")]
    pub elapsed: Duration,
}

fn as_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl CriterionReport {
    fn new(id: usize, title: &str, required: usize) -> Self {
        CriterionReport {
            id,
            title: title.into(),
            required,
            instances: 0,
            checks: 0,
            failure_count: 0,
            failures: Vec::new(),
            tallies: Vec::new(),
            notes: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn absorb(&mut self, sample: Sample) {
        if sample.used {
            self.instances += 1;
        }
        self.checks += sample.checks;
        self.failure_count += sample.failures.len();
        for f in sample.failures {
            if self.failures.len() < KEEP_FAILURES {
                self.failures.push(f);
            }
        }
        for (k, v) in sample.tallies {
            match self.tallies.iter_mut().find(|(key, _)| *key == k) {
                Some((_, total)) => *total += v,
                None => self.tallies.push((k, v)),
            }
        }
    }

    pub fn tally(&self, key: &str) -> u64 {
        self.tallies.iter().find(|(k, _)| k == key).map_or(0, |(_, v)| *v)
    }

    pub fn shortfall(&self) -> bool {
        self.instances < self.required
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0 && !self.shortfall()
    }

    /// Failing invariants by name with counts among the kept failures.
    pub fn failing_invariants(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.failures.iter().map(|f| f.invariant.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub criteria: Vec<CriterionReport>,
}

impl VerifyReport {
    pub fn checks_run(&self) -> u64 {
        self.criteria.iter().map(|c| c.checks).sum()
    }

    /// Nothing was checked: a pass that means nothing.
    pub fn vacuous(&self) -> bool {
        self.checks_run() == 0
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(CriterionReport::passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            out.push_str(&format!(
                "{} [{:>2}] {} : {} instances (needed {}), {} checks, {} failures, {:.2}s\n",
                if c.passed() { "PASS" } else { "FAIL" },
                c.id,
                c.title,
                c.instances,
                c.required,
                c.checks,
                c.failure_count,
                c.elapsed.as_secs_f64()
            ));
            for (k, v) in &c.tallies {
                out.push_str(&format!("       {k} = {v}\n"));
            }
            for note in &c.notes {
                out.push_str(&format!("       note: {note}\n"));
            }
            for f in &c.failures {
                out.push_str(&format!("       violated {} (replay seed {:#x}): {}\n", f.invariant, f.seed, f.detail));
            }
        }
        if self.vacuous() {
            out.push_str("VACUOUS: zero checks run\n");
        }
        out
    }
}

pub fn instance_seed(base: u64, criterion: usize, index: usize) -> u64 {
    base ^ rng::stream_id(TAG_VERIFY, criterion as u64, index as u64, 0)
}

fn params(seed: u64) -> ChaCha8Rng {
    rng::stream(seed, TAG_PARAMS, 0, 0, 0)
}

fn below(r: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng::uniform_inclusive(r, lo as i128, hi as i128) as usize
}

fn pick<T: Clone>(r: &mut ChaCha8Rng, items: &[T]) -> T {
    items[below(r, 0, items.len() - 1)].clone()
}

fn random_rule(r: &mut ChaCha8Rng) -> PivotRule {
    pick(r, &[PivotRule::FirstImproving, PivotRule::BestImproving, PivotRule::RandomImproving])
}

/// A mix of full-range and window specs on fine grids.
fn random_spec(r: &mut ChaCha8Rng) -> PerturbationSpec {
    match below(r, 0, 2) {
        0 => PerturbationSpec::uniform_full(30),
        1 => PerturbationSpec::window(int(2), 24).unwrap(),
        _ => PerturbationSpec::window(int(8), 24).unwrap(),
    }
}

fn random_graph(r: &mut ChaCha8Rng, n: usize, k: usize, seed: u64) -> GameGraph {
    match below(r, 0, 3) {
        0 => GameGraph::complete(n, k),
        1 => GameGraph::path(n, k),
        _ => GameGraph::erdos_renyi(n, k, 0.5, seed),
    }
}

// Plain summations straight from the definitions, used as oracles.

fn potential_oracle(game: &GameInstance, p: &[usize]) -> Rational {
    game.edges().iter().enumerate().map(|(idx, e)| *game.entry(idx, p[e.u], p[e.v])).sum()
}

fn payoff_oracle(game: &GameInstance, p: &[usize], u: usize) -> Rational {
    game.incident(u).iter().map(|&idx| {
        let e = &game.edges()[idx];
        *game.entry(idx, p[e.u], p[e.v])
    }).sum()
}

fn cut_oracle(instance: &CutInstance, side: &[bool]) -> Rational {
    instance.edges().iter().filter(|(u, v, _)| side[*u] != side[*v]).map(|(_, _, w)| *w).sum()
}

fn congestion_potential_oracle(game: &CongestionGame, p: &[usize]) -> Rational {
    let mut load = vec![0usize; game.resources()];
    for (player, &c) in p.iter().enumerate() {
        for &e in &game.strategies(player)[c] {
            load[e] += 1;
        }
    }
    let d = game.differentials();
    (0..game.resources()).map(|e| (1..=load[e]).map(|i| d[e][..=i].iter().sum::<Rational>()).sum::<Rational>()).sum()
}

fn congestion_cost_oracle(game: &CongestionGame, p: &[usize], player: usize) -> Rational {
    let d = game.differentials();
    game.strategies(player)[p[player]]
        .iter()
        .map(|&e| {
            let load = p.iter().enumerate().filter(|(q, &c)| game.strategies(*q)[c].contains(&e)).count();
            d[e][..=load].iter().sum::<Rational>()
        })
        .sum()
}

/// Potential delta equals the mover's payoff delta for one random deviation.
pub fn check_potential_triple(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    let n = below(&mut r, 2, 8);
    let k = below(&mut r, 2, 4);
    let graph = random_graph(&mut r, n, k, seed);
    let game = sample_instance(&graph, &random_spec(&mut r), seed)?;
    let before = random_profile(&game, seed);
    let u = below(&mut r, 0, n - 1);
    let mut s = below(&mut r, 1, k - 1);
    if s >= before[u] {
        s += 1;
    }
    let after = before.with_move(Move::new(u, s));
    let mut out = Sample::used();
    let dpot = game.potential(&after)? - game.potential(&before)?;
    let dpay = game.player_payoff(&after, u)? - game.player_payoff(&before, u)?;
    let oracle_pot = potential_oracle(&game, &after) - potential_oracle(&game, &before);
    let oracle_pay = payoff_oracle(&game, &after, u) - payoff_oracle(&game, &before, u);
    out.check(dpot == dpay, "potential_delta_equals_payoff_delta", seed, || format!("{dpot} vs {dpay}"));
    out.check(dpot == oracle_pot && dpay == oracle_pay, "potential_matches_edge_sum", seed, || {
        format!("potential {dpot} vs {oracle_pot}, payoff {dpay} vs {oracle_pay}")
    });
    Ok(out)
}

/// `<L_t, A>` equals the potential delta at every step of one BRA trace.
pub fn check_transformation_trace(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    let n = below(&mut r, 2, 8);
    let k = below(&mut r, 2, 4);
    let graph = random_graph(&mut r, n, k, seed);
    let game = sample_instance(&graph, &random_spec(&mut r), seed)?;
    let rule = random_rule(&mut r);
    let trace = run_bra(&game, &random_profile(&game, seed), &rule, 100_000, seed)?;
    let vectors = transformation_set(&game, &trace, 0..trace.len())?;
    let mut out = Sample::used();
    for (t, v) in vectors.iter().enumerate() {
        let ip = inner_product(&game, v);
        let delta = potential_oracle(&game, &trace.profiles[t + 1]) - potential_oracle(&game, &trace.profiles[t]);
        out.check(ip == delta && ip == trace.deltas[t], "transformation_inner_product", seed, || {
            format!("step {t}: <L,A> = {ip}, potential delta {delta}, recorded {}", trace.deltas[t])
        });
    }
    out.tally("steps", trace.len() as u64);
    Ok(out)
}

/// Every converged BRA run ends in an enumerated PNE, and one exists.
pub fn check_oracle_instance(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    // k^n <= 3^5
    let (n, k) = pick(&mut r, &[(2, 2), (3, 2), (4, 2), (5, 2), (6, 2), (7, 2), (2, 3), (3, 3), (4, 3), (5, 3), (3, 4), (3, 6), (2, 9)]);
    let graph = random_graph(&mut r, n, k, seed);
    let game = sample_instance(&graph, &random_spec(&mut r), seed)?;
    let pne: BTreeSet<StrategyProfile> = game.enumerate_pne(1_000_000)?.into_iter().collect();
    let mut out = Sample::used();
    out.check(!pne.is_empty(), "pne_exists", seed, || format!("no PNE for n={n} k={k}"));
    for (j, rule) in [PivotRule::FirstImproving, PivotRule::BestImproving, PivotRule::RandomImproving].iter().enumerate() {
        let start = random_profile(&game, seed ^ j as u64);
        let trace = run_bra(&game, &start, rule, 1_000_000, seed)?;
        out.check(trace.outcome == Outcome::Converged, "bra_converges", seed, || format!("{} hit the cap", rule.name()));
        if trace.outcome == Outcome::Converged {
            out.check(pne.contains(trace.final_profile()), "bra_output_in_pne", seed, || {
                format!("{} ended at {:?}", rule.name(), trace.final_profile().0)
            });
        }
    }
    Ok(out)
}

/// Longest strictly improving path over all profiles, searched over the
/// improvement DAG in decreasing potential order.
pub fn longest_improving_moves(game: &GameInstance) -> (StrategyProfile, Vec<Move>) {
    let (n, lo, hi) = (game.n(), game.base(), game.k());
    let side = hi - lo + 1;
    let mut profiles = Vec::new();
    for_each_profile(n, lo, hi, |p| profiles.push(p.to_vec()));
    let index = |p: &[usize]| p.iter().fold(0usize, |acc, &s| acc * side + (s - lo));
    let pots: Vec<Rational> = profiles.iter().map(|p| potential_oracle(game, p)).collect();
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|a, b| pots[*b].cmp(&pots[*a]));
    let mut best: Vec<(usize, Option<(Move, usize)>)> = vec![(0, None); profiles.len()];
    for &a in &order {
        let p = &profiles[a];
        for u in 0..n {
            for s in lo..=hi {
                if s == p[u] {
                    continue;
                }
                let mut q = p.clone();
                q[u] = s;
                let b = index(&q);
                if pots[b] > pots[a] && best[b].0 + 1 > best[a].0 {
                    best[a] = (best[b].0 + 1, Some((Move::new(u, s), b)));
                }
            }
        }
    }
    let start = (0..profiles.len()).max_by_key(|&a| (best[a].0, std::cmp::Reverse(a))).unwrap();
    let mut moves = Vec::new();
    let mut at = start;
    while let Some((mv, next)) = best[at].1 {
        moves.push(mv);
        at = next;
    }
    (StrategyProfile(profiles[start].clone()), moves)
}

/// A long improving trace on a complete graph, replayed through the
/// script rule so the dynamics module re-checks every step.
fn long_trace(seed: u64, r: &mut ChaCha8Rng, sizes: &[(usize, usize)]) -> Result<(GameInstance, nashlab_core::dynamics::BrTrace)> {
    let (n, k) = pick(r, sizes);
    let game = sample_instance(&GameGraph::complete(n, k), &random_spec(r), seed)?;
    let (start, moves) = longest_improving_moves(&game);
    let trace = run_bra(&game, &start, &PivotRule::Script(moves), usize::MAX, seed)?;
    Ok((game, trace))
}

/// The finder's output on a trace cut to `2nk` moves is critical.
pub fn check_critical_trace(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    let (game, trace) = long_trace(seed, &mut r, &[(5, 3), (4, 4), (6, 3)])?;
    let target = 2 * game.n() * game.k();
    if trace.len() < target {
        return Ok(Sample::default());
    }
    let trace = trace.truncated(target);
    let mut out = Sample::used();
    match find_critical_subsequence(&trace, 0..target) {
        Err(e) => out.check(false, "critical_subsequence_exists", seed, || e.to_string()),
        Ok(block) => {
            let stats = classify(&game, &trace, block.clone())?;
            out.check(stats.length == 2 * stats.excess(), "critical_length_identity", seed, || {
                format!("{block:?}: l = {}, d - q0 = {}", stats.length, stats.excess())
            });
            // brute force over every proper contiguous subrange
            let mut all_diverse = true;
            for a in block.clone() {
                for b in (a + 1)..=block.end {
                    if b - a < block.len() {
                        out.checks += 1;
                        all_diverse &= classify(&game, &trace, a..b)?.is_diverse();
                    }
                }
            }
            out.check(all_diverse, "strict_subranges_diverse", seed, || format!("{block:?}"));
            out.check(is_critical(&game, &trace, block.clone())?, "is_critical", seed, || format!("{block:?}"));
        }
    }
    Ok(out)
}

/// Rank modulo a 61-bit prime: never exceeds the rank over the rationals.
fn rank_mod_p(vectors: &[nashlab_core::analysis::TransformationVector]) -> usize {
    const P: u128 = (1 << 61) - 1;
    let keys: Vec<_> = vectors.iter().flat_map(|v| v.iter().map(|(k, _)| *k)).collect::<BTreeSet<_>>().into_iter().collect();
    let mut rows: Vec<Vec<u128>> = vectors
        .iter()
        .map(|v| keys.iter().map(|k| (v.get(k) as i128).rem_euclid(P as i128) as u128).collect())
        .collect();
    let pow = |mut b: u128, mut e: u128| {
        let mut acc = 1u128;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % P;
            }
            b = b * b % P;
            e >>= 1;
        }
        acc
    };
    let mut rank = 0;
    for col in 0..keys.len() {
        let Some(piv) = (rank..rows.len()).find(|&i| rows[i][col] != 0) else { continue };
        rows.swap(rank, piv);
        let inv = pow(rows[rank][col], P - 2);
        for i in 0..rows.len() {
            if i != rank && rows[i][col] != 0 {
                let f = rows[i][col] * inv % P;
                let pivot = rows[rank].clone();
                for (x, p) in rows[i][col..].iter_mut().zip(&pivot[col..]) {
                    *x = (*x + P - f * p % P) % P;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank bounds on several random ranges of one improving trace. Tallies
/// count ranges per precondition class.
pub fn check_rank_trace(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    let (game, trace) = if below(&mut r, 0, 1) == 0 {
        long_trace(seed, &mut r, &[(3, 2), (3, 3), (4, 2), (4, 3), (5, 2), (5, 3)])?
    } else {
        let (n, k) = pick(&mut r, &[(3, 2), (4, 3), (5, 3), (6, 2), (6, 3), (7, 2)]);
        let game = sample_instance(&GameGraph::complete(n, k), &random_spec(&mut r), seed)?;
        let rule = random_rule(&mut r);
        let trace = run_bra(&game, &random_profile(&game, seed), &rule, 100_000, seed)?;
        (game, trace)
    };
    let mut out = Sample::default();
    if trace.is_empty() || !is_complete_graph(&game) {
        return Ok(out);
    }
    out.used = true;
    let len = trace.len();
    let ranges = std::iter::once(0..len).chain((0..3).map(|_| {
        let a = below(&mut r, 0, len - 1);
        a..below(&mut r, a + 1, len)
    }));
    for range in ranges {
        let report = rank_report(&game, &trace, range.clone())?;
        let label = format!("{range:?} of {len}");
        let set = transformation_set(&game, &trace, range.clone())?;
        let modp = rank_mod_p(&set);
        out.check(modp <= report.rank, "rank_consistent", seed, || format!("{label}: mod-p rank {modp} > {}", report.rank));
        out.tally(if report.has_inactive { "ranges_with_inactive" } else { "ranges_all_active" }, 1);
        if let Some(bound) = report.separated_bound {
            out.check(report.rank >= bound, "rank_separated_bound", seed, || format!("{label}: rank {} < {bound}", report.rank));
        }
        if let Some(bound) = report.all_active_bound {
            out.check(report.rank >= bound, "rank_all_active_bound", seed, || format!("{label}: rank {} < {bound}", report.rank));
        }
        out.check(report.cyclic_ok(), "cyclic_rank_bound", seed, || {
            format!("{label}: cyclic rank {} < {}", report.cyclic_rank, report.cyclic_bound)
        });
        out.check(report.cyclic_nonzero, "cyclic_sum_nonzero", seed, || label.clone());
        out.check(report.cyclic_inactive_zero, "cyclic_inactive_rows_zero", seed, || label.clone());
        out.check(report.cyclic_inner_products, "cyclic_inner_product", seed, || label.clone());
    }
    Ok(out)
}

fn normalized_game(r: &mut ChaCha8Rng, n: usize, k: usize, graph: GameGraph, seed: u64) -> Result<GameInstance> {
    debug_assert_eq!((graph.n, graph.k), (n, k));
    Ok(normalize_payoffs(&sample_instance(&graph, &random_spec(r), seed)?)?)
}

/// Checks the k-strategy reduction by enumerating every cut.
pub fn check_k_flip_artifacts(art: &ReductionArtifacts, instance: &CutInstance, seed: u64) -> Result<Sample> {
    let ext = extended_game(art)?;
    let pne: BTreeSet<StrategyProfile> = ext.enumerate_pne(1_000_000)?.into_iter().collect();
    let mut out = Sample::used();
    let (mut invalid, mut identity, mut not_pne, mut optima) = (Vec::new(), Vec::new(), Vec::new(), 0u64);
    let mut cuts = 0u64;
    let two = int(2);
    for_each_valid_cut(instance, |side| {
        cuts += 1;
        let (profile, valid) = map_cut_to_profile(art, &nashlab_core::maxcut::Cut(side.to_vec())).unwrap();
        if valid {
            let value = cut_oracle(instance, side);
            let pot = potential_oracle(&ext, &profile);
            if value != two * pot && identity.len() < 3 {
                identity.push(format!("members {:?}: cut {value}, 2*potential {}", members(side), two * pot));
            }
        }
        if is_local_opt_mask(instance, side, 2) {
            optima += 1;
            if !valid {
                invalid.push(members(side));
            } else if !pne.contains(&profile) {
                not_pne.push(members(side));
            }
        }
    });
    out.checks += cuts;
    out.tally("cuts", cuts);
    out.tally("local_optima", optima);
    out.tally("invalid_optima", invalid.len() as u64);
    out.tally("optima_not_pne", not_pne.len() as u64);
    let report = check_weak_smoothness(art)?;
    out.check(invalid.is_empty(), "two_flip_optimum_valid", seed, || {
        format!("{} of {optima} optima invalid, e.g. s side {:?}", invalid.len(), invalid[0])
    });
    out.check(identity.is_empty(), "value_identity", seed, || format!("witness {}", identity[0]));
    out.check(not_pne.is_empty(), "two_flip_optimum_is_pne", seed, || {
        format!("{} of {optima} optima not PNE, e.g. s side {:?}", not_pne.len(), not_pne[0])
    });
    out.check(report.certified(), "weak_smoothness_certified", seed, || {
        format!(
            "{}x{} square={} integer={} forms={} rank={} triangular={} diagonal={}",
            report.rows, report.columns, report.square, report.integer, report.forms_match, report.rank,
            report.triangular, report.diagonal_expected
        )
    });
    Ok(out)
}

fn members(side: &[bool]) -> Vec<usize> {
    side.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v).collect()
}

pub fn check_k_flip_instance(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    // nk + 2 <= 16
    let (n, k) = pick(&mut r, &[(2, 2), (3, 2), (4, 2), (5, 2), (6, 2), (7, 2), (2, 3), (3, 3), (4, 3), (2, 4), (3, 4), (2, 5), (2, 6), (2, 7)]);
    let game = normalized_game(&mut r, n, k, GameGraph::complete(n, k), seed)?;
    let aux = AuxRandomness::sample(n, k, 1 << 20, seed)?;
    let art = reduce_k_to_2flip(&game, &aux)?;
    check_k_flip_artifacts(&art, &art.instance, seed)
}

/// Every 1-flip local optimum of the binary reduction maps to a PNE.
pub fn check_binary_instance(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    let n = below(&mut r, 2, 12);
    let graph = random_graph(&mut r, n, 2, seed);
    let game = normalized_game(&mut r, n, 2, graph, seed)?;
    let w = sample_binary_aux(n, 1 << 20, seed)?;
    let art = reduce_2_to_1flip(&game, &w)?;
    let pne: BTreeSet<StrategyProfile> = game.enumerate_pne(1_000_000)?.into_iter().collect();
    let mut out = Sample::used();
    let mut optima = 0u64;
    let mut bad = Vec::new();
    for_each_valid_cut(&art.instance, |side| {
        out.checks += 1;
        if is_local_opt_mask(&art.instance, side, 1) {
            optima += 1;
            let (profile, _) = map_cut_to_profile(&art, &nashlab_core::maxcut::Cut(side.to_vec())).unwrap();
            if !pne.contains(&profile) {
                bad.push(profile.0);
            }
        }
    });
    out.tally("local_optima", optima);
    out.check(optima > 0, "local_optimum_exists", seed, || "no 1-flip optimum".into());
    out.check(bad.is_empty(), "one_flip_optimum_is_pne", seed, || format!("{} bad, e.g. {:?}", bad.len(), bad[0]));
    Ok(out)
}

/// Embedded max-cut game: potential equals cut value everywhere, and
/// on proper cuts 1-flip optima are exactly the PNE.
pub fn check_embedding(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    let m = below(&mut r, 2, 12);
    let p = pick(&mut r, &[0.3, 0.6, 1.0]);
    let mut edges = Vec::new();
    let mut wr = rng::stream(seed, TAG_PARAMS, 1, 0, 0);
    for (u, v) in GameGraph::erdos_renyi(m, 2, p, seed).edges {
        edges.push((u, v, rat(rng::uniform_inclusive(&mut wr, 0, 1 << 10), 1 << 10)));
    }
    let instance = CutInstance::new(m, edges.clone(), None)?;
    let game = from_maxcut(m, &edges)?;
    let mut out = Sample::used();
    let mut failures = (None, None);
    for_each_profile(m, 1, 2, |prof| {
        let side: Vec<bool> = prof.iter().map(|&s| s == 1).collect();
        let profile = StrategyProfile(prof.to_vec());
        out.checks += 1;
        let pot = game.potential(&profile).unwrap();
        if pot != cut_oracle(&instance, &side) && failures.0.is_none() {
            failures.0 = Some(format!("profile {prof:?}: potential {pot}"));
        }
        let size = side.iter().filter(|&&b| b).count();
        if size != 0 && size != m {
            let opt = is_local_opt_mask(&instance, &side, 1);
            let ne = game.is_pne(&profile).unwrap();
            if opt != ne && failures.1.is_none() {
                failures.1 = Some(format!("profile {prof:?}: local opt {opt}, PNE {ne}"));
            }
        }
    });
    out.check(failures.0.is_none(), "embedded_potential_is_cut_value", seed, || failures.0.clone().unwrap());
    out.check(failures.1.is_none(), "one_flip_optima_are_pne", seed, || failures.1.clone().unwrap());
    Ok(out)
}

/// One sampled congestion game: caps, random deviations and moves, and a
/// BRA run. Tallies count deviations and moves.
pub fn check_congestion_instance(seed: u64) -> Result<Sample> {
    let mut r = params(seed);
    let resources = below(&mut r, 2, 6);
    let players = below(&mut r, 2, 6);
    let k = below(&mut r, 1, 3);
    let ell = below(&mut r, 2, players * k);
    let game = sample_congestion(resources, players, k, ell, 1 << 20, seed)?;
    let mut out = Sample::used();
    let mut membership = vec![0usize; resources];
    let mut caps_ok = true;
    for p in 0..players {
        let sets = game.strategies(p);
        caps_ok &= !sets.is_empty() && sets.len() <= k;
        for s in sets {
            for &e in s {
                membership[e] += 1;
            }
        }
    }
    caps_ok &= membership.iter().all(|&c| c <= ell);
    caps_ok &= game.differentials().iter().all(|d| d.len() == ell + 1 && d[1..].iter().all(|x| *x >= int(0) && *x <= int(1)));
    out.check(caps_ok, "congestion_caps", seed, || format!("r={resources} players={players} k={k} ell={ell}"));

    let random_choice = |r: &mut ChaCha8Rng, p: usize| below(r, 0, game.strategies(p).len() - 1);
    let costs = game.cumulative_costs();
    for _ in 0..8 {
        let before: Vec<usize> = (0..players).map(|p| random_choice(&mut r, p)).collect();
        let p = below(&mut r, 0, players - 1);
        let c = random_choice(&mut r, p);
        if c == before[p] {
            continue;
        }
        let mut after = before.clone();
        after[p] = c;
        let dpot = congestion_potential_oracle(&game, &after) - congestion_potential_oracle(&game, &before);
        let dcost = congestion_cost_oracle(&game, &after, p) - congestion_cost_oracle(&game, &before, p);
        let lib = game.potential(&after)? - game.potential(&before)?;
        let lib_cost = game.player_cost(&after, p)? - game.player_cost(&before, p)?;
        out.check(dpot == dcost && lib == dpot && lib_cost == dcost, "congestion_cost_delta_equals_potential_delta", seed, || {
            format!("cost {dcost} ({lib_cost}) vs potential {dpot} ({lib})")
        });
        out.tally("deviations", 1);
        let v = congestion_move_vector(&game, &before, Move::new(p, c))?;
        let ip = v.dot(|key| costs.get(key).copied().unwrap_or_default());
        out.check(ip == dpot, "congestion_move_vector_inner_product", seed, || format!("<L,C> = {ip}, delta {dpot}"));
        out.tally("moves", 1);
    }
    let start: Vec<usize> = (0..players).map(|p| random_choice(&mut r, p)).collect();
    let trace = run_bra_congestion(&game, &start, &random_rule(&mut r), 1_000_000, seed)?;
    out.check(trace.outcome == Outcome::Converged && game.is_pne(trace.final_profile())?, "congestion_bra_terminates", seed, || {
        format!("{} after {} steps", trace.outcome.name(), trace.len())
    });
    out.tally("bra_runs", 1);
    Ok(out)
}

/// Which criterion a seed belongs to, for replay.
pub fn replay(criterion: usize, seed: u64) -> Result<Sample> {
    match criterion {
        1 => check_potential_triple(seed),
        2 => check_transformation_trace(seed),
        3 => check_oracle_instance(seed),
        4 => check_critical_trace(seed),
        5 => check_rank_trace(seed),
        6 => check_k_flip_instance(seed),
        7 => check_binary_instance(seed),
        8 => check_embedding(seed),
        9 => check_congestion_instance(seed),
        other => bail!("criterion {other} has no per-seed replay"),
    }
}

pub const TITLES: [&str; 10] = [
    "potential identity",
    "transformation-vector identity",
    "BRA output vs PNE oracle",
    "critical subsequences",
    "rank bounds",
    "k-strategy to 2-flip reduction",
    "2-strategy to 1-flip reduction",
    "max-cut embedding",
    "congestion identities",
    "smoothed convergence measurement",
];

/// Runs `check` on consecutive seeds until `want` usable samples (or
/// `want * attempts_per` attempts) and folds the results.
fn sweep<F>(report: &mut CriterionReport, base: u64, want: usize, attempts_per: usize, done: impl Fn(&CriterionReport) -> bool, check: F) -> Result<()>
where
    F: Fn(u64) -> Result<Sample> + Sync,
{
    let start = Instant::now();
    let mut next = 0usize;
    let limit = want.saturating_mul(attempts_per);
    while !done(report) && next < limit {
        let batch = (want.saturating_sub(report.instances)).max(16).min(limit - next);
        let samples: Vec<Result<Sample>> = (next..next + batch)
            .into_par_iter()
            .map(|i| {
                let seed = instance_seed(base, report.id, i);
                check(seed).map_err(|e| e.context(format!("seed {seed:#x}")))
            })
            .collect();
        next += batch;
        for s in samples {
            let s = match s {
                Ok(s) => s,
                Err(e) => {
                    let mut s = Sample::used();
                    s.failures.push(Failure::new("no_error", 0, format!("{e:#}")));
                    s
                }
            };
            report.absorb(s);
        }
    }
    report.elapsed = start.elapsed();
    Ok(())
}

fn counted(report: &CriterionReport, want: usize) -> bool {
    report.instances >= want
}

pub fn verify_criterion(id: usize, cfg: &VerifyConfig, csv_dir: Option<&PathBuf>) -> Result<CriterionReport> {
    let title = TITLES[id - 1];
    let base = cfg.seed;
    let report = match id {
        1 => simple(id, cfg.potential_triples, base, check_potential_triple)?,
        2 => simple(id, cfg.transformation_traces, base, check_transformation_trace)?,
        3 => simple(id, cfg.oracle_instances, base, check_oracle_instance)?,
        4 => {
            let mut rep = CriterionReport::new(id, title, cfg.critical_traces);
            let want = cfg.critical_traces;
            sweep(&mut rep, base, want, 10, |r| counted(r, want), check_critical_trace)?;
            rep.notes.push("traces are longest improving paths cut to 2nk moves".into());
            rep
        }
        5 => {
            let want = cfg.rank_ranges;
            let mut rep = CriterionReport::new(id, title, want);
            let enough = |r: &CriterionReport| {
                r.tally("ranges_with_inactive") >= want as u64 && r.tally("ranges_all_active") >= want as u64
            };
            sweep(&mut rep, base, want.max(1), 10, enough, check_rank_trace)?;
            // required counts ranges per class, not seeds
            rep.required = want;
            rep.instances = rep.tally("ranges_with_inactive").min(rep.tally("ranges_all_active")) as usize;
            rep.notes.push("instances = ranges in the smaller precondition class".into());
            rep
        }
        6 => simple(id, cfg.k_flip_instances, base, check_k_flip_instance)?,
        7 => simple(id, cfg.binary_instances, base, check_binary_instance)?,
        8 => simple(id, cfg.embedding_graphs, base, check_embedding)?,
        9 => {
            let (dev, mv, trials) = (cfg.congestion_deviations as u64, cfg.congestion_moves as u64, cfg.congestion_trials);
            let mut rep = CriterionReport::new(id, title, trials);
            let enough = |r: &CriterionReport| {
                r.tally("deviations") >= dev && r.tally("moves") >= mv && r.instances >= trials
            };
            let want = trials.max(dev as usize / 4).max(mv as usize / 4);
            if want > 0 {
                sweep(&mut rep, base, want, 4, enough, check_congestion_instance)?;
            }
            if rep.tally("deviations") < dev || rep.tally("moves") < mv {
                rep.notes.push("too few deviations or moves sampled".into());
                rep.failure_count += 1;
            }
            rep
        }
        10 => convergence(cfg, csv_dir)?,
        other => bail!("no criterion {other}"),
    };
    let mut report = report;
    report.title = title.into();
    Ok(report)
}

fn simple<F>(id: usize, want: usize, base: u64, check: F) -> Result<CriterionReport>
where
    F: Fn(u64) -> Result<Sample> + Sync,
{
    let mut rep = CriterionReport::new(id, TITLES[id - 1], want);
    sweep(&mut rep, base, want, 1, |r| counted(r, want), check)?;
    Ok(rep)
}

/// Complete graphs, k = 2, uniform-full noise: every trial must converge
/// and a median is reported for every n.
fn convergence(cfg: &VerifyConfig, csv_dir: Option<&PathBuf>) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(10, TITLES[9], cfg.convergence_n.len() * cfg.convergence_trials);
    if cfg.convergence_n.is_empty() || cfg.convergence_trials == 0 {
        return Ok(rep);
    }
    let start = Instant::now();
    let config = ExperimentConfig {
        topology: Topology::Complete,
        n: cfg.convergence_n.clone(),
        k: vec![2],
        spec: SpecFile { phi_num: 1, phi_den: 2, distribution: "uniform_full".into(), grid_log2: 30 },
        rules: vec!["random".into()],
        trials: cfg.convergence_trials,
        base_seed: cfg.seed,
        step_cap: cfg.convergence_cap,
    };
    let rows = run_experiment(&config, cfg.workers)?;
    let summary = summarize(&rows);
    for row in &rows {
        let mut s = Sample::used();
        s.check(row.converged && row.steps < cfg.convergence_cap, "converges_within_cap", row.seed, || {
            format!("n={} stopped after {} steps", row.n, row.steps)
        });
        rep.absorb(s);
    }
    let reported: Vec<usize> = summary.iter().map(|s| s.n).collect();
    let mut s = Sample::default();
    s.check(reported == cfg.convergence_n && summary.iter().all(|c| c.median_steps.is_finite()), "median_reported_per_n", cfg.seed, || {
        format!("summary covers {reported:?}")
    });
    rep.absorb(s);
    for c in &summary {
        rep.notes.push(format!("n={:>2}: median {} steps, max {}, {}/{} converged", c.n, c.median_steps, c.max_steps, c.converged, c.trials));
    }
    if let Some(dir) = csv_dir {
        std::fs::create_dir_all(dir)?;
        let trials = dir.join("convergence_trials.csv");
        let medians = dir.join("convergence_medians.csv");
        write_csv(std::fs::File::create(&trials)?, &config, &rows)?;
        write_summary_csv(std::fs::File::create(&medians)?, &config, &summary)?;
        rep.notes.push(format!("wrote {} and {}", trials.display(), medians.display()));
    }
    rep.elapsed = start.elapsed();
    Ok(rep)
}

pub fn verify_suite(cfg: &VerifyConfig, csv_dir: Option<&PathBuf>) -> Result<VerifyReport> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let criteria = pool.install(|| (1..=10).map(|id| verify_criterion(id, cfg, csv_dir)).collect::<Result<Vec<_>>>())?;
    Ok(VerifyReport { criteria })
}

/// Checks a stored reduction: the weights are rebuilt from the stored game
/// and randomness, then the stored cut instance is checked against them.
pub fn verify_artifacts_file(file: &ArtifactsFile) -> Result<CriterionReport> {
    let start = Instant::now();
    let art = file.rebuild()?;
    let stored = file.instance.to_instance()?;
    let mut rep = CriterionReport::new(6, "stored reduction", 1);
    let sample = match art.kind {
        nashlab_core::reduction::ReductionKind::KTo2Flip => check_k_flip_artifacts(&art, &stored, 0)?,
        nashlab_core::reduction::ReductionKind::TwoTo1Flip => {
            let mut s = Sample::used();
            s.check(stored == art.instance, "weights_match_rebuild", 0, || "stored weights differ".into());
            s
        }
    };
    rep.absorb(sample);
    rep.elapsed = start.elapsed();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nashlab_core::rational::rat;

    #[test]
    fn empty_config_is_vacuous() {
        let cfg: VerifyConfig = serde_json::from_str("{}").unwrap();
        let report = verify_suite(&cfg, None).unwrap();
        assert_eq!(report.checks_run(), 0);
        assert!(report.vacuous());
        assert!(report.passed());
        assert!(report.render().contains("VACUOUS"));
    }

    #[test]
    fn small_suite_passes_where_expected() {
        let cfg = VerifyConfig {
            seed: 3,
            potential_triples: 20,
            transformation_traces: 10,
            oracle_instances: 10,
            critical_traces: 3,
            rank_ranges: 5,
            binary_instances: 5,
            embedding_graphs: 5,
            congestion_deviations: 20,
            congestion_moves: 10,
            congestion_trials: 5,
            convergence_n: vec![4],
            convergence_trials: 3,
            convergence_cap: 100_000,
            ..Default::default()
        };
        let report = verify_suite(&cfg, None).unwrap();
        for c in &report.criteria {
            assert!(c.passed() || c.id == 6, "{}", report.render());
        }
        assert!(!report.vacuous());
    }

    #[test]
    fn corrupted_weight_gives_witness() {
        let mut r = params(9);
        let game = normalized_game(&mut r, 3, 2, GameGraph::complete(3, 2), 9).unwrap();
        let aux = AuxRandomness::sample(3, 2, 1 << 12, 9).unwrap();
        let art = reduce_k_to_2flip(&game, &aux).unwrap();
        let (a, b, w) = art.instance.edges()[3];
        let bad = art.instance.with_weight(a, b, w + rat(1, 3)).unwrap();
        let sample = check_k_flip_artifacts(&art, &bad, 9).unwrap();
        let f = sample.failures.iter().find(|f| f.invariant == "value_identity").expect("identity must break");
        assert!(f.detail.contains("witness"));

        let mut file = ArtifactsFile::from_artifacts(&art, None, None);
        file.instance = crate::formats::CutFile::from_instance(&bad);
        let rep = verify_artifacts_file(&file).unwrap();
        assert!(rep.failing_invariants().contains(&"value_identity".to_string()));
    }

    #[test]
    fn longest_path_is_improving_and_maximal_on_tiny_game() {
        let game = nashlab_core::game::single_edge(2, nashlab_core::game::anti_diagonal()).unwrap();
        let (start, moves) = longest_improving_moves(&game);
        // the diagonal profiles have potential 0 and one move reaches 1
        assert_eq!(moves.len(), 1);
        assert_eq!(game.potential(&start).unwrap(), int(0));
    }

    #[test]
    fn mod_p_rank_matches_exact_on_traces() {
        for seed in 0..10 {
            let mut r = params(seed);
            let (game, trace) = long_trace(seed, &mut r, &[(3, 2), (4, 2)]).unwrap();
            let set = transformation_set(&game, &trace, 0..trace.len()).unwrap();
            assert_eq!(rank_mod_p(&set), nashlab_core::rank::exact_rank(&set));
        }
    }

    #[test]
    fn replay_reproduces_samples() {
        let seed = instance_seed(1, 7, 4);
        let a = replay(7, seed).unwrap();
        let b = replay(7, seed).unwrap();
        assert_eq!(a.checks, b.checks);
        assert_eq!(a.tallies, b.tallies);
        assert!(replay(10, seed).is_err());
    }
}
