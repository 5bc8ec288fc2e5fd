//! Transformation vectors of better-response sequences and the combinatorial
//! structure used to lower-bound their rank.
//!
//! All functions take a trace and a half-open move range `begin..end`. The
//! reference profile of a range is the profile in force just before its
//! first move; a *return move* is a move `(u, ref_u)` back to that profile's
//! strategy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::dynamics::BrTrace;
use crate::error::{Error, Result};
use crate::game::{GameInstance, Move};
use crate::rank::{exact_rank, IntVector};
use crate::rational::Rational;

/// Payoff-entry index `((u, i), (v, j))` with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryKey {
    pub u: usize,
    pub i: usize,
    pub v: usize,
    pub j: usize,
}

impl EntryKey {
    pub fn new(a: usize, i: usize, b: usize, j: usize) -> Self {
        if a < b {
            EntryKey { u: a, i, v: b, j }
        } else {
            EntryKey { u: b, i: j, v: a, j: i }
        }
    }

    pub fn involves(&self, player: usize) -> bool {
        self.u == player || self.v == player
    }
}

pub type TransformationVector = IntVector<EntryKey>;

fn check_range(trace: &BrTrace, range: &Range<usize>) -> Result<()> {
    if range.start > range.end || range.end > trace.len() {
        return Err(Error::RangeOutOfBounds {
            begin: range.start,
            end: range.end,
            len: trace.len(),
        });
    }
    Ok(())
}

/// `+1` on every entry the move adds to the potential, `-1` on every entry it
/// removes; only edges at the mover are touched.
pub fn transformation_vector(game: &GameInstance, before: &[usize], after: &[usize], mover: usize) -> TransformationVector {
    let mut out = TransformationVector::new();
    for &idx in game.incident(mover) {
        let e = &game.edges()[idx];
        out.add(EntryKey { u: e.u, i: after[e.u], v: e.v, j: after[e.v] }, 1);
        out.add(EntryKey { u: e.u, i: before[e.u], v: e.v, j: before[e.v] }, -1);
    }
    out
}

pub fn transformation_set(game: &GameInstance, trace: &BrTrace, range: Range<usize>) -> Result<Vec<TransformationVector>> {
    check_range(trace, &range)?;
    Ok(range
        .map(|t| transformation_vector(game, &trace.profiles[t], &trace.profiles[t + 1], trace.moves[t].player))
        .collect())
}

/// Payoff value at `key`; zero if the pair is not a game edge.
pub fn entry_value(game: &GameInstance, key: &EntryKey) -> Rational {
    game.entry_between(key.u, key.i, key.v, key.j)
        .copied()
        .unwrap_or_default()
}

/// `<L, A>`.
pub fn inner_product(game: &GameInstance, vector: &TransformationVector) -> Rational {
    vector.dot(|key| entry_value(game, key))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SequenceStats {
    /// Active players.
    pub p: usize,
    /// Non-repeating players.
    pub p1: usize,
    /// Repeating players.
    pub p2: usize,
    /// Distinct (player, strategy) pairs.
    pub d: usize,
    /// Distinct players making a return move.
    pub q0: usize,
    /// Moves made by non-repeating players.
    pub d1: usize,
    pub length: usize,
    /// Moves that repeat an earlier pair of the range or return to the reference strategy.
    pub repeat_moves: usize,
    pub log_repeating: bool,
}

impl SequenceStats {
    /// `l < 2(d - q0)`: the range is too diverse to be critical.
    pub fn is_diverse(&self) -> bool {
        self.length < 2 * (self.d - self.q0)
    }

    pub fn excess(&self) -> usize {
        self.d - self.q0
    }

    /// The inequality chain `p = p1 + p2`, `p <= d <= k p`, `q0 <= p2`,
    /// `2 q0 <= d`, `p1 <= d1 <= k p1`.
    pub fn chain_holds(&self, k: usize) -> bool {
        self.p == self.p1 + self.p2
            && self.p <= self.d
            && self.d <= k * self.p
            && self.q0 <= self.p2
            && 2 * self.q0 <= self.d
            && self.p1 <= self.d1
            && self.d1 <= k * self.p1
    }
}

/// Stats plus the set of repeating players.
fn classes(trace: &BrTrace, range: &Range<usize>) -> (SequenceStats, BTreeSet<usize>) {
    let reference = &trace.profiles[range.start];
    let mut pairs = BTreeSet::new();
    let mut active = BTreeSet::new();
    let mut repeating = BTreeSet::new();
    let mut returners = BTreeSet::new();
    let mut repeat_moves = 0;
    for t in range.clone() {
        let Move { player, strategy } = trace.moves[t];
        active.insert(player);
        let fresh = pairs.insert((player, strategy));
        let is_return = strategy == reference[player];
        if is_return {
            returners.insert(player);
        }
        if !fresh || is_return {
            repeating.insert(player);
            repeat_moves += 1;
        }
    }
    let d1 = range
        .clone()
        .filter(|&t| !repeating.contains(&trace.moves[t].player))
        .count();
    let p = active.len();
    let p2 = repeating.len();
    let stats = SequenceStats {
        p,
        p1: p - p2,
        p2,
        d: pairs.len(),
        q0: returners.len(),
        d1,
        length: range.len(),
        repeat_moves,
        log_repeating: false,
    };
    (stats, repeating)
}

/// Whether `repeat_moves >= length / (5 log2(n k))`.
pub fn is_log_repeating(repeat_moves: usize, length: usize, n: usize, k: usize) -> bool {
    let log = libm::log2((n * k) as f64);
    5.0 * repeat_moves as f64 * log >= length as f64
}

pub fn classify(game: &GameInstance, trace: &BrTrace, range: Range<usize>) -> Result<SequenceStats> {
    check_range(trace, &range)?;
    let (mut stats, _) = classes(trace, &range);
    stats.log_repeating = is_log_repeating(stats.repeat_moves, stats.length, game.n(), game.k());
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatedBlock {
    /// Moves strictly between two consecutive non-repeating-player moves.
    pub range: Range<usize>,
    /// The non-repeating move just before the block (`None` for the first block).
    pub boundary: Option<Move>,
}

/// Splits the range at every move of a non-repeating player. With `m` such
/// moves there are `m + 1` blocks, some possibly empty.
pub fn separated_blocks(trace: &BrTrace, range: Range<usize>) -> Result<Vec<SeparatedBlock>> {
    check_range(trace, &range)?;
    let (_, repeating) = classes(trace, &range);
    let separators: Vec<usize> = range
        .clone()
        .filter(|&t| !repeating.contains(&trace.moves[t].player))
        .collect();
    let mut blocks = Vec::with_capacity(separators.len() + 1);
    let mut start = range.start;
    let mut boundary = None;
    for &t in &separators {
        blocks.push(SeparatedBlock { range: start..t, boundary });
        start = t + 1;
        boundary = Some(trace.moves[t]);
    }
    blocks.push(SeparatedBlock { range: start..range.end, boundary });
    Ok(blocks)
}

/// `l` and `d - q0` for every prefix of the range starting at `start`
/// (relative to the profile at `start`), as `(length, excess)` pairs.
fn prefix_excess(trace: &BrTrace, start: usize, end: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    let reference = &trace.profiles[start];
    let mut pairs = BTreeSet::new();
    let mut returners = BTreeSet::new();
    (start..end).map(move |t| {
        let mv = trace.moves[t];
        pairs.insert((mv.player, mv.strategy));
        if mv.strategy == reference[mv.player] {
            returners.insert(mv.player);
        }
        (t + 1 - start, pairs.len() - returners.len())
    })
}

/// Leftmost inclusion-minimal subrange with `l >= 2(d - q0)`. Such a range
/// always satisfies `l = 2(d - q0)` and every proper contiguous subrange of it
/// is diverse.
pub fn find_critical_subsequence(trace: &BrTrace, range: Range<usize>) -> Result<Range<usize>> {
    check_range(trace, &range)?;
    // end[a] = smallest end such that start..end is non-diverse
    let ends: Vec<Option<usize>> = range
        .clone()
        .map(|a| {
            prefix_excess(trace, a, range.end)
                .find(|&(len, excess)| len >= 2 * excess)
                .map(|(len, _)| a + len)
        })
        .collect();
    for (offset, end) in ends.iter().enumerate() {
        let Some(end) = *end else { continue };
        let start = range.start + offset;
        // a later start whose minimal end fits inside start..end gives a strictly smaller range
        let contains_smaller = (start + 1..end).any(|a| matches!(ends[a - range.start], Some(e) if e <= end));
        if !contains_smaller {
            return Ok(start..end);
        }
    }
    Err(Error::NoCriticalSubsequence)
}

/// Checks criticality by brute force over all contiguous subranges.
pub fn is_critical(game: &GameInstance, trace: &BrTrace, block: Range<usize>) -> Result<bool> {
    let whole = classify(game, trace, block.clone())?;
    if whole.is_diverse() {
        return Ok(false);
    }
    for a in block.clone() {
        for b in (a + 1)..=block.end {
            if b - a == block.len() {
                continue;
            }
            if !classify(game, trace, a..b)?.is_diverse() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Sum of a repeating player's transformation vectors between two
/// occurrences of the same pair. For each repeating player the first pair to
/// repeat is used; an initial strategy counts as occurring at the range start.
pub fn cyclic_sums(game: &GameInstance, trace: &BrTrace, range: Range<usize>) -> Result<Vec<(usize, TransformationVector)>> {
    Ok(cyclic_windows(trace, range)?
        .into_iter()
        .map(|(player, steps)| {
            let mut v = TransformationVector::new();
            for t in steps {
                v.add_vector(&transformation_vector(
                    game,
                    &trace.profiles[t],
                    &trace.profiles[t + 1],
                    player,
                ));
            }
            (player, v)
        })
        .collect())
}

/// For each repeating player, the move indices summed into its cyclic sum.
pub fn cyclic_windows(trace: &BrTrace, range: Range<usize>) -> Result<Vec<(usize, Vec<usize>)>> {
    check_range(trace, &range)?;
    let reference = &trace.profiles[range.start];
    // player -> (strategy -> index of u's move list where it last occurred; usize::MAX = range start)
    let mut seen: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut moves_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut done: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for t in range.clone() {
        let Move { player, strategy } = trace.moves[t];
        if done.contains_key(&player) {
            continue;
        }
        let history = moves_of.entry(player).or_default();
        history.push(t);
        let strategies = seen
            .entry(player)
            .or_insert_with(|| BTreeMap::from([(reference[player], usize::MAX)]));
        let here = history.len() - 1;
        if let Some(&first) = strategies.get(&strategy) {
            let from = if first == usize::MAX { 0 } else { first + 1 };
            done.insert(player, history[from..=here].to_vec());
        } else {
            strategies.insert(strategy, here);
        }
    }
    Ok(done.into_iter().collect())
}

/// True if no vector has a nonzero entry on a row touching a player that
/// never moves in the range.
pub fn inactive_rows_vanish(game: &GameInstance, trace: &BrTrace, range: Range<usize>, vectors: &[TransformationVector]) -> bool {
    let active: BTreeSet<usize> = range.map(|t| trace.moves[t].player).collect();
    let inactive: Vec<usize> = (0..game.n()).filter(|u| !active.contains(u)).collect();
    vectors
        .iter()
        .all(|v| v.iter().all(|(key, _)| inactive.iter().all(|&w| !key.involves(w))))
}

pub fn is_complete_graph(game: &GameInstance) -> bool {
    let n = game.n();
    game.edges().len() == n * n.saturating_sub(1) / 2
}

/// Rank lower bounds evaluated on a single range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankReport {
    pub stats: SequenceStats,
    pub rank: usize,
    pub complete_graph: bool,
    pub has_inactive: bool,
    /// `d1 + sum over separated blocks of (d - q0)`; present when an inactive player exists.
    pub separated_bound: Option<usize>,
    /// `ceil((1 - 1/n)(d - q0))`; present when every player is active.
    pub all_active_bound: Option<usize>,
    pub cyclic_count: usize,
    pub cyclic_rank: usize,
    /// `ceil(p2 / 2)`.
    pub cyclic_bound: usize,
    pub cyclic_nonzero: bool,
    pub cyclic_inactive_zero: bool,
    /// `<V(u), A>` equals the sum of the deltas it aggregates.
    pub cyclic_inner_products: bool,
}

impl RankReport {
    pub fn separated_ok(&self) -> Option<bool> {
        self.separated_bound.map(|b| self.rank >= b)
    }

    pub fn all_active_ok(&self) -> Option<bool> {
        self.all_active_bound.map(|b| self.rank >= b)
    }

    pub fn cyclic_ok(&self) -> bool {
        self.cyclic_rank >= self.cyclic_bound
    }

    pub fn all_ok(&self) -> bool {
        self.separated_ok().unwrap_or(true)
            && self.all_active_ok().unwrap_or(true)
            && self.cyclic_ok()
            && self.cyclic_nonzero
            && self.cyclic_inactive_zero
            && self.cyclic_inner_products
    }
}

pub fn rank_report(game: &GameInstance, trace: &BrTrace, range: Range<usize>) -> Result<RankReport> {
    let stats = classify(game, trace, range.clone())?;
    let set = transformation_set(game, trace, range.clone())?;
    let rank = exact_rank(&set);
    let n = game.n();
    let has_inactive = stats.p < n;
    let separated_bound = if has_inactive {
        let mut bound = stats.d1;
        for block in separated_blocks(trace, range.clone())? {
            let s = classify(game, trace, block.range)?;
            bound += s.excess();
        }
        Some(bound)
    } else {
        None
    };
    let all_active_bound = (!has_inactive && n > 0).then(|| ((n - 1) * stats.excess()).div_ceil(n));
    let windows = cyclic_windows(trace, range.clone())?;
    let sums = cyclic_sums(game, trace, range.clone())?;
    let vectors: Vec<TransformationVector> = sums.iter().map(|(_, v)| v.clone()).collect();
    let cyclic_inner_products = windows.iter().zip(&sums).all(|((_, steps), (_, v))| {
        let total = steps.iter().fold(Rational::default(), |acc, &t| acc + trace.deltas[t]);
        inner_product(game, v) == total
    });
    Ok(RankReport {
        stats,
        rank,
        complete_graph: is_complete_graph(game),
        has_inactive,
        separated_bound,
        all_active_bound,
        cyclic_count: vectors.len(),
        cyclic_rank: exact_rank(&vectors),
        cyclic_bound: stats.p2.div_ceil(2),
        cyclic_nonzero: vectors.iter().all(|v| !v.is_zero()),
        cyclic_inactive_zero: inactive_rows_vanish(game, trace, range, &vectors),
        cyclic_inner_products,
    })
}

/// Builds a trace from a move list without requiring improvement; used to
/// exercise the purely combinatorial parts on hypothetical sequences.
pub fn unchecked_trace(game: &GameInstance, initial: &crate::game::StrategyProfile, moves: &[Move]) -> BrTrace {
    let mut profiles = vec![initial.clone()];
    let mut potentials = vec![game.potential_unchecked(initial)];
    let mut deltas = Vec::new();
    for &mv in moves {
        let next = profiles.last().unwrap().with_move(mv);
        let pot = game.potential_unchecked(&next);
        deltas.push(pot - potentials.last().unwrap());
        potentials.push(pot);
        profiles.push(next);
    }
    BrTrace {
        initial: initial.clone(),
        moves: moves.to_vec(),
        profiles,
        deltas,
        potentials,
        outcome: crate::dynamics::Outcome::ScriptExhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_bra, PivotRule};
    use crate::game::{anti_diagonal, single_edge, StrategyProfile};
    use crate::rank::exact_rank;
    use crate::smoothing::{sample_instance, GameGraph, PerturbationSpec};

    fn g1() -> GameInstance {
        single_edge(2, anti_diagonal()).unwrap()
    }

    fn seq(game: &GameInstance, start: &[usize], moves: &[(usize, usize)]) -> BrTrace {
        let moves: Vec<Move> = moves.iter().map(|&(p, s)| Move::new(p, s)).collect();
        unchecked_trace(game, &StrategyProfile(start.to_vec()), &moves)
    }

    #[test]
    fn single_move_vector() {
        let t = seq(&g1(), &[1, 1], &[(0, 2)]);
        let set = transformation_set(&g1(), &t, 0..1).unwrap();
        assert_eq!(set.len(), 1);
        let v = &set[0];
        assert_eq!(v.get(&EntryKey::new(0, 2, 1, 1)), 1);
        assert_eq!(v.get(&EntryKey::new(0, 1, 1, 1)), -1);
        assert_eq!(v.nonzero_count(), 2);
        assert_eq!(exact_rank(&set), 1);
        assert!(transformation_set(&g1(), &t, 0..0).unwrap().is_empty());
        assert!(transformation_set(&g1(), &t, 0..2).is_err());
    }

    #[test]
    fn classify_examples() {
        let g = g1();
        let s = classify(&g, &seq(&g, &[1, 1], &[(0, 2)]), 0..1).unwrap();
        assert_eq!((s.p, s.p1, s.p2, s.d, s.q0, s.d1), (1, 1, 0, 1, 0, 1));
        let s = classify(&g, &seq(&g, &[1, 1], &[(0, 2), (0, 1)]), 0..2).unwrap();
        assert_eq!((s.p, s.p1, s.p2, s.d, s.q0, s.d1), (1, 0, 1, 2, 1, 0));
        let s = classify(&g, &seq(&g, &[1, 1], &[(0, 2), (1, 2)]), 0..2).unwrap();
        assert_eq!((s.p, s.p1, s.p2, s.d, s.q0, s.d1), (2, 2, 0, 2, 0, 2));
    }

    #[test]
    fn log_repeating_threshold() {
        // n k = 4 -> threshold l / 10
        assert!(is_log_repeating(1, 10, 2, 2));
        assert!(!is_log_repeating(1, 11, 2, 2));
        let g = g1();
        let s = classify(&g, &seq(&g, &[1, 1], &[(0, 2), (0, 1)]), 0..2).unwrap();
        assert!(s.log_repeating);
    }

    #[test]
    fn separated_block_examples() {
        let g = GameInstance::new(3, 2, alloc::vec![(0, 1, anti_diagonal()), (1, 2, anti_diagonal()), (0, 2, anti_diagonal())]).unwrap();
        let all_fresh = seq(&g, &[1, 1, 1], &[(0, 2), (1, 2), (2, 2)]);
        let blocks = separated_blocks(&all_fresh, 0..3).unwrap();
        assert_eq!(blocks.len(), 4);
        assert!(blocks.iter().all(|b| b.range.is_empty()));

        let none_fresh = seq(&g, &[1, 1, 1], &[(0, 2), (0, 1)]);
        assert_eq!(
            separated_blocks(&none_fresh, 0..2).unwrap(),
            alloc::vec![SeparatedBlock { range: 0..2, boundary: None }]
        );

        let mixed = seq(&g, &[1, 1, 1], &[(0, 2), (2, 2), (2, 1)]);
        assert_eq!(
            separated_blocks(&mixed, 0..3).unwrap(),
            alloc::vec![
                SeparatedBlock { range: 0..0, boundary: None },
                SeparatedBlock { range: 1..3, boundary: Some(Move::new(0, 2)) },
            ]
        );
    }

    #[test]
    fn critical_examples() {
        let g = g1();
        let t = seq(&g, &[1, 1], &[(0, 2), (0, 1)]);
        assert_eq!(find_critical_subsequence(&t, 0..2).unwrap(), 0..2);
        assert!(is_critical(&g, &t, 0..2).unwrap());
        let single = seq(&g, &[1, 1], &[(0, 2)]);
        assert_eq!(find_critical_subsequence(&single, 0..1), Err(Error::NoCriticalSubsequence));
    }

    #[test]
    fn round_trip_cyclic_sum_is_zero() {
        let g = g1();
        let t = seq(&g, &[1, 1], &[(0, 2), (0, 1)]);
        let sums = cyclic_sums(&g, &t, 0..2).unwrap();
        assert_eq!(sums.len(), 1);
        assert_eq!(sums[0].0, 0);
        assert!(sums[0].1.is_zero());
    }

    #[test]
    fn cyclic_window_uses_first_completed_repeat() {
        let g = GameInstance::new(3, 3, alloc::vec![]).unwrap();
        // player 0: 1 -> 2 -> 3 -> 2 (repeat of 2 at its third move)
        let t = seq(&g, &[1, 1, 1], &[(0, 2), (1, 2), (0, 3), (0, 2), (0, 1)]);
        let w = cyclic_windows(&t, 0..5).unwrap();
        assert_eq!(w, alloc::vec![(0, alloc::vec![2, 3])]);
    }

    fn sampled_traces() -> Vec<(GameInstance, BrTrace)> {
        let spec = PerturbationSpec::uniform_full(30);
        let mut out = Vec::new();
        for seed in 0..60u64 {
            let n = 3 + (seed % 4) as usize;
            let k = 2 + (seed % 3) as usize;
            let graph = if seed % 2 == 0 {
                GameGraph::complete(n, k)
            } else {
                GameGraph::erdos_renyi(n, k, 0.6, seed)
            };
            let game = sample_instance(&graph, &spec, seed).unwrap();
            let t = run_bra(&game, &StrategyProfile::uniform(n, 1), &PivotRule::RandomImproving, 10_000, seed).unwrap();
            out.push((game, t));
        }
        out
    }

    #[test]
    fn inner_products_match_deltas() {
        for (game, t) in sampled_traces() {
            let set = transformation_set(&game, &t, 0..t.len()).unwrap();
            for (s, v) in set.iter().enumerate() {
                assert_eq!(inner_product(&game, v), t.deltas[s]);
                assert_eq!(v.nonzero_count(), 2 * game.degree(t.moves[s].player));
            }
        }
    }

    #[test]
    fn stats_chain_and_critical_on_all_ranges() {
        for (game, t) in sampled_traces() {
            for a in 0..t.len() {
                for b in (a + 1)..=t.len() {
                    let s = classify(&game, &t, a..b).unwrap();
                    assert!(s.chain_holds(game.k()), "{s:?}");
                    if let Ok(block) = find_critical_subsequence(&t, a..b) {
                        let bs = classify(&game, &t, block.clone()).unwrap();
                        assert_eq!(bs.length, 2 * bs.excess());
                        assert!(is_critical(&game, &t, block).unwrap());
                    } else {
                        assert!(s.is_diverse());
                    }
                }
            }
        }
    }

    #[test]
    fn rank_bounds_on_complete_graphs() {
        for (game, t) in sampled_traces() {
            let r = rank_report(&game, &t, 0..t.len()).unwrap();
            assert!(r.cyclic_ok() && r.cyclic_nonzero && r.cyclic_inactive_zero && r.cyclic_inner_products, "{r:?}");
            if r.complete_graph {
                assert!(r.all_ok(), "{r:?}");
            }
        }
    }
}
