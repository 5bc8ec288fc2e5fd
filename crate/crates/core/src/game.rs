//! Network coordination games with exact payoffs.
//!
//! Each edge `{u, v}` (stored with `u < v`) carries one shared matrix:
//! `A_uv(i, j)` is what both endpoints receive when the lower-id player plays
//! `i` and the higher-id player plays `j`. The potential is the sum of the
//! selected entries over all edges.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, RangeInclusive};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{int, Rational};

pub const DEFAULT_ORACLE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyProfile(pub Vec<usize>);

impl StrategyProfile {
    pub fn new(strategies: Vec<usize>) -> Self {
        StrategyProfile(strategies)
    }

    pub fn uniform(n: usize, strategy: usize) -> Self {
        StrategyProfile(vec![strategy; n])
    }

    pub fn with_move(&self, mv: Move) -> Self {
        let mut next = self.clone();
        next.0[mv.player] = mv.strategy;
        next
    }
}

impl Deref for StrategyProfile {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for StrategyProfile {
    fn from(v: Vec<usize>) -> Self {
        StrategyProfile(v)
    }
}

/// Player `player` switches to `strategy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub player: usize,
    pub strategy: usize,
}

impl Move {
    pub fn new(player: usize, strategy: usize) -> Self {
        Move { player, strategy }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    matrix: Vec<Rational>,
}

impl Edge {
    pub fn other(&self, player: usize) -> usize {
        if player == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameInstance {
    n: usize,
    k: usize,
    base: usize,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
    range: (Rational, Rational),
}

/// Options for less common instances: a strategy set starting at 0 (the
/// dummy strategy used by the cut reduction) or a non-default payoff range.
#[derive(Debug, Clone)]
pub struct GameOptions {
    pub base: usize,
    pub range: (Rational, Rational),
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions {
            base: 1,
            range: (-Rational::one(), Rational::one()),
        }
    }
}

impl GameInstance {
    /// Builds a game with strategies `1..=k` and payoffs in `[-1, 1]`.
    ///
    /// Matrices are given row-major with rows indexed by the strategy of the
    /// first listed endpoint; edges listed as `(v, u)` with `v > u` are
    /// transposed into canonical orientation.
    pub fn new(n: usize, k: usize, edges: Vec<(usize, usize, Vec<Vec<Rational>>)>) -> Result<Self> {
        Self::with_options(n, k, edges, GameOptions::default())
    }

    pub fn with_options(
        n: usize,
        k: usize,
        edges: Vec<(usize, usize, Vec<Vec<Rational>>)>,
        options: GameOptions,
    ) -> Result<Self> {
        if options.base > 1 || k < options.base.max(1) {
            return Err(Error::invalid("strategy range must be 1..=k or 0..=k with k >= 1"));
        }
        if options.range.0 > options.range.1 {
            return Err(Error::invalid("payoff range is empty"));
        }
        let side = k + 1 - options.base;
        let mut canonical = Vec::with_capacity(edges.len());
        for (a, b, rows) in edges {
            if a >= n || b >= n {
                return Err(Error::PlayerOutOfRange { player: a.max(b), n });
            }
            if a == b {
                return Err(Error::invalid("self-loop in game graph"));
            }
            if rows.len() != side || rows.iter().any(|r| r.len() != side) {
                return Err(Error::invalid("payoff matrix has the wrong shape"));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            let mut matrix = Vec::with_capacity(side * side);
            for i in 0..side {
                for j in 0..side {
                    let value = if a < b { rows[i][j] } else { rows[j][i] };
                    if value < options.range.0 || value > options.range.1 {
                        return Err(Error::PayoffOutOfRange { u, v, value });
                    }
                    matrix.push(value);
                }
            }
            canonical.push(Edge { u, v, matrix });
        }
        canonical.sort_by_key(|e| (e.u, e.v));
        if canonical.windows(2).any(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::invalid("duplicate edge in game graph"));
        }
        let mut incident = vec![Vec::new(); n];
        for (idx, e) in canonical.iter().enumerate() {
            incident[e.u].push(idx);
            incident[e.v].push(idx);
        }
        Ok(GameInstance {
            n,
            k,
            base: options.base,
            edges: canonical,
            incident,
            range: options.range,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Lowest strategy id (1, or 0 when a dummy strategy is present).
    pub fn base(&self) -> usize {
        self.base
    }

    pub fn strategies(&self) -> RangeInclusive<usize> {
        self.base..=self.k
    }

    pub fn side(&self) -> usize {
        self.k + 1 - self.base
    }

    pub fn range(&self) -> &(Rational, Rational) {
        &self.range
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn incident(&self, player: usize) -> &[usize] {
        &self.incident[player]
    }

    pub fn degree(&self, player: usize) -> usize {
        self.incident[player].len()
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by_key(&key, |e| (e.u, e.v)).ok()
    }

    /// Entry of edge `edge` when its lower endpoint plays `i` and its higher
    /// endpoint plays `j`.
    #[inline]
    pub fn entry(&self, edge: usize, i: usize, j: usize) -> &Rational {
        let side = self.side();
        &self.edges[edge].matrix[(i - self.base) * side + (j - self.base)]
    }

    /// Payoff on the edge between `a` and `b` when `a` plays `i` and `b` plays `j`.
    pub fn entry_between(&self, a: usize, i: usize, b: usize, j: usize) -> Option<&Rational> {
        let edge = self.edge_index(a, b)?;
        Some(if a < b {
            self.entry(edge, i, j)
        } else {
            self.entry(edge, j, i)
        })
    }

    #[inline]
    fn entry_for(&self, edge: usize, player: usize, own: usize, other: usize) -> &Rational {
        if self.edges[edge].u == player {
            self.entry(edge, own, other)
        } else {
            self.entry(edge, other, own)
        }
    }

    /// Applies `f` to every payoff entry, producing a game with range `range`.
    pub fn map_payoffs<F: Fn(&Rational) -> Rational>(
        &self,
        range: (Rational, Rational),
        f: F,
    ) -> Result<Self> {
        let side = self.side();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let rows = (0..side)
                    .map(|i| (0..side).map(|j| f(&e.matrix[i * side + j])).collect())
                    .collect();
                (e.u, e.v, rows)
            })
            .collect();
        Self::with_options(self.n, self.k, edges, GameOptions { base: self.base, range })
    }

    /// Rows of the matrix of edge `edge` (lower endpoint indexes rows).
    pub fn matrix_rows(&self, edge: usize) -> Vec<Vec<Rational>> {
        let side = self.side();
        let m = &self.edges[edge].matrix;
        (0..side).map(|i| m[i * side..(i + 1) * side].to_vec()).collect()
    }

    pub fn validate_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: profile.len(),
            });
        }
        for (player, &s) in profile.iter().enumerate() {
            self.check_strategy(player, s)?;
        }
        Ok(())
    }

    pub fn check_strategy(&self, player: usize, strategy: usize) -> Result<()> {
        if player >= self.n {
            return Err(Error::PlayerOutOfRange { player, n: self.n });
        }
        if !self.strategies().contains(&strategy) {
            return Err(Error::StrategyOutOfRange {
                player,
                strategy,
                lo: self.base,
                hi: self.k,
            });
        }
        Ok(())
    }

    pub fn potential(&self, profile: &StrategyProfile) -> Result<Rational> {
        self.validate_profile(profile)?;
        Ok(self.potential_unchecked(profile))
    }

    pub(crate) fn potential_unchecked(&self, profile: &[usize]) -> Rational {
        self.edges
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (idx, e)| {
                acc + self.entry(idx, profile[e.u], profile[e.v])
            })
    }

    pub fn player_payoff(&self, profile: &StrategyProfile, player: usize) -> Result<Rational> {
        self.validate_profile(profile)?;
        if player >= self.n {
            return Err(Error::PlayerOutOfRange { player, n: self.n });
        }
        Ok(self.payoff_if(profile, player, profile[player]))
    }

    /// Payoff of `player` if it played `strategy` while everyone else keeps
    /// their strategy from `profile`.
    #[inline]
    pub(crate) fn payoff_if(&self, profile: &[usize], player: usize, strategy: usize) -> Rational {
        self.incident[player]
            .iter()
            .fold(Rational::zero(), |acc, &idx| {
                let other = profile[self.edges[idx].other(player)];
                acc + self.entry_for(idx, player, strategy, other)
            })
    }

    /// `payoff_u(i, sigma_{-u}) - payoff_u(sigma)`.
    #[inline]
    pub(crate) fn deviation_gain(&self, profile: &[usize], player: usize, strategy: usize) -> Rational {
        let current = profile[player];
        self.incident[player]
            .iter()
            .fold(Rational::zero(), |acc, &idx| {
                let other = profile[self.edges[idx].other(player)];
                acc + self.entry_for(idx, player, strategy, other)
                    - self.entry_for(idx, player, current, other)
            })
    }

    /// All strictly improving unilateral deviations with their gains, in
    /// lexicographic `(player, strategy)` order.
    pub fn improving_moves(&self, profile: &StrategyProfile) -> Result<Vec<(Move, Rational)>> {
        self.validate_profile(profile)?;
        Ok(self.improving_moves_unchecked(profile))
    }

    pub(crate) fn improving_moves_unchecked(&self, profile: &[usize]) -> Vec<(Move, Rational)> {
        let mut out = Vec::new();
        for player in 0..self.n {
            for strategy in self.strategies() {
                if strategy == profile[player] {
                    continue;
                }
                let gain = self.deviation_gain(profile, player, strategy);
                if gain > Rational::zero() {
                    out.push((Move { player, strategy }, gain));
                }
            }
        }
        out
    }

    pub fn is_pne(&self, profile: &StrategyProfile) -> Result<bool> {
        self.validate_profile(profile)?;
        Ok(self.is_pne_unchecked(profile))
    }

    pub(crate) fn is_pne_unchecked(&self, profile: &[usize]) -> bool {
        (0..self.n).all(|player| {
            self.strategies().all(|s| {
                s == profile[player] || self.deviation_gain(profile, player, s) <= Rational::zero()
            })
        })
    }

    pub fn profile_count(&self) -> u128 {
        (self.side() as u128).saturating_pow(self.n as u32)
    }

    /// Brute-force list of every pure Nash equilibrium, in lexicographic order.
    pub fn enumerate_pne(&self, cap: u128) -> Result<Vec<StrategyProfile>> {
        let profiles = self.profile_count();
        if profiles > cap {
            return Err(Error::CapExceeded { profiles, cap });
        }
        let mut out = Vec::new();
        for_each_profile(self.n, self.base, self.k, |p| {
            if self.is_pne_unchecked(p) {
                out.push(StrategyProfile(p.to_vec()));
            }
        });
        Ok(out)
    }
}

/// Visits every vector in `{lo..=hi}^n` in lexicographic order.
pub fn for_each_profile<F: FnMut(&[usize])>(n: usize, lo: usize, hi: usize, mut f: F) {
    let mut current = vec![lo; n];
    loop {
        f(&current);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if current[pos] < hi {
                current[pos] += 1;
                break;
            }
            current[pos] = lo;
        }
    }
}

/// 2-player game with one edge and the given square matrix.
pub fn single_edge(k: usize, rows: Vec<Vec<Rational>>) -> Result<GameInstance> {
    GameInstance::new(2, k, vec![(0, 1, rows)])
}

/// Anti-coordination matrix `[[0, 1], [1, 0]]`.
pub fn anti_diagonal() -> Vec<Vec<Rational>> {
    vec![vec![int(0), int(1)], vec![int(1), int(0)]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn g1() -> GameInstance {
        single_edge(2, anti_diagonal()).unwrap()
    }

    fn g2() -> GameInstance {
        GameInstance::new(3, 2, vec![(0, 1, anti_diagonal()), (1, 2, anti_diagonal())]).unwrap()
    }

    fn p(v: &[usize]) -> StrategyProfile {
        StrategyProfile(v.to_vec())
    }

    #[test]
    fn potential_examples() {
        assert_eq!(g1().potential(&p(&[1, 1])).unwrap(), int(0));
        assert_eq!(g1().potential(&p(&[1, 2])).unwrap(), int(1));
        assert_eq!(g2().potential(&p(&[1, 2, 1])).unwrap(), int(2));
    }

    #[test]
    fn potential_rejects_wrong_length() {
        assert!(matches!(
            g1().potential(&p(&[1])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            g1().potential(&p(&[1, 3])),
            Err(Error::StrategyOutOfRange { .. })
        ));
    }

    #[test]
    fn payoff_examples() {
        assert_eq!(g1().player_payoff(&p(&[1, 2]), 0).unwrap(), int(1));
        assert_eq!(g2().player_payoff(&p(&[1, 2, 1]), 1).unwrap(), int(2));
        let lonely = GameInstance::new(1, 3, vec![]).unwrap();
        assert_eq!(lonely.player_payoff(&p(&[2]), 0).unwrap(), int(0));
        assert!(matches!(
            g1().player_payoff(&p(&[1, 2]), 5),
            Err(Error::PlayerOutOfRange { .. })
        ));
    }

    #[test]
    fn improving_move_examples() {
        assert!(g1().improving_moves(&p(&[1, 2])).unwrap().is_empty());
        let moves = g1().improving_moves(&p(&[1, 1])).unwrap();
        assert_eq!(
            moves,
            vec![(Move::new(0, 2), int(1)), (Move::new(1, 2), int(1))]
        );
        let lonely = GameInstance::new(1, 2, vec![]).unwrap();
        assert!(lonely.improving_moves(&p(&[1])).unwrap().is_empty());
    }

    #[test]
    fn pne_examples() {
        assert!(g1().is_pne(&p(&[1, 2])).unwrap());
        assert!(!g1().is_pne(&p(&[1, 1])).unwrap());
        let empty = GameInstance::new(2, 2, vec![]).unwrap();
        assert!(empty.is_pne(&p(&[2, 1])).unwrap());
        assert_eq!(
            g1().enumerate_pne(DEFAULT_ORACLE_CAP).unwrap(),
            vec![p(&[1, 2]), p(&[2, 1])]
        );
        assert_eq!(empty.enumerate_pne(DEFAULT_ORACLE_CAP).unwrap().len(), 4);
        assert_eq!(
            g2().enumerate_pne(DEFAULT_ORACLE_CAP).unwrap(),
            vec![p(&[1, 2, 1]), p(&[2, 1, 2])]
        );
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let big = GameInstance::new(21, 2, vec![]).unwrap();
        assert!(matches!(
            big.enumerate_pne(DEFAULT_ORACLE_CAP),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn construction_errors() {
        assert!(GameInstance::new(2, 2, vec![(0, 0, anti_diagonal())]).is_err());
        assert!(GameInstance::new(2, 2, vec![(0, 1, anti_diagonal()), (1, 0, anti_diagonal())]).is_err());
        assert!(GameInstance::new(2, 2, vec![(0, 1, vec![vec![int(2), int(0)], vec![int(0), int(0)]])]).is_err());
        assert!(GameInstance::new(2, 3, vec![(0, 1, anti_diagonal())]).is_err());
    }

    #[test]
    fn reversed_edge_is_transposed() {
        let rows = vec![vec![int(0), rat(1, 2)], vec![int(-1), int(1)]];
        let g = GameInstance::new(2, 2, vec![(1, 0, rows)]).unwrap();
        // player 1 plays 1, player 0 plays 2 -> original rows[0][1]
        assert_eq!(g.entry_between(1, 1, 0, 2).unwrap(), &rat(1, 2));
        assert_eq!(g.entry(0, 2, 1), &rat(1, 2));
    }

    fn arb_game() -> impl Strategy<Value = (GameInstance, Vec<usize>, usize, usize)> {
        (2usize..=6, 1usize..=4).prop_flat_map(|(n, k)| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .collect();
            let m = pairs.len();
            (
                proptest::collection::vec(any::<bool>(), m),
                proptest::collection::vec(-8i128..=8, m * k * k),
                proptest::collection::vec(1usize..=k, n),
                0..n,
                1..=k,
            )
                .prop_map(move |(mask, vals, prof, u, s)| {
                    let edges = pairs
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask[*i])
                        .map(|(i, &(a, b))| {
                            let rows = (0..k)
                                .map(|r| (0..k).map(|c| rat(vals[i * k * k + r * k + c], 8)).collect())
                                .collect();
                            (a, b, rows)
                        })
                        .collect();
                    (GameInstance::new(n, k, edges).unwrap(), prof, u, s)
                })
        })
    }

    proptest! {
        #[test]
        fn potential_delta_equals_payoff_delta((game, prof, u, s) in arb_game()) {
            let before = StrategyProfile(prof);
            let after = before.with_move(Move::new(u, s));
            let dp = game.potential(&after).unwrap() - game.potential(&before).unwrap();
            let du = game.player_payoff(&after, u).unwrap() - game.player_payoff(&before, u).unwrap();
            prop_assert_eq!(dp, du);
        }

        #[test]
        fn improving_moves_raise_potential((game, prof, _u, _s) in arb_game()) {
            let sigma = StrategyProfile(prof);
            let base = game.potential(&sigma).unwrap();
            let moves = game.improving_moves(&sigma).unwrap();
            prop_assert_eq!(moves.is_empty(), game.is_pne(&sigma).unwrap());
            for (mv, delta) in moves {
                prop_assert!(delta > Rational::zero());
                prop_assert_eq!(game.potential(&sigma.with_move(mv)).unwrap() - base, delta);
            }
        }

        #[test]
        fn some_pne_always_exists((game, _p, _u, _s) in arb_game()) {
            prop_assert!(!game.enumerate_pne(DEFAULT_ORACLE_CAP).unwrap().is_empty());
        }

        #[test]
        fn potential_invariant_under_relabeling((game, prof, _u, _s) in arb_game(), shift in 0usize..6) {
            let n = game.n();
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let edges = (0..game.edges().len())
                .map(|idx| {
                    let e = &game.edges()[idx];
                    (perm[e.u], perm[e.v], game.matrix_rows(idx))
                })
                .collect();
            let relabeled = GameInstance::new(n, game.k(), edges).unwrap();
            let mut moved = vec![0; n];
            for (i, &s) in prof.iter().enumerate() {
                moved[perm[i]] = s;
            }
            prop_assert_eq!(
                game.potential(&StrategyProfile(prof)).unwrap(),
                relabeled.potential(&StrategyProfile(moved)).unwrap()
            );
        }
    }
}
