//! (k, l)-congestion games: players pick resource subsets from explicit
//! strategy lists and pay the cumulative cost of each resource at its load.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::dynamics::{Outcome, PivotRule, Selector};
use crate::error::{Error, Result};
use crate::game::Move;
use crate::rank::IntVector;
use crate::rational::{rat, Rational};
use crate::rng::{self, TAG_CONGESTION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongestionGame {
    resources: usize,
    k: usize,
    ell: usize,
    strategies: Vec<Vec<Vec<usize>>>,
    differentials: Vec<Vec<Rational>>,
    costs: Vec<Vec<Rational>>,
}

impl CongestionGame {
    /// `differentials[e][i]` is `d_e(i)` for loads `i = 0..=ell`; the cost at
    /// load `i` is the prefix sum up to `i`, so `d_e(0)` is the idle cost.
    pub fn new(
        resources: usize,
        k: usize,
        ell: usize,
        strategies: Vec<Vec<Vec<usize>>>,
        differentials: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        Self::build(resources, k, ell, strategies, differentials, true)
    }

    /// Like [`CongestionGame::new`] but only requires `d_e(i) >= 0` for
    /// `i >= 1`, i.e. monotone costs of any slope.
    pub fn new_monotone(
        resources: usize,
        k: usize,
        ell: usize,
        strategies: Vec<Vec<Vec<usize>>>,
        differentials: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        Self::build(resources, k, ell, strategies, differentials, false)
    }

    fn build(
        resources: usize,
        k: usize,
        ell: usize,
        strategies: Vec<Vec<Vec<usize>>>,
        differentials: Vec<Vec<Rational>>,
        unit_slopes: bool,
    ) -> Result<Self> {
        if differentials.len() != resources {
            return Err(Error::DimensionMismatch { expected: resources, got: differentials.len() });
        }
        let mut canonical = Vec::with_capacity(strategies.len());
        let mut membership = vec![0usize; resources];
        for (p, set) in strategies.into_iter().enumerate() {
            if set.is_empty() {
                return Err(Error::invalid(format!("player {p} has no strategies")));
            }
            if set.len() > k {
                return Err(Error::invalid(format!("player {p} has {} strategies, cap is {k}", set.len())));
            }
            let mut player_sets = Vec::with_capacity(set.len());
            for mut s in set {
                s.sort_unstable();
                s.dedup();
                if let Some(&e) = s.iter().find(|&&e| e >= resources) {
                    return Err(Error::invalid(format!("resource {e} out of range (r = {resources})")));
                }
                for &e in &s {
                    membership[e] += 1;
                }
                player_sets.push(s);
            }
            canonical.push(player_sets);
        }
        if let Some(e) = (0..resources).find(|&e| membership[e] > ell) {
            return Err(Error::invalid(format!(
                "resource {e} appears in {} strategies, cap is {ell}",
                membership[e]
            )));
        }
        let (zero, one) = (Rational::zero(), Rational::one());
        let mut costs = Vec::with_capacity(resources);
        for (e, d) in differentials.iter().enumerate() {
            if d.len() != ell + 1 {
                return Err(Error::invalid(format!(
                    "resource {e} needs {} differentials, got {}",
                    ell + 1,
                    d.len()
                )));
            }
            if let Some(bad) = d[1..].iter().find(|x| **x < zero || (unit_slopes && **x > one)) {
                return Err(Error::invalid(format!("differential {bad} of resource {e} outside [0, 1]")));
            }
            let mut acc = Rational::zero();
            costs.push(
                d.iter()
                    .map(|x| {
                        acc += x;
                        acc
                    })
                    .collect(),
            );
        }
        Ok(CongestionGame {
            resources,
            k,
            ell,
            strategies: canonical,
            differentials,
            costs,
        })
    }

    pub fn players(&self) -> usize {
        self.strategies.len()
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn strategies(&self, player: usize) -> &[Vec<usize>] {
        &self.strategies[player]
    }

    pub fn differentials(&self) -> &[Vec<Rational>] {
        &self.differentials
    }

    /// `c_e(load)`.
    pub fn cost(&self, e: usize, load: usize) -> Rational {
        self.costs[e][load]
    }

    pub fn validate_profile(&self, profile: &[usize]) -> Result<()> {
        if profile.len() != self.players() {
            return Err(Error::DimensionMismatch { expected: self.players(), got: profile.len() });
        }
        for (p, &c) in profile.iter().enumerate() {
            let count = self.strategies[p].len();
            if c >= count {
                return Err(Error::StrategyOutOfRange { player: p, strategy: c, lo: 0, hi: count - 1 });
            }
        }
        Ok(())
    }

    pub fn loads(&self, profile: &[usize]) -> Vec<usize> {
        let mut loads = vec![0; self.resources];
        for (p, &c) in profile.iter().enumerate() {
            for &e in &self.strategies[p][c] {
                loads[e] += 1;
            }
        }
        loads
    }

    fn potential_of_loads(&self, loads: &[usize]) -> Rational {
        (0..self.resources)
            .map(|e| self.costs[e][..=loads[e]].iter().fold(Rational::zero(), |a, c| a + c))
            .fold(Rational::zero(), |a, x| a + x)
    }

    pub fn potential(&self, profile: &[usize]) -> Result<Rational> {
        self.validate_profile(profile)?;
        Ok(self.potential_of_loads(&self.loads(profile)))
    }

    pub fn player_cost(&self, profile: &[usize], player: usize) -> Result<Rational> {
        self.validate_profile(profile)?;
        if player >= self.players() {
            return Err(Error::PlayerOutOfRange { player, n: self.players() });
        }
        let loads = self.loads(profile);
        Ok(self.cost_with_loads(&loads, player, profile[player]))
    }

    fn cost_with_loads(&self, loads: &[usize], player: usize, choice: usize) -> Rational {
        self.strategies[player][choice]
            .iter()
            .fold(Rational::zero(), |acc, &e| acc + self.costs[e][loads[e]])
    }

    /// Cost decrease for `player` switching to `choice`.
    fn deviation_gain(&self, loads: &[usize], profile: &[usize], player: usize, choice: usize) -> Rational {
        let old = &self.strategies[player][profile[player]];
        let new = &self.strategies[player][choice];
        let before = self.cost_with_loads(loads, player, profile[player]);
        let after = new.iter().fold(Rational::zero(), |acc, &e| {
            let load = if old.binary_search(&e).is_ok() { loads[e] } else { loads[e] + 1 };
            acc + self.costs[e][load]
        });
        before - after
    }

    /// Strictly cost-decreasing deviations `(player, choice)` with their gain,
    /// in lexicographic order.
    pub fn improving_moves(&self, profile: &[usize]) -> Result<Vec<(Move, Rational)>> {
        self.validate_profile(profile)?;
        Ok(self.improving_unchecked(profile))
    }

    fn improving_unchecked(&self, profile: &[usize]) -> Vec<(Move, Rational)> {
        let loads = self.loads(profile);
        let mut out = Vec::new();
        for p in 0..self.players() {
            for c in 0..self.strategies[p].len() {
                if c == profile[p] {
                    continue;
                }
                let gain = self.deviation_gain(&loads, profile, p, c);
                if gain > Rational::zero() {
                    out.push((Move::new(p, c), gain));
                }
            }
        }
        out
    }

    pub fn is_pne(&self, profile: &[usize]) -> Result<bool> {
        Ok(self.improving_moves(profile)?.is_empty())
    }

    /// Cumulative-cost vector `C(e, i) = sum_{j <= i} c_e(j)` over rows
    /// `(e, i)`, `i` in `0..=ell`.
    pub fn cumulative_costs(&self) -> BTreeMap<(usize, usize), Rational> {
        let mut out = BTreeMap::new();
        for e in 0..self.resources {
            let mut acc = Rational::zero();
            for i in 0..=self.ell {
                acc += self.costs[e][i];
                out.insert((e, i), acc);
            }
        }
        out
    }
}

pub fn congestion_potential(game: &CongestionGame, profile: &[usize]) -> Result<Rational> {
    game.potential(profile)
}

pub fn player_cost(game: &CongestionGame, profile: &[usize], player: usize) -> Result<Rational> {
    game.player_cost(profile, player)
}

/// Move vector over rows `(resource, load)`: +1 at each touched resource's
/// new load and -1 at its old load.
pub type CongestionVector = IntVector<(usize, usize)>;

pub fn congestion_move_vector(game: &CongestionGame, before: &[usize], mv: Move) -> Result<CongestionVector> {
    game.validate_profile(before)?;
    let Move { player, strategy: choice } = mv;
    if choice >= game.strategies[player].len() {
        return Err(Error::StrategyOutOfRange {
            player,
            strategy: choice,
            lo: 0,
            hi: game.strategies[player].len() - 1,
        });
    }
    if before[player] == choice {
        return Err(Error::InvalidMove { step: 1, player, strategy: choice });
    }
    Ok(move_vector_unchecked(game, &game.loads(before), before[player], mv))
}

fn move_vector_unchecked(game: &CongestionGame, loads: &[usize], from: usize, mv: Move) -> CongestionVector {
    let old = &game.strategies[mv.player][from];
    let new = &game.strategies[mv.player][mv.strategy];
    let mut v = CongestionVector::new();
    for &e in old {
        if new.binary_search(&e).is_err() {
            v.add((e, loads[e] - 1), 1);
            v.add((e, loads[e]), -1);
        }
    }
    for &e in new {
        if old.binary_search(&e).is_err() {
            v.add((e, loads[e] + 1), 1);
            v.add((e, loads[e]), -1);
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongestionTrace {
    pub initial: Vec<usize>,
    /// `strategy` is the 0-based index into the player's strategy list.
    pub moves: Vec<Move>,
    /// Profile before each move, plus the final profile.
    pub profiles: Vec<Vec<usize>>,
    /// Cost decrease of the mover at each step.
    pub gains: Vec<Rational>,
    pub potentials: Vec<Rational>,
    pub outcome: Outcome,
}

impl CongestionTrace {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn final_profile(&self) -> &[usize] {
        self.profiles.last().unwrap()
    }
}

/// Better-response dynamics minimizing cost; every step strictly lowers the
/// mover's cost and the potential by the same amount.
pub fn run_bra_congestion(
    game: &CongestionGame,
    initial: &[usize],
    rule: &PivotRule,
    step_cap: usize,
    seed: u64,
) -> Result<CongestionTrace> {
    game.validate_profile(initial)?;
    let mut selector = Selector::new(rule, seed)?;
    let mut trace = CongestionTrace {
        initial: initial.to_vec(),
        moves: Vec::new(),
        profiles: vec![initial.to_vec()],
        gains: Vec::new(),
        potentials: vec![game.potential_of_loads(&game.loads(initial))],
        outcome: Outcome::Converged,
    };
    loop {
        let profile = trace.final_profile().to_vec();
        let candidates = game.improving_unchecked(&profile);
        if candidates.is_empty() {
            trace.outcome = Outcome::Converged;
            return Ok(trace);
        }
        if trace.len() >= step_cap {
            trace.outcome = Outcome::StepCapReached;
            return Ok(trace);
        }
        let (mv, gain) = candidates[selector.pick(rule, &candidates)];
        let mut next = profile;
        next[mv.player] = mv.strategy;
        let pot = *trace.potentials.last().unwrap() - gain;
        trace.moves.push(mv);
        trace.gains.push(gain);
        trace.potentials.push(pot);
        trace.profiles.push(next);
    }
}

pub fn trace_move_vectors(game: &CongestionGame, trace: &CongestionTrace) -> Vec<CongestionVector> {
    trace
        .moves
        .iter()
        .enumerate()
        .map(|(t, &mv)| {
            let before = &trace.profiles[t];
            move_vector_unchecked(game, &game.loads(before), before[mv.player], mv)
        })
        .collect()
}

/// Which move vectors enter the cyclic sum of a repeating player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CyclicConvention {
    /// The player's own moves after the first occurrence through the repeat,
    /// as for coordination games.
    #[default]
    MoverOnly,
    /// Every move from the first occurrence through the repeat, inclusive.
    Window,
}

/// For each repeating player (first pair to repeat; an initial choice counts
/// as occurring before the first move) the summed move vector.
pub fn congestion_cyclic_sums(
    game: &CongestionGame,
    trace: &CongestionTrace,
    convention: CyclicConvention,
) -> Vec<(usize, CongestionVector)> {
    let vectors = trace_move_vectors(game, trace);
    // None = occurred in the initial profile
    let mut first_seen: BTreeMap<(usize, usize), Option<usize>> = BTreeMap::new();
    for (p, &c) in trace.initial.iter().enumerate() {
        first_seen.insert((p, c), None);
    }
    let mut done: BTreeMap<usize, CongestionVector> = BTreeMap::new();
    for (t, mv) in trace.moves.iter().enumerate() {
        if done.contains_key(&mv.player) {
            continue;
        }
        let key = (mv.player, mv.strategy);
        match first_seen.get(&key) {
            Some(&first) => {
                let steps: Vec<usize> = match convention {
                    CyclicConvention::MoverOnly => {
                        let from = first.map_or(0, |f| f + 1);
                        (from..=t).filter(|&s| trace.moves[s].player == mv.player).collect()
                    }
                    CyclicConvention::Window => (first.unwrap_or(0)..=t).collect(),
                };
                let mut sum = CongestionVector::new();
                for s in steps {
                    sum.add_vector(&vectors[s]);
                }
                done.insert(mv.player, sum);
            }
            None => {
                first_seen.insert(key, Some(t));
            }
        }
    }
    done.into_iter().collect()
}

/// Random (k, l)-instance: every player gets up to `k` strategies of one or
/// two resources with spare membership capacity, and differentials
/// `d_e(i)` for `i >= 1` are uniform on the `[0, 1]` grid with `d_e(0) = 0`.
pub fn sample_congestion(
    resources: usize,
    players: usize,
    k: usize,
    ell: usize,
    resolution: i128,
    seed: u64,
) -> Result<CongestionGame> {
    if resources == 0 || k == 0 || resolution < 1 {
        return Err(Error::InvalidSpec("congestion sampling needs r, k, R >= 1".into()));
    }
    let mut capacity = vec![ell; resources];
    let mut r = rng::stream(seed, TAG_CONGESTION, 0, 0, 0);
    let mut strategies = Vec::with_capacity(players);
    for _ in 0..players {
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for _ in 0..k {
            let size = rng::uniform_inclusive(&mut r, 1, 2) as usize;
            let mut s = Vec::new();
            for _ in 0..size {
                let open: Vec<usize> = (0..resources).filter(|&e| capacity[e] > 0 && !s.contains(&e)).collect();
                if open.is_empty() {
                    break;
                }
                let e = open[rng::uniform_inclusive(&mut r, 0, open.len() as i128 - 1) as usize];
                capacity[e] -= 1;
                s.push(e);
            }
            s.sort_unstable();
            if !sets.contains(&s) {
                sets.push(s);
            } else {
                for &e in &s {
                    capacity[e] += 1;
                }
            }
        }
        strategies.push(sets);
    }
    let differentials = (0..resources)
        .map(|e| {
            let mut d = rng::stream(seed, TAG_CONGESTION, 1, e as u64, 0);
            let mut row = vec![Rational::zero()];
            row.extend((1..=ell).map(|_| rat(rng::uniform_inclusive(&mut d, 0, resolution), resolution)));
            row
        })
        .collect();
    CongestionGame::new(resources, k, ell, strategies, differentials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::exact_rank;
    use crate::rational::int;
    use proptest::prelude::*;

    /// Same shape without the `[0, 1]` differential cap, for costs like (0, 1, 3).
    fn shared_steep(c: [i128; 3]) -> CongestionGame {
        let diffs = |c: [i128; 3]| vec![int(c[0]), int(c[1] - c[0]), int(c[2] - c[1])];
        CongestionGame::new_monotone(2, 2, 2, vec![vec![vec![0], vec![1]]; 2], vec![diffs(c), diffs(c)]).unwrap()
    }

    #[test]
    fn potential_examples() {
        let single = CongestionGame::new(1, 1, 2, vec![vec![vec![0]]; 2], vec![vec![int(0), int(1), int(1)]]).unwrap();
        assert_eq!(congestion_potential(&single, &[0, 0]).unwrap(), int(3));
        assert_eq!(player_cost(&single, &[0, 0], 0).unwrap(), int(2));
        let idle = CongestionGame::new(2, 1, 1, vec![vec![vec![]]], vec![vec![int(0), int(1)]; 2]).unwrap();
        assert_eq!(congestion_potential(&idle, &[0]).unwrap(), int(0));
        assert_eq!(player_cost(&idle, &[0], 0).unwrap(), int(0));
        let spare = CongestionGame::new(
            2,
            1,
            2,
            vec![vec![vec![0]]; 2],
            vec![vec![int(0), int(1), int(1)], vec![rat(1, 3), int(0), int(0)]],
        )
        .unwrap();
        assert_eq!(congestion_potential(&spare, &[0, 0]).unwrap(), int(3) + rat(1, 3));
        let sole = shared_steep([0, 1, 3]);
        assert_eq!(player_cost(&sole, &[0, 1], 0).unwrap(), sole.cost(0, 1));
    }

    #[test]
    fn caps_are_enforced() {
        let d = vec![vec![int(0), int(1)]];
        assert!(CongestionGame::new(1, 1, 1, vec![vec![vec![0], vec![0]]], d.clone()).is_err());
        assert!(CongestionGame::new(1, 2, 1, vec![vec![vec![0], vec![0]]], d.clone()).is_err());
        assert!(CongestionGame::new(1, 2, 2, vec![vec![vec![0], vec![]]], vec![vec![int(0), int(2), int(0)]]).is_err());
        assert!(CongestionGame::new(1, 2, 1, vec![vec![vec![1]]], d.clone()).is_err());
        assert!(CongestionGame::new(1, 2, 2, vec![vec![vec![0], vec![0]]], vec![vec![int(0), int(1), int(0)]]).is_ok());
    }

    #[test]
    fn steep_costs_need_the_monotone_constructor() {
        let d = vec![vec![int(0), int(1), int(2)]];
        assert!(CongestionGame::new(1, 1, 2, vec![vec![vec![0]]; 2], d.clone()).is_err());
        assert!(CongestionGame::new_monotone(1, 1, 2, vec![vec![vec![0]]; 2], d).is_ok());
        let falling = vec![vec![int(0), int(1), int(-1)]];
        assert!(CongestionGame::new_monotone(1, 1, 2, vec![vec![vec![0]]; 2], falling).is_err());
    }

    #[test]
    fn split_is_reached() {
        // (0, 1, 3) as stated, and the same game rescaled to unit slopes
        for g in [shared_steep([0, 1, 3]), scaled_split()] {
            split_case(&g);
        }
    }

    fn scaled_split() -> CongestionGame {
        let d = vec![int(0), rat(1, 3), rat(2, 3)];
        CongestionGame::new(2, 2, 2, vec![vec![vec![0], vec![1]]; 2], vec![d.clone(), d]).unwrap()
    }

    fn split_case(g: &CongestionGame) {
        let g = g.clone();
        let t = run_bra_congestion(&g, &[0, 0], &PivotRule::FirstImproving, 100, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.outcome, Outcome::Converged);
        let end = t.final_profile();
        assert_ne!(end[0], end[1]);
        // the split profiles are the only PNE
        for p in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(g.is_pne(&p).unwrap(), p[0] != p[1]);
        }
        let again = run_bra_congestion(&g, end, &PivotRule::BestImproving, 100, 0).unwrap();
        assert!(again.is_empty());
    }

    #[test]
    fn move_vector_examples() {
        let g = scaled_split();
        let v = congestion_move_vector(&g, &[0, 0], Move::new(0, 1)).unwrap();
        assert_eq!(v.get(&(0, 1)), 1);
        assert_eq!(v.get(&(0, 2)), -1);
        assert_eq!(v.nonzero_count(), 4);
        assert!(congestion_move_vector(&g, &[0, 0], Move::new(0, 0)).is_err());
        let c = g.cumulative_costs();
        let ip = v.dot(|key| c[key]);
        assert_eq!(ip, g.potential(&[1, 0]).unwrap() - g.potential(&[0, 0]).unwrap());
    }

    fn random_profile(g: &CongestionGame, seed: u64) -> Vec<usize> {
        let mut r = rng::stream(seed, 77, 0, 0, 0);
        (0..g.players())
            .map(|p| rng::uniform_inclusive(&mut r, 0, g.strategies(p).len() as i128 - 1) as usize)
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn potential_tracks_costs(seed in any::<u64>(), players in 2usize..6, resources in 2usize..6) {
            let g = sample_congestion(resources, players, 3, 4, 1 << 12, seed).unwrap();
            let p = random_profile(&g, seed);
            let c = g.cumulative_costs();
            for player in 0..players {
                for choice in 0..g.strategies(player).len() {
                    if choice == p[player] {
                        continue;
                    }
                    let mut q = p.clone();
                    q[player] = choice;
                    let dphi = g.potential(&q).unwrap() - g.potential(&p).unwrap();
                    let dcost = g.player_cost(&q, player).unwrap() - g.player_cost(&p, player).unwrap();
                    prop_assert_eq!(dphi, dcost);
                    let v = congestion_move_vector(&g, &p, Move::new(player, choice)).unwrap();
                    prop_assert_eq!(v.dot(|key| c[key]), dphi);
                }
            }
        }

        #[test]
        fn bra_terminates_at_pne(seed in any::<u64>()) {
            let g = sample_congestion(4, 5, 3, 4, 1 << 12, seed).unwrap();
            let start = random_profile(&g, seed);
            for rule in [PivotRule::FirstImproving, PivotRule::BestImproving, PivotRule::RandomImproving] {
                let t = run_bra_congestion(&g, &start, &rule, 100_000, seed).unwrap();
                prop_assert_eq!(t.outcome, Outcome::Converged);
                prop_assert!(g.is_pne(t.final_profile()).unwrap());
                prop_assert!(t.potentials.windows(2).all(|w| w[1] < w[0]));
                for (s, counts) in (0..g.resources()).map(|e| (e, g.strategies.iter().flatten().filter(|set| set.contains(&e)).count())) {
                    prop_assert!(counts <= g.ell(), "resource {} over cap", s);
                }
            }
        }
    }

    #[test]
    fn cyclic_conventions() {
        // player 0 bounces 0 -> 1 -> 0 while player 1 moves in between
        let g = CongestionGame::new(
            3,
            2,
            2,
            vec![vec![vec![0], vec![1]], vec![vec![1], vec![2]]],
            vec![vec![int(0), rat(1, 2), rat(1, 2)]; 3],
        )
        .unwrap();
        let trace = CongestionTrace {
            initial: vec![0, 0],
            moves: vec![Move::new(0, 1), Move::new(1, 1), Move::new(0, 0)],
            profiles: vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![0, 1]],
            gains: vec![],
            potentials: vec![],
            outcome: Outcome::ScriptExhausted,
        };
        let vectors = trace_move_vectors(&g, &trace);
        let mover = congestion_cyclic_sums(&g, &trace, CyclicConvention::MoverOnly);
        let window = congestion_cyclic_sums(&g, &trace, CyclicConvention::Window);
        assert_eq!(mover.len(), 1);
        let mut expected = vectors[0].clone();
        expected.add_vector(&vectors[2]);
        assert_eq!(mover[0].1, expected);
        expected.add_vector(&vectors[1]);
        assert_eq!(window[0].1, expected);
        assert!(exact_rank(&vectors) >= 2);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_congestion(5, 6, 3, 3, 1 << 10, 4).unwrap();
        assert_eq!(a, sample_congestion(5, 6, 3, 3, 1 << 10, 4).unwrap());
        assert!(a.differentials().iter().all(|d| d[0] == Rational::zero()));
    }
}
