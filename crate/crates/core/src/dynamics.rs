//! Better-response dynamics with pluggable pivot rules.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{GameInstance, Move, StrategyProfile};
use crate::rational::Rational;
use crate::rng::{self, TAG_PIVOT};

pub const DEFAULT_STEP_CAP: usize = 10_000_000;

/// Which improving move to take when several exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PivotRule {
    /// Lowest `(player, strategy)`.
    FirstImproving,
    /// Largest gain; ties go to the lowest `(player, strategy)`.
    BestImproving,
    /// Uniform over improving moves, drawn from the seeded pivot stream.
    RandomImproving,
    /// Externally supplied moves, each of which must be improving.
    Script(Vec<Move>),
}

impl PivotRule {
    pub fn name(&self) -> &'static str {
        match self {
            PivotRule::FirstImproving => "first",
            PivotRule::BestImproving => "best",
            PivotRule::RandomImproving => "random",
            PivotRule::Script(_) => "script",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "first" | "first-improving" => Some(PivotRule::FirstImproving),
            "best" | "best-improving" => Some(PivotRule::BestImproving),
            "random" | "random-improving" => Some(PivotRule::RandomImproving),
            _ => None,
        }
    }
}

/// Picks an index into `candidates` (sorted lexicographically by key) for
/// the non-script rules.
pub(crate) struct Selector {
    rng: Option<ChaCha8Rng>,
}

impl Selector {
    pub(crate) fn new(rule: &PivotRule, seed: u64) -> Result<Self> {
        match rule {
            PivotRule::Script(_) => Err(Error::UnsupportedRule("script".to_string())),
            PivotRule::RandomImproving => Ok(Selector {
                rng: Some(rng::stream(seed, TAG_PIVOT, 0, 0, 0)),
            }),
            _ => Ok(Selector { rng: None }),
        }
    }

    pub(crate) fn pick<T>(&mut self, rule: &PivotRule, candidates: &[(T, Rational)]) -> usize {
        debug_assert!(!candidates.is_empty());
        match rule {
            PivotRule::BestImproving => {
                let mut best = 0;
                for (idx, (_, delta)) in candidates.iter().enumerate().skip(1) {
                    if *delta > candidates[best].1 {
                        best = idx;
                    }
                }
                best
            }
            PivotRule::RandomImproving => {
                let rng = self.rng.as_mut().expect("random selector has a stream");
                rng::uniform_inclusive(rng, 0, candidates.len() as i128 - 1) as usize
            }
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    StepCapReached,
    /// A script or replayed sequence ended before reaching an equilibrium.
    ScriptExhausted,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::StepCapReached => "step_cap_reached",
            Outcome::ScriptExhausted => "script_exhausted",
        }
    }
}

/// A recorded better-response run. `profiles[t]` is the profile before move
/// `t` (0-based), so `profiles[t + 1]` is `profiles[t]` with `moves[t]` applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrTrace {
    pub initial: StrategyProfile,
    pub moves: Vec<Move>,
    pub profiles: Vec<StrategyProfile>,
    pub deltas: Vec<Rational>,
    pub potentials: Vec<Rational>,
    pub outcome: Outcome,
}

impl BrTrace {
    fn start(game: &GameInstance, initial: &StrategyProfile) -> Self {
        BrTrace {
            initial: initial.clone(),
            moves: Vec::new(),
            profiles: vec![initial.clone()],
            deltas: Vec::new(),
            potentials: vec![game.potential_unchecked(initial)],
            outcome: Outcome::Converged,
        }
    }

    fn push(&mut self, mv: Move, delta: Rational) {
        let next = self.final_profile().with_move(mv);
        let pot = *self.potentials.last().unwrap() + delta;
        self.moves.push(mv);
        self.deltas.push(delta);
        self.profiles.push(next);
        self.potentials.push(pot);
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn final_profile(&self) -> &StrategyProfile {
        self.profiles.last().unwrap()
    }

    pub fn total_gain(&self) -> Rational {
        *self.potentials.last().unwrap() - self.potentials[0]
    }

    /// Smallest single-step improvement, if any step was taken.
    pub fn min_step(&self) -> Option<Rational> {
        self.deltas.iter().min().copied()
    }

    /// Copy restricted to the first `len` moves.
    pub fn truncated(&self, len: usize) -> BrTrace {
        let len = len.min(self.len());
        BrTrace {
            initial: self.initial.clone(),
            moves: self.moves[..len].to_vec(),
            profiles: self.profiles[..=len].to_vec(),
            deltas: self.deltas[..len].to_vec(),
            potentials: self.potentials[..=len].to_vec(),
            outcome: if len == self.len() {
                self.outcome
            } else {
                Outcome::ScriptExhausted
            },
        }
    }
}

/// Runs better-response dynamics from `initial` until no improving move
/// remains or `step_cap` moves have been made.
pub fn run_bra(
    game: &GameInstance,
    initial: &StrategyProfile,
    rule: &PivotRule,
    step_cap: usize,
    seed: u64,
) -> Result<BrTrace> {
    game.validate_profile(initial)?;
    let mut trace = BrTrace::start(game, initial);
    if let PivotRule::Script(script) = rule {
        for (idx, &mv) in script.iter().enumerate() {
            if trace.len() == step_cap {
                trace.outcome = Outcome::StepCapReached;
                return Ok(trace);
            }
            let delta = checked_step(game, trace.final_profile(), mv, idx + 1)?;
            if delta <= Rational::zero() {
                return Err(Error::ScriptNotImproving { step: idx + 1, delta });
            }
            trace.push(mv, delta);
        }
        trace.outcome = if game.is_pne_unchecked(trace.final_profile()) {
            Outcome::Converged
        } else {
            Outcome::ScriptExhausted
        };
        return Ok(trace);
    }
    let mut selector = Selector::new(rule, seed)?;
    loop {
        let candidates = game.improving_moves_unchecked(trace.final_profile());
        if candidates.is_empty() {
            trace.outcome = Outcome::Converged;
            return Ok(trace);
        }
        if trace.len() >= step_cap {
            trace.outcome = Outcome::StepCapReached;
            return Ok(trace);
        }
        let (mv, delta) = candidates[selector.pick(rule, &candidates)];
        trace.push(mv, delta);
    }
}

fn checked_step(game: &GameInstance, profile: &StrategyProfile, mv: Move, step: usize) -> Result<Rational> {
    game.check_strategy(mv.player, mv.strategy)?;
    if profile[mv.player] == mv.strategy {
        return Err(Error::InvalidMove {
            step,
            player: mv.player,
            strategy: mv.strategy,
        });
    }
    Ok(game.deviation_gain(profile, mv.player, mv.strategy))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Replay {
    Valid(BrTrace),
    /// 1-based step of the first move whose gain is not strictly positive.
    Violation { step: usize, delta: Rational },
}

/// Checks an externally produced move list against `game`.
pub fn replay(game: &GameInstance, initial: &StrategyProfile, moves: &[Move]) -> Result<Replay> {
    game.validate_profile(initial)?;
    let mut trace = BrTrace::start(game, initial);
    for (idx, &mv) in moves.iter().enumerate() {
        let delta = checked_step(game, trace.final_profile(), mv, idx + 1)?;
        if delta <= Rational::zero() {
            return Ok(Replay::Violation { step: idx + 1, delta });
        }
        trace.push(mv, delta);
    }
    trace.outcome = if game.is_pne_unchecked(trace.final_profile()) {
        Outcome::Converged
    } else {
        Outcome::ScriptExhausted
    };
    Ok(Replay::Valid(trace))
}

/// Minimum potential gain over all windows of `window` consecutive moves.
pub fn min_improvement(trace: &BrTrace, window: usize) -> Result<Rational> {
    let len = trace.len();
    if window == 0 || window > len {
        return Err(Error::WindowTooLarge { window, len });
    }
    Ok((0..=len - window)
        .map(|t| trace.potentials[t + window] - trace.potentials[t])
        .min()
        .unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{anti_diagonal, single_edge, DEFAULT_ORACLE_CAP};
    use crate::rational::{int, rat};
    use crate::smoothing::{sample_instance, GameGraph, PerturbationSpec};

    fn g1() -> GameInstance {
        single_edge(2, anti_diagonal()).unwrap()
    }

    fn p(v: &[usize]) -> StrategyProfile {
        StrategyProfile(v.to_vec())
    }

    #[test]
    fn first_improving_converges_in_one_step() {
        let t = run_bra(&g1(), &p(&[1, 1]), &PivotRule::FirstImproving, 100, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.moves[0], Move::new(0, 2));
        assert_eq!(t.outcome, Outcome::Converged);
        assert!(g1().is_pne(t.final_profile()).unwrap());
    }

    #[test]
    fn starting_at_pne_takes_no_steps() {
        for rule in [PivotRule::FirstImproving, PivotRule::BestImproving, PivotRule::RandomImproving] {
            let t = run_bra(&g1(), &p(&[2, 1]), &rule, 100, 3).unwrap();
            assert!(t.is_empty());
            assert_eq!(t.outcome, Outcome::Converged);
        }
    }

    #[test]
    fn zero_cap_binds() {
        let t = run_bra(&g1(), &p(&[1, 1]), &PivotRule::BestImproving, 0, 0).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.outcome, Outcome::StepCapReached);
    }

    #[test]
    fn script_rule() {
        let ok = run_bra(&g1(), &p(&[1, 1]), &PivotRule::Script(vec![Move::new(1, 2)]), 10, 0).unwrap();
        assert_eq!(ok.final_profile(), &p(&[1, 2]));
        let bad = run_bra(
            &g1(),
            &p(&[1, 1]),
            &PivotRule::Script(vec![Move::new(1, 2), Move::new(1, 1)]),
            10,
            0,
        );
        assert_eq!(bad, Err(Error::ScriptNotImproving { step: 2, delta: int(-1) }));
    }

    #[test]
    fn replay_examples() {
        match replay(&g1(), &p(&[1, 1]), &[Move::new(0, 2)]).unwrap() {
            Replay::Valid(t) => assert_eq!(t.deltas, vec![int(1)]),
            other => panic!("{other:?}"),
        }
        // at (1, 2) the player already on strategy 2 cannot move to it, and
        // either player leaving the anti-diagonal loses 1
        assert!(matches!(
            replay(&g1(), &p(&[1, 2]), &[Move::new(1, 2)]),
            Err(Error::InvalidMove { step: 1, .. })
        ));
        assert_eq!(
            replay(&g1(), &p(&[1, 2]), &[Move::new(1, 1)]).unwrap(),
            Replay::Violation { step: 1, delta: int(-1) }
        );
        assert_eq!(
            replay(&g1(), &p(&[1, 2]), &[Move::new(0, 2)]).unwrap(),
            Replay::Violation { step: 1, delta: int(-1) }
        );
    }

    #[test]
    fn min_improvement_windows() {
        let mut t = BrTrace::start(&g1(), &p(&[1, 1]));
        // synthetic deltas; profiles are irrelevant for the window computation
        for d in [int(1), rat(1, 4), rat(1, 2)] {
            t.push(Move::new(0, 2), d);
        }
        assert_eq!(min_improvement(&t, 2).unwrap(), rat(3, 4));
        assert_eq!(min_improvement(&t, 1).unwrap(), rat(1, 4));
        assert_eq!(min_improvement(&t, 3).unwrap(), t.total_gain());
        assert!(min_improvement(&t, 4).is_err());
        assert!(min_improvement(&t, 0).is_err());
    }

    #[test]
    fn traces_are_consistent_on_smoothed_instances() {
        let spec = PerturbationSpec::uniform_full(30);
        for seed in 0..30u64 {
            let game = sample_instance(&GameGraph::complete(4, 3), &spec, seed).unwrap();
            let pne = game.enumerate_pne(DEFAULT_ORACLE_CAP).unwrap();
            for rule in [PivotRule::FirstImproving, PivotRule::BestImproving, PivotRule::RandomImproving] {
                let cap = 2 * 16 * 81;
                let t = run_bra(&game, &StrategyProfile::uniform(4, 1), &rule, cap, seed).unwrap();
                assert_eq!(t.outcome, Outcome::Converged);
                assert!(pne.contains(t.final_profile()));
                for s in 0..t.len() {
                    assert!(t.deltas[s] > Rational::zero());
                    assert_eq!(t.profiles[s].with_move(t.moves[s]), t.profiles[s + 1]);
                    assert_eq!(
                        game.potential(&t.profiles[s + 1]).unwrap() - game.potential(&t.profiles[s]).unwrap(),
                        t.deltas[s]
                    );
                }
                let again = run_bra(&game, &StrategyProfile::uniform(4, 1), &rule, cap, seed).unwrap();
                assert_eq!(t, again);
            }
        }
    }

    #[test]
    fn best_improving_breaks_ties_lexicographically() {
        // both players gain exactly 1 from (1, 1)
        let t = run_bra(&g1(), &p(&[1, 1]), &PivotRule::BestImproving, 10, 0).unwrap();
        assert_eq!(t.moves, vec![Move::new(0, 2)]);
    }
}
