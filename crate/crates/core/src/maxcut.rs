//! Weighted cut instances and FLIP local search with radius 1 or 2.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::dynamics::{Outcome, PivotRule, Selector};
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutInstance {
    vertices: usize,
    edges: Vec<(usize, usize, Rational)>,
    adjacency: Vec<Vec<(usize, Rational)>>,
    terminals: Option<(usize, usize)>,
}

impl CutInstance {
    /// `terminals = Some((s, t))` pins `s` inside and `t` outside every cut.
    pub fn new(vertices: usize, edges: Vec<(usize, usize, Rational)>, terminals: Option<(usize, usize)>) -> Result<Self> {
        let mut canonical = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a >= vertices || b >= vertices {
                return Err(Error::invalid(format!("edge ({a}, {b}) outside {vertices} vertices")));
            }
            if a == b {
                return Err(Error::invalid("self-loop in cut graph"));
            }
            canonical.push((a.min(b), a.max(b), w));
        }
        canonical.sort_by_key(|e| (e.0, e.1));
        if canonical.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::invalid("duplicate edge in cut graph"));
        }
        if let Some((s, t)) = terminals {
            if s == t || s >= vertices || t >= vertices {
                return Err(Error::invalid("terminals must be two distinct vertices"));
            }
        }
        let mut adjacency = vec![Vec::new(); vertices];
        for &(a, b, w) in &canonical {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        Ok(CutInstance {
            vertices,
            edges: canonical,
            adjacency,
            terminals,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, Rational)] {
        &self.edges
    }

    pub fn terminals(&self) -> Option<(usize, usize)> {
        self.terminals
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, Rational)] {
        &self.adjacency[v]
    }

    pub fn weight(&self, a: usize, b: usize) -> Rational {
        let key = (a.min(b), a.max(b));
        self.edges
            .binary_search_by_key(&key, |e| (e.0, e.1))
            .map(|i| self.edges[i].2)
            .unwrap_or_default()
    }

    pub fn is_pinned(&self, v: usize) -> bool {
        matches!(self.terminals, Some((s, t)) if v == s || v == t)
    }

    /// Same graph with one edge weight replaced (or added).
    pub fn with_weight(&self, a: usize, b: usize, w: Rational) -> Result<Self> {
        let key = (a.min(b), a.max(b));
        let mut edges: Vec<_> = self.edges.iter().copied().filter(|e| (e.0, e.1) != key).collect();
        edges.push((key.0, key.1, w));
        Self::new(self.vertices, edges, self.terminals)
    }
}

/// The side `S` of a cut, as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cut(pub Vec<bool>);

impl Cut {
    pub fn from_members(vertices: usize, members: &[usize]) -> Self {
        let mut side = vec![false; vertices];
        for &v in members {
            side[v] = true;
        }
        Cut(side)
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&v| self.0[v]).collect()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0[v]
    }

    pub fn flipped(&self, set: &[usize]) -> Cut {
        let mut next = self.clone();
        for &v in set {
            next.0[v] = !next.0[v];
        }
        next
    }
}

pub fn validate_cut(instance: &CutInstance, cut: &Cut) -> Result<()> {
    if cut.0.len() != instance.vertices {
        return Err(Error::InvalidCut(format!(
            "mask has {} entries for {} vertices",
            cut.0.len(),
            instance.vertices
        )));
    }
    let size = cut.0.iter().filter(|&&b| b).count();
    if size == 0 || size == instance.vertices {
        return Err(Error::InvalidCut("side must be non-empty and proper".into()));
    }
    if let Some((s, t)) = instance.terminals {
        if !cut.0[s] || cut.0[t] {
            return Err(Error::InvalidCut("terminal s must be inside and t outside".into()));
        }
    }
    Ok(())
}

/// Total weight of edges with exactly one endpoint in `side`; no validity checks.
pub fn crossing_weight(instance: &CutInstance, side: &[bool]) -> Rational {
    instance
        .edges
        .iter()
        .filter(|(a, b, _)| side[*a] != side[*b])
        .fold(Rational::zero(), |acc, (_, _, w)| acc + w)
}

pub fn cut_value(instance: &CutInstance, cut: &Cut) -> Result<Rational> {
    validate_cut(instance, cut)?;
    Ok(crossing_weight(instance, &cut.0))
}

/// Change of the cut value when vertex `v` alone switches sides.
pub fn flip_gains(instance: &CutInstance, side: &[bool]) -> Vec<Rational> {
    (0..instance.vertices)
        .map(|v| {
            instance.adjacency[v].iter().fold(Rational::zero(), |acc, (u, w)| {
                if side[*u] == side[v] {
                    acc + w
                } else {
                    acc - w
                }
            })
        })
        .collect()
}

/// Visits every allowed flip set of size at most `radius`, in lexicographic
/// order of the sorted vertex list, with its exact gain. Stops early when the
/// visitor returns `false`.
fn visit_flips<F: FnMut(&[usize], Rational) -> bool>(instance: &CutInstance, side: &[bool], radius: usize, mut visit: F) {
    let m = instance.vertices;
    let gains = flip_gains(instance, side);
    let size = side.iter().filter(|&&b| b).count();
    let pinned = instance.terminals.is_some();
    let mut row = vec![Rational::zero(); m];
    for a in 0..m {
        if instance.is_pinned(a) {
            continue;
        }
        // without terminals the side must stay non-empty and proper
        let single_ok = pinned || {
            let after = if side[a] { size - 1 } else { size + 1 };
            after != 0 && after != m
        };
        if single_ok && !visit(&[a], gains[a]) {
            return;
        }
        if radius < 2 {
            continue;
        }
        for (b, w) in &instance.adjacency[a] {
            row[*b] = *w;
        }
        for b in (a + 1)..m {
            if instance.is_pinned(b) {
                continue;
            }
            let pair_ok = pinned || {
                let delta_a: isize = if side[a] { -1 } else { 1 };
                let delta_b: isize = if side[b] { -1 } else { 1 };
                let after = size as isize + delta_a + delta_b;
                after != 0 && after != m as isize
            };
            if !pair_ok {
                continue;
            }
            let w = row[b];
            let gain = if side[a] == side[b] {
                gains[a] + gains[b] - w - w
            } else {
                gains[a] + gains[b] + w + w
            };
            if !visit(&[a, b], gain) {
                return;
            }
        }
        for (b, _) in &instance.adjacency[a] {
            row[*b] = Rational::zero();
        }
    }
}

fn check_radius(radius: usize) -> Result<()> {
    if radius == 1 || radius == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedRadius(radius))
    }
}

/// All improving flip sets of size at most `radius` with their gains.
pub fn improving_flips(instance: &CutInstance, cut: &Cut, radius: usize) -> Result<Vec<(Vec<usize>, Rational)>> {
    check_radius(radius)?;
    validate_cut(instance, cut)?;
    let mut out = Vec::new();
    visit_flips(instance, &cut.0, radius, |set, gain| {
        if gain > Rational::zero() {
            out.push((set.to_vec(), gain));
        }
        true
    });
    Ok(out)
}

fn first_improving(instance: &CutInstance, side: &[bool], radius: usize) -> Option<(Vec<usize>, Rational)> {
    let mut found = None;
    visit_flips(instance, side, radius, |set, gain| {
        if gain > Rational::zero() {
            found = Some((set.to_vec(), gain));
            false
        } else {
            true
        }
    });
    found
}

pub fn is_local_opt(instance: &CutInstance, cut: &Cut, radius: usize) -> Result<bool> {
    check_radius(radius)?;
    validate_cut(instance, cut)?;
    Ok(first_improving(instance, &cut.0, radius).is_none())
}

/// Local optimality on a raw mask (terminal placement and properness are
/// the caller's concern). Used by enumeration-heavy checks.
pub fn is_local_opt_mask(instance: &CutInstance, side: &[bool], radius: usize) -> bool {
    first_improving(instance, side, radius).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipTrace {
    pub initial: Cut,
    pub flips: Vec<Vec<usize>>,
    pub deltas: Vec<Rational>,
    /// Cut value before the first flip and after every flip.
    pub values: Vec<Rational>,
    pub final_cut: Cut,
    pub outcome: Outcome,
}

impl FlipTrace {
    pub fn len(&self) -> usize {
        self.flips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flips.is_empty()
    }
}

/// FLIP local search: repeatedly applies an improving flip of at most
/// `radius` vertices until none exists or `step_cap` flips were made.
pub fn run_flip(
    instance: &CutInstance,
    radius: usize,
    initial: &Cut,
    rule: &PivotRule,
    step_cap: usize,
    seed: u64,
) -> Result<FlipTrace> {
    check_radius(radius)?;
    validate_cut(instance, initial)?;
    let mut selector = Selector::new(rule, seed)?;
    let mut cut = initial.clone();
    let mut trace = FlipTrace {
        initial: initial.clone(),
        flips: Vec::new(),
        deltas: Vec::new(),
        values: vec![crossing_weight(instance, &cut.0)],
        final_cut: cut.clone(),
        outcome: Outcome::Converged,
    };
    loop {
        let choice = match rule {
            PivotRule::FirstImproving => first_improving(instance, &cut.0, radius),
            _ => {
                let candidates = improving_flips(instance, &cut, radius)?;
                if candidates.is_empty() {
                    None
                } else {
                    let idx = selector.pick(rule, &candidates);
                    Some(candidates[idx].clone())
                }
            }
        };
        let Some((set, gain)) = choice else {
            trace.outcome = Outcome::Converged;
            break;
        };
        if trace.len() >= step_cap {
            trace.outcome = Outcome::StepCapReached;
            break;
        }
        cut = cut.flipped(&set);
        let value = *trace.values.last().unwrap() + gain;
        trace.flips.push(set);
        trace.deltas.push(gain);
        trace.values.push(value);
    }
    trace.final_cut = cut;
    Ok(trace)
}

/// Every mask over `vertices` that is a valid cut for `instance`.
pub fn for_each_valid_cut<F: FnMut(&[bool])>(instance: &CutInstance, mut f: F) {
    let m = instance.vertices;
    assert!(m <= 30, "cut enumeration is limited to 30 vertices");
    let mut side = vec![false; m];
    for mask in 0u64..(1u64 << m) {
        for (v, slot) in side.iter_mut().enumerate() {
            *slot = mask >> v & 1 == 1;
        }
        let size = mask.count_ones() as usize;
        if size == 0 || size == m {
            continue;
        }
        if let Some((s, t)) = instance.terminals {
            if !side[s] || side[t] {
                continue;
            }
        }
        f(&side);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PivotRule;
    use crate::game::{for_each_profile, StrategyProfile};
    use crate::rational::{int, rat};
    use crate::rng;
    use crate::smoothing::from_maxcut;

    fn unit_triangle() -> CutInstance {
        CutInstance::new(3, vec![(0, 1, int(1)), (1, 2, int(1)), (0, 2, int(1))], None).unwrap()
    }

    /// Brute-force gain of flipping `set`.
    fn brute_gain(inst: &CutInstance, side: &[bool], set: &[usize]) -> Rational {
        let mut next = side.to_vec();
        for &v in set {
            next[v] = !next[v];
        }
        crossing_weight(inst, &next) - crossing_weight(inst, side)
    }

    #[test]
    fn cut_value_examples() {
        let e = CutInstance::new(2, vec![(0, 1, int(1))], None).unwrap();
        assert_eq!(cut_value(&e, &Cut::from_members(2, &[0])).unwrap(), int(1));
        assert!(cut_value(&e, &Cut::from_members(2, &[0, 1])).is_err());
        assert!(cut_value(&e, &Cut::from_members(2, &[])).is_err());
        assert_eq!(cut_value(&unit_triangle(), &Cut::from_members(3, &[0])).unwrap(), int(2));
    }

    #[test]
    fn terminal_placement_is_enforced() {
        let inst = CutInstance::new(3, vec![(0, 2, int(1)), (1, 2, int(1))], Some((0, 1))).unwrap();
        assert!(validate_cut(&inst, &Cut::from_members(3, &[1])).is_err());
        assert!(validate_cut(&inst, &Cut::from_members(3, &[0, 2])).is_ok());
    }

    #[test]
    fn same_side_endpoint_flip_improves() {
        // s = 0, t = 1, edge 2-3 with both endpoints on the s side
        let inst = CutInstance::new(4, vec![(2, 3, int(1))], Some((0, 1))).unwrap();
        let cut = Cut::from_members(4, &[0, 2, 3]);
        let flips = improving_flips(&inst, &cut, 1).unwrap();
        assert_eq!(flips, vec![(vec![2], int(1)), (vec![3], int(1))]);
        let trace = run_flip(&inst, 1, &cut, &PivotRule::FirstImproving, 10, 0).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(crossing_weight(&inst, &trace.final_cut.0), int(1));
    }

    /// Unit-weight path 0-3-2-1 with S = {0, 1}: each single flip keeps the
    /// value at 2, but moving 0 and 2 across together reaches 3.
    fn swap_witness() -> (CutInstance, Cut) {
        let inst = CutInstance::new(4, vec![(0, 3, int(1)), (1, 2, int(1)), (2, 3, int(1))], None).unwrap();
        (inst, Cut::from_members(4, &[0, 1]))
    }

    #[test]
    fn two_flip_strictly_stronger_on_witness() {
        let (inst, cut) = swap_witness();
        assert!(is_local_opt(&inst, &cut, 1).unwrap());
        assert!(!is_local_opt(&inst, &cut, 2).unwrap());
        // brute force over every cut confirms d=2 optima are d=1 optima and
        // that this witness is the kind of cut that separates them
        let mut separating = 0;
        for_each_valid_cut(&inst, |side| {
            let c = Cut(side.to_vec());
            let one = is_local_opt(&inst, &c, 1).unwrap();
            let two = is_local_opt(&inst, &c, 2).unwrap();
            assert!(!two || one);
            if one && !two {
                separating += 1;
            }
        });
        assert!(separating > 0);
    }

    #[test]
    fn radius_is_validated() {
        let (inst, cut) = swap_witness();
        assert_eq!(improving_flips(&inst, &cut, 3), Err(Error::UnsupportedRadius(3)));
        assert_eq!(improving_flips(&inst, &cut, 0), Err(Error::UnsupportedRadius(0)));
    }

    fn random_instance(seed: u64, m: usize) -> CutInstance {
        let mut r = rng::stream(seed, 99, 0, 0, 0);
        let mut edges = Vec::new();
        for a in 0..m {
            for b in (a + 1)..m {
                if rng::uniform_inclusive(&mut r, 0, 2) > 0 {
                    edges.push((a, b, rat(rng::uniform_inclusive(&mut r, -8, 16), 4)));
                }
            }
        }
        CutInstance::new(m, edges, None).unwrap()
    }

    #[test]
    fn gains_match_brute_force() {
        for seed in 0..20 {
            let inst = random_instance(seed, 6);
            for_each_valid_cut(&inst, |side| {
                let c = Cut(side.to_vec());
                for (set, gain) in improving_flips(&inst, &c, 2).unwrap() {
                    assert_eq!(gain, brute_gain(&inst, side, &set));
                }
                let mut all = 0;
                visit_flips(&inst, side, 2, |set, gain| {
                    assert_eq!(gain, brute_gain(&inst, side, set));
                    all += 1;
                    true
                });
                assert!(all > 0);
            });
        }
    }

    #[test]
    fn flip_runs_end_at_local_optima() {
        for seed in 0..100u64 {
            let inst = random_instance(seed, 7);
            for (radius, rule) in [(1, PivotRule::FirstImproving), (2, PivotRule::BestImproving), (2, PivotRule::RandomImproving)] {
                let start = Cut::from_members(7, &[0]);
                let t = run_flip(&inst, radius, &start, &rule, 10_000, seed).unwrap();
                assert_eq!(t.outcome, Outcome::Converged);
                assert!(is_local_opt(&inst, &t.final_cut, radius).unwrap());
                assert!(t.deltas.iter().all(|d| *d > Rational::zero()));
                assert_eq!(*t.values.last().unwrap(), crossing_weight(&inst, &t.final_cut.0));
            }
        }
    }

    #[test]
    fn local_optimum_start_takes_no_steps() {
        let inst = CutInstance::new(2, vec![(0, 1, int(1))], None).unwrap();
        let t = run_flip(&inst, 2, &Cut::from_members(2, &[1]), &PivotRule::BestImproving, 10, 0).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn global_max_is_local_opt() {
        for seed in 0..10 {
            let inst = random_instance(seed, 8);
            let mut best: Option<(Rational, Vec<bool>)> = None;
            for_each_valid_cut(&inst, |side| {
                let v = crossing_weight(&inst, side);
                if best.as_ref().map_or(true, |(b, _)| v > *b) {
                    best = Some((v, side.to_vec()));
                }
            });
            let (_, side) = best.unwrap();
            let cut = Cut(side);
            assert!(is_local_opt(&inst, &cut, 1).unwrap());
            assert!(is_local_opt(&inst, &cut, 2).unwrap());
        }
    }

    #[test]
    fn embedded_game_optima_match_pne() {
        for seed in 0..20 {
            let m = 6;
            let mut r = rng::stream(seed, 98, 0, 0, 0);
            let mut edges = Vec::new();
            for a in 0..m {
                for b in (a + 1)..m {
                    edges.push((a, b, rat(rng::uniform_inclusive(&mut r, 0, 8), 8)));
                }
            }
            let inst = CutInstance::new(m, edges.clone(), None).unwrap();
            let game = from_maxcut(m, &edges).unwrap();
            for_each_profile(m, 1, 2, |p| {
                let side: Vec<bool> = p.iter().map(|&s| s == 1).collect();
                let size = side.iter().filter(|&&b| b).count();
                let profile = StrategyProfile(p.to_vec());
                assert_eq!(game.potential(&profile).unwrap(), crossing_weight(&inst, &side));
                if size != 0 && size != m {
                    assert_eq!(is_local_opt(&inst, &Cut(side), 1).unwrap(), game.is_pne(&profile).unwrap());
                }
            });
        }
    }
}
