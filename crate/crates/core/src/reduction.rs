//! Smoothness-preserving reductions from coordination games to local max-cut.
//!
//! `reduce_k_to_2flip` builds a cut graph on `nk + 2` nodes whose valid cuts
//! (at most one node per player on the `s` side) have value exactly twice the
//! potential of the matching profile of the extended game, where strategy 0
//! is a dummy. `reduce_2_to_1flip` does the same for 2-strategy games on
//! `n + 2` nodes without dummies. Every weight is an integer linear form in
//! the normalized payoffs and auxiliary variables; `check_weak_smoothness`
//! rebuilds those forms symbolically and certifies the system.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::game::{GameInstance, GameOptions, StrategyProfile};
use crate::maxcut::{crossing_weight, for_each_valid_cut, is_local_opt_mask, Cut, CutInstance};
use crate::rank::{exact_rank, IntVector};
use crate::rational::{as_integer, int, rat, Rational};
use crate::rng::{self, TAG_AUX};

/// Affine map `a -> scale * a + shift` applied to every payoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Normalization {
    pub scale: Rational,
    pub shift: Rational,
}

impl Normalization {
    pub const fn standard() -> Self {
        // (a + 3) / 4 maps [-1, 1] onto [1/2, 1]
        Normalization {
            scale: Rational::new_raw(1, 4),
            shift: Rational::new_raw(3, 4),
        }
    }

    pub fn apply(&self, a: &Rational) -> Rational {
        self.scale * a + self.shift
    }

    pub fn invert(&self, b: &Rational) -> Rational {
        (b - self.shift) / self.scale
    }
}

pub fn normalize_payoffs(game: &GameInstance) -> Result<GameInstance> {
    let (lo, hi) = (-Rational::one(), Rational::one());
    for idx in 0..game.edges().len() {
        for value in game.matrix_rows(idx).iter().flatten() {
            if *value < lo || *value > hi {
                let e = &game.edges()[idx];
                return Err(Error::PayoffOutOfRange { u: e.u, v: e.v, value: *value });
            }
        }
    }
    let norm = Normalization::standard();
    game.map_payoffs((rat(1, 2), int(1)), |a| norm.apply(a))
}

fn check_normalized(game: &GameInstance) -> Result<()> {
    if game.base() != 1 {
        return Err(Error::Reduction("input game must use strategies 1..=k".into()));
    }
    let (lo, hi) = (rat(1, 2), int(1));
    for (idx, e) in game.edges().iter().enumerate() {
        for value in game.matrix_rows(idx).iter().flatten() {
            if *value < lo || *value > hi {
                return Err(Error::Reduction(format!(
                    "payoff {value} on edge ({}, {}) is outside [1/2, 1]; normalize first",
                    e.u, e.v
                )));
            }
        }
    }
    Ok(())
}

/// Auxiliary random variables of the k-strategy reduction. Strategies are
/// 1-based in the accessors; storage is 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxRandomness {
    pub a0: Rational,
    /// `y[u][i - 1]`, in `[0, 1/2)`.
    pub y: Vec<Vec<Rational>>,
    /// `w[u][i - 1]`, in `[-1, 0)`.
    pub w: Vec<Vec<Rational>>,
    /// `r[(u, i, j)]` for `i < j`, in `[-1, 0)`.
    pub r: BTreeMap<(usize, usize, usize), Rational>,
}

fn grid_half_open(rng: &mut rand_chacha::ChaCha8Rng, lo_steps: i128, hi_steps: i128, resolution: i128) -> Rational {
    // integer steps in lo..hi over the resolution
    rat(rng::uniform_inclusive(rng, lo_steps, hi_steps - 1), resolution)
}

const AUX_A0: u64 = 0;
const AUX_Y: u64 = 1;
const AUX_W: u64 = 2;
const AUX_R: u64 = 3;

impl AuxRandomness {
    /// Uniform samples on the `1/resolution` grid: `Y`, `A0` on `[0, 1/2)`
    /// and `W`, `R` on `[-1, 0)`.
    pub fn sample(n: usize, k: usize, resolution: i128, seed: u64) -> Result<Self> {
        if resolution < 2 || resolution % 2 != 0 {
            return Err(Error::InvalidSpec("aux grid resolution must be even and at least 2".into()));
        }
        let half = resolution / 2;
        let kk = k as u64 + 1;
        let a0 = grid_half_open(&mut rng::stream(seed, TAG_AUX, AUX_A0, 0, 0), 0, half, resolution);
        let mut y = vec![Vec::with_capacity(k); n];
        let mut w = vec![Vec::with_capacity(k); n];
        let mut r = BTreeMap::new();
        for u in 0..n {
            for i in 1..=k {
                y[u].push(grid_half_open(&mut rng::stream(seed, TAG_AUX, AUX_Y, u as u64, i as u64), 0, half, resolution));
                w[u].push(grid_half_open(&mut rng::stream(seed, TAG_AUX, AUX_W, u as u64, i as u64), -resolution, 0, resolution));
                for j in (i + 1)..=k {
                    let code = i as u64 * kk + j as u64;
                    let value = grid_half_open(&mut rng::stream(seed, TAG_AUX, AUX_R, u as u64, code), -resolution, 0, resolution);
                    r.insert((u, i, j), value);
                }
            }
        }
        Ok(AuxRandomness { a0, y, w, r })
    }

    /// Constant aux values, mostly for worked examples.
    pub fn constant(n: usize, k: usize, a0: Rational, y: Vec<Vec<Rational>>, w: Rational, r: Rational) -> Self {
        let mut pairs = BTreeMap::new();
        for u in 0..n {
            for i in 1..=k {
                for j in (i + 1)..=k {
                    pairs.insert((u, i, j), r);
                }
            }
        }
        AuxRandomness {
            a0,
            y,
            w: vec![vec![w; k]; n],
            r: pairs,
        }
    }

    pub fn y(&self, u: usize, i: usize) -> Rational {
        self.y[u][i - 1]
    }

    pub fn w(&self, u: usize, i: usize) -> Rational {
        self.w[u][i - 1]
    }

    pub fn r(&self, u: usize, i: usize, j: usize) -> Rational {
        self.r[&(u, i.min(j), i.max(j))]
    }

    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        let zero = Rational::zero();
        let half = rat(1, 2);
        let minus_one = -Rational::one();
        let low = |x: &Rational| *x >= zero && *x < half;
        let neg = |x: &Rational| *x >= minus_one && *x < zero;
        if !low(&self.a0) {
            return Err(Error::Reduction(format!("A0 = {} outside [0, 1/2)", self.a0)));
        }
        if self.y.len() != n || self.w.len() != n || self.y.iter().chain(&self.w).any(|row| row.len() != k) {
            return Err(Error::Reduction("aux Y/W shape does not match n x k".into()));
        }
        if let Some(bad) = self.y.iter().flatten().find(|x| !low(x)) {
            return Err(Error::Reduction(format!("Y value {bad} outside [0, 1/2)")));
        }
        if let Some(bad) = self.w.iter().flatten().find(|x| !neg(x)) {
            return Err(Error::Reduction(format!("W value {bad} outside [-1, 0)")));
        }
        let expected = n * k * (k - 1) / 2;
        if self.r.len() != expected || self.r.keys().any(|&(u, i, j)| u >= n || i < 1 || i >= j || j > k) {
            return Err(Error::Reduction("aux R must hold one value per player and pair i < j".into()));
        }
        if let Some(bad) = self.r.values().find(|x| !neg(x)) {
            return Err(Error::Reduction(format!("R value {bad} outside [-1, 0)")));
        }
        Ok(())
    }
}

/// Sign used on cross-player edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossSign {
    /// `Y(u,i) + Y(v,j) - A - A0`, the form the linear system is built from.
    #[default]
    System,
    /// `Y(u,i) - Y(v,j) - A - A0` with `u < v`: kept only to audit the
    /// alternative sign; valid-cut values do not match the potential.
    Statement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    /// k strategies to 2-flip, nodes `(u, i)`.
    KTo2Flip,
    /// 2 strategies to 1-flip, one node per player.
    TwoTo1Flip,
}

/// Node numbering: `s = 0`, `t = 1`, then `per_player` nodes per player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeIndex {
    pub n: usize,
    pub per_player: usize,
}

impl NodeIndex {
    pub const S: usize = 0;
    pub const T: usize = 1;

    pub fn len(&self) -> usize {
        self.n * self.per_player + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node of player `u` and 1-based slot `i`.
    pub fn node(&self, u: usize, i: usize) -> usize {
        2 + u * self.per_player + (i - 1)
    }

    pub fn decode(&self, node: usize) -> Option<(usize, usize)> {
        if node < 2 || node >= self.len() {
            return None;
        }
        let x = node - 2;
        Some((x / self.per_player, x % self.per_player + 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionArtifacts {
    pub kind: ReductionKind,
    pub index: NodeIndex,
    pub instance: CutInstance,
    /// The normalized game the weights were built from.
    pub game: GameInstance,
    pub aux: AuxRandomness,
    pub normalization: Normalization,
    pub cross_sign: CrossSign,
    /// Doubled potential of the all-dummy profile (k-strategy reduction).
    pub pi_empty: Rational,
    /// `pi_single[u][i - 1]`: doubled potential with only `u` off the dummy.
    pub pi_single: Vec<Vec<Rational>>,
}

pub fn reduce_k_to_2flip(game: &GameInstance, aux: &AuxRandomness) -> Result<ReductionArtifacts> {
    reduce_k_to_2flip_with(game, aux, CrossSign::System)
}

pub fn reduce_k_to_2flip_with(game: &GameInstance, aux: &AuxRandomness, sign: CrossSign) -> Result<ReductionArtifacts> {
    let (n, k) = (game.n(), game.k());
    if k < 2 {
        return Err(Error::Reduction("games with a single strategy are already at their unique equilibrium".into()));
    }
    check_normalized(game)?;
    aux.validate(n, k)?;
    let index = NodeIndex { n, per_player: k };
    let two = int(2);
    let pi_empty = two * int(game.edges().len() as i128) * aux.a0;
    let pi_single: Vec<Vec<Rational>> = (0..n)
        .map(|u| {
            let d = int(game.degree(u) as i128);
            (1..=k).map(|i| pi_empty + two * d * (aux.y(u, i) - aux.a0)).collect()
        })
        .collect();

    let mut weights: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    let mut add = |a: usize, b: usize, w: Rational| {
        weights.insert((a.min(b), a.max(b)), w);
    };
    // player-player edges
    for (idx, e) in game.edges().iter().enumerate() {
        for i in 1..=k {
            for j in 1..=k {
                let y = match sign {
                    CrossSign::System => aux.y(e.u, i) + aux.y(e.v, j),
                    CrossSign::Statement => aux.y(e.u, i) - aux.y(e.v, j),
                };
                add(index.node(e.u, i), index.node(e.v, j), y - game.entry(idx, i, j) - aux.a0);
            }
        }
    }
    for u in 0..n {
        for i in 1..=k {
            for j in (i + 1)..=k {
                let w = (pi_single[u][i - 1] + pi_single[u][j - 1] - pi_empty) / two - aux.r(u, i, j);
                add(index.node(u, i), index.node(u, j), w);
            }
        }
    }
    let mut node_sum = vec![Rational::zero(); index.len()];
    for (&(a, b), w) in weights.iter() {
        node_sum[a] += w;
        node_sum[b] += w;
    }
    let mut w_total = Rational::zero();
    let mut terminal_edges = Vec::new();
    for u in 0..n {
        for i in 1..=k {
            let x = index.node(u, i);
            let wx = aux.w(u, i);
            w_total += wx;
            terminal_edges.push((NodeIndex::S, x, wx));
            let to_t = pi_single[u][i - 1] - pi_empty + wx - node_sum[x];
            terminal_edges.push((NodeIndex::T, x, to_t));
        }
    }
    terminal_edges.push((NodeIndex::S, NodeIndex::T, pi_empty - w_total));
    let mut edges: Vec<(usize, usize, Rational)> = weights.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    edges.extend(terminal_edges);
    let instance = CutInstance::new(index.len(), edges, Some((NodeIndex::S, NodeIndex::T)))?;
    Ok(ReductionArtifacts {
        kind: ReductionKind::KTo2Flip,
        index,
        instance,
        game: game.clone(),
        aux: aux.clone(),
        normalization: Normalization::standard(),
        cross_sign: sign,
        pi_empty,
        pi_single,
    })
}

/// Per-player `W` for the 2-strategy reduction, uniform on `[-1, 0)`.
pub fn sample_binary_aux(n: usize, resolution: i128, seed: u64) -> Result<Vec<Rational>> {
    if resolution < 1 {
        return Err(Error::InvalidSpec("aux grid resolution must be positive".into()));
    }
    Ok((0..n)
        .map(|u| grid_half_open(&mut rng::stream(seed, TAG_AUX, AUX_W, u as u64, 0), -resolution, 0, resolution))
        .collect())
}

pub fn reduce_2_to_1flip(game: &GameInstance, w: &[Rational]) -> Result<ReductionArtifacts> {
    let n = game.n();
    if game.k() != 2 {
        return Err(Error::Reduction(format!("the 1-flip reduction needs k = 2, got k = {}", game.k())));
    }
    check_normalized(game)?;
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    if let Some(bad) = w.iter().find(|x| **x >= Rational::zero() || **x < -Rational::one()) {
        return Err(Error::Reduction(format!("W value {bad} outside [-1, 0)")));
    }
    let index = NodeIndex { n, per_player: 1 };
    let two = int(2);
    let mut edges = Vec::new();
    // to_t[u] accumulates the terms that close the cut identity at the t side
    let mut to_t: Vec<Rational> = w.to_vec();
    let mut base = Rational::zero();
    for (idx, e) in game.edges().iter().enumerate() {
        let a = |i: usize, j: usize| *game.entry(idx, i, j);
        let weight = a(1, 2) + a(2, 1) - a(1, 1) - a(2, 2);
        edges.push((index.node(e.u, 1), index.node(e.v, 1), weight));
        to_t[e.u] += two * (a(1, 2) - a(2, 2)) - weight;
        to_t[e.v] += two * (a(2, 1) - a(2, 2)) - weight;
        base += two * a(2, 2);
    }
    let mut w_total = Rational::zero();
    for u in 0..n {
        w_total += w[u];
        edges.push((NodeIndex::S, index.node(u, 1), w[u]));
        edges.push((NodeIndex::T, index.node(u, 1), to_t[u]));
    }
    edges.push((NodeIndex::S, NodeIndex::T, base - w_total));
    let instance = CutInstance::new(index.len(), edges, Some((NodeIndex::S, NodeIndex::T)))?;
    Ok(ReductionArtifacts {
        kind: ReductionKind::TwoTo1Flip,
        index,
        instance,
        game: game.clone(),
        aux: AuxRandomness {
            a0: Rational::zero(),
            y: Vec::new(),
            w: w.iter().map(|x| vec![*x]).collect(),
            r: BTreeMap::new(),
        },
        normalization: Normalization::standard(),
        cross_sign: CrossSign::System,
        pi_empty: base,
        pi_single: Vec::new(),
    })
}

/// Reads a profile off a cut. For the k-strategy reduction players with no
/// node on the `s` side get the dummy strategy 0 and the flag is false when
/// some player has two or more nodes there. For the 2-strategy reduction
/// the `s` side means strategy 1 and the flag is always true.
pub fn map_cut_to_profile(artifacts: &ReductionArtifacts, cut: &Cut) -> Result<(StrategyProfile, bool)> {
    let index = artifacts.index;
    if cut.0.len() != index.len() {
        return Err(Error::InvalidCut(format!("mask has {} entries for {} nodes", cut.0.len(), index.len())));
    }
    if !cut.contains(NodeIndex::S) || cut.contains(NodeIndex::T) {
        return Err(Error::InvalidCut("terminal s must be inside and t outside".into()));
    }
    Ok(profile_from_mask(artifacts, &cut.0))
}

fn profile_from_mask(artifacts: &ReductionArtifacts, side: &[bool]) -> (StrategyProfile, bool) {
    let index = artifacts.index;
    match artifacts.kind {
        ReductionKind::TwoTo1Flip => {
            let p = (0..index.n).map(|u| if side[index.node(u, 1)] { 1 } else { 2 }).collect();
            (StrategyProfile(p), true)
        }
        ReductionKind::KTo2Flip => {
            let mut valid = true;
            let mut p = vec![0; index.n];
            for (u, slot) in p.iter_mut().enumerate() {
                for i in 1..=index.per_player {
                    if side[index.node(u, i)] {
                        if *slot != 0 {
                            valid = false;
                        }
                        *slot = i;
                    }
                }
            }
            (StrategyProfile(p), valid)
        }
    }
}

/// The game whose doubled potential the cut values reproduce: for the
/// k-strategy reduction, the normalized game plus dummy strategy 0 with
/// `A((u,i)(v,0)) = Y(u,i)` and `A((u,0)(v,0)) = A0`.
pub fn extended_game(artifacts: &ReductionArtifacts) -> Result<GameInstance> {
    let game = &artifacts.game;
    if artifacts.kind == ReductionKind::TwoTo1Flip {
        return Ok(game.clone());
    }
    let k = game.k();
    let aux = &artifacts.aux;
    let edges = game
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, e)| {
            let rows = (0..=k)
                .map(|i| {
                    (0..=k)
                        .map(|j| match (i, j) {
                            (0, 0) => aux.a0,
                            (i, 0) => aux.y(e.u, i),
                            (0, j) => aux.y(e.v, j),
                            (i, j) => *game.entry(idx, i, j),
                        })
                        .collect()
                })
                .collect();
            (e.u, e.v, rows)
        })
        .collect();
    GameInstance::with_options(
        game.n(),
        k,
        edges,
        GameOptions {
            base: 0,
            range: (Rational::zero(), Rational::one()),
        },
    )
}

/// Checks `delta(S) = 2 * potential(sigma(S))` on every valid cut (the s
/// side holds at most one node per player) and returns the first failing
/// cut. `instance` may differ from the artifacts' own (to test corrupted
/// weights).
pub fn value_identity_witness(artifacts: &ReductionArtifacts, instance: &CutInstance) -> Result<Option<Cut>> {
    let game = extended_game(artifacts)?;
    let two = int(2);
    let mut witness = None;
    for_each_valid_cut(instance, |side| {
        if witness.is_some() {
            return;
        }
        let (profile, valid) = profile_from_mask(artifacts, side);
        if valid && crossing_weight(instance, side) != two * game.potential_unchecked(&profile) {
            witness = Some(Cut(side.to_vec()));
        }
    });
    Ok(witness)
}

/// Local optima of a reduction's cut instance, split by what they map to.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalOptimumAudit {
    pub local_optima: usize,
    /// Local optima with two or more nodes of one player on the `s` side.
    pub invalid: Vec<Cut>,
    /// Valid local optima whose profile is not a PNE of the extended game.
    pub not_pne: Vec<Cut>,
}

impl LocalOptimumAudit {
    pub fn is_clean(&self) -> bool {
        self.invalid.is_empty() && self.not_pne.is_empty()
    }
}

/// Enumerates every cut with `s` inside and `t` outside and classifies the
/// local optima at `radius`.
pub fn audit_local_optima(artifacts: &ReductionArtifacts, radius: usize) -> Result<LocalOptimumAudit> {
    let game = extended_game(artifacts)?;
    let mut audit = LocalOptimumAudit::default();
    for_each_valid_cut(&artifacts.instance, |side| {
        if is_local_opt_mask(&artifacts.instance, side, radius) {
            audit.local_optima += 1;
            let (profile, valid) = profile_from_mask(artifacts, side);
            if !valid {
                audit.invalid.push(Cut(side.to_vec()));
            } else if !game.is_pne_unchecked(&profile) {
                audit.not_pne.push(Cut(side.to_vec()));
            }
        }
    });
    Ok(audit)
}

/// Sets `T` avoiding both terminals for which adding `s` does not strictly
/// increase the crossing weight.
pub fn st_separation_witness(instance: &CutInstance) -> Option<Vec<bool>> {
    let m = instance.vertices();
    assert!((2..=30).contains(&m), "separation check enumerates subsets");
    let (s, t) = instance.terminals()?;
    let free: Vec<usize> = (0..m).filter(|&v| v != s && v != t).collect();
    let mut side = vec![false; m];
    for mask in 0u64..(1u64 << free.len()) {
        for (bit, &v) in free.iter().enumerate() {
            side[v] = mask >> bit & 1 == 1;
        }
        side[s] = false;
        let without = crossing_weight(instance, &side);
        side[s] = true;
        if crossing_weight(instance, &side) <= without {
            return Some(side.clone());
        }
    }
    None
}

/// Input variables of the k-strategy system, in block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    /// Payoff entry of game edge `edge` at strategies `(i, j)`.
    Payoff { edge: usize, i: usize, j: usize },
    R { u: usize, i: usize, j: usize },
    Y { u: usize, i: usize },
    A0,
    W { u: usize, i: usize },
}

impl Variable {
    fn block(&self) -> usize {
        match self {
            Variable::Payoff { .. } => 0,
            Variable::R { .. } => 1,
            Variable::Y { .. } => 2,
            Variable::A0 => 3,
            Variable::W { .. } => 4,
        }
    }
}

type Form = BTreeMap<Variable, Rational>;

fn form_add(form: &mut Form, other: &Form, factor: Rational) {
    for (var, c) in other {
        let entry = form.entry(*var).or_default();
        *entry += *c * factor;
        if entry.is_zero() {
            form.remove(var);
        }
    }
}

fn single(var: Variable, c: Rational) -> Form {
    let mut f = Form::new();
    if !c.is_zero() {
        f.insert(var, c);
    }
    f
}

/// One row of the certified system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemRow {
    pub edge: (usize, usize),
    /// Diagonal variable after the row operation.
    pub pivot: Variable,
    pub coefficients: IntVector<Variable>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakSmoothnessReport {
    pub rows: usize,
    pub columns: usize,
    pub square: bool,
    pub integer: bool,
    /// Symbolic forms evaluated at the inputs reproduce every cut weight.
    pub forms_match: bool,
    pub rank: usize,
    /// Rows after replacing each `(u,i)-t` row by itself plus its player-node
    /// neighbours are block upper-triangular in the variable order.
    pub triangular: bool,
    /// Diagonal entries after the row operation, in row order.
    pub diagonal: Vec<i64>,
    /// Diagonal blocks are `-Id, -Id, 2 deg(u) Id, 2|E|, Id`.
    pub diagonal_expected: bool,
    pub system: Vec<SystemRow>,
    pub variables: Vec<Variable>,
}

impl WeakSmoothnessReport {
    pub fn full_rank(&self) -> bool {
        self.square && self.rank == self.columns
    }

    pub fn certified(&self) -> bool {
        self.square && self.integer && self.forms_match && self.full_rank() && self.triangular && self.diagonal_expected
    }
}

/// Rebuilds every weight of a k-strategy reduction as a linear form over
/// (payoffs, R, Y, A0, W), checks it against the built instance and
/// certifies that the system is square, integral and of full rank.
pub fn check_weak_smoothness(artifacts: &ReductionArtifacts) -> Result<WeakSmoothnessReport> {
    if artifacts.kind != ReductionKind::KTo2Flip {
        return Err(Error::Reduction("certification applies to the k-strategy reduction".into()));
    }
    let game = &artifacts.game;
    let (n, k) = (game.n(), game.k());
    let index = artifacts.index;
    let one = Rational::one();
    let two = int(2);
    let edge_count = int(game.edges().len() as i128);

    let mut variables = Vec::new();
    for (idx, _) in game.edges().iter().enumerate() {
        for i in 1..=k {
            for j in 1..=k {
                variables.push(Variable::Payoff { edge: idx, i, j });
            }
        }
    }
    for u in 0..n {
        for i in 1..=k {
            for j in (i + 1)..=k {
                variables.push(Variable::R { u, i, j });
            }
        }
    }
    for u in 0..n {
        for i in 1..=k {
            variables.push(Variable::Y { u, i });
        }
    }
    variables.push(Variable::A0);
    for u in 0..n {
        for i in 1..=k {
            variables.push(Variable::W { u, i });
        }
    }

    let pi_empty = single(Variable::A0, two * edge_count);
    let pi_single = |u: usize, i: usize| {
        let d = int(game.degree(u) as i128);
        let mut f = pi_empty.clone();
        form_add(&mut f, &single(Variable::Y { u, i }, two * d), one);
        form_add(&mut f, &single(Variable::A0, -two * d), one);
        f
    };

    // (edge, pivot variable, form)
    let mut rows: Vec<((usize, usize), Variable, Form)> = Vec::new();
    let mut player_forms: BTreeMap<usize, Vec<Form>> = BTreeMap::new();
    for (idx, e) in game.edges().iter().enumerate() {
        for i in 1..=k {
            for j in 1..=k {
                let mut f = single(Variable::Y { u: e.u, i }, one);
                let y_sign = match artifacts.cross_sign {
                    CrossSign::System => one,
                    CrossSign::Statement => -one,
                };
                form_add(&mut f, &single(Variable::Y { u: e.v, i: j }, y_sign), one);
                form_add(&mut f, &single(Variable::Payoff { edge: idx, i, j }, -one), one);
                form_add(&mut f, &single(Variable::A0, -one), one);
                let (a, b) = (index.node(e.u, i), index.node(e.v, j));
                player_forms.entry(a).or_default().push(f.clone());
                player_forms.entry(b).or_default().push(f.clone());
                rows.push(((a, b), Variable::Payoff { edge: idx, i, j }, f));
            }
        }
    }
    for u in 0..n {
        for i in 1..=k {
            for j in (i + 1)..=k {
                let mut f = pi_single(u, i);
                form_add(&mut f, &pi_single(u, j), one);
                form_add(&mut f, &pi_empty, -one);
                let mut f = f.into_iter().map(|(v, c)| (v, c / two)).collect::<Form>();
                form_add(&mut f, &single(Variable::R { u, i, j }, -one), one);
                let (a, b) = (index.node(u, i), index.node(u, j));
                player_forms.entry(a).or_default().push(f.clone());
                player_forms.entry(b).or_default().push(f.clone());
                rows.push(((a, b), Variable::R { u, i, j }, f));
            }
        }
    }
    // (u,i)-t rows, and their row-operated versions
    let mut hat_rows = Vec::new();
    for u in 0..n {
        for i in 1..=k {
            let x = index.node(u, i);
            let mut f = pi_single(u, i);
            form_add(&mut f, &pi_empty, -one);
            form_add(&mut f, &single(Variable::W { u, i }, one), one);
            let mut hat = f.clone();
            for g in player_forms.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
                form_add(&mut f, g, -one);
            }
            rows.push(((NodeIndex::T.min(x), x), Variable::Y { u, i }, f.clone()));
            hat_rows.push((rows.len() - 1, core::mem::take(&mut hat)));
        }
    }
    {
        let mut f = pi_empty.clone();
        for u in 0..n {
            for i in 1..=k {
                form_add(&mut f, &single(Variable::W { u, i }, -one), one);
            }
        }
        rows.push(((NodeIndex::S, NodeIndex::T), Variable::A0, f));
    }
    for u in 0..n {
        for i in 1..=k {
            rows.push(((NodeIndex::S, index.node(u, i)), Variable::W { u, i }, single(Variable::W { u, i }, one)));
        }
    }

    let value_of = |var: &Variable| -> Rational {
        let aux = &artifacts.aux;
        match *var {
            Variable::Payoff { edge, i, j } => *game.entry(edge, i, j),
            Variable::R { u, i, j } => aux.r(u, i, j),
            Variable::Y { u, i } => aux.y(u, i),
            Variable::A0 => aux.a0,
            Variable::W { u, i } => aux.w(u, i),
        }
    };
    let forms_match = rows.len() == artifacts.instance.edges().len()
        && rows.iter().all(|((a, b), _, f)| {
            let value = f.iter().fold(Rational::zero(), |acc, (v, c)| acc + *c * value_of(v));
            artifacts.instance.weight(*a, *b) == value
                && artifacts.instance.neighbors(*a).iter().any(|(x, _)| x == b)
        });

    let to_int = |f: &Form| -> Option<IntVector<Variable>> {
        f.iter()
            .map(|(v, c)| as_integer(c).and_then(|x| i64::try_from(x).ok()).map(|x| (*v, x)))
            .collect::<Option<IntVector<Variable>>>()
    };
    let int_rows: Vec<Option<IntVector<Variable>>> = rows.iter().map(|(_, _, f)| to_int(f)).collect();
    let integer = int_rows.iter().all(Option::is_some)
        && hat_rows.iter().all(|(_, f)| to_int(f).is_some());
    let system: Vec<SystemRow> = rows
        .iter()
        .zip(&int_rows)
        .map(|((edge, pivot, _), c)| SystemRow {
            edge: *edge,
            pivot: *pivot,
            coefficients: c.clone().unwrap_or_else(IntVector::new),
        })
        .collect();
    let rank = if integer {
        exact_rank(&system.iter().map(|r| r.coefficients.clone()).collect::<Vec<_>>())
    } else {
        0
    };

    // block-triangular check on the row-operated system
    let mut operated: Vec<(Variable, Form)> = rows.iter().map(|(_, p, f)| (*p, f.clone())).collect();
    for (row, hat) in &hat_rows {
        operated[*row].1 = hat.clone();
    }
    let mut triangular = true;
    let mut diagonal = Vec::with_capacity(operated.len());
    let mut diagonal_expected = true;
    for (pivot, f) in &operated {
        let block = pivot.block();
        for (var, c) in f {
            let earlier = var.block() < block;
            let same_block_off = var.block() == block && var != pivot;
            if !c.is_zero() && (earlier || same_block_off) {
                triangular = false;
            }
        }
        let d = f.get(pivot).copied().unwrap_or_default();
        let d_int = as_integer(&d).and_then(|x| i64::try_from(x).ok()).unwrap_or(0);
        diagonal.push(d_int);
        let expected = match *pivot {
            Variable::Payoff { .. } | Variable::R { .. } => -one,
            Variable::Y { u, .. } => two * int(game.degree(u) as i128),
            Variable::A0 => two * edge_count,
            Variable::W { .. } => one,
        };
        if d != expected {
            diagonal_expected = false;
        }
    }

    Ok(WeakSmoothnessReport {
        rows: rows.len(),
        columns: variables.len(),
        square: rows.len() == variables.len(),
        integer,
        forms_match,
        rank,
        triangular,
        diagonal,
        diagonal_expected,
        system,
        variables,
    })
}
