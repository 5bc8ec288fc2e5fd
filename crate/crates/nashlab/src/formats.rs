//! JSON and plain-text file formats.
//!
//! Payoff matrices use integer numerators over one declared denominator;
//! every other rational is written as a `[numerator, denominator]` pair.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

use nashlab_core::congestion::CongestionGame;
use nashlab_core::dynamics::{BrTrace, Outcome, PivotRule};
use nashlab_core::game::{GameOptions, Move};
use nashlab_core::maxcut::{Cut, CutInstance};
use nashlab_core::rational::{common_denominator, rat};
use nashlab_core::reduction::{
    reduce_2_to_1flip, reduce_k_to_2flip_with, AuxRandomness, CrossSign, ReductionArtifacts, ReductionKind,
    Variable, WeakSmoothnessReport,
};
use nashlab_core::smoothing::{Distribution, PerturbationSpec};
use nashlab_core::{GameInstance, Rational, StrategyProfile};

/// A rational as `[numerator, denominator]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frac(pub i128, pub i128);

impl From<Rational> for Frac {
    fn from(r: Rational) -> Self {
        Frac(*r.numer(), *r.denom())
    }
}

impl From<&Rational> for Frac {
    fn from(r: &Rational) -> Self {
        Frac(*r.numer(), *r.denom())
    }
}

impl Frac {
    pub fn to_rational(self) -> Result<Rational> {
        if self.1 == 0 {
            bail!("zero denominator in {}/{}", self.0, self.1);
        }
        Ok(rat(self.0, self.1))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn one() -> i128 {
    1
}

fn base_one() -> usize {
    1
}

fn is_base_one(b: &usize) -> bool {
    *b == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFile {
    pub u: usize,
    pub v: usize,
    pub matrix: Vec<Vec<i128>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub n: usize,
    pub k: usize,
    pub payoff_denominator: i128,
    pub edges: Vec<EdgeFile>,
    /// 0 when the matrices include the dummy strategy (extended games).
    #[serde(default = "base_one", skip_serializing_if = "is_base_one")]
    pub base: usize,
    /// Payoff range as two rationals; defaults to [-1, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[Frac; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Value>,
}

impl GameFile {
    pub fn from_game(game: &GameInstance, meta: Option<Value>) -> Self {
        let mut all = Vec::new();
        for idx in 0..game.edges().len() {
            all.extend(game.matrix_rows(idx).into_iter().flatten());
        }
        let den = common_denominator(all.iter());
        let edges = game
            .edges()
            .iter()
            .enumerate()
            .map(|(idx, e)| EdgeFile {
                u: e.u,
                v: e.v,
                matrix: game
                    .matrix_rows(idx)
                    .iter()
                    .map(|row| row.iter().map(|x| (x * Rational::from_integer(den)).to_integer()).collect())
                    .collect(),
            })
            .collect();
        let (lo, hi) = game.range();
        let default_range = *lo == -Rational::from_integer(1) && *hi == Rational::from_integer(1);
        GameFile {
            n: game.n(),
            k: game.k(),
            payoff_denominator: den,
            edges,
            base: game.base(),
            range: (!default_range).then(|| [Frac::from(lo), Frac::from(hi)]),
            meta,
        }
    }

    pub fn to_game(&self) -> Result<GameInstance> {
        if self.payoff_denominator <= 0 {
            bail!("payoff_denominator must be positive");
        }
        let range = match &self.range {
            Some([lo, hi]) => (lo.to_rational()?, hi.to_rational()?),
            None => (-Rational::from_integer(1), Rational::from_integer(1)),
        };
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let rows = e
                    .matrix
                    .iter()
                    .map(|row| row.iter().map(|&x| rat(x, self.payoff_denominator)).collect())
                    .collect();
                (e.u, e.v, rows)
            })
            .collect();
        Ok(GameInstance::with_options(self.n, self.k, edges, GameOptions { base: self.base, range })?)
    }
}

pub fn load_game(path: &Path) -> Result<GameInstance> {
    read_json::<GameFile>(path)?.to_game()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecFile {
    /// `phi_den = 0` is the unbounded-density limit (no noise).
    pub phi_num: i128,
    pub phi_den: i128,
    pub distribution: String,
    pub grid_log2: u32,
}

impl SpecFile {
    pub fn to_spec(&self) -> Result<PerturbationSpec> {
        let distribution = match self.distribution.as_str() {
            "uniform_full" => Distribution::UniformFull,
            "uniform_window" => Distribution::UniformWindow,
            other => bail!("unknown distribution {other:?}"),
        };
        if self.grid_log2 > 62 {
            bail!("grid_log2 = {} is too fine", self.grid_log2);
        }
        let phi = if self.phi_den == 0 { None } else { Some(rat(self.phi_num, self.phi_den)) };
        Ok(PerturbationSpec::new(phi, distribution, 1i128 << self.grid_log2)?)
    }

    pub fn from_spec(spec: &PerturbationSpec) -> Self {
        let (phi_num, phi_den) = match &spec.phi {
            Some(p) => (*p.numer(), *p.denom()),
            None => (1, 0),
        };
        SpecFile {
            phi_num,
            phi_den,
            distribution: match spec.distribution {
                Distribution::UniformFull => "uniform_full".into(),
                Distribution::UniformWindow => "uniform_window".into(),
            },
            grid_log2: spec.grid_resolution.trailing_zeros(),
        }
    }

    /// Display form of phi for CSV rows.
    pub fn phi_label(&self) -> String {
        if self.phi_den == 0 {
            "inf".into()
        } else {
            rat(self.phi_num, self.phi_den).to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFile {
    pub initial: Vec<usize>,
    /// `[player, strategy]` pairs.
    pub moves: Vec<[usize; 2]>,
    pub deltas: Vec<Frac>,
    pub outcome: String,
    pub rule: String,
    pub seed: u64,
}

impl TraceFile {
    pub fn from_trace(trace: &BrTrace, rule: &PivotRule, seed: u64) -> Self {
        TraceFile {
            initial: trace.initial.0.clone(),
            moves: trace.moves.iter().map(|m| [m.player, m.strategy]).collect(),
            deltas: trace.deltas.iter().map(Frac::from).collect(),
            outcome: trace.outcome.name().into(),
            rule: rule.name().into(),
            seed,
        }
    }

    pub fn moves(&self) -> Vec<Move> {
        self.moves.iter().map(|m| Move::new(m[0], m[1])).collect()
    }

    pub fn initial(&self) -> StrategyProfile {
        StrategyProfile(self.initial.clone())
    }
}

pub fn outcome_from_name(name: &str) -> Result<Outcome> {
    Ok(match name {
        "converged" => Outcome::Converged,
        "step_cap_reached" => Outcome::StepCapReached,
        "script_exhausted" => Outcome::ScriptExhausted,
        other => bail!("unknown outcome {other:?}"),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutFile {
    pub vertices: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminals: Option<[usize; 2]>,
    /// `[u, v, numerator, denominator]`.
    pub edges: Vec<(usize, usize, i128, i128)>,
}

impl CutFile {
    pub fn from_instance(instance: &CutInstance) -> Self {
        CutFile {
            vertices: instance.vertices(),
            terminals: instance.terminals().map(|(s, t)| [s, t]),
            edges: instance.edges().iter().map(|(u, v, w)| (*u, *v, *w.numer(), *w.denom())).collect(),
        }
    }

    pub fn to_instance(&self) -> Result<CutInstance> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(u, v, num, den) in &self.edges {
            edges.push((u, v, Frac(num, den).to_rational()?));
        }
        Ok(CutInstance::new(self.vertices, edges, self.terminals.map(|[s, t]| (s, t)))?)
    }
}

/// The `s` side of a cut.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSetFile {
    pub vertices: usize,
    pub members: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Frac>,
}

impl CutSetFile {
    pub fn to_cut(&self) -> Result<Cut> {
        if let Some(&v) = self.members.iter().find(|&&v| v >= self.vertices) {
            bail!("member {v} outside {} vertices", self.vertices);
        }
        Ok(Cut::from_members(self.vertices, &self.members))
    }
}

/// DIMACS-like text: `p mc <vertices> <edges>`, then `e u v num/den` with
/// 1-based vertex ids; terminals go in a `c terminals s t` comment.
pub fn to_dimacs(instance: &CutInstance) -> String {
    let mut out = String::new();
    if let Some((s, t)) = instance.terminals() {
        out.push_str(&format!("c terminals {} {}\n", s + 1, t + 1));
    }
    out.push_str(&format!("p mc {} {}\n", instance.vertices(), instance.edges().len()));
    for (u, v, w) in instance.edges() {
        out.push_str(&format!("e {} {} {}/{}\n", u + 1, v + 1, w.numer(), w.denom()));
    }
    out
}

pub fn from_dimacs(text: &str) -> Result<CutInstance> {
    let mut vertices = None;
    let mut terminals = None;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || anyhow!("line {}: malformed {line:?}", lineno + 1);
        let id = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| bad())?;
            v.checked_sub(1).ok_or_else(bad)
        };
        match fields.as_slice() {
            [] => {}
            ["c", "terminals", s, t] => terminals = Some((id(s)?, id(t)?)),
            ["c", ..] => {}
            ["p", "mc", m, _] => vertices = Some(m.parse::<usize>().map_err(|_| bad())?),
            ["e", u, v, w] => {
                let (num, den) = w.split_once('/').unwrap_or((w, "1"));
                let num: i128 = num.parse().map_err(|_| bad())?;
                let den: i128 = den.parse().map_err(|_| bad())?;
                edges.push((id(u)?, id(v)?, Frac(num, den).to_rational()?));
            }
            _ => return Err(bad()),
        }
    }
    let vertices = vertices.ok_or_else(|| anyhow!("missing `p mc` header"))?;
    Ok(CutInstance::new(vertices, edges, terminals)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxFile {
    pub a0: Frac,
    /// `y[u][i - 1]`
    pub y: Vec<Vec<Frac>>,
    /// `w[u][i - 1]`; a single column for the 2-strategy reduction.
    pub w: Vec<Vec<Frac>>,
    /// `[u, i, j, numerator, denominator]` with `i < j`.
    pub r: Vec<(usize, usize, usize, i128, i128)>,
}

impl AuxFile {
    pub fn from_aux(aux: &AuxRandomness) -> Self {
        let rows = |m: &Vec<Vec<Rational>>| m.iter().map(|r| r.iter().map(Frac::from).collect()).collect();
        AuxFile {
            a0: aux.a0.into(),
            y: rows(&aux.y),
            w: rows(&aux.w),
            r: aux.r.iter().map(|(&(u, i, j), v)| (u, i, j, *v.numer(), *v.denom())).collect(),
        }
    }

    pub fn to_aux(&self) -> Result<AuxRandomness> {
        let rows = |m: &Vec<Vec<Frac>>| -> Result<Vec<Vec<Rational>>> {
            m.iter().map(|r| r.iter().map(|f| f.to_rational()).collect()).collect()
        };
        let mut r = BTreeMap::new();
        for &(u, i, j, num, den) in &self.r {
            r.insert((u, i, j), Frac(num, den).to_rational()?);
        }
        Ok(AuxRandomness {
            a0: self.a0.to_rational()?,
            y: rows(&self.y)?,
            w: rows(&self.w)?,
            r,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub node: usize,
    /// `"s"`, `"t"` or `"player"`.
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemFile {
    pub variables: Vec<String>,
    /// One row per cut edge: `[a, b]` and sparse `[variable index, coefficient]` pairs.
    pub rows: Vec<SystemRowFile>,
    pub square: bool,
    pub integer: bool,
    pub rank: usize,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemRowFile {
    pub edge: [usize; 2],
    pub coefficients: Vec<(usize, i64)>,
}

pub fn variable_name(v: &Variable) -> String {
    match *v {
        Variable::Payoff { edge, i, j } => format!("A[{edge}]({i},{j})"),
        Variable::R { u, i, j } => format!("R({u},{i},{j})"),
        Variable::Y { u, i } => format!("Y({u},{i})"),
        Variable::A0 => "A0".into(),
        Variable::W { u, i } => format!("W({u},{i})"),
    }
}

impl SystemFile {
    pub fn from_report(report: &WeakSmoothnessReport) -> Self {
        let position: BTreeMap<Variable, usize> = report.variables.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        SystemFile {
            variables: report.variables.iter().map(variable_name).collect(),
            rows: report
                .system
                .iter()
                .map(|row| SystemRowFile {
                    edge: [row.edge.0, row.edge.1],
                    coefficients: row.coefficients.iter().map(|(v, c)| (position[v], *c)).collect(),
                })
                .collect(),
            square: report.square,
            integer: report.integer,
            rank: report.rank,
            certified: report.certified(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactsFile {
    /// `"k_to_2flip"` or `"2_to_1flip"`.
    pub kind: String,
    pub per_player: usize,
    pub nodes: Vec<NodeEntry>,
    pub normalization: NormalizationFile,
    pub cross_sign: String,
    pub aux: AuxFile,
    /// The normalized game the weights were built from.
    pub game: GameFile,
    pub instance: CutFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationFile {
    pub scale: Frac,
    pub shift: Frac,
}

impl ArtifactsFile {
    pub fn from_artifacts(art: &ReductionArtifacts, system: Option<&WeakSmoothnessReport>, meta: Option<Value>) -> Self {
        let index = art.index;
        let mut nodes = vec![
            NodeEntry { node: 0, role: "s".into(), player: None, strategy: None },
            NodeEntry { node: 1, role: "t".into(), player: None, strategy: None },
        ];
        for node in 2..index.len() {
            let (u, i) = index.decode(node).expect("player node");
            nodes.push(NodeEntry { node, role: "player".into(), player: Some(u), strategy: Some(i) });
        }
        ArtifactsFile {
            kind: match art.kind {
                ReductionKind::KTo2Flip => "k_to_2flip".into(),
                ReductionKind::TwoTo1Flip => "2_to_1flip".into(),
            },
            per_player: index.per_player,
            nodes,
            normalization: NormalizationFile {
                scale: art.normalization.scale.into(),
                shift: art.normalization.shift.into(),
            },
            cross_sign: match art.cross_sign {
                CrossSign::System => "system".into(),
                CrossSign::Statement => "statement".into(),
            },
            aux: AuxFile::from_aux(&art.aux),
            game: GameFile::from_game(&art.game, None),
            instance: CutFile::from_instance(&art.instance),
            system: system.map(SystemFile::from_report),
            meta,
        }
    }

    /// Rebuilds the artifacts from the stored game and aux values and
    /// checks that the stored cut instance matches.
    pub fn to_artifacts(&self) -> Result<ReductionArtifacts> {
        let art = self.rebuild()?;
        if self.instance.to_instance()? != art.instance {
            bail!("stored cut instance does not match the rebuilt reduction");
        }
        Ok(art)
    }

    /// Re-runs the reduction on the stored game and aux values.
    pub fn rebuild(&self) -> Result<ReductionArtifacts> {
        let game = self.game.to_game()?;
        let aux = self.aux.to_aux()?;
        let art = match self.kind.as_str() {
            "k_to_2flip" => {
                let sign = match self.cross_sign.as_str() {
                    "system" => CrossSign::System,
                    "statement" => CrossSign::Statement,
                    other => bail!("unknown cross_sign {other:?}"),
                };
                reduce_k_to_2flip_with(&game, &aux, sign)?
            }
            "2_to_1flip" => {
                let w: Vec<Rational> = aux.w.iter().map(|row| row.first().copied()).collect::<Option<_>>().ok_or_else(|| anyhow!("empty W row"))?;
                reduce_2_to_1flip(&game, &w)?
            }
            other => bail!("unknown reduction kind {other:?}"),
        };
        Ok(art)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongestionPlayerFile {
    pub strategies: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongestionFile {
    pub resources: usize,
    pub k: usize,
    pub ell: usize,
    pub players: Vec<CongestionPlayerFile>,
    /// Common denominator of the differential numerators.
    #[serde(default = "one")]
    pub denominator: i128,
    /// Resource id (as a string key) to `d_e(0..=ell)` numerators.
    pub differentials: BTreeMap<String, Vec<i128>>,
    /// Accept any nondecreasing costs instead of unit-bounded differentials.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub monotone_only: bool,
}

impl CongestionFile {
    pub fn to_game(&self) -> Result<CongestionGame> {
        if self.denominator <= 0 {
            bail!("denominator must be positive");
        }
        let mut diffs = vec![None; self.resources];
        for (key, values) in &self.differentials {
            let e: usize = key.parse().with_context(|| format!("resource key {key:?}"))?;
            if e >= self.resources {
                bail!("differentials for unknown resource {e}");
            }
            diffs[e] = Some(values.iter().map(|&x| rat(x, self.denominator)).collect::<Vec<_>>());
        }
        let diffs: Vec<Vec<Rational>> = diffs
            .into_iter()
            .enumerate()
            .map(|(e, d)| d.ok_or_else(|| anyhow!("missing differentials for resource {e}")))
            .collect::<Result<_>>()?;
        let strategies = self.players.iter().map(|p| p.strategies.clone()).collect();
        let game = if self.monotone_only {
            CongestionGame::new_monotone(self.resources, self.k, self.ell, strategies, diffs)?
        } else {
            CongestionGame::new(self.resources, self.k, self.ell, strategies, diffs)?
        };
        Ok(game)
    }

    pub fn from_game(game: &CongestionGame) -> Self {
        let den = common_denominator(game.differentials().iter().flatten());
        CongestionFile {
            resources: game.resources(),
            k: game.k(),
            ell: game.ell(),
            players: (0..game.players())
                .map(|p| CongestionPlayerFile { strategies: game.strategies(p).to_vec() })
                .collect(),
            denominator: den,
            differentials: game
                .differentials()
                .iter()
                .enumerate()
                .map(|(e, d)| {
                    (e.to_string(), d.iter().map(|x| (x * Rational::from_integer(den)).to_integer()).collect())
                })
                .collect(),
            monotone_only: false,
        }
    }
}
