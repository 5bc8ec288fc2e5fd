//! Smoothed instances: independent bounded-density payoffs on a fine grid.
//!
//! Samples are integer multiples of `1/R`, so every instance stays exact and
//! ties are reproducible. Each payoff entry `(edge, i, j)` draws from its own
//! derived stream, which makes sampling order-independent.

use alloc::format;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{GameInstance, GameOptions};
use crate::rational::{clamp, int, rat, Rational};
use crate::rng::{self, TAG_GRAPH, TAG_PAYOFF};

pub const DEFAULT_GRID_LOG2: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Uniform on `[-1, 1]` (density 1/2).
    UniformFull,
    /// Base value plus uniform noise of half-width `1/(2 phi)`, clipped to `[-1, 1]`.
    UniformWindow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationSpec {
    /// Density bound; `None` is the unbounded limit (zero-width noise).
    pub phi: Option<Rational>,
    pub distribution: Distribution,
    pub grid_resolution: i128,
}

impl PerturbationSpec {
    pub fn new(phi: Option<Rational>, distribution: Distribution, grid_resolution: i128) -> Result<Self> {
        let spec = PerturbationSpec {
            phi,
            distribution,
            grid_resolution,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform_full(grid_log2: u32) -> Self {
        PerturbationSpec {
            phi: Some(rat(1, 2)),
            distribution: Distribution::UniformFull,
            grid_resolution: 1i128 << grid_log2,
        }
    }

    pub fn window(phi: Rational, grid_log2: u32) -> Result<Self> {
        Self::new(Some(phi), Distribution::UniformWindow, 1i128 << grid_log2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 1 {
            return Err(Error::InvalidSpec("grid resolution must be positive".into()));
        }
        match (&self.phi, self.distribution) {
            (None, Distribution::UniformFull) => Err(Error::InvalidSpec(
                "uniform_full needs a finite density bound".into(),
            )),
            (None, Distribution::UniformWindow) => Ok(()),
            (Some(phi), dist) => {
                if !phi.is_positive() {
                    return Err(Error::InvalidSpec(format!("phi = {phi} must be positive")));
                }
                if dist == Distribution::UniformFull && *phi < rat(1, 2) {
                    return Err(Error::InvalidSpec(format!(
                        "uniform_full has density 1/2 but phi = {phi}"
                    )));
                }
                if int(self.grid_resolution) < *phi * int(2) {
                    return Err(Error::InvalidSpec(format!(
                        "grid resolution {} is coarser than 2 phi",
                        self.grid_resolution
                    )));
                }
                Ok(())
            }
        }
    }

    /// Noise half-width `1/(2 phi)`, zero in the unbounded limit.
    pub fn half_width(&self) -> Rational {
        match &self.phi {
            Some(phi) => (*phi * int(2)).recip(),
            None => Rational::zero(),
        }
    }

    fn half_width_steps(&self) -> i128 {
        (self.half_width() * int(self.grid_resolution)).floor().to_integer()
    }
}

/// Topology plus strategy count, before payoffs are attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameGraph {
    pub n: usize,
    pub k: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GameGraph {
    pub fn new(n: usize, k: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        for e in edges.iter_mut() {
            if e.0 >= n || e.1 >= n {
                return Err(Error::PlayerOutOfRange { player: e.0.max(e.1), n });
            }
            if e.0 == e.1 {
                return Err(Error::invalid("self-loop in game graph"));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate edge in game graph"));
        }
        Ok(GameGraph { n, k, edges })
    }

    pub fn complete(n: usize, k: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        GameGraph { n, k, edges }
    }

    pub fn path(n: usize, k: usize) -> Self {
        let edges = (1..n).map(|v| (v - 1, v)).collect();
        GameGraph { n, k, edges }
    }

    /// Erdős–Rényi graph; each pair is kept independently with probability `p`.
    pub fn erdos_renyi(n: usize, k: usize, p: f64, seed: u64) -> Self {
        let p = p.clamp(0.0, 1.0);
        let edges = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|&(u, v)| rng::stream(seed, TAG_GRAPH, u as u64, v as u64, 0).gen_bool(p))
            .collect();
        GameGraph { n, k, edges }
    }
}

fn entry_rng(seed: u64, edge: usize, i: usize, j: usize) -> rand_chacha::ChaCha8Rng {
    rng::stream(seed, TAG_PAYOFF, edge as u64, i as u64, j as u64)
}

fn window_sample(base: &Rational, spec: &PerturbationSpec, steps: i128, rng: &mut rand_chacha::ChaCha8Rng) -> Rational {
    let r = spec.grid_resolution;
    let snapped = if (base * int(r)).is_integer() {
        *base
    } else {
        (base * int(r)).round() / int(r)
    };
    let noise = rng::uniform_inclusive(rng, -steps, steps);
    clamp(snapped + rat(noise, r), &-Rational::one(), &Rational::one())
}

/// Draws every payoff entry independently from `spec`; uniform-window noise
/// is centred on zero here.
pub fn sample_instance(graph: &GameGraph, spec: &PerturbationSpec, seed: u64) -> Result<GameInstance> {
    spec.validate()?;
    let k = graph.k;
    let r = spec.grid_resolution;
    let steps = spec.half_width_steps();
    let edges = graph
        .edges
        .iter()
        .enumerate()
        .map(|(idx, &(u, v))| {
            let rows = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| {
                            let mut rng = entry_rng(seed, idx, i, j);
                            match spec.distribution {
                                Distribution::UniformFull => rat(rng::uniform_inclusive(&mut rng, -r, r), r),
                                Distribution::UniformWindow => {
                                    window_sample(&Rational::zero(), spec, steps, &mut rng)
                                }
                            }
                        })
                        .collect()
                })
                .collect();
            (u, v, rows)
        })
        .collect();
    GameInstance::new(graph.n, k, edges)
}

/// Adds independent uniform noise of half-width `1/(2 phi)` to every entry of
/// `base` (snapped to the grid) and clips to `[-1, 1]`.
pub fn perturb_instance(base: &GameInstance, spec: &PerturbationSpec, seed: u64) -> Result<GameInstance> {
    spec.validate()?;
    let one = Rational::one();
    for (idx, e) in base.edges().iter().enumerate() {
        for row in base.matrix_rows(idx) {
            for value in row {
                if value.abs() > one {
                    return Err(Error::PayoffOutOfRange { u: e.u, v: e.v, value });
                }
            }
        }
    }
    let steps = spec.half_width_steps();
    let lo = base.base();
    let edges = base
        .edges()
        .iter()
        .enumerate()
        .map(|(idx, e)| {
            let rows = base
                .matrix_rows(idx)
                .into_iter()
                .enumerate()
                .map(|(i, row)| {
                    row.into_iter()
                        .enumerate()
                        .map(|(j, value)| {
                            let mut rng = entry_rng(seed, idx, i + lo, j + lo);
                            window_sample(&value, spec, steps, &mut rng)
                        })
                        .collect()
                })
                .collect();
            (e.u, e.v, rows)
        })
        .collect();
    GameInstance::with_options(
        base.n(),
        base.k(),
        edges,
        GameOptions {
            base: base.base(),
            range: (-Rational::one(), Rational::one()),
        },
    )
}

/// Embeds a weighted max-cut instance as a 2-strategy game: each edge of
/// weight `w` gets the matrix `[[0, w], [w, 0]]`, so the potential of a
/// profile is the weight of the cut `{u : sigma_u = 1}`.
pub fn from_maxcut(vertices: usize, edges: &[(usize, usize, Rational)]) -> Result<GameInstance> {
    let mut lo = -Rational::one();
    let mut hi = Rational::one();
    for (_, _, w) in edges {
        if *w < lo {
            lo = *w;
        }
        if *w > hi {
            hi = *w;
        }
    }
    let zero = Rational::zero();
    let rows = edges
        .iter()
        .map(|&(u, v, w)| (u, v, alloc::vec![alloc::vec![zero, w], alloc::vec![w, zero]]))
        .collect();
    GameInstance::with_options(vertices, 2, rows, GameOptions { base: 1, range: (lo, hi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{for_each_profile, StrategyProfile};

    fn all_entries(game: &GameInstance) -> Vec<Rational> {
        (0..game.edges().len())
            .flat_map(|idx| game.matrix_rows(idx).into_iter().flatten())
            .collect()
    }

    #[test]
    fn spec_validation() {
        assert!(PerturbationSpec::new(Some(rat(1, 4)), Distribution::UniformFull, 1 << 10).is_err());
        assert!(PerturbationSpec::new(Some(int(8)), Distribution::UniformWindow, 4).is_err());
        assert!(PerturbationSpec::new(Some(int(2)), Distribution::UniformWindow, 4).is_ok());
        assert!(PerturbationSpec::new(None, Distribution::UniformFull, 4).is_err());
        assert!(PerturbationSpec::new(Some(int(0)), Distribution::UniformWindow, 4).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_on_grid() {
        let graph = GameGraph::complete(4, 3);
        let spec = PerturbationSpec::uniform_full(12);
        let a = sample_instance(&graph, &spec, 99).unwrap();
        let b = sample_instance(&graph, &spec, 99).unwrap();
        let c = sample_instance(&graph, &spec, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for x in all_entries(&a) {
            assert!(x.abs() <= Rational::one());
            assert!((x * int(1 << 12)).is_integer());
        }
    }

    #[test]
    fn complete_triangle_shape() {
        let g = sample_instance(&GameGraph::complete(3, 2), &PerturbationSpec::uniform_full(30), 1).unwrap();
        assert_eq!(g.edges().len(), 3);
        assert!((0..3).all(|i| g.matrix_rows(i).len() == 2 && g.matrix_rows(i)[0].len() == 2));
    }

    #[test]
    fn zero_noise_returns_base() {
        let base = sample_instance(&GameGraph::complete(3, 2), &PerturbationSpec::uniform_full(16), 5).unwrap();
        let spec = PerturbationSpec::new(None, Distribution::UniformWindow, 1 << 16).unwrap();
        assert_eq!(perturb_instance(&base, &spec, 11).unwrap(), base);
    }

    #[test]
    fn window_around_zero_stays_within_half_width() {
        let base = GameInstance::new(3, 2, alloc::vec![
            (0, 1, alloc::vec![alloc::vec![int(0); 2]; 2]),
            (1, 2, alloc::vec![alloc::vec![int(0); 2]; 2]),
        ])
        .unwrap();
        let spec = PerturbationSpec::window(int(1), 20).unwrap();
        let out = perturb_instance(&base, &spec, 3).unwrap();
        for x in all_entries(&out) {
            assert!(x.abs() <= rat(1, 2));
        }
        assert_eq!(out, perturb_instance(&base, &spec, 3).unwrap());
        assert_eq!(out.edges().len(), base.edges().len());
    }

    #[test]
    fn window_is_clipped_to_unit_interval() {
        let base = crate::game::single_edge(2, alloc::vec![alloc::vec![int(1); 2]; 2]).unwrap();
        let spec = PerturbationSpec::window(rat(1, 2), 10).unwrap();
        for seed in 0..20 {
            let out = perturb_instance(&base, &spec, seed).unwrap();
            assert!(all_entries(&out).iter().all(|x| *x >= Rational::zero() && *x <= Rational::one()));
        }
    }

    #[test]
    fn maxcut_embedding() {
        let g = from_maxcut(2, &[(0, 1, int(1))]).unwrap();
        assert_eq!(g, crate::game::single_edge(2, crate::game::anti_diagonal()).unwrap());

        let tri = from_maxcut(3, &[(0, 1, int(1)), (1, 2, int(1)), (0, 2, int(1))]).unwrap();
        assert_eq!(tri.potential(&StrategyProfile(alloc::vec![1, 1, 2])).unwrap(), int(2));

        let empty = from_maxcut(3, &[]).unwrap();
        for_each_profile(3, 1, 2, |p| {
            assert_eq!(empty.potential(&StrategyProfile(p.to_vec())).unwrap(), int(0));
        });
    }

    #[test]
    fn graph_constructors() {
        assert_eq!(GameGraph::path(4, 2).edges, alloc::vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(GameGraph::complete(4, 2).edges.len(), 6);
        assert_eq!(GameGraph::erdos_renyi(6, 2, 1.0, 0).edges.len(), 15);
        assert!(GameGraph::erdos_renyi(6, 2, 0.0, 0).edges.is_empty());
        assert_eq!(GameGraph::new(3, 2, alloc::vec![(2, 0)]).unwrap().edges, alloc::vec![(0, 2)]);
        assert!(GameGraph::new(3, 2, alloc::vec![(1, 1)]).is_err());
    }
}
