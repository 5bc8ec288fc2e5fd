//! Cross-module pipelines: sample, run dynamics, analyze, reduce, lift.

use std::collections::BTreeSet;

use nashlab_core::analysis::{classify, cyclic_sums, inner_product, rank_report, transformation_set};
use nashlab_core::dynamics::{replay, run_bra, Outcome, PivotRule, Replay};
use nashlab_core::game::{for_each_profile, StrategyProfile};
use nashlab_core::maxcut::{crossing_weight, run_flip, Cut, CutInstance};
use nashlab_core::rational::{int, rat};
use nashlab_core::reduction::{
    audit_local_optima, check_weak_smoothness, extended_game, map_cut_to_profile, normalize_payoffs,
    reduce_2_to_1flip, reduce_k_to_2flip, sample_binary_aux, value_identity_witness, AuxRandomness,
};
use nashlab_core::smoothing::{from_maxcut, sample_instance, GameGraph, PerturbationSpec};
use nashlab_core::Rational;
use proptest::prelude::*;

fn game(n: usize, k: usize, seed: u64) -> nashlab_core::GameInstance {
    sample_instance(&GameGraph::complete(n, k), &PerturbationSpec::uniform_full(30), seed).unwrap()
}

#[test]
fn bra_trace_replays_and_analyzes() {
    for seed in 0..20 {
        let g = game(5, 3, seed);
        let start = StrategyProfile::uniform(5, 1);
        let trace = run_bra(&g, &start, &PivotRule::RandomImproving, 10_000, seed).unwrap();
        assert_eq!(trace.outcome, Outcome::Converged);
        let Replay::Valid(again) = replay(&g, &start, &trace.moves).unwrap() else { panic!("replay broke") };
        assert_eq!(again.potentials, trace.potentials);
        let set = transformation_set(&g, &trace, 0..trace.len()).unwrap();
        for (t, v) in set.iter().enumerate() {
            assert_eq!(inner_product(&g, v), trace.deltas[t]);
        }
        if !trace.is_empty() {
            let stats = classify(&g, &trace, 0..trace.len()).unwrap();
            assert!(stats.chain_holds(3));
            assert!(rank_report(&g, &trace, 0..trace.len()).unwrap().all_ok());
            for (_, v) in cyclic_sums(&g, &trace, 0..trace.len()).unwrap() {
                assert!(!v.is_zero());
            }
        }
    }
}

#[test]
fn reduce_then_search_then_lift() {
    for seed in 0..6 {
        let g = normalize_payoffs(&game(3, 2, seed)).unwrap();
        let aux = AuxRandomness::sample(3, 2, 1 << 16, seed).unwrap();
        let art = reduce_k_to_2flip(&g, &aux).unwrap();
        assert!(check_weak_smoothness(&art).unwrap().certified());
        assert_eq!(value_identity_witness(&art, &art.instance).unwrap(), None);
        let mut start = vec![false; art.index.len()];
        start[0] = true;
        let trace = run_flip(&art.instance, 2, &Cut(start), &PivotRule::BestImproving, 10_000, seed).unwrap();
        assert_eq!(trace.outcome, Outcome::Converged);
        let (profile, valid) = map_cut_to_profile(&art, &trace.final_cut).unwrap();
        let ext = extended_game(&art).unwrap();
        if valid {
            let value = crossing_weight(&art.instance, &trace.final_cut.0);
            assert_eq!(value, int(2) * ext.potential(&profile).unwrap());
        }
    }
}

#[test]
fn binary_reduction_local_optima_are_pne() {
    for seed in 0..10 {
        let g = normalize_payoffs(&sample_instance(&GameGraph::erdos_renyi(6, 2, 0.6, seed), &PerturbationSpec::uniform_full(30), seed).unwrap()).unwrap();
        let w = sample_binary_aux(6, 1 << 16, seed).unwrap();
        let art = reduce_2_to_1flip(&g, &w).unwrap();
        let audit = audit_local_optima(&art, 1).unwrap();
        assert!(audit.is_clean() && audit.local_optima > 0);
        let pne: BTreeSet<StrategyProfile> = g.enumerate_pne(1 << 20).unwrap().into_iter().collect();
        assert!(!pne.is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn embedding_potential_is_cut_weight(m in 2usize..8, seed in any::<u64>(), weights in proptest::collection::vec(-8i128..=8, 28)) {
        let mut edges = Vec::new();
        let mut it = weights.iter();
        for u in 0..m {
            for v in (u + 1)..m {
                edges.push((u, v, rat(*it.next().unwrap(), 4)));
            }
        }
        let inst = CutInstance::new(m, edges.clone(), None).unwrap();
        let g = from_maxcut(m, &edges).unwrap();
        let _ = seed;
        for_each_profile(m, 1, 2, |p| {
            let side: Vec<bool> = p.iter().map(|&s| s == 1).collect();
            let pot = g.potential(&StrategyProfile(p.to_vec())).unwrap();
            assert_eq!(pot, crossing_weight(&inst, &side));
        });
    }

    #[test]
    fn bra_potential_is_strictly_increasing(n in 2usize..7, k in 2usize..4, seed in any::<u64>()) {
        let g = game(n, k, seed);
        let trace = run_bra(&g, &StrategyProfile::uniform(n, 1), &PivotRule::FirstImproving, 100_000, seed).unwrap();
        prop_assert!(trace.potentials.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(g.is_pne(trace.final_profile()).unwrap());
        let total: Rational = trace.deltas.iter().sum();
        prop_assert_eq!(total, trace.total_gain());
    }
}
