use nashlab::formats::{from_dimacs, to_dimacs, CutFile, GameFile};
use nashlab_core::maxcut::CutInstance;
use nashlab_core::rational::rat;
use nashlab_core::smoothing::{sample_instance, GameGraph, PerturbationSpec};
use proptest::prelude::*;

fn instance(m: usize, raw: &[(usize, usize, i128, i128)], terminals: bool) -> Option<CutInstance> {
    let mut seen = std::collections::BTreeSet::new();
    let edges: Vec<_> = raw
        .iter()
        .map(|&(a, b, num, den)| (a % m, b % m, rat(num, den)))
        .filter(|&(a, b, _)| a != b && seen.insert((a.min(b), a.max(b))))
        .collect();
    CutInstance::new(m, edges, (terminals && m >= 2).then_some((0, m - 1))).ok()
}

proptest! {
    #[test]
    fn dimacs_and_json_round_trip(
        m in 2usize..10,
        raw in proptest::collection::vec((0usize..10, 0usize..10, -50i128..50, 1i128..9), 0..20),
        terminals in any::<bool>(),
    ) {
        let Some(inst) = instance(m, &raw, terminals) else { return Ok(()) };
        prop_assert_eq!(from_dimacs(&to_dimacs(&inst)).unwrap(), inst.clone());
        let json = serde_json::to_string(&CutFile::from_instance(&inst)).unwrap();
        let back: CutFile = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.to_instance().unwrap(), inst);
    }

    #[test]
    fn game_files_round_trip(n in 2usize..6, k in 1usize..4, seed in any::<u64>(), log2 in 1u32..31) {
        let g = sample_instance(&GameGraph::erdos_renyi(n, k, 0.7, seed), &PerturbationSpec::uniform_full(log2), seed).unwrap();
        let text = serde_json::to_string_pretty(&GameFile::from_game(&g, None)).unwrap();
        let back: GameFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_game().unwrap(), g);
    }
}

#[test]
fn dimacs_comments_and_errors() {
    let text = "c a comment\nc terminals 1 3\np mc 3 1\n\ne 1 2 5\n";
    let inst = from_dimacs(text).unwrap();
    assert_eq!(inst.terminals(), Some((0, 2)));
    assert_eq!(inst.weight(0, 1), rat(5, 1));
    assert!(from_dimacs("p mc 2 1\ne 0 1 1\n").is_err(), "ids are 1-based");
    assert!(from_dimacs("p mc 2 1\ne 1 2 1/0\n").is_err());
    assert!(from_dimacs("e 1 2 1\n").is_err());
}
