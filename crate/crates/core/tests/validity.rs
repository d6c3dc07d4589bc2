mod common;

use pathsel::graph_data::{ModelState, PathwayMembership};
use pathsel::priors::{check_validity, ViolationKind};
use pathsel::sampler::{propose_move, SelectionIndex};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn membership() -> PathwayMembership {
    PathwayMembership::from_pairs(
        [
            ("A", "g0"),
            ("A", "g1"),
            ("A", "g2"),
            ("B", "g1"),
            ("B", "g2"),
            ("C", "g2"),
            ("C", "g3"),
            ("C", "g4"),
        ],
        Vec::new(),
    )
    .unwrap()
}

#[test]
fn validity_matches_definition_exhaustively() {
    let m = membership();
    for tb in 0..8u32 {
        let theta: Vec<bool> = (0..3).map(|k| tb >> k & 1 == 1).collect();
        for gamma in common::all_configurations(5) {
            let report = check_validity(&m, &theta, &gamma);
            assert_eq!(report.valid(), common::is_valid(&m, &theta, &gamma), "{theta:?} {gamma:?}");
        }
    }
}

#[test]
fn violation_kinds_are_reported() {
    let m = membership();
    let report = check_validity(&m, &[true, false, false], &[false, false, false, true, false]);
    assert!(report.has(ViolationKind::EmptyPathway));
    assert!(report.has(ViolationKind::OrphanGene));
    let report = check_validity(&m, &[true, true, false], &[false, true, true, false, false]);
    assert!(report.has(ViolationKind::DuplicateSubset));
}

fn state_from(theta: &[bool], gamma: &[bool]) -> ModelState {
    let mut s = ModelState::empty(theta.len(), gamma.len(), 0.0);
    s.theta = theta.to_vec();
    s.gamma = gamma.to_vec();
    s
}

proptest! {
    #[test]
    fn proposals_keep_states_valid(seed in any::<u64>(), steps in 1usize..200) {
        let m = membership();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = vec![true, false, false];
        let mut gamma = vec![true, false, false, false, false];
        for _ in 0..steps {
            let state = state_from(&theta, &gamma);
            let proposal = propose_move(&state, &m, &mut rng);
            let mut index = SelectionIndex::new(&m, &theta, &gamma);
            index.apply(&m, &proposal.as_move());
            prop_assert!(common::is_valid(&m, index.theta(), index.gamma()));
            theta = index.theta().to_vec();
            gamma = index.gamma().to_vec();
        }
    }
}
