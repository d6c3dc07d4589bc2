use pathsel::graph_data::PathwayMembership;
use pathsel::inference::{
    chain_concordance, gene_conditionals, load_gene_conditionals, load_models, load_pathway_marginals,
    pathway_marginals, prediction_mse, selection_from_marginals, visited_models, PosteriorSummary,
};
use pathsel::sampler::chain::{bits_to_hex, bitset_from, hex_to_bits, read_trace, write_trace};
use pathsel::sampler::{ChainTrace, TraceRecord};
use nalgebra::DVector;
use proptest::prelude::*;

fn membership() -> PathwayMembership {
    PathwayMembership::from_pairs(
        [("P0", "a"), ("P0", "b"), ("P1", "b"), ("P1", "c"), ("P2", "d")],
        Vec::new(),
    )
    .unwrap()
}

fn record(iteration: usize, theta: &[bool], gamma: &[bool]) -> TraceRecord {
    TraceRecord {
        iteration,
        theta: bitset_from(theta),
        gamma: bitset_from(gamma),
        eta: 0.05,
        log_posterior: -10.0 - iteration as f64,
        k_theta: theta.iter().filter(|&&b| b).count(),
        n_selected_genes: gamma.iter().filter(|&&b| b).count(),
    }
}

fn toy_records() -> Vec<TraceRecord> {
    vec![
        record(1, &[true, false, false], &[true, false, false, false]),
        record(2, &[true, true, false], &[true, true, true, false]),
        record(3, &[true, true, false], &[true, true, true, false]),
        record(4, &[false, true, false], &[false, false, true, false]),
    ]
}

#[test]
fn marginals_are_selection_frequencies() {
    let m = pathway_marginals(&toy_records(), 3).unwrap();
    assert_eq!(m, vec![0.75, 0.75, 0.0]);
    assert!(pathway_marginals(&[], 3).is_err());
}

#[test]
fn gene_conditionals_count_only_qualifying_records() {
    let g = gene_conditionals(&toy_records(), &membership(), &[0]).unwrap();
    // P0 selected in records 1-3; gene a on in all, b in two.
    assert_eq!(g[0].qualifying, 3);
    assert!((g[0].probability - 1.0).abs() < 1e-12);
    assert!((g[1].probability - 2.0 / 3.0).abs() < 1e-12);
    // c and d are not in P0.
    assert!(!g[2].qualified() && !g[3].qualified());
}

#[test]
fn visited_models_are_ranked_by_frequency() {
    let models = visited_models(&toy_records()).unwrap();
    assert_eq!(models.len(), 3);
    assert!((models[0].frequency - 0.5).abs() < 1e-12);
    assert_eq!(models[0].theta, bitset_from(&[true, true, false]));
    let total: f64 = models.iter().map(|m| m.frequency).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn summary_files_round_trip() {
    let m = membership();
    let dir = tempfile::tempdir().unwrap();
    let summary = PosteriorSummary::from_records(&toy_records(), &m, 0.7).unwrap();
    let pw = dir.path().join("pw.csv");
    let genes = dir.path().join("genes.csv");
    let models = dir.path().join("models.csv");
    summary.write_pathway_marginals(&pw, &m).unwrap();
    summary.write_gene_conditionals(&genes, &m).unwrap();
    summary.write_models(&models, 10).unwrap();
    assert_eq!(load_pathway_marginals(&pw, &m).unwrap(), summary.pathway_marginals);
    assert_eq!(load_gene_conditionals(&genes, &m).unwrap().len(), 4);
    assert_eq!(load_models(&models, 3, 4).unwrap(), summary.visited_models);
}

#[test]
fn trace_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let trace = ChainTrace {
        records: toy_records(),
        burn_in: 1,
        seed: 9,
    };
    write_trace(&path, &trace).unwrap();
    let back = read_trace(&path, 3, 4, 1, 9).unwrap();
    assert_eq!(back.records.len(), 4);
    assert_eq!(back.post_burn_in().len(), 3);
    for (a, b) in back.records.iter().zip(&trace.records) {
        assert_eq!((a.iteration, &a.theta, &a.gamma), (b.iteration, &b.theta, &b.gamma));
    }
}

#[test]
fn thresholded_selection_is_repaired_to_validity() {
    let m = membership();
    let g = gene_conditionals(&toy_records(), &m, &[0, 1, 2]).unwrap();
    let (theta, gamma) = selection_from_marginals(&m, &[0.9, 0.9, 0.9], &g, 0.5, 0.5);
    // P2 has no qualifying gene and is dropped.
    assert_eq!(theta, vec![true, true, false]);
    assert!(!gamma[3]);
}

#[test]
fn mse_skips_censored_cases() {
    let pred = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    let obs = DVector::from_vec(vec![2.0, 2.0, 10.0]);
    assert!((prediction_mse(&pred, &obs, None).unwrap() - 50.0 / 3.0).abs() < 1e-12);
    let mse = prediction_mse(&pred, &obs, Some(&[true, true, false])).unwrap();
    assert!((mse - 0.5).abs() < 1e-12);
}

#[test]
fn concordance_is_pearson_correlation() {
    let r = chain_concordance(&[0.1, 0.5, 0.9], &[0.2, 0.6, 1.0]).unwrap().unwrap();
    assert!((r - 1.0).abs() < 1e-12);
    assert_eq!(chain_concordance(&[0.5, 0.5], &[0.1, 0.9]).unwrap(), None);
}

proptest! {
    #[test]
    fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..70)) {
        let hex = bits_to_hex(&bits);
        prop_assert_eq!(hex_to_bits(&hex, bits.len()).unwrap(), bits);
    }

    #[test]
    fn marginals_are_invariant_to_chunking(
        rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 3), 2..60),
        split in 1usize..59,
    ) {
        let records: Vec<TraceRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, t)| record(i + 1, t, &[false; 4]))
            .collect();
        let split = split.min(records.len() - 1);
        let whole = pathway_marginals(&records, 3).unwrap();
        let a = pathway_marginals(&records[..split], 3).unwrap();
        let b = pathway_marginals(&records[split..], 3).unwrap();
        let wa = split as f64 / records.len() as f64;
        for k in 0..3 {
            prop_assert!((whole[k] - (wa * a[k] + (1.0 - wa) * b[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn conditionals_lie_in_unit_interval(
        rows in proptest::collection::vec((proptest::collection::vec(any::<bool>(), 3), proptest::collection::vec(any::<bool>(), 4)), 1..40),
    ) {
        let records: Vec<TraceRecord> = rows.iter().enumerate().map(|(i, (t, g))| record(i + 1, t, g)).collect();
        for c in gene_conditionals(&records, &membership(), &[0, 1, 2]).unwrap() {
            prop_assert!((0.0..=1.0).contains(&c.probability));
        }
    }
}

