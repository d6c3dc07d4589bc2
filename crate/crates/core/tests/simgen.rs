use pathsel::graph_data::GeneNetwork;
use pathsel::simgen::{generate, random_structure, select_truth, SimConfig, StructureConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn column(x: &nalgebra::DMatrix<f64>, j: usize) -> Vec<f64> {
    x.column(j).iter().copied().collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn structure_is_reproducible_and_covers_every_gene() {
    let config = StructureConfig::default();
    let (m1, n1) = random_structure(&config, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let (m2, n2) = random_structure(&config, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!((m1.clone(), n1.clone()), (m2, n2));
    assert_eq!(m1.n_pathways(), config.n_pathways);
    assert_eq!(m1.n_genes(), config.n_genes);
    for j in 0..m1.n_genes() {
        assert!(!m1.pathways_of(j).is_empty());
    }
    assert!(n1.edge_count() > 0);
}

#[test]
fn truth_genes_are_connected_within_picked_pathways() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (m, net) = random_structure(&StructureConfig::default(), &mut rng).unwrap();
    let (pathways, genes) = select_truth(&m, &net, 4, &mut rng).unwrap();
    assert_eq!(pathways.len(), 4);
    for &j in &genes {
        assert!(m.pathways_of(j).iter().any(|k| pathways.contains(k)));
    }
}

#[test]
fn generated_expression_has_the_stated_structure() {
    // A chain a -> b with many samples, plus one irrelevant gene.
    let m = pathsel::graph_data::PathwayMembership::from_pairs(
        [("P", "a"), ("P", "b"), ("Q", "c")],
        Vec::new(),
    )
    .unwrap();
    let net = GeneNetwork::from_edges(3, [(0, 1)]);
    let n = 4000;
    let sim = generate(&m, &net, &SimConfig::new(vec![0], vec![0, 1], n, 1.5, 17)).unwrap();
    let x = &sim.raw_expression;
    let (root, child, other) = (column(x, 0), column(x, 1), column(x, 2));
    let var = |v: &[f64]| {
        let mu = mean(v);
        v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let tol = 4.0 / (n as f64).sqrt();
    assert!(mean(&root).abs() < tol);
    assert!((var(&root) - 1.0).abs() < 0.1);
    assert_eq!(sim.truth.parents[1], vec![0]);
    // Least-squares slope of child on root estimates rho_sim.
    let slope = root.iter().zip(&child).map(|(r, c)| r * c).sum::<f64>() / root.iter().map(|r| r * r).sum::<f64>();
    assert!((slope - sim.truth.rho_sim).abs() < 0.05);
    assert!(correlation(&other, &root).abs() < tol);
    // The response carries the true genes' signal.
    let y: Vec<f64> = sim.dataset.response.iter().copied().collect();
    assert!(correlation(&y, &root).abs() > 0.5);
    assert_eq!(sim.truth.beta[2], 0.0);
    assert_eq!(sim.truth.beta[0].abs(), 1.5);
}
