use proptest::prelude::*;
use radsgd_core::topology::Graph;

fn assert_valid(g: &Graph) {
    let n = g.n();
    for i in 0..n {
        assert!(!g.has_edge(i, i));
        for j in 0..n {
            assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
        }
    }
    assert!(g.is_connected());
    let degrees = g.degrees();
    for i in 0..n {
        assert_eq!(degrees.degrees[i], g.adjacency_matrix().row(i).iter().sum::<f64>() as usize);
        assert!(degrees.degrees[i] < n);
    }
}

#[test]
fn named_graphs_are_valid() {
    for n in 3..12 {
        assert_valid(&Graph::ring(n).unwrap());
        assert_valid(&Graph::complete(n).unwrap());
        assert_valid(&Graph::path(n).unwrap());
        assert_valid(&Graph::star(n).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn erdos_renyi_is_valid_and_pure(n in 2usize..30, q in 0.25f64..1.0, seed in any::<u64>()) {
        let g = Graph::erdos_renyi(n, q, seed).unwrap();
        assert_valid(&g);
        prop_assert_eq!(&g, &Graph::erdos_renyi(n, q, seed).unwrap());
    }

    #[test]
    fn laplacian_is_psd_with_positive_connectivity(n in 3usize..25, seed in any::<u64>()) {
        let g = Graph::erdos_renyi(n, 0.35, seed).unwrap();
        let lap = g.laplacian();
        prop_assert!(lap.is_symmetric(0.0));
        prop_assert!(lap.row_sums().iter().all(|&s| s == 0.0));
        let spectrum = g.laplacian_spectrum().unwrap();
        prop_assert!(spectrum[0] >= -1e-9);
        prop_assert!(spectrum[0].abs() < 1e-9);
        prop_assert!(g.algebraic_connectivity().unwrap() > 1e-9);
    }

    #[test]
    fn edge_list_round_trip(n in 2usize..20, seed in any::<u64>()) {
        let g = Graph::erdos_renyi(n, 0.5, seed).unwrap();
        prop_assert_eq!(Graph::from_edge_list(&g.to_edge_list()).unwrap(), g);
    }
}
