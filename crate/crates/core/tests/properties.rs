//! Property tests for the generators and the transition kernel.

use proptest::prelude::*;
use secnet::dynamics::step;
use secnet::exact::build_transition;
use secnet::netgen::{leading_adjacency_eigenvalue, max_edges, Topology, TopologySpec, DEFAULT_EIGEN_TOL};
use secnet::{Error, Graph, Occupancy, Params, Seed};

fn topology() -> impl Strategy<Value = Topology> {
    prop_oneof![
        Just(Topology::Er),
        (1usize..5, 2.0f64..200.0).prop_map(|(k, r)| Topology::Com { n_communities: k, intra_inter_ratio: r }),
        Just(Topology::Lat),
        (0.25f64..4.0).prop_map(|power| Topology::Pa { power }),
    ]
}

/// (topology, n, n_edges) with n_edges somewhere in the feasible range.
fn spec() -> impl Strategy<Value = TopologySpec> {
    (topology(), 4usize..30, 0.0f64..=1.0).prop_map(|(t, n, frac)| {
        let lo = if t == Topology::Lat { n } else { n - 1 };
        let m = lo + ((max_edges(n) - lo) as f64 * frac).round() as usize;
        TopologySpec::new(t, n, m)
    })
}

fn check_graph(g: &Graph, n: usize, m: usize) -> Result<(), TestCaseError> {
    prop_assert_eq!(g.n(), n);
    prop_assert_eq!(g.n_edges(), m);
    prop_assert_eq!(g.component_count(), 1);
    let edges = g.edges();
    prop_assert!(edges.iter().all(|&(u, v)| u < v && (v as usize) < n));
    prop_assert!(edges.windows(2).all(|w| w[0] < w[1]), "edges sorted and distinct");
    prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * m);
    for &(u, v) in edges {
        prop_assert!(g.has_edge(u as usize, v as usize) && g.has_edge(v as usize, u as usize));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generators_meet_graph_invariants(spec in spec(), seed in any::<u64>()) {
        let g = match spec.generate(&mut Seed(seed).rng()) {
            Ok(g) => g,
            // sparse ER / community draws may exhaust the redraw cap
            Err(Error::RejectionCapExceeded { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{spec:?}: {e}"))),
        };
        check_graph(&g, spec.n, spec.n_edges)?;

        let again = spec.generate(&mut Seed(seed).rng()).unwrap();
        prop_assert_eq!(g.edges(), again.edges());

        let lambda = leading_adjacency_eigenvalue(&g, DEFAULT_EIGEN_TOL).unwrap();
        let mean = 2.0 * spec.n_edges as f64 / spec.n as f64;
        prop_assert!(mean - 1e-8 <= lambda && lambda <= g.max_degree() as f64 + 1e-8);

        if spec.topology == Topology::Lat {
            let d = g.degrees();
            prop_assert!(d.iter().max().unwrap() - d.iter().min().unwrap() <= 2);
        }
    }

    #[test]
    fn kernel_respects_its_limits(seed in any::<u64>(), mask in any::<u64>(), e in 0.0f64..=1.0, c in 0.0f64..=1.0) {
        let g = TopologySpec::new(Topology::Er, 12, 20).generate(&mut Seed(seed).rng()).unwrap();
        let before = Occupancy::from_mask(12, mask & 0xfff);
        let mut rng = Seed(seed ^ 1).rng();

        let after = step(&g, &Params::new(e, c).unwrap(), &before, &mut rng);
        for i in after.ones().filter(|&i| !before.contains(i)) {
            // newcomers need an occupied neighbour
            prop_assert!(g.neighbors(i).iter().any(|&j| before.contains(j as usize)));
        }

        let grown = step(&g, &Params::new(0.0, c).unwrap(), &before, &mut rng);
        prop_assert!(before.ones().all(|i| grown.contains(i)), "no extinction when e = 0");

        let shrunk = step(&g, &Params::new(e, 0.0).unwrap(), &before, &mut rng);
        prop_assert!(shrunk.ones().all(|i| before.contains(i)), "no colonisation when c = 0");

        let empty = Occupancy::empty(12);
        prop_assert!(step(&g, &Params::new(e, c).unwrap(), &empty, &mut rng).is_empty());
    }

    #[test]
    fn transition_rows_are_distributions(seed in any::<u64>(), n in 2usize..7, e in 0.0f64..=1.0, c in 0.0f64..=1.0) {
        let m = (n - 1).max(n * (n - 1) / 3);
        let g = TopologySpec::new(Topology::Pa { power: 1.0 }, n, m).generate(&mut Seed(seed).rng()).unwrap();
        let tm = build_transition(&g, &Params::new(e, c).unwrap()).unwrap();
        let full = tm.full();
        for (z, s) in full.row_sums().iter().enumerate() {
            prop_assert!((s - 1.0).abs() < 1e-12, "row {z} sums to {s}");
            prop_assert!(full.row(z).iter().all(|&p| p >= 0.0));
        }
        // the coffin is absorbing
        prop_assert_eq!(full.get(0, 0), 1.0);
    }

    #[test]
    fn occupancy_mask_round_trip(n in 1usize..=64, mask in any::<u64>()) {
        let mask = if n == 64 { mask } else { mask & ((1u64 << n) - 1) };
        let z = Occupancy::from_mask(n, mask);
        prop_assert_eq!(z.to_mask(), Some(mask));
        prop_assert_eq!(z.count(), mask.count_ones() as usize);
    }
}
