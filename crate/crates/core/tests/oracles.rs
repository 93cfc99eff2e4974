//! Property checks against brute-force enumeration.

#![allow(clippy::needless_range_loop)]

use kronmom::estimator::LeadingTransforms;
use kronmom::{
    brute_force_expected, count_features, expected_features, fit_leading,
    leading_feasible_by_degrees, FitError, KroneckerParams, ObjectiveSpec, SimpleGraph,
};
use proptest::prelude::*;

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1e-300)
}

/// Counts by looking at every pair, triple and star directly.
fn brute_counts(n: usize, adj: &[Vec<bool>]) -> [u64; 4] {
    let mut edges = 0;
    let mut hairpins = 0;
    let mut tripins = 0;
    let mut triangles = 0;
    for i in 0..n {
        for j in i + 1..n {
            edges += u64::from(adj[i][j]);
            for k in j + 1..n {
                triangles += u64::from(adj[i][j] && adj[j][k] && adj[i][k]);
            }
        }
    }
    for center in 0..n {
        let d = (0..n).filter(|&v| adj[center][v]).count();
        for x in 0..d {
            for y in x + 1..d {
                hairpins += 1;
                tripins += (d - y - 1) as u64;
            }
        }
    }
    [edges, hairpins, tripins, triangles]
}

fn random_graph() -> impl Strategy<Value = (usize, Vec<Vec<bool>>)> {
    (1usize..=24, 0.0f64..=1.0).prop_flat_map(|(n, density)| {
        proptest::collection::vec(proptest::bool::weighted(density), n * n).prop_map(move |bits| {
            let mut adj = vec![vec![false; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    adj[i][j] = bits[i * n + j];
                    adj[j][i] = bits[i * n + j];
                }
            }
            (n, adj)
        })
    })
}

fn to_graph(n: usize, adj: &[Vec<bool>]) -> SimpleGraph {
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    let edges: Vec<(u64, u64)> = pairs
        .filter(|&(i, j)| adj[i][j])
        .map(|(i, j)| (i as u64, j as u64))
        .collect();
    SimpleGraph::from_edges(n as u64, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_enumeration(
        a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, r in 1u32..=5,
    ) {
        let p = KroneckerParams::new(a, b, c, r).unwrap();
        let closed = expected_features(&p);
        let brute = brute_force_expected(&p).unwrap();
        for f in kronmom::Feature::ALL {
            let (x, y) = (closed.get(f), brute.get(f));
            // Tiny expectations are floored to zero by the closed form.
            if y > 1e-8 {
                prop_assert!(rel(x, y) < 1e-10, "{f}: {x} vs {y} at {p:?}");
            } else {
                prop_assert!(x.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn swapping_a_and_c_changes_nothing(
        a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, r in 0u32..=20,
    ) {
        let given = KroneckerParams::as_given(a, b, c, r).unwrap();
        let mirrored = KroneckerParams::as_given(c, b, a, r).unwrap();
        let x = expected_features(&given);
        let y = expected_features(&mirrored);
        for f in kronmom::Feature::ALL {
            prop_assert!(rel(x.get(f), y.get(f)) < 1e-12 || (x.get(f) - y.get(f)).abs() < 1e-9);
        }
    }

    #[test]
    fn counting_matches_enumeration((n, adj) in random_graph()) {
        let counts = count_features(&to_graph(n, &adj)).unwrap();
        let [e, h, t, tri] = brute_counts(n, &adj);
        prop_assert_eq!(counts.vertices, n as u64);
        prop_assert_eq!((counts.edges, counts.hairpins, counts.tripins, counts.triangles), (e, h, t, tri));
    }

    #[test]
    fn leading_feasibility_matches_degree_form((n, adj) in random_graph(), extra in 0u32..3) {
        let g = to_graph(n, &adj);
        let counts = count_features(&g).unwrap();
        prop_assume!(counts.edges > 0 && counts.hairpins > 0 && counts.triangles > 0);
        let r = kronmom::choose_r(n as u64) + extra;
        prop_assume!(r > 0);
        let degrees: Vec<u64> = g.degrees().collect();
        let by_degrees = leading_feasible_by_degrees(&degrees, r);
        match LeadingTransforms::new(&counts, r) {
            Ok(_) => prop_assert!(by_degrees),
            Err(FitError::Infeasible { .. }) => prop_assert!(!by_degrees),
            Err(other) => prop_assert!(false, "unexpected {other}"),
        }
    }
}

#[test]
fn cycles_have_no_leading_solution() {
    for n in [5u64, 64, 1000] {
        let g = SimpleGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        let mut counts = count_features(&g).unwrap();
        // Give the solver a triangle so only feasibility can fail.
        counts.triangles = counts.triangles.max(1);
        let err = fit_leading(
            &counts,
            kronmom::choose_r(n),
            &ObjectiveSpec::squared_relative(),
        )
        .unwrap_err();
        assert!(matches!(err, FitError::Infeasible { .. }), "{err}");
    }
}
