use std::collections::BTreeSet;

use proptest::prelude::*;

use liftkit::automorphism::{pushforward, AffineGen, ElementaryGen, TameAutomorphism};
use liftkit::corpus;
use liftkit::fixtures;
use liftkit::formats::parse_expr;
use liftkit::linalg::Matrix;
use liftkit::linearizer::{linear_field, scalar_closure, Budget};
use liftkit::poly::{PolyMap, Polynomial, VectorField};
use liftkit::wdg::{
    build_graph, check_wdg, check_wdg_capped, enumerate_simple_cycles, last_column_vanishes, linear_part_admissible,
    wdg_stabilize, DepGraph,
};
use liftkit::Error;

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn p(n: usize, text: &str) -> Polynomial {
    parse_expr(text, &names("x", n)).unwrap()
}

fn vf(n: usize, comps: &[&str]) -> VectorField {
    VectorField::from_components(n, comps.iter().map(|c| p(n, c)).collect()).unwrap()
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

type CycleKey = (Vec<usize>, String);

fn key(nodes: Vec<usize>, product: &Polynomial) -> CycleKey {
    let n = product.n_vars();
    (nodes, product.render(&names("x", n)))
}

/// Every sequence of distinct nodes starting at its minimum whose consecutive
/// edges (and the closing edge) exist, with the product of edge weights.
fn brute_force_cycles(g: &DepGraph) -> BTreeSet<CycleKey> {
    fn extend(g: &DepGraph, path: &mut Vec<usize>, out: &mut BTreeSet<CycleKey>) {
        let last = *path.last().unwrap();
        if let Some(w) = g.weight(last, path[0]) {
            let mut prod = w.clone();
            for pair in path.windows(2) {
                prod = &prod * g.weight(pair[0], pair[1]).unwrap();
            }
            out.insert(key(path.clone(), &prod));
        }
        for next in path[0] + 1..g.n() {
            if !path.contains(&next) && g.weight(last, next).is_some() {
                path.push(next);
                extend(g, path, out);
                path.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    for start in 0..g.n() {
        extend(g, &mut vec![start], &mut out);
    }
    out
}

fn cycle_keys(g: &DepGraph) -> BTreeSet<CycleKey> {
    enumerate_simple_cycles(g)
        .into_iter()
        .map(|c| key(c.nodes, &c.product))
        .collect()
}

fn rotate_min_first(nodes: &[usize]) -> Vec<usize> {
    let at = (0..nodes.len()).min_by_key(|&i| nodes[i]).unwrap();
    nodes[at..].iter().chain(&nodes[..at]).copied().collect()
}

fn field_strategy(n: usize) -> impl Strategy<Value = VectorField> {
    let term = (prop::collection::vec(0u32..=2, n), -3i64..=3);
    prop::collection::vec(prop::collection::vec(term, 0..=3), n).prop_map(move |comps| {
        let comps = comps
            .into_iter()
            .map(|terms| {
                let terms = terms
                    .into_iter()
                    .map(|(e, c)| (liftkit::poly::Monomial::from_exponents(&e), liftkit::poly::int(c)));
                Polynomial::from_terms(n, terms).unwrap()
            })
            .collect();
        VectorField::from_components(n, comps).unwrap()
    })
}

#[test]
fn example2_graph_and_cycles() {
    let f = fixtures::example2().field;
    let g = build_graph(&f);
    let edges: Vec<(usize, usize, Polynomial)> = g.edges().iter().map(|e| (e.from, e.to, e.weight.clone())).collect();
    let expected = vec![
        (0, 0, p(4, "-1")),
        (0, 1, p(4, "2")),
        (0, 3, p(4, "2*x1")),
        (1, 2, p(4, "2")),
        (2, 0, p(4, "1")),
        (2, 1, p(4, "1")),
        (2, 3, p(4, "2*x3")),
    ];
    assert_eq!(edges, expected);
    let report = check_wdg(&f).unwrap();
    assert!(report.satisfied);
    assert!(report.offending_cycle().is_none());
    assert_eq!(cycle_keys(&g), brute_force_cycles(&g));
    assert_eq!(report.cycles.len(), 3);
}

#[test]
fn counterexample_graph_and_verdict() {
    let f = fixtures::counterexample().field;
    let g = build_graph(&f);
    assert_eq!(g.edges().len(), 4);
    assert_eq!(g.weight(0, 0), Some(&p(2, "2*x1")));
    assert_eq!(g.weight(1, 0), Some(&p(2, "1")));
    assert_eq!(g.weight(0, 1), Some(&p(2, "-2*x2 - 6*x1^2")));
    assert_eq!(g.weight(1, 1), Some(&p(2, "-2*x1")));
    let report = check_wdg(&f).unwrap();
    assert!(!report.satisfied);
    assert!(!report.offending_cycle().unwrap().is_constant());
    assert!(check_wdg(&fixtures::stabilized3().field).unwrap().satisfied);
}

#[test]
fn complete_graph_has_eight_cycles() {
    let f = vf(3, &["x1 + x2 + x3", "x1 + x2 + x3", "x1 + x2 + x3"]);
    let report = check_wdg(&f).unwrap();
    assert_eq!(report.cycles.len(), 8);
    assert!(report.satisfied);
    assert_eq!(check_wdg_capped(&f, 5).unwrap_err(), Error::CycleCap(5));
}

#[test]
fn acyclic_and_empty_graphs() {
    let dag = vf(3, &["0", "x1^2", "x1*x2 + 3"]);
    let report = check_wdg(&dag).unwrap();
    assert!(report.cycles.is_empty() && report.satisfied);
    let zero = VectorField::zero(3);
    let report = check_wdg(&zero).unwrap();
    assert!(report.graph.edges().is_empty() && report.cycles.is_empty() && report.satisfied);
}

#[test]
fn dot_output() {
    let f = fixtures::counterexample().field;
    let report = check_wdg(&f).unwrap();
    let dot = report.graph.to_dot(&["y1", "y2"], Some(&report.cycles));
    assert!(dot.starts_with("digraph wdg {\n"));
    assert!(dot.ends_with("}\n"));
    assert!(dot.contains("  \"y2\" -> \"y1\" [label=\"1\"];"));
    assert!(dot.contains("  \"y1\" -> \"y1\" [label=\"2*y1\"];"));
    assert!(dot.contains("// cycle y1 product=2*y1 constant=false"));
    let plain = report.graph.to_dot(&["y1", "y2"], None);
    assert!(!plain.contains("// cycle"));
}

#[test]
fn linear_part_admissibility_reading() {
    let a = Matrix::from_i64(&[&[1, 0], &[3, 2]]);
    assert!(linear_part_admissible(&a));
    assert!(!last_column_vanishes(&a, true));
    // the nonzero diagonal entry does not break the condition
    let e = ElementaryGen::new(2, 1, p(2, "x1^2")).unwrap();
    let h = pushforward(&linear_field(&a), &TameAutomorphism::single(e).unwrap()).unwrap();
    assert!(check_wdg(&h).unwrap().satisfied);
    // an off-diagonal entry in the last column does
    let b = Matrix::from_i64(&[&[0, 1], &[0, 0]]);
    assert!(!linear_part_admissible(&b));
    assert!(!check_wdg(&fixtures::counterexample().field).unwrap().satisfied);
}

#[test]
fn stabilize_examples() {
    let e = ElementaryGen::new(2, 1, p(2, "-1*x1^2")).unwrap();
    let s = wdg_stabilize(&Matrix::zeros(2, 2), &e).unwrap();
    assert_eq!(s.observable, p(2, "x2 + x1^2"));
    assert_eq!(s.lifted, VectorField::zero(3));
    assert!(s.report.satisfied);

    let s = wdg_stabilize(&Matrix::identity(2), &e).unwrap();
    assert_eq!(s.lifted, vf(3, &["x1", "x2", "x2 - 2*x1^2"]));
    assert!(s.report.satisfied);

    let wrong_target = ElementaryGen::new(2, 0, p(2, "x2^2")).unwrap();
    assert!(matches!(
        wdg_stabilize(&Matrix::identity(2), &wrong_target),
        Err(Error::Argument(_))
    ));
    assert!(wdg_stabilize(&Matrix::identity(3), &e).is_err());
}

#[test]
fn corpus_fields_satisfy_and_close() {
    let mut rng = corpus::rng(31);
    for case in 0..30 {
        let n = 1 + case % 4;
        let f = corpus::random_wdg_field(&mut rng, n, 3);
        assert!(check_wdg(&f).unwrap().satisfied, "case {case}");
        assert!(scalar_closure(&f, Budget::default()).is_stabilized(), "case {case}");
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn johnson_matches_brute_force(f in (1usize..=4).prop_flat_map(field_strategy)) {
        let g = build_graph(&f);
        prop_assert_eq!(cycle_keys(&g), brute_force_cycles(&g));
    }

    #[test]
    fn linear_fields_satisfy(seed in 0u64..10_000, n in 1usize..=5) {
        let mut rng = corpus::rng(seed);
        let a = corpus::random_matrix(&mut rng, n, 3, 0.7);
        prop_assert!(check_wdg(&linear_field(&a)).unwrap().satisfied);
    }

    #[test]
    fn verdict_is_permutation_invariant(
        f in (2usize..=4).prop_flat_map(field_strategy),
        seed in 0u64..1000,
    ) {
        let n = f.dim();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = corpus::rng(seed);
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let swap = TameAutomorphism::single(AffineGen::permutation(&perm).unwrap()).unwrap();
        let h = pushforward(&f, &swap).unwrap();
        let before = check_wdg(&f).unwrap();
        let after = check_wdg(&h).unwrap();
        prop_assert_eq!(before.satisfied, after.satisfied);
        let moved: BTreeSet<CycleKey> = before
            .cycles
            .iter()
            .map(|c| {
                let nodes: Vec<usize> = c.nodes.iter().map(|&v| perm[v]).collect();
                key(rotate_min_first(&nodes), &c.product.remap_vars(n, &perm).unwrap())
            })
            .collect();
        prop_assert_eq!(moved, cycle_keys(&after.graph));
    }

    #[test]
    fn closed_walks_have_constant_products_when_satisfied(seed in 0u64..10_000, n in 1usize..=4) {
        let mut rng = corpus::rng(seed);
        let f = corpus::random_wdg_field(&mut rng, n, 3);
        let g = build_graph(&f);
        prop_assume!(!g.edges().is_empty());
        // walks of length <= 6 closing back at their start
        for start in 0..n {
            let mut stack = vec![(vec![start], Polynomial::one(n))];
            while let Some((walk, prod)) = stack.pop() {
                let last = *walk.last().unwrap();
                if walk.len() > 1 && last == start {
                    prop_assert!(prod.is_constant());
                }
                if walk.len() > 6 {
                    continue;
                }
                for e in g.edges().iter().filter(|e| e.from == last) {
                    let mut next = walk.clone();
                    next.push(e.to);
                    stack.push((next, &prod * &e.weight));
                }
            }
        }
    }

    #[test]
    fn linear_part_admissibility_sufficient(seed in 0u64..10_000, n in 2usize..=4) {
        let mut rng = corpus::rng(seed);
        let mut a = corpus::random_matrix(&mut rng, n, 2, 0.6);
        for i in 0..n - 1 {
            a.set(i, n - 1, liftkit::poly::int(0));
        }
        prop_assert!(linear_part_admissible(&a));
        let e = corpus::random_elementary(&mut rng, n, n - 1, 3);
        let h = pushforward(&linear_field(&a), &TameAutomorphism::single(e).unwrap()).unwrap();
        prop_assert!(check_wdg(&h).unwrap().satisfied);
    }

    #[test]
    fn stabilized_field_intertwines(seed in 0u64..10_000, n in 2usize..=4) {
        let mut rng = corpus::rng(seed);
        let a = corpus::random_matrix(&mut rng, n, 2, 0.6);
        let e = corpus::random_elementary(&mut rng, n, n - 1, 3);
        let h = pushforward(&linear_field(&a), &TameAutomorphism::single(e.clone()).unwrap()).unwrap();
        let s = wdg_stabilize(&a, &e).unwrap();
        prop_assert!(s.report.satisfied);
        // Z(y) = (y_1..y_{n-1}, p(y), y_n) carries h to the lifted field
        let mut z: Vec<Polynomial> = (0..n - 1).map(|i| Polynomial::var(n, i)).collect();
        z.push(s.observable.clone());
        z.push(Polynomial::var(n, n - 1));
        let zmap = PolyMap::new(n, z).unwrap();
        for (i, zi) in zmap.components().iter().enumerate() {
            let lhs = s.lifted.component(i).substitute(&zmap).unwrap();
            prop_assert_eq!(lhs, h.lie_derivative_scalar(zi).unwrap());
        }
    }
}
