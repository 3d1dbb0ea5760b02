//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line;
//! run with `--nocapture` to see them.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::Rng;

use liftkit::automorphism::{pushforward, pushforward_stably_tame, ElementaryGen, TameAutomorphism};
use liftkit::corpus;
use liftkit::fixtures;
use liftkit::formats::{
    lift_from_json, lift_to_json, parse_automorphism, parse_system, render_automorphism, render_system,
};
use liftkit::linalg::Matrix;
use liftkit::linearizer::{
    check_lift_symbolic, divergence_profile, linear_field, scalar_closure, Budget, ClosureOutcome, Lift,
};
use liftkit::numerics::{integrate_field, verify_lift_numeric};
use liftkit::poly::{int, PolyMap, Polynomial, VectorField};
use liftkit::transport::{conjugation_identity, stably_tame_transport, tame_transport};
use liftkit::wdg::{check_wdg, wdg_stabilize};
use liftkit::Error;

const TAME_CASES: usize = 100;
const TAME_SEED: u64 = 4;
const TAME_MAX_DEG: u32 = 3;
const TAME_MAX_GENS: usize = 3;
const STABLY_TAME_CASES: usize = 25;
const CONJUGATION_CASES: usize = 25;
const CONJUGATION_KMAX: usize = 4;
const STABILIZE_CASES: usize = 50;
const ROUND_TRIP_CASES: usize = 50;
const PROFILE_LEADING_KMAX: usize = 6;
const PROFILE_DIM_KMAX: usize = 8;

const NUMERIC_TOL: f64 = 1e-6;
const NUMERIC_T_END: f64 = 1.0;
const NUMERIC_STEPS: usize = 1000;
const NUMERIC_INITIAL_CONDITIONS: usize = 5;
const NUMERIC_X0_BOUND: f64 = 1.0;
const RK4_ORDER_MIN: f64 = 8.0;
const RK4_ORDER_MAX: f64 = 32.0;

/// Closures of pushed-forward fields can pass the default degree cap.
fn pushforward_budget() -> Budget {
    Budget::new(256, 32, 256).unwrap()
}

fn report(id: u32, title: &str, ok: bool, detail: &str) {
    println!(
        "criterion {id:>2} [{}] {title}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

fn y(n: usize, i: usize) -> Polynomial {
    Polynomial::var(n, i)
}

struct TransportCase {
    f: VectorField,
    lift_f: Option<Lift>,
    h: VectorField,
    transported: Result<Lift, String>,
}

fn tame_pairs() -> Vec<(VectorField, TameAutomorphism)> {
    let mut rng = corpus::rng(TAME_SEED);
    (0..TAME_CASES)
        .map(|case| {
            let n = 1 + case % 4;
            let f = corpus::random_wdg_field(&mut rng, n, TAME_MAX_DEG);
            (f, corpus::random_tame(&mut rng, n, TAME_MAX_GENS, TAME_MAX_DEG))
        })
        .collect()
}

/// Transported lifts are shared between the transport and numeric criteria.
fn tame_cases() -> &'static [TransportCase] {
    static CASES: OnceLock<Vec<TransportCase>> = OnceLock::new();
    CASES.get_or_init(|| {
        tame_pairs()
            .into_iter()
            .map(|(f, phi)| {
                let lift_f = scalar_closure(&f, Budget::default()).lift().cloned();
                let h = pushforward(&f, &phi).unwrap();
                let transported = match &lift_f {
                    Some(l) => tame_transport(l, &phi).map_err(|e| e.to_string()),
                    None => Err("closure of f diverged".into()),
                };
                TransportCase {
                    f,
                    lift_f,
                    h,
                    transported,
                }
            })
            .collect()
    })
}

fn stably_tame_cases() -> &'static [TransportCase] {
    static CASES: OnceLock<Vec<TransportCase>> = OnceLock::new();
    CASES.get_or_init(|| {
        let mut rng = corpus::rng(5);
        (0..STABLY_TAME_CASES)
            .map(|case| {
                let n = 1 + case % 3;
                let f = corpus::random_wdg_field(&mut rng, n, 2);
                let w = corpus::random_stably_tame(&mut rng, n, 2);
                assert_eq!(w.stabilizer_count(), 1);
                assert!(w.stabilizer().degree() <= 2);
                assert!(w.phi().generators().iter().all(|g| g.forward_map().degree() <= 2));
                let lift_f = scalar_closure(&f, Budget::default()).lift().cloned();
                let h = pushforward_stably_tame(&f, &w).unwrap();
                let transported = match &lift_f {
                    Some(l) => stably_tame_transport(l, &w).map_err(|e| e.to_string()),
                    None => Err("closure of f diverged".into()),
                };
                TransportCase {
                    f,
                    lift_f,
                    h,
                    transported,
                }
            })
            .collect()
    })
}

/// Cycles as `(rotation starting at the smallest node, product)`.
fn cycle_set(f: &VectorField) -> BTreeSet<(Vec<usize>, String)> {
    let names = liftkit::poly::default_names("x", f.dim());
    check_wdg(f)
        .unwrap()
        .cycles
        .iter()
        .map(|c| {
            let start = (0..c.nodes.len()).min_by_key(|&i| c.nodes[i]).unwrap();
            let mut nodes = c.nodes[start..].to_vec();
            nodes.extend_from_slice(&c.nodes[..start]);
            (nodes, c.product.render(&names))
        })
        .collect()
}

#[test]
fn criterion_01_wdg_verdicts() {
    let ex2 = fixtures::example2().field;
    let expected: BTreeSet<(Vec<usize>, String)> = [
        (vec![0], "-1"),
        (vec![1, 2], "2"),
        // the feedback loop through x1 drawn in green alongside the other two
        (vec![0, 1, 2], "4"),
    ]
    .into_iter()
    .map(|(n, p)| (n, p.to_string()))
    .collect();
    let got = cycle_set(&ex2);
    let ex2_ok = check_wdg(&ex2).unwrap().satisfied && got == expected;

    let counter = check_wdg(&fixtures::counterexample().field).unwrap();
    let self_loop = counter.cycles.iter().find(|c| c.nodes == vec![0]);
    let counter_ok = !counter.satisfied
        && counter.offending.is_some()
        && self_loop.is_some_and(|c| c.product == y(2, 0).scale(&int(2)));

    let stab_ok = check_wdg(&fixtures::stabilized3().field).unwrap().satisfied;
    report(
        1,
        "WDG verdicts",
        ex2_ok && counter_ok && stab_ok,
        &format!("example2 cycles {got:?}; counterexample rejected={counter_ok}; stabilized accepted={stab_ok}"),
    );
}

#[test]
fn criterion_02_pushforward_exact() {
    let f = linear_field(&Matrix::from_i64(&[&[0, 1], &[0, 0]]));
    let built = TameAutomorphism::single(ElementaryGen::new(2, 1, y(2, 0).pow(2).scale(&int(-1))).unwrap()).unwrap();
    let parsed = fixtures::counterexample_map().map;
    let expected = VectorField::from_components(
        2,
        vec![
            &y(2, 1) + &y(2, 0).pow(2),
            &(&y(2, 0) * &y(2, 1)).scale(&int(-2)) - &y(2, 0).pow(3).scale(&int(2)),
        ],
    )
    .unwrap();
    let h_built = pushforward(&f, &built).unwrap();
    let h_parsed = pushforward(&f, &parsed).unwrap();
    let ok = h_built == expected && h_parsed == expected && fixtures::counterexample().field == expected;
    let names = ["y1", "y2"];
    report(
        2,
        "pushforward exactness",
        ok,
        &format!("h = {:?}", h_built.render(&names)),
    );
}

#[test]
fn criterion_03_intro_lift() {
    let f = fixtures::intro().field;
    let outcome = scalar_closure(&f, Budget::default());
    let lift = outcome.lift().expect("stabilizes");
    let gens: Vec<Polynomial> = lift.generator_functions();
    let expected_gens = vec![y(2, 0), y(2, 1), y(2, 0).pow(2)];
    let expected_a = Matrix::from_i64(&[&[1, 0, 0], &[0, 1, 1], &[0, 0, 2]]);
    let ok = gens == expected_gens && lift.matrix() == &expected_a;
    let (_, fixture) = lift_from_json(fixtures::INTRO_LIFT).unwrap();
    let fixture_ok = fixture.matrix() == lift.matrix() && fixture.observables() == lift.observables();
    report(
        3,
        "intro lift reproduction",
        ok && fixture_ok,
        &format!(
            "generators {:?}, A rows {:?}",
            gens.iter().map(|g| g.render(&["x1", "x2"])).collect::<Vec<_>>(),
            lift.matrix()
                .to_rows()
                .iter()
                .map(|r| r.iter().map(|c| c.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_04_transport_suite() {
    let mut passed = 0;
    let mut failures = Vec::new();
    for (case, c) in tame_cases().iter().enumerate() {
        match &c.transported {
            Err(e) => failures.push(format!("{case}: {e}")),
            Ok(l) if !check_lift_symbolic(&c.h, l).unwrap() => {
                failures.push(format!("{case}: transported lift invalid"))
            }
            Ok(_) if !scalar_closure(&c.h, pushforward_budget()).is_stabilized() => {
                failures.push(format!("{case}: closure of h diverged"))
            }
            Ok(_) => passed += 1,
        }
    }
    report(
        4,
        "transport through tame maps",
        passed == TAME_CASES,
        &format!("{passed}/{TAME_CASES} {failures:?}"),
    );
}

#[test]
fn criterion_05_stably_tame_suite() {
    let mut passed = 0;
    let mut failures = Vec::new();
    for (case, c) in stably_tame_cases().iter().enumerate() {
        match &c.transported {
            Err(e) => failures.push(format!("{case}: {e}")),
            Ok(l) if !check_lift_symbolic(&c.h, l).unwrap() => failures.push(format!("{case}: invalid lift")),
            Ok(_) => passed += 1,
        }
    }
    report(
        5,
        "stably tame transport",
        passed == STABLY_TAME_CASES,
        &format!("{passed}/{STABLY_TAME_CASES} {failures:?}"),
    );
}

#[test]
fn criterion_06_conjugation_identity() {
    let mut rng = corpus::rng(6);
    let mut passed = 0;
    for case in 0..CONJUGATION_CASES {
        let n = 1 + case % 3;
        let f = corpus::random_field(&mut rng, n, 2, 3);
        let p = corpus::random_invertible(&mut rng, n);
        if conjugation_identity(&f, &p, CONJUGATION_KMAX).unwrap() {
            passed += 1;
        }
    }
    report(
        6,
        "linear conjugation commutes with Lie iteration",
        passed == CONJUGATION_CASES,
        &format!("{passed}/{CONJUGATION_CASES} (kmax {CONJUGATION_KMAX})"),
    );
}

#[test]
fn criterion_07_divergence_profile() {
    let sys = fixtures::sinh6();
    let q1 = sys.vars.iter().position(|v| v == "q1").unwrap();
    let profile = divergence_profile(&sys.field, PROFILE_DIM_KMAX, q1, 1).unwrap();
    let leading: Vec<i64> = profile
        .iter()
        .take(PROFILE_LEADING_KMAX + 1)
        .map(|e| e.leading_degree)
        .collect();
    let leading_ok = leading.iter().enumerate().all(|(k, &d)| d == k as i64 + 1);
    let dims: Vec<usize> = profile.iter().map(|e| e.dim).collect();
    let dims_ok = dims.windows(2).all(|w| w[1] > w[0]) && dims.len() == PROFILE_DIM_KMAX + 1;
    let diverging = matches!(
        scalar_closure(&sys.field, Budget::default()),
        ClosureOutcome::Diverging(_)
    );
    report(
        7,
        "divergence profile",
        leading_ok && dims_ok && diverging,
        &format!("q1 degrees {leading:?}; span dims {dims:?}; diverging={diverging}"),
    );
}

#[test]
fn criterion_08_stabilizing_observable() {
    let mut rng = corpus::rng(8);
    let mut passed = 0;
    for case in 0..STABILIZE_CASES {
        let n = 2 + case % 3;
        let a = corpus::random_matrix(&mut rng, n, 2, 0.6);
        let g = corpus::random_elementary(&mut rng, n, n - 1, 3);
        if wdg_stabilize(&a, &g).unwrap().report.satisfied {
            passed += 1;
        }
    }

    let a = Matrix::from_i64(&[&[0, 1], &[0, 0]]);
    let phi = ElementaryGen::new(2, 1, y(2, 0).pow(2).scale(&int(-1))).unwrap();
    let s = wdg_stabilize(&a, &phi).unwrap();
    let observable_ok = s.observable == &y(2, 1) + &y(2, 0).pow(2);
    // output order is (y1, w, y2); the reference names w as y3
    let relabel = [0, 2, 1];
    let mut comps = vec![Polynomial::zero(3); 3];
    for (i, c) in s.lifted.components().iter().enumerate() {
        comps[relabel[i]] = c.remap_vars(3, &relabel).unwrap();
    }
    let relabeled = VectorField::from_components(3, comps).unwrap();
    let worked_ok = observable_ok && relabeled == fixtures::stabilized3().field && s.report.satisfied;
    report(
        8,
        "stabilizing observable",
        passed == STABILIZE_CASES && worked_ok,
        &format!("{passed}/{STABILIZE_CASES} random; worked case observable={observable_ok} system={worked_ok}"),
    );
}

fn initial_conditions<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    (0..NUMERIC_INITIAL_CONDITIONS)
        .map(|_| {
            (0..n)
                .map(|_| rng.gen_range(-NUMERIC_X0_BOUND..=NUMERIC_X0_BOUND))
                .collect()
        })
        .collect()
}

fn rk4_order_factor() -> f64 {
    let f = fixtures::intro().field;
    let e = std::f64::consts::E;
    let exact = [e, e * e - e];
    let err = |steps| {
        let end = integrate_field(&f, &[1.0, 0.0], 1.0, steps).unwrap();
        let end = end.last().unwrap().to_vec();
        end.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    err(20) / err(40)
}

#[test]
fn criterion_09_numeric_verification() {
    let mut corpus_lifts: Vec<(String, VectorField, Lift)> = Vec::new();
    for (name, sys) in [
        ("intro", fixtures::intro()),
        ("example2", fixtures::example2()),
        ("counterexample", fixtures::counterexample()),
        ("nilpotent", fixtures::nilpotent()),
        ("stabilized3", fixtures::stabilized3()),
    ] {
        let lift = scalar_closure(&sys.field, Budget::default())
            .lift()
            .cloned()
            .expect("stabilizes");
        corpus_lifts.push((name.into(), sys.field, lift));
    }
    let (_, intro_lift) = lift_from_json(fixtures::INTRO_LIFT).unwrap();
    corpus_lifts.push(("intro-lift.json".into(), fixtures::intro().field, intro_lift));
    for (kind, cases) in [("pair", tame_cases()), ("witness", stably_tame_cases())] {
        for (case, c) in cases.iter().enumerate() {
            if let Some(l) = &c.lift_f {
                corpus_lifts.push((format!("{kind} {case} f"), c.f.clone(), l.clone()));
            }
            if let Ok(l) = &c.transported {
                corpus_lifts.push((format!("{kind} {case} transported"), c.h.clone(), l.clone()));
            }
        }
    }

    let mut rng = corpus::rng(9);
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (name, f, lift) in &corpus_lifts {
        let x0s = initial_conditions(&mut rng, f.dim());
        match verify_lift_numeric(f, lift, &x0s, NUMERIC_T_END, NUMERIC_STEPS, NUMERIC_TOL) {
            Ok((r, _)) => {
                checked += 1;
                worst = worst.max(r.max_rel_error);
                if !r.passed {
                    failures.push(format!("{name}: rel error {:e}", r.max_rel_error));
                }
            }
            // only symbolic-valid lifts are in scope
            Err(Error::InvalidLift) => {}
            Err(e) => {
                checked += 1;
                failures.push(format!("{name}: {e}"));
            }
        }
    }
    let factor = rk4_order_factor();
    let order_ok = (RK4_ORDER_MIN..=RK4_ORDER_MAX).contains(&factor);
    report(
        9,
        "numeric verification",
        failures.is_empty() && order_ok,
        &format!(
            "{}/{checked} lifts within {NUMERIC_TOL:e} (worst {worst:e}); RK4 halving factor {factor:.2} {failures:?}",
            checked - failures.len()
        ),
    );
}

#[test]
fn criterion_10_round_trips() {
    let mut fixture_ok = true;
    for (name, _, text) in fixtures::ALL {
        let ok = if name.ends_with("-map") {
            let a = parse_automorphism(text).unwrap();
            let rendered = render_automorphism(&a.vars, &a.map);
            let b = parse_automorphism(&rendered).unwrap();
            b.vars == a.vars && b.map.forward() == a.map.forward() && render_automorphism(&b.vars, &b.map) == rendered
        } else if name.ends_with("-lift") {
            let (vars, lift) = lift_from_json(text).unwrap();
            lift_to_json(&lift, &vars) == *text
        } else {
            let a = parse_system(text).unwrap();
            let rendered = render_system(&a.vars, &a.field);
            let b = parse_system(&rendered).unwrap();
            b == a && render_system(&b.vars, &b.field) == rendered
        };
        fixture_ok &= ok;
    }

    let mut rng = corpus::rng(10);
    let mut compose_ok = 0;
    let mut push_ok = 0;
    for case in 0..ROUND_TRIP_CASES {
        let n = 1 + case % 4;
        let phi = corpus::random_tame(&mut rng, n, 3, 3);
        let inv = phi.inverse();
        let both = TameAutomorphism::compose(&phi, &inv).unwrap();
        if both.forward().is_identity() && phi.forward().compose(inv.forward()).unwrap() == PolyMap::identity(n) {
            compose_ok += 1;
        }
        let f = corpus::random_wdg_field(&mut rng, n, 2);
        let h = pushforward(&f, &phi).unwrap();
        if pushforward(&h, &inv).unwrap() == f {
            push_ok += 1;
        }
    }
    report(
        10,
        "round trips",
        fixture_ok && compose_ok == ROUND_TRIP_CASES && push_ok == ROUND_TRIP_CASES,
        &format!(
            "fixtures={fixture_ok}; compose {compose_ok}/{ROUND_TRIP_CASES}; pushforward {push_ok}/{ROUND_TRIP_CASES}"
        ),
    );
}
