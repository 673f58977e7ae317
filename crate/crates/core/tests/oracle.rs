use std::collections::BTreeSet;

use mdag_core::expr::{FunctionalExpr, Term};
use mdag_core::graph::VertexId;
use mdag_core::mdag::{canonical_model, CanonicalModel, MDag};
use mdag_core::oracle::*;
use mdag_core::table::{Axis, Table};
use proptest::prelude::*;

fn cfg() -> OracleConfig {
    OracleConfig::default()
}

fn names(vs: &[VertexId]) -> Vec<&str> {
    vs.iter().map(|v| v.as_str()).collect()
}

/// Every singleton pair with conditioning sets of size at most two.
fn check_markov(m: &MDag, full: &Table) -> Result<(), String> {
    let g = m.graph();
    let vs: Vec<VertexId> = g.vertices().cloned().collect();
    for (i, x) in vs.iter().enumerate() {
        for y in &vs[i + 1..] {
            let rest: Vec<&VertexId> = vs.iter().filter(|v| *v != x && *v != y).collect();
            let mut zs: Vec<Vec<VertexId>> = vec![vec![]];
            for (a, za) in rest.iter().enumerate() {
                zs.push(vec![(*za).clone()]);
                for zb in &rest[a + 1..] {
                    zs.push(vec![(*za).clone(), (*zb).clone()]);
                }
            }
            for z in zs {
                if g.d_separated([x], [y], &z).unwrap()
                    && !ci_holds(full, &[x.as_str()], &[y.as_str()], &names(&z), 1e-10).unwrap()
                {
                    return Err(format!("{x} _||_ {y} | {z:?} fails numerically"));
                }
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_laws_are_markov(seed in 0u64..1_000_000) {
        let m = random_mdag(seed, 3, 1, 0.4);
        let s = SampledModel::sample(&m, seed, 0, &cfg()).unwrap();
        check_full_law(&s.full, &m, 1e-12).unwrap();
        prop_assert!(check_markov(&m, &s.full).is_ok(), "{:?}\n{}", check_markov(&m, &s.full), m.to_model_text());
    }

    #[test]
    fn true_propensities_recover_target(seed in 0u64..1_000_000) {
        let m = random_mdag(seed, 4, 2, 0.4);
        let s = SampledModel::sample(&m, seed, 1, &cfg()).unwrap();
        let got = target_from_true_propensities(&s).unwrap();
        prop_assert!(got.max_abs_diff(&s.target().unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn fixing_other_indicators_keeps_propensity(seed in 0u64..1_000_000) {
        let m = random_mdag(seed, 3, 1, 0.45);
        let s = SampledModel::sample(&m, seed, 2, &cfg()).unwrap();
        let rs = m.indicators();
        for rk in &rs {
            let others: Vec<VertexId> = rs.iter().filter(|r| *r != rk).cloned().collect();
            prop_assert!(propensity_invariance_gap(&s, rk, &others).unwrap() < 1e-10);
        }
    }

    #[test]
    fn mixtures_evaluate_linearly(seed in 0u64..1_000_000, w in 0.0f64..1.0) {
        // A functional without ratios is affine on mixtures of laws.
        let m = canonical_model(CanonicalModel::Permutation2);
        let a = SampledModel::sample(&m, seed, 0, &cfg()).unwrap().observed().unwrap();
        let b = SampledModel::sample(&m, seed, 1, &cfg()).unwrap().observed().unwrap();
        let mix = a.scale(w).combine(&b.scale(1.0 - w), |x, y, _| Ok(x + y)).unwrap();
        let f = FunctionalExpr::sum(
            &["X1"],
            FunctionalExpr::atom(vec![Term::var("R_X1"), Term::var("X1"), Term::value("R_X2", 1), Term::var("X2")], vec![]),
        );
        let ea = f.eval(&a).unwrap();
        let eb = f.eval(&b).unwrap();
        let expected = ea.scale(w).combine(&eb.scale(1.0 - w), |x, y, _| Ok(x + y)).unwrap();
        prop_assert!(f.eval(&mix).unwrap().max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn conditionals_ignore_scale(seed in 0u64..1_000_000, c in 0.01f64..100.0) {
        let m = canonical_model(CanonicalModel::SeqPar3);
        let obs = SampledModel::sample(&m, seed, 0, &cfg()).unwrap().observed().unwrap();
        let f = FunctionalExpr::atom(
            vec![Term::var("R_X1"), Term::var("X2")],
            vec![Term::value("R_X3", 1), Term::var("X3")],
        );
        let d = f.eval(&obs).unwrap().max_abs_diff(&f.eval(&obs.scale(c)).unwrap()).unwrap();
        prop_assert!(d < 1e-12);
    }
}

#[test]
fn hidden_confounding_law_is_markov() {
    let m = canonical_model(CanonicalModel::ConfoundedOutcome);
    let s = SampledModel::sample(&m, 3, 0, &cfg()).unwrap();
    check_markov(&m, &s.full).unwrap();
    let obs = s.observed().unwrap();
    let hidden: BTreeSet<&str> = ["U1", "U2"].into();
    assert!(obs.axis_names().iter().all(|a| !hidden.contains(a)));
}

#[test]
fn ci_detects_a_perturbed_law() {
    let m = canonical_model(CanonicalModel::BlockParallel2);
    let s = SampledModel::sample(&m, 7, 0, &cfg()).unwrap();
    assert!(ci_holds(&s.full, &["R_X1"], &["R_X2"], &["X2(1)"], 1e-10).unwrap());
    // Move mass between two cells of the (R_X1, R_X2) margin.
    let mut t = s.full.marginal(&["X2(1)", "R_X1", "R_X2"]).unwrap();
    t.data_mut()[0] += 0.02;
    t.data_mut()[1] -= 0.02;
    assert!(!ci_holds(&t, &["R_X1"], &["R_X2"], &["X2(1)"], 1e-10).unwrap());
}

#[test]
fn sampling_is_reproducible() {
    let m = canonical_model(CanonicalModel::OutsideR4);
    let a = SampledModel::sample(&m, 11, 4, &cfg()).unwrap();
    let b = SampledModel::sample(&m, 11, 4, &cfg()).unwrap();
    let c = SampledModel::sample(&m, 11, 5, &cfg()).unwrap();
    assert_eq!(a.full, b.full);
    assert_ne!(a.full, c.full);
    assert_eq!(sample_full_law(&m, 11).unwrap(), SampledModel::sample(&m, 11, 0, &cfg()).unwrap().full);
}

fn cpt(head: &str, tail: &[&str], axes: Vec<Axis>, data: Vec<f64>) -> Cpt {
    Cpt {
        head: head.into(),
        tail: tail.iter().map(|&t| t.into()).collect(),
        table: Table::new(axes, data).unwrap(),
    }
}

/// Testing offer with 30% acceptance, 35% positive among the tested, and
/// risk files sampled at 20% / 50% / 60% in the strata untested /
/// positive / negative.
#[test]
fn hand_specified_testing_scenario() {
    let m = canonical_model(CanonicalModel::Permutation2);
    let cpts = vec![
        cpt("X1(1)", &[], vec![Axis::new("X1(1)", 2)], vec![0.65, 0.35]),
        cpt(
            "X2(1)",
            &["X1(1)"],
            vec![Axis::new("X1(1)", 2), Axis::new("X2(1)", 2)],
            vec![0.7, 0.3, 0.4, 0.6],
        ),
        cpt(
            "R_X1",
            &["X2(1)"],
            vec![Axis::new("X2(1)", 2), Axis::new("R_X1", 2)],
            vec![0.7, 0.3, 0.7, 0.3],
        ),
        // Rows: R_X1 in {0, 1}, X1 in {0, 1, ?}.
        cpt(
            "R_X2",
            &["R_X1", "X1"],
            vec![Axis::new("R_X1", 2), Axis::new("X1", 3), Axis::new("R_X2", 2)],
            vec![0.8, 0.2, 0.8, 0.2, 0.8, 0.2, 0.4, 0.6, 0.5, 0.5, 0.8, 0.2],
        ),
    ];
    let s = SampledModel::from_cpts(&m, cpts).unwrap();
    check_full_law(&s.full, &m, 1e-12).unwrap();
    let obs = s.observed().unwrap();
    let p = |head: &[&str], tail: &[&str]| obs.conditional(head, tail).unwrap();
    assert!((p(&["R_X1"], &[]).data()[1] - 0.30).abs() < 1e-12);
    let x1 = p(&["X1"], &["R_X1"]).slice("R_X1", 1).unwrap();
    assert!((x1.data()[1] - 0.35).abs() < 1e-12);
    let r2 = p(&["R_X2"], &["X1"]);
    for (stratum, rate) in [(2, 0.20), (1, 0.50), (0, 0.60)] {
        let got = r2.slice("X1", stratum).unwrap().data()[1];
        assert!((got - rate).abs() < 1e-12, "stratum {stratum}: {got}");
    }
    // An out-of-range row is rejected.
    let bad = cpt("X1(1)", &[], vec![Axis::new("X1(1)", 2)], vec![0.6, 0.6]);
    assert!(SampledModel::from_cpts(&canonical_model(CanonicalModel::SelfCensor1), vec![bad]).is_err());
}

#[test]
fn counterexample_pair() {
    let m = canonical_model(CanonicalModel::SelfCensor1);
    for (card, seed) in [(2, 1), (3, 5), (4, 9)] {
        let (a, b) = self_censoring_counterexample(card, seed, None).unwrap();
        let mm = mdag_core::mdag::ModelSpec::new()
            .missing(&["X"])
            .cardinality("X", card)
            .edge("X(1)", "R_X")
            .build()
            .unwrap();
        let m = if card == 2 { m.clone() } else { mm };
        let obs = observed_law(&a, &m).unwrap().max_abs_diff(&observed_law(&b, &m).unwrap()).unwrap();
        let tgt = target_law(&a, &m).unwrap().max_abs_diff(&target_law(&b, &m).unwrap()).unwrap();
        assert!(obs < 1e-12, "card {card}: observed laws differ by {obs}");
        assert!(tgt >= 0.05, "card {card}: target gap {tgt}");
    }
    assert!(self_censoring_counterexample(2, 1, Some(0.0)).is_err());
    assert!(self_censoring_counterexample(2, 1, Some(1.0)).is_err());
}
