use mdag_core::mdag::{
    canonical_model, detect_colluders, detect_colluding_paths, detect_criss_cross, detect_self_censoring,
    parse_model, CanonicalModel, MechanismClass, ModelSpec, ParseError, VertexRole, WitnessKind,
};
use mdag_core::oracle::random_mdag;
use proptest::prelude::*;

fn criss_cross() -> mdag_core::mdag::MDag {
    ModelSpec::new()
        .missing(&["X1", "X2"])
        .edges(&[
            ("X1(1)", "X2(1)"),
            ("X1(1)", "R_X2"),
            ("R_X1", "R_X2"),
            ("X2(1)", "R_X1"),
        ])
        .build()
        .unwrap()
}

#[test]
fn every_canonical_model_round_trips() {
    for c in CanonicalModel::ALL {
        let m = canonical_model(c);
        let again = parse_model(&m.to_model_text()).unwrap();
        assert_eq!(m, again, "{c}");
        assert_eq!(c.name().parse::<CanonicalModel>().unwrap(), c);
    }
}

#[test]
fn mechanism_hierarchy() {
    use CanonicalModel::*;
    for c in [Permutation2, BlockParallel2, BlockSequential2] {
        assert_eq!(canonical_model(c).classify_mechanism(), MechanismClass::Mnar, "{c}");
    }
    assert_eq!(canonical_model(MarExample2).classify_mechanism(), MechanismClass::Mar);
    let edgeless = ModelSpec::new().missing(&["X1", "X2"]).build().unwrap();
    assert_eq!(edgeless.classify_mechanism(), MechanismClass::Mcar);
}

#[test]
fn self_censoring_witness() {
    let m = canonical_model(CanonicalModel::SelfCensor1);
    let w = detect_self_censoring(&m);
    assert_eq!(w.len(), 1);
    assert_eq!(w[0].to_string(), "self-censoring: X(1) -> R_X");
}

#[test]
fn criss_cross_witness() {
    let m = criss_cross();
    let w = detect_criss_cross(&m);
    assert_eq!(w.len(), 1);
    assert_eq!(
        w[0].to_string(),
        "criss-cross: X1(1) -> X2(1), X1(1) -> R_X2, R_X1 -> R_X2, X2(1) -> R_X1"
    );
    assert!(detect_self_censoring(&m).is_empty());
}

#[test]
fn colluders_in_partial_order_and_outside_models() {
    for c in [CanonicalModel::PartialOrder3, CanonicalModel::OutsideR4] {
        let w = detect_colluders(&canonical_model(c));
        assert!(!w.is_empty(), "{c}");
        assert!(w.iter().all(|x| x.kind == WitnessKind::Colluder));
    }
    for c in [CanonicalModel::BlockParallel2, CanonicalModel::SeqPar3, CanonicalModel::OddsRatio3] {
        assert!(detect_colluders(&canonical_model(c)).is_empty(), "{c}");
    }
}

#[test]
fn hidden_colluding_path() {
    let m = canonical_model(CanonicalModel::ConfoundedOutcome);
    let w = detect_colluding_paths(&m);
    assert_eq!(w.len(), 1);
    assert_eq!(w[0].vertices.first().map(|v| v.as_str()), Some("Y(1)"));
    assert_eq!(w[0].vertices.last().map(|v| v.as_str()), Some("R_Y"));
}

#[test]
fn parse_errors_carry_positions() {
    match parse_model("missing X\n  edge X(1) => R_X\n") {
        Err(ParseError::Syntax { line, column, .. }) => {
            assert_eq!(line, 2);
            assert!(column > 1);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse_model("edge A -> B\nmissing A\n"), Err(ParseError::Syntax { line: 2, .. }) | Err(ParseError::Model { .. })));
    // Proxy parents are fixed.
    assert!(matches!(
        parse_model("missing X\nobserved W\nedge W -> X\n"),
        Err(ParseError::Model { line: 3, .. })
    ));
    // Indicators may not point into counterfactuals.
    assert!(matches!(
        parse_model("missing X\nmissing Y\nedge R_X -> Y(1)\n"),
        Err(ParseError::Model { line: 3, .. })
    ));
}

#[test]
fn cardinality_and_roles() {
    let m = parse_model("# two-level and four-level\nmissing X card=4\nobserved W\nhidden U card=3\nedge U -> W\nedge W -> X(1)\n").unwrap();
    assert_eq!(m.cardinality("X"), Some(4));
    assert_eq!(m.state_count("X"), Some(5));
    assert_eq!(m.role("X"), Some(VertexRole::Proxy));
    assert_eq!(m.role("X(1)"), Some(VertexRole::Counterfactual));
    assert_eq!(m.role("U"), Some(VertexRole::Hidden));
    assert!(parse_model("missing X card=5\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_models_round_trip(seed in any::<u64>()) {
        let m = random_mdag(seed, 4, 2, 0.35);
        prop_assert_eq!(parse_model(&m.to_model_text()).unwrap(), m);
    }

    #[test]
    fn witnesses_use_model_edges(seed in any::<u64>()) {
        let m = random_mdag(seed, 4, 2, 0.4);
        let all = detect_self_censoring(&m)
            .into_iter()
            .chain(detect_colluders(&m))
            .chain(detect_criss_cross(&m))
            .chain(detect_colluding_paths(&m));
        for w in all {
            for e in &w.edges {
                prop_assert!(m.graph().has_edge(e.from.as_str(), e.to.as_str()), "{} not in model", e);
            }
        }
        // Without hidden variables a colluding path is a self-censoring
        // edge or a colluder.
        prop_assert_eq!(
            detect_colluding_paths(&m).len(),
            detect_self_censoring(&m).len() + detect_colluders(&m).len()
        );
    }

    #[test]
    fn mechanism_matches_indicator_parents(seed in any::<u64>()) {
        let m = random_mdag(seed, 3, 2, 0.3);
        let parents: Vec<_> = m.indicators().iter().flat_map(|r| m.graph().parents(r.as_str()).unwrap()).collect();
        let expected = if parents.is_empty() {
            MechanismClass::Mcar
        } else if parents.iter().any(|p| m.role(p.as_str()) == Some(VertexRole::Counterfactual)) {
            MechanismClass::Mnar
        } else {
            MechanismClass::Mar
        };
        prop_assert_eq!(m.classify_mechanism(), expected);
    }
}
