//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mdag_core::graph::{Digraph, VertexId};
use mdag_core::id::{
    identify_counterfactual_outcome, identify_full_law, identify_target_law, pair_block, trace_sequence, IdOptions,
    OutcomeQuery, Query, ReductionStep,
};
use mdag_core::kernel::KernelError;
use mdag_core::mdag::{canonical_model, CanonicalModel, MDag, MechanismClass, ModelSpec, WitnessKind};
use mdag_core::oracle::{
    observed_law, propensity_invariance_gap, random_mdag, self_censoring_counterexample, target_from_true_propensities,
    target_law, trial_rng, verify_identification, OracleConfig, SampledModel,
};
use rand::Rng;

use CanonicalModel::*;

const SOUNDNESS_SET: [CanonicalModel; 10] = [
    Permutation2,
    BlockParallel2,
    BlockSequential2,
    MarExample2,
    SeqPar3,
    PartialOrder3,
    OutsideR4,
    OddsRatio3,
    OddsRatio3Equiv,
    HiddenSix,
];

struct Check {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Check {
    Check {
        ok: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Check {
    Check {
        ok: false,
        detail: detail.into(),
    }
}

fn opts() -> IdOptions {
    IdOptions::default()
}

fn soundness() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for c in SOUNDNESS_SET {
        let m = canonical_model(c);
        let r = identify_target_law(&m, &opts());
        if !r.is_identified() {
            return fail(format!("{c}: {}", r.verdict.name()));
        }
        match verify_identification(&m, &r, 100, 2024) {
            Ok(rep) if rep.max_error < 1e-8 => worst = worst.max(rep.max_error),
            Ok(rep) => return fail(format!("{c}: max error {:e} at trial {:?}", rep.max_error, rep.worst_trial)),
            Err(e) => return fail(format!("{c}: {e}")),
        }
    }
    let t = start.elapsed();
    let detail = format!("10 models x 100 trials, max error {worst:e}, {t:.1?}");
    if t < Duration::from_secs(60) {
        pass(detail)
    } else {
        fail(detail + " exceeds 60 s")
    }
}

fn true_propensities() -> Check {
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let m = random_mdag(seed, 4, 2, 0.4);
        let s = match SampledModel::sample(&m, seed, 0, &cfg) {
            Ok(s) => s,
            Err(e) => return fail(format!("seed {seed}: {e}")),
        };
        let d = target_from_true_propensities(&s)
            .and_then(|a| Ok(a.max_abs_diff(&s.target()?)?))
            .unwrap_or(f64::INFINITY);
        worst = worst.max(d);
    }
    let detail = format!("50 random models, max error {worst:e}");
    if worst < 1e-12 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criss_cross_model() -> MDag {
    ModelSpec::new()
        .missing(&["X1", "X2"])
        .edges(&[("X1(1)", "X2(1)"), ("X1(1)", "R_X2"), ("R_X1", "R_X2"), ("X2(1)", "R_X1")])
        .build()
        .expect("valid model")
}

fn necessary_conditions() -> Check {
    for (name, m, kind) in [
        ("SelfCensor1", canonical_model(SelfCensor1), WitnessKind::SelfCensoring),
        ("criss-cross", criss_cross_model(), WitnessKind::CrissCross),
    ] {
        let r = identify_target_law(&m, &opts());
        if !r.witnesses().iter().any(|w| w.kind == kind) {
            return fail(format!("{name}: {} without a {kind} witness", r.verdict.name()));
        }
    }
    let m = canonical_model(SelfCensor1);
    let (a, b) = match self_censoring_counterexample(2, 1, None) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let diff = |f: fn(&mdag_core::table::Table, &MDag) -> Result<mdag_core::table::Table, _>| {
        f(&a, &m)
            .and_then(|x| Ok(x.max_abs_diff(&f(&b, &m)?)?))
            .unwrap_or(f64::NAN)
    };
    let (obs, tgt) = (diff(observed_law), diff(target_law));
    let detail = format!("observed-law difference {obs:e}, target-law gap {tgt:.3}");
    if obs < 1e-12 && tgt >= 0.05 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn full_law() -> Check {
    for c in [BlockParallel2, SeqPar3, OddsRatio3] {
        let r = identify_full_law(&canonical_model(c), &opts());
        if !r.is_identified() {
            return fail(format!("{c}: {}", r.verdict.name()));
        }
    }
    for c in [PartialOrder3, OutsideR4] {
        let r = identify_full_law(&canonical_model(c), &opts());
        if !r.witnesses().iter().any(|w| w.kind == WitnessKind::Colluder) {
            return fail(format!("{c}: {} without a colluder", r.verdict.name()));
        }
    }
    let m = canonical_model(OddsRatio3);
    let block = match pair_block(&m, &"R_X2".into(), &"R_X3".into(), true, &opts()) {
        Ok(b) => b,
        Err(e) => return fail(format!("odds-ratio block: {e}")),
    };
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let d = SampledModel::sample(&m, 99, t, &cfg).and_then(|s| {
            let got = block.expr.eval(&s.observed()?)?;
            let truth = s.full.conditional(&["R_X2", "R_X3"], &["X1(1)"])?;
            Ok(got.max_abs_diff(&truth)?)
        });
        match d {
            Ok(d) => worst = worst.max(d),
            Err(e) => return fail(format!("trial {t}: {e}")),
        }
    }
    let detail = format!("verdicts as expected; p(r2, r3 | x1(1)) over 100 laws, max error {worst:e}");
    if worst < 1e-9 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn hierarchy() -> Check {
    let edgeless = ModelSpec::new().missing(&["X1", "X2"]).build().expect("valid model");
    let cases = [
        (canonical_model(Permutation2), MechanismClass::Mnar),
        (canonical_model(BlockParallel2), MechanismClass::Mnar),
        (canonical_model(BlockSequential2), MechanismClass::Mnar),
        (canonical_model(MarExample2), MechanismClass::Mar),
        (edgeless, MechanismClass::Mcar),
    ];
    for (i, (m, want)) in cases.iter().enumerate() {
        let got = m.classify_mechanism();
        if got != *want {
            return fail(format!("case {i}: {got}, expected {want}"));
        }
    }
    pass("MNAR x3, MAR, MCAR")
}

fn random_dag(seed: u64) -> Digraph {
    let mut rng = trial_rng(seed, 0);
    let n = rng.random_range(2..=8);
    let names: Vec<VertexId> = (0..n).map(|i| VertexId::new(format!("V{i}"))).collect();
    let p = rng.random_range(0.15..0.6);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    Digraph::dag(names, edges).expect("index order is acyclic")
}

fn dsep_agreement() -> Check {
    let start = Instant::now();
    let mut queries = 0usize;
    for seed in 0..200 {
        let g = random_dag(seed);
        let vs: Vec<VertexId> = g.vertices().cloned().collect();
        for (i, x) in vs.iter().enumerate() {
            for y in &vs[i + 1..] {
                let rest: Vec<&VertexId> = vs.iter().filter(|v| *v != x && *v != y).collect();
                for mask in 0u32..1 << rest.len() {
                    let z: Vec<&VertexId> = (0..rest.len()).filter(|b| mask & (1 << b) != 0).map(|b| rest[b]).collect();
                    let a = g.d_separated([x], [y], z.iter().copied());
                    let b = g.d_separated_moral([x], [y], z.iter().copied());
                    if a.is_err() || a != b {
                        return fail(format!("seed {seed}: {x} vs {y} given {z:?}: {a:?} vs {b:?}"));
                    }
                    queries += 1;
                }
            }
        }
    }
    let t = start.elapsed();
    let detail = format!("200 graphs, {queries} queries agree, {t:.1?}");
    if t < Duration::from_secs(30) {
        pass(detail)
    } else {
        fail(detail + " exceeds 30 s")
    }
}

fn propensity_invariance() -> Check {
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    for c in CanonicalModel::ALL {
        let m = canonical_model(c);
        let rs = m.indicators();
        for t in 0..20 {
            let s = match SampledModel::sample(&m, 11, t, &cfg) {
                Ok(s) => s,
                Err(e) => return fail(format!("{c}: {e}")),
            };
            for rk in &rs {
                let others: Vec<VertexId> = rs.iter().filter(|r| *r != rk).cloned().collect();
                for mask in 1u32..1 << others.len() {
                    let rstar: Vec<VertexId> = (0..others.len())
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| others[i].clone())
                        .collect();
                    match propensity_invariance_gap(&s, rk, &rstar) {
                        Ok(d) => worst = worst.max(d),
                        Err(e) => return fail(format!("{c} {rk}: {e}")),
                    }
                }
            }
        }
    }
    let detail = format!("{} models x 20 laws, max change {worst:e}", CanonicalModel::ALL.len());
    if worst < 1e-10 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn markov_equivalence() -> Check {
    let (a, b) = (canonical_model(OddsRatio3), canonical_model(OddsRatio3Equiv));
    let (ga, gb) = (a.graph(), b.graph());
    let vs: Vec<VertexId> = ga.vertices().cloned().collect();
    let vb: BTreeSet<&VertexId> = gb.vertices().collect();
    if vs.iter().collect::<BTreeSet<_>>() != vb {
        return fail("vertex sets differ");
    }
    // Each vertex goes to X, Y, Z or nowhere: 4^n statements.
    let n = vs.len();
    let mut statements = 0usize;
    for code in 0..4usize.pow(n as u32) {
        let mut sets: [Vec<&VertexId>; 3] = [vec![], vec![], vec![]];
        let mut c = code;
        for v in &vs {
            if c % 4 < 3 {
                sets[c % 4].push(v);
            }
            c /= 4;
        }
        if sets[0].is_empty() || sets[1].is_empty() {
            continue;
        }
        let q = |g: &Digraph| g.d_separated(sets[0].iter().copied(), sets[1].iter().copied(), sets[2].iter().copied());
        if q(ga).ok() != q(gb).ok() {
            return fail(format!("{:?} vs {:?} given {:?}", sets[0], sets[1], sets[2]));
        }
        statements += 1;
    }
    pass(format!("{statements} statements agree"))
}

fn outcome_template() -> Check {
    let m = canonical_model(ConfoundedOutcome);
    let q = OutcomeQuery {
        treatment: "A".into(),
        outcome: "Y".into(),
        covariates: vec!["X".into()],
    };
    let r = identify_counterfactual_outcome(&m, &q);
    let expected = "sum[X](p(Y=Y(1) | X, A, R_Y=1) * p(X | R_Y=1))";
    match r.functional() {
        Some(f) if f.to_string() == expected => {}
        other => return fail(format!("functional {:?}", other.map(|f| f.to_string()))),
    }
    let rep = match verify_identification(&m, &r, 50, 3) {
        Ok(rep) => rep,
        Err(e) => return fail(e.to_string()),
    };
    let target = identify_target_law(&m, &opts());
    if !target.witnesses().iter().any(|w| w.kind == WitnessKind::ColludingPath) {
        return fail(format!("target law: {}", target.verdict.name()));
    }
    let detail = format!("{expected}; 50 laws, max error {:e}; target law has a colluding path", rep.max_error);
    if rep.max_error < 1e-9 && matches!(r.query, Query::CounterfactualOutcome(_)) {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn selection_mechanics() -> Check {
    let m = canonical_model(BlockParallel2);
    let steps = [ReductionStep::FixIndicator {
        indicators: vec!["R_X2".into()],
        pseudo: false,
    }];
    let events = trace_sequence(&m, &"R_X1".into(), &steps);
    match events.last().map(|e| &e.outcome) {
        Some(Err(KernelError::SelectionBlocked { vertex })) if vertex.as_str() == "R_X1" => {
            pass("fix {R_X2} then R_X1: selection blocked")
        }
        other => fail(format!("last event {other:?}")),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("identification soundness on the canonical models", soundness),
        ("true propensities reproduce the target law", true_propensities),
        ("necessary conditions and counterexample", necessary_conditions),
        ("full-law verdicts and odds-ratio block", full_law),
        ("mechanism hierarchy", hierarchy),
        ("d-separation by reachability and moralization", dsep_agreement),
        ("propensities unchanged by fixing other indicators", propensity_invariance),
        ("Markov-equivalent pair", markov_equivalence),
        ("counterfactual outcome template", outcome_template),
        ("selection blocks the sequential order", selection_mechanics),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let c = f();
        let status = if c.ok { "PASS" } else { "FAIL" };
        println!("{status} criterion {}: {name} ({}) [{:.2?}]", i + 1, c.detail, start.elapsed());
        if !c.ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
