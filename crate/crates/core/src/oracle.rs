//! Exact discrete laws for m-DAGs: sampling, derived laws and numeric
//! verification of identified functionals.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with the user
//! seed and switched to stream `trial` for each trial, so every trial is
//! reproducible on its own.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Functional};
use crate::graph::VertexId;
use crate::id::{IdResult, OutcomeQuery, Query};
use crate::mdag::{
    counterfactual_name, indicator_name, proxy_name, MDag, ModelError, ModelSpec, VertexRole,
};
use crate::table::{Axis, Odometer, Table, TableError};

/// Identifier of the random generator, reported next to every seed.
pub const GENERATOR: &str = "chacha8(seed, stream=trial)";

/// Laws are dense tables over named axes.
pub type DiscreteLaw = Table;

/// FNV-1a digest of the model's text form, stable across platforms.
pub fn model_hash(m: &MDag) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in m.to_model_text().bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("conditional table for `{head}`: {reason}")]
    BadCpt { head: String, reason: String },
    #[error("positivity: {0}")]
    Positivity(String),
    #[error("result is not verifiable: {0}")]
    NotVerifiable(String),
    #[error("trial {trial} (seed {seed}): {source}")]
    Trial {
        trial: u64,
        seed: u64,
        #[source]
        source: Box<OracleError>,
    },
}

/// Sampling parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Symmetric Dirichlet concentration for each conditional row.
    pub alpha: f64,
    /// Weight of the uniform distribution mixed into every row.
    pub mix: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            alpha: 1.0,
            mix: 0.05,
        }
    }
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A conditional probability table `p(head | tail)`. Axes are the tail in
/// order, then the head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub head: VertexId,
    pub tail: Vec<VertexId>,
    pub table: Table,
}

impl Cpt {
    /// Validates shape and row sums. `min_entry` is the positivity floor.
    pub fn new(head: VertexId, tail: Vec<VertexId>, table: Table, min_entry: f64) -> Result<Self, OracleError> {
        let bad = |reason: String| OracleError::BadCpt {
            head: head.to_string(),
            reason,
        };
        let mut expected: Vec<&str> = tail.iter().map(|v| v.as_str()).collect();
        expected.push(head.as_str());
        if table.axis_names() != expected {
            return Err(bad(format!("axes {:?}, expected {:?}", table.axis_names(), expected)));
        }
        let k = table.axes().last().map(|a| a.card).unwrap_or(1);
        for (i, row) in table.data().chunks(k).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(bad(format!("row {i} sums to {s}")));
            }
            if let Some(x) = row.iter().find(|&&x| x < min_entry) {
                return Err(bad(format!("entry {x} below positivity floor {min_entry}")));
            }
        }
        Ok(Cpt { head, tail, table })
    }
}

/// A full law together with the conditionals that generated it.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledModel {
    pub model: MDag,
    pub cpts: BTreeMap<VertexId, Cpt>,
    pub full: Table,
}

/// Axes of the full law: every vertex of the m-DAG, sorted by name.
pub fn full_law_axes(m: &MDag) -> Vec<Axis> {
    m.graph()
        .vertices()
        .map(|v| Axis::new(v.as_str(), m.state_count(v.as_str()).expect("vertex has states")))
        .collect()
}

fn check_size(m: &MDag) -> Result<(), OracleError> {
    let cells: u128 = full_law_axes(m).iter().map(|a| a.card as u128).product();
    if cells > crate::table::MAX_CELLS as u128 {
        return Err(TableError::TooLarge {
            cells: usize::try_from(cells).unwrap_or(usize::MAX),
            limit: crate::table::MAX_CELLS,
        }
        .into());
    }
    Ok(())
}

/// Draws one row-stochastic table per probabilistic vertex.
pub fn sample_cpts(
    m: &MDag,
    rng: &mut impl Rng,
    cfg: &OracleConfig,
) -> Result<BTreeMap<VertexId, Cpt>, OracleError> {
    let gamma = Gamma::new(cfg.alpha, 1.0).map_err(|e| OracleError::Positivity(e.to_string()))?;
    let mut out = BTreeMap::new();
    for v in m.canonical_order().as_slice() {
        if m.role(v.as_str()) == Some(VertexRole::Proxy) {
            continue;
        }
        let tail: Vec<VertexId> = m.graph().parents(v.as_str())?.into_iter().collect();
        let mut axes: Vec<Axis> = tail
            .iter()
            .map(|p| Axis::new(p.as_str(), m.state_count(p.as_str()).expect("parent has states")))
            .collect();
        let k = m.state_count(v.as_str()).expect("vertex has states");
        axes.push(Axis::new(v.as_str(), k));
        let mut table = Table::filled(axes, 0.0)?;
        for row in table.data_mut().chunks_mut(k) {
            let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng).max(1e-300)).collect();
            let s: f64 = draws.iter().sum();
            for (cell, d) in row.iter_mut().zip(draws) {
                *cell = (1.0 - cfg.mix) * d / s + cfg.mix / k as f64;
            }
            // Exact row sums keep the 1e-12 check meaningful.
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|c| *c /= s);
        }
        out.insert(v.clone(), Cpt::new(v.clone(), tail, table, 0.0)?);
    }
    Ok(out)
}

impl From<crate::graph::GraphError> for OracleError {
    fn from(e: crate::graph::GraphError) -> Self {
        OracleError::Model(ModelError::InvalidName(e.to_string()))
    }
}

/// Product of the conditionals with deterministic proxies.
pub fn full_law_from_cpts(m: &MDag, cpts: &BTreeMap<VertexId, Cpt>) -> Result<Table, OracleError> {
    check_size(m)?;
    let axes = full_law_axes(m);
    let pos: BTreeMap<&str, usize> = axes.iter().enumerate().map(|(i, a)| (a.name.as_str(), i)).collect();
    let random: Vec<usize> = axes
        .iter()
        .enumerate()
        .filter(|(_, a)| m.role(&a.name) != Some(VertexRole::Proxy))
        .map(|(i, _)| i)
        .collect();
    let proxies: Vec<(usize, usize, usize, usize)> = m
        .missing()
        .iter()
        .map(|n| {
            let k = m.cardinality(n).expect("declared");
            (
                pos[proxy_name(n).as_str()],
                pos[counterfactual_name(n).as_str()],
                pos[indicator_name(n).as_str()],
                k,
            )
        })
        .collect();
    // Per conditional: full-law axis positions in table order, and strides.
    let mut factors = Vec::new();
    for v in m.graph().vertices() {
        if m.role(v.as_str()) == Some(VertexRole::Proxy) {
            continue;
        }
        let cpt = cpts.get(v).ok_or_else(|| OracleError::BadCpt {
            head: v.to_string(),
            reason: "missing".into(),
        })?;
        let parents: BTreeSet<VertexId> = m.graph().parents(v.as_str())?;
        if cpt.tail.iter().cloned().collect::<BTreeSet<_>>() != parents || cpt.tail.len() != parents.len() {
            return Err(OracleError::BadCpt {
                head: v.to_string(),
                reason: format!("tail {:?} differs from parents {:?}", cpt.tail, parents),
            });
        }
        let names = cpt.table.axis_names();
        let mut stride = vec![1usize; names.len()];
        for i in (0..names.len().saturating_sub(1)).rev() {
            stride[i] = stride[i + 1] * cpt.table.axes()[i + 1].card;
        }
        let p: Vec<usize> = names.iter().map(|n| pos[n]).collect();
        factors.push((p, stride, cpt.table.data()));
    }
    let mut full = Table::filled(axes.clone(), 0.0)?;
    let mut full_stride = vec![1usize; axes.len()];
    for i in (0..axes.len().saturating_sub(1)).rev() {
        full_stride[i] = full_stride[i + 1] * axes[i + 1].card;
    }
    let mut assign = vec![0usize; axes.len()];
    let mut odo = Odometer::new(random.iter().map(|&i| axes[i].card).collect());
    let data = full.data_mut();
    while let Some(cur) = odo.current() {
        for (k, &i) in random.iter().enumerate() {
            assign[i] = cur[k];
        }
        for &(p, l, r, k) in &proxies {
            assign[p] = if assign[r] == 1 { assign[l] } else { k };
        }
        let mut prob = 1.0;
        for (p, stride, table) in &factors {
            let idx: usize = p.iter().zip(stride).map(|(&a, s)| assign[a] * s).sum();
            prob *= table[idx];
        }
        let flat: usize = assign.iter().zip(&full_stride).map(|(a, s)| a * s).sum();
        data[flat] = prob;
        odo.advance();
    }
    Ok(full)
}

impl SampledModel {
    pub fn sample(m: &MDag, seed: u64, trial: u64, cfg: &OracleConfig) -> Result<Self, OracleError> {
        check_size(m)?;
        let mut rng = trial_rng(seed, trial);
        let cpts = sample_cpts(m, &mut rng, cfg)?;
        let full = full_law_from_cpts(m, &cpts)?;
        Ok(SampledModel {
            model: m.clone(),
            cpts,
            full,
        })
    }

    /// A hand-specified law. Every entry must be strictly positive.
    pub fn from_cpts(m: &MDag, cpts: Vec<Cpt>) -> Result<Self, OracleError> {
        let mut map = BTreeMap::new();
        for c in cpts {
            let c = Cpt::new(c.head, c.tail, c.table, f64::MIN_POSITIVE)?;
            map.insert(c.head.clone(), c);
        }
        let full = full_law_from_cpts(m, &map)?;
        Ok(SampledModel {
            model: m.clone(),
            cpts: map,
            full,
        })
    }

    pub fn observed(&self) -> Result<Table, OracleError> {
        observed_law(&self.full, &self.model)
    }

    pub fn target(&self) -> Result<Table, OracleError> {
        target_law(&self.full, &self.model)
    }
}

/// Sampled full law over every vertex of `m`.
pub fn sample_full_law(m: &MDag, seed: u64) -> Result<Table, OracleError> {
    Ok(SampledModel::sample(m, seed, 0, &OracleConfig::default())?.full)
}

fn names(vs: &[VertexId]) -> Vec<&str> {
    vs.iter().map(|v| v.as_str()).collect()
}

/// `p(r, l, w)`: indicators, proxies and observed variables.
pub fn observed_law(full: &Table, m: &MDag) -> Result<Table, OracleError> {
    Ok(full.marginal(&names(&m.observed_law_vertices()))?)
}

/// `p(l(1), w)`.
pub fn target_law(full: &Table, m: &MDag) -> Result<Table, OracleError> {
    Ok(full.marginal(&names(&m.target_vertices()))?)
}

/// `p(l(1), w, r)`.
pub fn full_law_query(full: &Table, m: &MDag) -> Result<Table, OracleError> {
    let mut vs = m.target_vertices();
    vs.extend(m.indicators());
    vs.sort();
    Ok(full.marginal(&names(&vs))?)
}

pub fn eval_functional(f: &Functional, obs: &Table) -> Result<Table, OracleError> {
    Ok(f.eval(obs)?)
}

/// Checks nonnegativity, total mass and proxy consistency of a full law.
pub fn check_full_law(full: &Table, m: &MDag, tol: f64) -> Result<(), OracleError> {
    if full.data().iter().any(|&x| x < 0.0) {
        return Err(OracleError::Positivity("negative mass".into()));
    }
    if (full.total() - 1.0).abs() > tol {
        return Err(OracleError::Positivity(format!("total mass {}", full.total())));
    }
    for n in m.missing() {
        let k = m.cardinality(n).expect("declared");
        let t = full.marginal(&[
            counterfactual_name(n).as_str(),
            indicator_name(n).as_str(),
            proxy_name(n).as_str(),
        ])?;
        for x in 0..k {
            for r in 0..2 {
                for l in 0..=k {
                    let consistent = if r == 1 { l == x } else { l == k };
                    let v = t.data()[(x * 2 + r) * (k + 1) + l];
                    if !consistent && v != 0.0 {
                        return Err(OracleError::Positivity(format!(
                            "mass {v} on inconsistent cell {}(1)={x}, R_{n}={r}, {n}={l}",
                            n
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// True when `x ⫫ y | z` holds in `law` up to `tol` on cells with
/// `p(z) > 0`.
pub fn ci_holds(law: &Table, x: &[&str], y: &[&str], z: &[&str], tol: f64) -> Result<bool, OracleError> {
    let mut all: Vec<&str> = z.to_vec();
    all.extend_from_slice(x);
    all.extend_from_slice(y);
    let joint = law.marginal(&all)?;
    let pz = joint.marginal(z)?;
    let pxz = joint.marginal(&[z, x].concat())?;
    let pyz = joint.marginal(&[z, y].concat())?;
    // p(x,y,z) p(z) - p(x,z) p(y,z), divided by p(z)^2 where p(z) > 0.
    let lhs = joint.multiply(&pz)?;
    let rhs = pxz.multiply(&pyz)?.permuted(&lhs.axis_names())?;
    let pz2 = pz.multiply(&pz)?;
    let diff = lhs.combine(&rhs, |a, b, _| Ok(a - b))?;
    let scaled = diff.combine(&pz2, |d, q, _| Ok(if q > 0.0 { (d / q).abs() } else { 0.0 }))?;
    Ok(scaled.data().iter().all(|&v| v < tol))
}

/// Target law rebuilt from the true propensities:
/// `p(l, w, R=1) / prod_k p(R_k=1 | pa(R_k))` with proxies read as their
/// counterfactuals. Requires indicators without hidden parents.
pub fn target_from_true_propensities(s: &SampledModel) -> Result<Table, OracleError> {
    let m = &s.model;
    let obs = s.observed()?;
    let at_one = |t: Table| -> Result<Table, OracleError> {
        let mut t = t;
        for n in m.missing() {
            let r = indicator_name(n);
            if t.position(r.as_str()).is_some() {
                t = t.slice(r.as_str(), 1)?;
            }
            let p = proxy_name(n);
            let cf = counterfactual_name(n);
            let k = m.cardinality(n).expect("declared");
            if t.position(p.as_str()).is_some() && t.position(cf.as_str()).is_some() {
                // Both present: keep the diagonal proxy = counterfactual.
                let mut eq = Table::filled(vec![Axis::new(cf.as_str(), k), Axis::new(p.as_str(), k + 1)], 0.0)?;
                for x in 0..k {
                    eq.data_mut()[x * (k + 1) + x] = 1.0;
                }
                t = t.multiply(&eq)?.sum_out(p.as_str())?;
            } else if t.position(p.as_str()).is_some() {
                t = t.truncate(p.as_str(), k)?.rename(p.as_str(), cf.as_str())?;
            }
        }
        Ok(t)
    };
    let mut num = at_one(obs)?;
    for r in m.indicators() {
        let cpt = &s.cpts[&r];
        if cpt
            .tail
            .iter()
            .any(|p| m.role(p.as_str()) == Some(VertexRole::Hidden))
        {
            return Err(OracleError::NotVerifiable(format!("{r} has a hidden parent")));
        }
        num = num.divide(&at_one(cpt.table.clone())?)?;
    }
    Ok(num.permuted(&names(&m.target_vertices()))?)
}

/// Kernel `p(V \ R* || R*=1)` obtained from the full law by dividing out
/// the true conditionals of `rstar` and fixing them at 1.
pub fn intervene_indicators(s: &SampledModel, rstar: &[VertexId]) -> Result<Table, OracleError> {
    intervene_on(&s.full, s, rstar)
}

fn intervene_on(full: &Table, s: &SampledModel, rstar: &[VertexId]) -> Result<Table, OracleError> {
    let mut k = full.clone();
    // Divide first: a fixed indicator may be a parent of another one.
    for r in rstar {
        k = k.divide(&s.cpts[r].table)?;
    }
    for r in rstar {
        k = k.slice(r.as_str(), 1)?;
    }
    Ok(k)
}

/// Largest change of `p(r_k | pa(r_k))` between the full law and the
/// kernel after fixing `rstar` at 1, over cells where the kernel gives the
/// parents positive mass.
pub fn propensity_invariance_gap(s: &SampledModel, rk: &VertexId, rstar: &[VertexId]) -> Result<f64, OracleError> {
    let cpt = &s.cpts[rk];
    // Only the variables the quotient depends on matter.
    let mut keep: BTreeSet<&str> = cpt.table.axis_names().into_iter().collect();
    for r in rstar {
        keep.extend(s.cpts[r].table.axis_names());
    }
    let keep: Vec<&str> = keep.into_iter().collect();
    let k = intervene_on(&s.full.marginal(&keep)?, s, rstar)?;
    let fixed: BTreeSet<&VertexId> = rstar.iter().collect();
    // Fixed parents sit at 1 in the kernel.
    let mut reference = cpt.table.clone();
    let mut tail: Vec<&str> = Vec::new();
    for p in &cpt.tail {
        if fixed.contains(p) {
            reference = reference.slice(p.as_str(), 1)?;
        } else {
            tail.push(p.as_str());
        }
    }
    let joint = k.marginal(&[tail.clone(), vec![rk.as_str()]].concat())?;
    let pa = joint.marginal(&tail)?;
    let cond = joint.divide(&pa)?;
    let mask = pa.combine(&cond, |p, _, _| Ok(if p > 0.0 { 1.0 } else { 0.0 }))?;
    let reference = reference.permuted(&cond.axis_names())?;
    let diff = cond
        .combine(&reference, |a, b, _| Ok((a - b).abs()))?
        .multiply(&mask.permuted(&cond.axis_names())?)?;
    Ok(diff.data().iter().copied().fold(0.0, f64::max))
}

/// `p(Y(1))` under `do(A=a)` for every `a`, with axes `(Y(1), A)`.
pub fn interventional_outcome(s: &SampledModel, q: &OutcomeQuery) -> Result<Table, OracleError> {
    let m = &s.model;
    let a = q.treatment.as_str();
    let y = counterfactual_name(&q.outcome);
    let ka = m.state_count(a).ok_or_else(|| OracleError::NotVerifiable(format!("unknown treatment {a}")))?;
    let ky = m.cardinality(&q.outcome).ok_or_else(|| OracleError::NotVerifiable(format!("unknown outcome {}", q.outcome)))?;
    let mut data = vec![0.0; ky * ka];
    for value in 0..ka {
        let mut cpts = s.cpts.clone();
        let old = &cpts[&q.treatment];
        let mut table = old.table.clone();
        let k = ka;
        for row in table.data_mut().chunks_mut(k) {
            for (i, c) in row.iter_mut().enumerate() {
                *c = if i == value { 1.0 } else { 0.0 };
            }
        }
        cpts.insert(
            q.treatment.clone(),
            Cpt {
                head: old.head.clone(),
                tail: old.tail.clone(),
                table,
            },
        );
        let full = full_law_from_cpts(m, &cpts)?;
        let py = full.marginal(&[y.as_str()])?;
        for yy in 0..ky {
            data[yy * ka + value] = py.data()[yy];
        }
    }
    Ok(Table::new(vec![Axis::new(y.as_str(), ky), Axis::new(a, ka)], data)?)
}

/// The law a result claims to identify, computed from the full law.
pub fn true_query_law(s: &SampledModel, q: &Query) -> Result<Table, OracleError> {
    match q {
        Query::TargetLaw => s.target(),
        Query::FullLaw => full_law_query(&s.full, &s.model),
        Query::CounterfactualOutcome(oq) => interventional_outcome(s, oq),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: u64,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub model_hash: String,
    pub query: Query,
    pub generator: String,
    pub seed: u64,
    pub trials: Vec<TrialReport>,
    pub max_error: f64,
    /// Trial index with the largest error.
    pub worst_trial: Option<u64>,
    pub config: OracleConfig,
}

/// Evaluates the identified functional of `result` on `trials` sampled laws
/// and compares it with the true queried law.
pub fn verify_identification(
    m: &MDag,
    result: &IdResult,
    trials: u64,
    seed: u64,
) -> Result<VerifyReport, OracleError> {
    verify_with_config(m, result, trials, seed, &OracleConfig::default())
}

pub fn verify_with_config(
    m: &MDag,
    result: &IdResult,
    trials: u64,
    seed: u64,
    cfg: &OracleConfig,
) -> Result<VerifyReport, OracleError> {
    let f = result
        .functional()
        .ok_or_else(|| OracleError::NotVerifiable(format!("verdict {} carries no functional", result.verdict.name())))?;
    let mut report = VerifyReport {
        schema_version: crate::expr::SCHEMA_VERSION,
        model_hash: model_hash(m),
        query: result.query.clone(),
        generator: GENERATOR.to_string(),
        seed,
        trials: Vec::new(),
        max_error: 0.0,
        worst_trial: None,
        config: *cfg,
    };
    for trial in 0..trials {
        let wrap = |e: OracleError| OracleError::Trial {
            trial,
            seed,
            source: Box::new(e),
        };
        let s = SampledModel::sample(m, seed, trial, cfg).map_err(wrap)?;
        let truth = true_query_law(&s, &result.query).map_err(wrap)?;
        let obs = s.observed().map_err(wrap)?;
        let got = f.eval(&obs).map_err(|e| wrap(e.into()))?;
        let err = got.max_abs_diff(&truth).map_err(|e| wrap(e.into()))?;
        if report.worst_trial.is_none() || err > report.max_error {
            report.max_error = err;
            report.worst_trial = Some(trial);
        }
        report.trials.push(TrialReport { trial, max_error: err });
    }
    Ok(report)
}

/// Two full laws for a single self-censored variable with `card` states
/// that share the observed law but differ in the target law.
///
/// The complete-case part `p(x(1), R=1)` and `p(R=0)` are common; the
/// distribution of `x(1)` among the missing is concentrated on the first
/// state in one law and on the last state in the other. `missing_rate`
/// defaults to a seeded draw from `[0.2, 0.8]`.
pub fn self_censoring_counterexample(
    card: usize,
    seed: u64,
    missing_rate: Option<f64>,
) -> Result<(Table, Table), OracleError> {
    let m = ModelSpec::new()
        .missing(&["X"])
        .cardinality("X", card)
        .edge("X(1)", "R_X")
        .build()?;
    let mut rng = trial_rng(seed, 0);
    let rate = match missing_rate {
        Some(r) if r > 0.0 && r < 1.0 => r,
        Some(r) => return Err(OracleError::Positivity(format!("missing rate {r} must lie strictly between 0 and 1"))),
        None => rng.random_range(0.2..0.8),
    };
    let gamma = Gamma::new(1.0, 1.0).expect("valid shape");
    let mut observed_part: Vec<f64> = (0..card).map(|_| gamma.sample(&mut rng)).collect();
    let s: f64 = observed_part.iter().sum();
    observed_part.iter_mut().for_each(|x| *x = 0.95 * *x / s + 0.05 / card as f64);
    let missing_part = |first: bool| -> Vec<f64> {
        (0..card)
            .map(|x| {
                let peak = if first { x == 0 } else { x == card - 1 };
                0.95 * f64::from(u8::from(peak)) + 0.05 / card as f64
            })
            .collect()
    };
    let build = |h: Vec<f64>| -> Result<Table, OracleError> {
        // p(x(1)) and p(r | x(1)) from the two strata.
        let px: Vec<f64> = (0..card).map(|x| (1.0 - rate) * observed_part[x] + rate * h[x]).collect();
        let mut pr = Vec::new();
        for x in 0..card {
            let p1 = (1.0 - rate) * observed_part[x] / px[x];
            pr.extend([1.0 - p1, p1]);
        }
        let cx = Cpt::new(
            VertexId::new("X(1)"),
            vec![],
            Table::new(vec![Axis::new("X(1)", card)], px)?,
            f64::MIN_POSITIVE,
        )?;
        let cr = Cpt::new(
            VertexId::new("R_X"),
            vec![VertexId::new("X(1)")],
            Table::new(vec![Axis::new("X(1)", card), Axis::new("R_X", 2)], pr)?,
            f64::MIN_POSITIVE,
        )?;
        Ok(SampledModel::from_cpts(&m, vec![cx, cr])?.full)
    };
    Ok((build(missing_part(true))?, build(missing_part(false))?))
}

/// Generates a random m-DAG with at most `max_missing` missing and
/// `max_observed` observed binary variables. Edges respect the m-DAG
/// restrictions by construction.
pub fn random_mdag(seed: u64, max_missing: usize, max_observed: usize, edge_prob: f64) -> MDag {
    let mut rng = trial_rng(seed, u64::MAX);
    let k = rng.random_range(1..=max_missing.max(1));
    let w = rng.random_range(0..=max_observed);
    let missing: Vec<String> = (1..=k).map(|i| format!("X{i}")).collect();
    let observed: Vec<String> = (1..=w).map(|i| format!("W{i}")).collect();
    // Random order over substantive variables.
    let mut subst: Vec<String> = missing
        .iter()
        .map(|n| counterfactual_name(n).to_string())
        .chain(observed.iter().cloned())
        .collect();
    subst.shuffle(&mut rng);
    let mut rs: Vec<String> = missing.clone();
    rs.shuffle(&mut rng);
    let mut spec = ModelSpec {
        missing: missing.clone(),
        observed: observed.clone(),
        ..ModelSpec::default()
    };
    for i in 0..subst.len() {
        for j in i + 1..subst.len() {
            if rng.random_bool(edge_prob) {
                spec.edges.push((subst[i].clone(), subst[j].clone()));
            }
        }
    }
    for s in &subst {
        for r in &rs {
            if rng.random_bool(edge_prob) {
                spec.edges.push((s.clone(), indicator_name(r).to_string()));
            }
        }
    }
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            if rng.random_bool(edge_prob) {
                spec.edges.push((indicator_name(&rs[i]).to_string(), indicator_name(&rs[j]).to_string()));
            }
            if rng.random_bool(edge_prob / 2.0) {
                spec.edges.push((proxy_name(&rs[i]).to_string(), indicator_name(&rs[j]).to_string()));
            }
        }
    }
    spec.build().expect("random m-DAG respects the restrictions")
}
