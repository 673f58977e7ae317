//! Functionals of the observed law.
//!
//! Leaves are conditionals of the observed law ([`FunctionalExpr::Atom`])
//! whose coordinates are bound either to a named free variable or to a
//! fixed value. A proxy coordinate may be bound to its counterfactual's
//! variable (`X1=X1(1)`), which drops the "?" state.
//!
//! Variable domains are resolved against the observed law: a variable
//! named like an axis takes that axis's states, and `N(1)` takes the states
//! of axis `N` minus "?".

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::VertexId;
use crate::table::{Axis, Table, TableError};

/// Version tag for the JSON forms of expressions and results.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Var(String),
    Value(usize),
}

/// One coordinate of an atom and what it is bound to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Term {
    pub coord: VertexId,
    pub bind: Binding,
}

impl Term {
    /// Coordinate bound to the variable of the same name.
    pub fn var(coord: &str) -> Self {
        Term {
            coord: VertexId::new(coord),
            bind: Binding::Var(coord.to_string()),
        }
    }

    pub fn bound(coord: &str, var: &str) -> Self {
        Term {
            coord: VertexId::new(coord),
            bind: Binding::Var(var.to_string()),
        }
    }

    pub fn value(coord: &str, value: usize) -> Self {
        Term {
            coord: VertexId::new(coord),
            bind: Binding::Value(value),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.bind {
            Binding::Var(v) if v == self.coord.as_str() => write!(f, "{}", self.coord),
            Binding::Var(v) => write!(f, "{}={}", self.coord, v),
            Binding::Value(x) => write!(f, "{}={}", self.coord, x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalExpr {
    /// `p(head | given)` read from the observed law.
    Atom { head: Vec<Term>, given: Vec<Term> },
    Product { factors: Vec<FunctionalExpr> },
    Ratio {
        numerator: Box<FunctionalExpr>,
        denominator: Box<FunctionalExpr>,
    },
    Sum { var: String, body: Box<FunctionalExpr> },
    /// Deterministic proxy factor: 1 when the proxy equals the
    /// counterfactual under `R=1`, or "?" under `R=0`; 0 otherwise.
    Proxy {
        base: String,
        counterfactual: Binding,
        indicator: Binding,
        proxy: Binding,
    },
    Const { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("variable `{0}` has no domain in the observed law")]
    UnknownVariable(String),
    #[error("variable `{0}` is bound more than once in one atom")]
    RepeatedVariable(String),
    #[error("free variables {found:?} do not match declared outputs {declared:?}")]
    Outputs { found: Vec<String>, declared: Vec<String> },
}

impl FunctionalExpr {
    pub fn atom(head: Vec<Term>, given: Vec<Term>) -> Self {
        FunctionalExpr::Atom { head, given }
    }

    pub fn one() -> Self {
        FunctionalExpr::Const { value: 1.0 }
    }

    pub fn product(factors: Vec<FunctionalExpr>) -> Self {
        FunctionalExpr::Product { factors }
    }

    pub fn ratio(numerator: FunctionalExpr, denominator: FunctionalExpr) -> Self {
        FunctionalExpr::Ratio {
            numerator: Box::new(numerator),
            denominator: Box::new(denominator),
        }
    }

    /// Nested sums; the first variable ends up outermost.
    pub fn sum<S: AsRef<str>>(vars: &[S], body: FunctionalExpr) -> Self {
        vars.iter().rev().fold(body, |acc, v| FunctionalExpr::Sum {
            var: v.as_ref().to_string(),
            body: Box::new(acc),
        })
    }

    /// `joint / sum over head of joint`.
    pub fn conditional<S: AsRef<str>>(joint: FunctionalExpr, head: &[S]) -> Self {
        let denom = FunctionalExpr::sum(head, joint.clone());
        FunctionalExpr::ratio(joint, denom)
    }

    pub fn proxy(base: &str) -> Self {
        FunctionalExpr::Proxy {
            base: base.to_string(),
            counterfactual: Binding::Var(format!("{base}(1)")),
            indicator: Binding::Var(format!("R_{base}")),
            proxy: Binding::Var(base.to_string()),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            FunctionalExpr::Atom { head, given } => {
                for t in head.iter().chain(given) {
                    if let Binding::Var(v) = &t.bind {
                        out.insert(v.clone());
                    }
                }
            }
            FunctionalExpr::Product { factors } => factors.iter().for_each(|f| f.collect_free(out)),
            FunctionalExpr::Ratio {
                numerator,
                denominator,
            } => {
                numerator.collect_free(out);
                denominator.collect_free(out);
            }
            FunctionalExpr::Sum { var, body } => {
                let mut inner = body.free_vars();
                inner.remove(var);
                out.extend(inner);
            }
            FunctionalExpr::Proxy {
                counterfactual,
                indicator,
                proxy,
                ..
            } => {
                for b in [counterfactual, indicator, proxy] {
                    if let Binding::Var(v) = b {
                        out.insert(v.clone());
                    }
                }
            }
            FunctionalExpr::Const { .. } => {}
        }
    }

    /// Replaces free occurrences of `var`. Substituting a variable that a
    /// sum binds is a no-op below that sum.
    pub fn substitute(&self, var: &str, with: &Binding) -> FunctionalExpr {
        let sub = |b: &Binding| match b {
            Binding::Var(v) if v == var => with.clone(),
            other => other.clone(),
        };
        match self {
            FunctionalExpr::Atom { head, given } => {
                let map = |ts: &Vec<Term>| {
                    ts.iter()
                        .map(|t| Term {
                            coord: t.coord.clone(),
                            bind: sub(&t.bind),
                        })
                        .collect()
                };
                FunctionalExpr::Atom {
                    head: map(head),
                    given: map(given),
                }
            }
            FunctionalExpr::Product { factors } => FunctionalExpr::Product {
                factors: factors.iter().map(|f| f.substitute(var, with)).collect(),
            },
            FunctionalExpr::Ratio {
                numerator,
                denominator,
            } => FunctionalExpr::ratio(numerator.substitute(var, with), denominator.substitute(var, with)),
            FunctionalExpr::Sum { var: bound, body } => {
                if bound == var {
                    self.clone()
                } else {
                    FunctionalExpr::Sum {
                        var: bound.clone(),
                        body: Box::new(body.substitute(var, with)),
                    }
                }
            }
            FunctionalExpr::Proxy {
                base,
                counterfactual,
                indicator,
                proxy,
            } => FunctionalExpr::Proxy {
                base: base.clone(),
                counterfactual: sub(counterfactual),
                indicator: sub(indicator),
                proxy: sub(proxy),
            },
            FunctionalExpr::Const { .. } => self.clone(),
        }
    }

    pub fn substitute_value(&self, var: &str, value: usize) -> FunctionalExpr {
        self.substitute(var, &Binding::Value(value))
    }

    pub fn rename(&self, var: &str, to: &str) -> FunctionalExpr {
        self.substitute(var, &Binding::Var(to.to_string()))
    }

    /// Syntactic normalization: flattens products and ratios and cancels
    /// factors that appear identically above and below a fraction bar.
    pub fn normalized(&self) -> FunctionalExpr {
        match self {
            FunctionalExpr::Product { factors } => {
                let mut flat = Vec::new();
                for f in factors {
                    match f.normalized() {
                        FunctionalExpr::Product { factors } => flat.extend(factors),
                        FunctionalExpr::Const { value } if value == 1.0 => {}
                        other => flat.push(other),
                    }
                }
                match flat.len() {
                    0 => FunctionalExpr::one(),
                    1 => flat.pop().expect("one factor"),
                    _ => FunctionalExpr::Product { factors: flat },
                }
            }
            FunctionalExpr::Ratio {
                numerator,
                denominator,
            } => {
                let (mut num, mut den) = (factors_of(numerator.normalized()), factors_of(denominator.normalized()));
                // Pull nested fractions up to the top level.
                loop {
                    let mut changed = false;
                    for list_is_num in [true, false] {
                        let (list, other) = if list_is_num { (&mut num, &mut den) } else { (&mut den, &mut num) };
                        if let Some(i) = list.iter().position(|f| matches!(f, FunctionalExpr::Ratio { .. })) {
                            if let FunctionalExpr::Ratio {
                                numerator,
                                denominator,
                            } = list.remove(i)
                            {
                                list.extend(factors_of(*numerator));
                                other.extend(factors_of(*denominator));
                                changed = true;
                            }
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                let mut i = 0;
                while i < num.len() {
                    if let Some(j) = den.iter().position(|d| d == &num[i]) {
                        num.remove(i);
                        den.remove(j);
                    } else {
                        i += 1;
                    }
                }
                // p(H | G) / p(H' | G) with H' inside H is p(H \ H' | H', G).
                let mut j = 0;
                while j < den.len() {
                    let hit = num.iter().position(|n| conditional_of(n, &den[j]).is_some());
                    match hit {
                        Some(i) => {
                            num[i] = conditional_of(&num[i], &den[j]).expect("checked");
                            den.remove(j);
                        }
                        None => j += 1,
                    }
                }
                let n = FunctionalExpr::product(num).normalized();
                if den.is_empty() {
                    n
                } else {
                    FunctionalExpr::ratio(n, FunctionalExpr::product(den).normalized())
                }
            }
            FunctionalExpr::Sum { var, body } => normalize_sum(var, body.normalized()),
            other => other.clone(),
        }
    }

    /// Evaluates against an observed law. The result has one axis per free
    /// variable.
    pub fn eval(&self, obs: &Table) -> Result<Table, EvalError> {
        match self {
            FunctionalExpr::Atom { head, given } => eval_atom(head, given, obs),
            FunctionalExpr::Product { factors } => {
                let mut acc = Table::scalar(1.0);
                for f in factors {
                    acc = acc.multiply(&f.eval(obs)?)?;
                }
                Ok(acc)
            }
            FunctionalExpr::Ratio {
                numerator,
                denominator,
            } => Ok(numerator.eval(obs)?.divide(&denominator.eval(obs)?)?),
            FunctionalExpr::Sum { var, body } => {
                let t = body.eval(obs)?;
                if t.position(var).is_some() {
                    Ok(t.sum_out(var)?)
                } else {
                    Ok(t.scale(domain(var, obs)? as f64))
                }
            }
            FunctionalExpr::Proxy {
                base,
                counterfactual,
                indicator,
                proxy,
            } => eval_proxy(base, counterfactual, indicator, proxy, obs),
            FunctionalExpr::Const { value } => Ok(Table::scalar(*value)),
        }
    }
}

/// `num / den` as one atom when both are atoms with the same conditioning
/// and `den`'s head lies inside `num`'s.
fn conditional_of(num: &FunctionalExpr, den: &FunctionalExpr) -> Option<FunctionalExpr> {
    let (FunctionalExpr::Atom { head: h1, given: g1 }, FunctionalExpr::Atom { head: h2, given: g2 }) = (num, den) else {
        return None;
    };
    let same_given = g1.len() == g2.len() && g2.iter().all(|t| g1.contains(t));
    if !same_given || h2.len() >= h1.len() || !h2.iter().all(|t| h1.contains(t)) {
        return None;
    }
    let head = h1.iter().filter(|t| !h2.contains(t)).cloned().collect();
    let mut given = h2.clone();
    given.extend(g1.iter().cloned());
    Some(FunctionalExpr::Atom { head, given })
}

/// Sums over `var`, dropping it from an atom's head where that is a plain
/// marginalization and pulling out factors that do not mention it.
fn normalize_sum(var: &str, body: FunctionalExpr) -> FunctionalExpr {
    let mentions = |e: &FunctionalExpr| e.free_vars().contains(var);
    let (outside, inside): (Vec<_>, Vec<_>) = factors_of(body).into_iter().partition(|f| !mentions(f));
    let summed = match inside.as_slice() {
        [] => {
            return FunctionalExpr::Sum {
                var: var.to_string(),
                body: Box::new(flat_product(outside)),
            }
        }
        [FunctionalExpr::Atom { head, given }]
            if head.iter().filter(|t| t.bind == Binding::Var(var.to_string())).count() == 1
                && given.iter().all(|t| t.bind != Binding::Var(var.to_string())) =>
        {
            let head: Vec<Term> = head.iter().filter(|t| t.bind != Binding::Var(var.to_string())).cloned().collect();
            if head.is_empty() {
                FunctionalExpr::one()
            } else {
                FunctionalExpr::Atom {
                    head,
                    given: given.clone(),
                }
            }
        }
        _ => FunctionalExpr::Sum {
            var: var.to_string(),
            body: Box::new(flat_product(inside)),
        },
    };
    let mut all = outside;
    all.push(summed);
    flat_product(all)
}

/// Product of already normalized factors.
fn flat_product(factors: Vec<FunctionalExpr>) -> FunctionalExpr {
    let mut flat: Vec<FunctionalExpr> = factors.into_iter().flat_map(factors_of).collect();
    match flat.len() {
        0 => FunctionalExpr::one(),
        1 => flat.pop().expect("one factor"),
        _ => FunctionalExpr::Product { factors: flat },
    }
}

fn factors_of(e: FunctionalExpr) -> Vec<FunctionalExpr> {
    match e {
        FunctionalExpr::Product { factors } => factors,
        FunctionalExpr::Const { value } if value == 1.0 => Vec::new(),
        other => vec![other],
    }
}

/// Number of states of a variable, resolved against the observed law.
pub fn domain(var: &str, obs: &Table) -> Result<usize, EvalError> {
    if let Some(c) = obs.card(var) {
        return Ok(c);
    }
    if let Some(base) = var.strip_suffix("(1)") {
        if let Some(c) = obs.card(base) {
            return Ok(c - 1);
        }
    }
    Err(EvalError::UnknownVariable(var.to_string()))
}

fn eval_atom(head: &[Term], given: &[Term], obs: &Table) -> Result<Table, EvalError> {
    let head_coords: Vec<&str> = head.iter().map(|t| t.coord.as_str()).collect();
    let given_coords: Vec<&str> = given.iter().map(|t| t.coord.as_str()).collect();
    let mut t = obs.conditional(&head_coords, &given_coords)?;
    let mut seen = BTreeSet::new();
    for term in head.iter().chain(given) {
        let coord = term.coord.as_str();
        match &term.bind {
            Binding::Value(v) => t = t.slice(coord, *v)?,
            Binding::Var(var) => {
                if !seen.insert(var.as_str()) {
                    return Err(EvalError::RepeatedVariable(var.clone()));
                }
                let d = domain(var, obs)?;
                let c = t.card(coord).expect("coordinate kept");
                if d < c {
                    t = t.truncate(coord, d)?;
                } else if d > c {
                    return Err(TableError::CardinalityMismatch {
                        name: var.clone(),
                        left: c,
                        right: d,
                    }
                    .into());
                }
                // Two-step rename keeps a swap like X=X(1), X(1)=... safe.
                t = t.rename(coord, &format!("\u{0}{var}"))?;
            }
        }
    }
    let names: Vec<String> = t.axis_names().iter().map(|s| s.to_string()).collect();
    for n in names {
        if let Some(stripped) = n.strip_prefix('\u{0}') {
            t = t.rename(&n, stripped)?;
        }
    }
    Ok(t)
}

fn eval_proxy(
    base: &str,
    counterfactual: &Binding,
    indicator: &Binding,
    proxy: &Binding,
    obs: &Table,
) -> Result<Table, EvalError> {
    let k = obs
        .card(base)
        .ok_or_else(|| EvalError::UnknownVariable(base.to_string()))?
        - 1;
    let cf = format!("{base}(1)");
    let mut t = Table::filled(
        vec![Axis::new(cf.as_str(), k), Axis::new("\u{0}r", 2), Axis::new("\u{0}p", k + 1)],
        0.0,
    )?;
    {
        let data = t.data_mut();
        for x in 0..k {
            data[(x * 2) * (k + 1) + k] = 1.0;
            data[(x * 2 + 1) * (k + 1) + x] = 1.0;
        }
    }
    let mut seen = BTreeSet::new();
    for (axis, bind) in [(cf.as_str(), counterfactual), ("\u{0}r", indicator), ("\u{0}p", proxy)] {
        match bind {
            Binding::Value(v) => t = t.slice(axis, *v)?,
            Binding::Var(var) => {
                if !seen.insert(var.clone()) {
                    return Err(EvalError::RepeatedVariable(var.clone()));
                }
                let d = domain(var, obs)?;
                let c = t.card(axis).expect("axis kept");
                if d != c {
                    return Err(TableError::CardinalityMismatch {
                        name: var.clone(),
                        left: c,
                        right: d,
                    }
                    .into());
                }
                t = t.rename(axis, &format!("\u{1}{var}"))?;
            }
        }
    }
    let names: Vec<String> = t.axis_names().iter().map(|s| s.to_string()).collect();
    for n in names {
        if let Some(stripped) = n.strip_prefix('\u{1}') {
            t = t.rename(&n, stripped)?;
        }
    }
    Ok(t)
}

impl fmt::Display for FunctionalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalExpr::Atom { head, given } => {
                let h: Vec<String> = head.iter().map(|t| t.to_string()).collect();
                write!(f, "p({}", h.join(", "))?;
                if !given.is_empty() {
                    let g: Vec<String> = given.iter().map(|t| t.to_string()).collect();
                    write!(f, " | {}", g.join(", "))?;
                }
                write!(f, ")")
            }
            FunctionalExpr::Product { factors } => {
                let parts: Vec<String> = factors.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(" * "))
            }
            FunctionalExpr::Ratio {
                numerator,
                denominator,
            } => write!(f, "({numerator} / {denominator})"),
            FunctionalExpr::Sum { .. } => {
                let mut vars = Vec::new();
                let mut cur = self;
                while let FunctionalExpr::Sum { var, body } = cur {
                    vars.push(var.as_str());
                    cur = body;
                }
                write!(f, "sum[{}]{}", vars.join(", "), paren(cur))
            }
            FunctionalExpr::Proxy {
                base,
                counterfactual,
                indicator,
                proxy,
            } => {
                let show = |b: &Binding| match b {
                    Binding::Var(v) => v.clone(),
                    Binding::Value(x) => x.to_string(),
                };
                write!(f, "det_{base}({}; {}, {})", show(proxy), show(counterfactual), show(indicator))
            }
            FunctionalExpr::Const { value } => write!(f, "{value}"),
        }
    }
}

fn paren(e: &FunctionalExpr) -> String {
    match e {
        FunctionalExpr::Product { .. } | FunctionalExpr::Ratio { .. } => e.to_string(),
        other => format!("({other})"),
    }
}

/// An expression together with the order of its result axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub expr: FunctionalExpr,
    pub outputs: Vec<String>,
}

impl Functional {
    pub fn new(expr: FunctionalExpr, outputs: Vec<String>) -> Self {
        Functional { expr, outputs }
    }

    /// Evaluates and orders the result axes as [`Functional::outputs`].
    pub fn eval(&self, obs: &Table) -> Result<Table, EvalError> {
        let found = self.expr.free_vars();
        let declared: BTreeSet<String> = self.outputs.iter().cloned().collect();
        if found != declared {
            return Err(EvalError::Outputs {
                found: found.into_iter().collect(),
                declared: self.outputs.clone(),
            });
        }
        let t = self.expr.eval(obs)?;
        let order: Vec<&str> = self.outputs.iter().map(String::as_str).collect();
        Ok(t.permuted(&order)?)
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // p(R_X, X) for a single missing binary X: X has states {0, 1, ?}.
    fn obs() -> Table {
        Table::new(
            vec![Axis::new("R_X", 2), Axis::new("X", 3)],
            vec![0.0, 0.0, 0.4, 0.24, 0.36, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn identity_atom() {
        let e = FunctionalExpr::atom(vec![Term::var("R_X"), Term::var("X")], vec![]);
        let t = e.eval(&obs()).unwrap();
        assert_eq!(t, obs());
    }

    #[test]
    fn complete_case_conditional() {
        let e = FunctionalExpr::atom(vec![Term::bound("X", "X(1)")], vec![Term::value("R_X", 1)]);
        let t = e.eval(&obs()).unwrap();
        assert_eq!(t.axis_names(), ["X(1)"]);
        assert!((t.data()[0] - 0.4).abs() < 1e-12);
        assert!((t.data()[1] - 0.6).abs() < 1e-12);
        assert_eq!(e.to_string(), "p(X=X(1) | R_X=1)");
    }

    #[test]
    fn sums_and_free_vars() {
        let joint = FunctionalExpr::atom(vec![Term::var("R_X"), Term::var("X")], vec![]);
        let e = FunctionalExpr::sum(&["X"], joint.clone());
        assert_eq!(e.free_vars(), BTreeSet::from(["R_X".to_string()]));
        let t = e.eval(&obs()).unwrap();
        assert!((t.data()[0] - 0.4).abs() < 1e-12);
        let c = FunctionalExpr::conditional(joint, &["X"]);
        let t = c.eval(&obs()).unwrap();
        assert!((t.slice("R_X", 1).unwrap().total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proxy_factor_reconstructs_observed_law() {
        // sum over X(1) of p(X(1), R_X) * det = p(R_X, X)
        let full = FunctionalExpr::product(vec![
            FunctionalExpr::atom(vec![Term::bound("X", "X(1)")], vec![Term::value("R_X", 1)]),
            FunctionalExpr::atom(vec![Term::var("R_X")], vec![]),
            FunctionalExpr::proxy("X"),
        ]);
        let e = FunctionalExpr::sum(&["X(1)"], full);
        let t = Functional::new(e, vec!["R_X".into(), "X".into()]).eval(&obs()).unwrap();
        // Row R_X=0 puts all mass on "?"; row R_X=1 is p(X | R=1) p(R=1).
        assert!(t.max_abs_diff(&obs()).unwrap() < 1e-12);
    }

    #[test]
    fn normalization_cancels() {
        let a = FunctionalExpr::atom(vec![Term::var("R_X")], vec![]);
        let b = FunctionalExpr::atom(vec![Term::var("X")], vec![]);
        let e = FunctionalExpr::ratio(
            FunctionalExpr::product(vec![a.clone(), b.clone()]),
            FunctionalExpr::ratio(a.clone(), FunctionalExpr::one()),
        );
        assert_eq!(e.normalized(), b);
    }

    #[test]
    fn json_round_trip() {
        let e = FunctionalExpr::sum(
            &["X"],
            FunctionalExpr::ratio(
                FunctionalExpr::atom(vec![Term::var("X")], vec![Term::value("R_X", 1)]),
                FunctionalExpr::Const { value: 0.5 },
            ),
        );
        let s = serde_json::to_string(&e).unwrap();
        let back: FunctionalExpr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        assert!(s.contains("\"kind\":\"sum\""));
    }
}
