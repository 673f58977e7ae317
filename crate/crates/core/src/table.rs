//! Dense tables over named finite axes, stored row-major (last axis
//! fastest).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub card: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, card: usize) -> Self {
        Axis {
            name: name.into(),
            card,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("duplicate axis `{0}`")]
    DuplicateAxis(String),
    #[error("axis `{name}` has {left} states on one side and {right} on the other")]
    CardinalityMismatch { name: String, left: usize, right: usize },
    #[error("value {value} outside the {card} states of axis `{name}`")]
    ValueOutOfRange { name: String, value: usize, card: usize },
    #[error("table of {cells} cells exceeds the limit of {limit}")]
    TooLarge { cells: usize, limit: usize },
    #[error("data length {got} does not match {expected} cells")]
    Shape { got: usize, expected: usize },
    #[error("zero denominator against numerator {numerator} at {cell}")]
    ZeroDenominator { cell: String, numerator: f64 },
}

/// Upper bound on cells in any single table.
pub const MAX_CELLS: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    axes: Vec<Axis>,
    data: Vec<f64>,
}

fn cell_count(axes: &[Axis]) -> Result<usize, TableError> {
    let cells: u128 = axes.iter().map(|a| a.card as u128).product();
    if cells > MAX_CELLS as u128 {
        return Err(TableError::TooLarge {
            cells: usize::try_from(cells).unwrap_or(usize::MAX),
            limit: MAX_CELLS,
        });
    }
    Ok(cells as usize)
}

fn strides(axes: &[Axis]) -> Vec<usize> {
    let mut s = vec![1; axes.len()];
    for i in (0..axes.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * axes[i + 1].card;
    }
    s
}

/// Iterates over every assignment of `cards`, last coordinate fastest.
pub(crate) struct Odometer {
    cards: Vec<usize>,
    cur: Vec<usize>,
    done: bool,
}

impl Odometer {
    pub(crate) fn new(cards: Vec<usize>) -> Self {
        let done = cards.contains(&0);
        let cur = vec![0; cards.len()];
        Odometer { cards, cur, done }
    }

    pub(crate) fn current(&self) -> Option<&[usize]> {
        (!self.done).then_some(self.cur.as_slice())
    }

    pub(crate) fn advance(&mut self) {
        for i in (0..self.cards.len()).rev() {
            self.cur[i] += 1;
            if self.cur[i] < self.cards[i] {
                return;
            }
            self.cur[i] = 0;
        }
        self.done = true;
    }
}

impl Table {
    pub fn new(axes: Vec<Axis>, data: Vec<f64>) -> Result<Self, TableError> {
        let mut names = std::collections::BTreeSet::new();
        for a in &axes {
            if !names.insert(a.name.as_str()) {
                return Err(TableError::DuplicateAxis(a.name.clone()));
            }
        }
        let expected = cell_count(&axes)?;
        if data.len() != expected {
            return Err(TableError::Shape {
                got: data.len(),
                expected,
            });
        }
        Ok(Table { axes, data })
    }

    pub fn filled(axes: Vec<Axis>, value: f64) -> Result<Self, TableError> {
        let n = cell_count(&axes)?;
        Table::new(axes, vec![value; n])
    }

    pub fn scalar(value: f64) -> Self {
        Table {
            axes: Vec::new(),
            data: vec![value],
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn card(&self, name: &str) -> Option<usize> {
        self.position(name).map(|i| self.axes[i].card)
    }

    fn require(&self, name: &str) -> Result<usize, TableError> {
        self.position(name).ok_or_else(|| TableError::UnknownAxis(name.to_string()))
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Value at a full assignment given by axis name.
    pub fn get(&self, assignment: &BTreeMap<String, usize>) -> Result<f64, TableError> {
        let st = strides(&self.axes);
        let mut idx = 0;
        for (i, a) in self.axes.iter().enumerate() {
            let v = *assignment
                .get(&a.name)
                .ok_or_else(|| TableError::UnknownAxis(a.name.clone()))?;
            if v >= a.card {
                return Err(TableError::ValueOutOfRange {
                    name: a.name.clone(),
                    value: v,
                    card: a.card,
                });
            }
            idx += v * st[i];
        }
        Ok(self.data[idx])
    }

    /// Human-readable cell label, e.g. `X1=0, R_X1=1`.
    pub fn cell_label(&self, flat: usize) -> String {
        let st = strides(&self.axes);
        self.axes
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{}={}", a.name, (flat / st[i]) % a.card))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Sums out every axis not in `keep`; the result's axes follow `keep`.
    pub fn marginal(&self, keep: &[&str]) -> Result<Table, TableError> {
        let pos: Vec<usize> = keep.iter().map(|n| self.require(n)).collect::<Result<_, _>>()?;
        let out_axes: Vec<Axis> = pos.iter().map(|&p| self.axes[p].clone()).collect();
        let out_st = strides(&out_axes);
        let mut map = vec![0usize; self.axes.len()];
        for (k, &p) in pos.iter().enumerate() {
            map[p] = out_st[k];
        }
        let mut out = vec![0.0; cell_count(&out_axes)?];
        let mut odo = Odometer::new(self.axes.iter().map(|a| a.card).collect());
        let mut flat = 0;
        while let Some(cur) = odo.current() {
            let j: usize = cur.iter().zip(&map).map(|(c, m)| c * m).sum();
            out[j] += self.data[flat];
            flat += 1;
            odo.advance();
        }
        Table::new(out_axes, out)
    }

    pub fn sum_out(&self, name: &str) -> Result<Table, TableError> {
        self.require(name)?;
        let keep: Vec<&str> = self.axis_names().into_iter().filter(|n| *n != name).collect();
        self.marginal(&keep)
    }

    /// Restricts `name` to `value` and drops the axis.
    pub fn slice(&self, name: &str, value: usize) -> Result<Table, TableError> {
        let p = self.require(name)?;
        let card = self.axes[p].card;
        if value >= card {
            return Err(TableError::ValueOutOfRange {
                name: name.to_string(),
                value,
                card,
            });
        }
        self.select(p, |v| (v == value).then_some(0), 1, true)
    }

    /// Keeps the first `card` states of `name`.
    pub fn truncate(&self, name: &str, card: usize) -> Result<Table, TableError> {
        let p = self.require(name)?;
        let old = self.axes[p].card;
        if card > old || card == 0 {
            return Err(TableError::CardinalityMismatch {
                name: name.to_string(),
                left: old,
                right: card,
            });
        }
        self.select(p, |v| (v < card).then_some(v), card, false)
    }

    // Generic axis re-indexing: `f` maps an old state to a new one or drops it.
    fn select(
        &self,
        p: usize,
        f: impl Fn(usize) -> Option<usize>,
        new_card: usize,
        drop_axis: bool,
    ) -> Result<Table, TableError> {
        let mut out_axes = self.axes.clone();
        out_axes[p].card = new_card;
        let out_st = strides(&out_axes);
        let mut out = vec![0.0; cell_count(&out_axes)?];
        let mut odo = Odometer::new(self.axes.iter().map(|a| a.card).collect());
        let mut flat = 0;
        while let Some(cur) = odo.current() {
            if let Some(nv) = f(cur[p]) {
                let mut j = 0;
                for (i, &c) in cur.iter().enumerate() {
                    j += if i == p { nv } else { c } * out_st[i];
                }
                out[j] = self.data[flat];
            }
            flat += 1;
            odo.advance();
        }
        if drop_axis {
            out_axes.remove(p);
        }
        Table::new(out_axes, out)
    }

    pub fn rename(mut self, from: &str, to: &str) -> Result<Table, TableError> {
        let p = self.require(from)?;
        if from != to && self.position(to).is_some() {
            return Err(TableError::DuplicateAxis(to.to_string()));
        }
        self.axes[p].name = to.to_string();
        Ok(self)
    }

    /// Reorders axes to `order`, which must name every axis once.
    pub fn permuted(&self, order: &[&str]) -> Result<Table, TableError> {
        if order.len() != self.axes.len() {
            return Err(TableError::UnknownAxis(format!("permutation {order:?}")));
        }
        self.marginal(order)
    }

    /// Pointwise combination over the union of axes. The result carries
    /// `self`'s axes followed by the axes only `other` has.
    pub fn combine(
        &self,
        other: &Table,
        f: impl Fn(f64, f64, &dyn Fn() -> String) -> Result<f64, TableError>,
    ) -> Result<Table, TableError> {
        let mut out_axes = self.axes.clone();
        for a in &other.axes {
            match self.position(&a.name) {
                Some(p) if self.axes[p].card != a.card => {
                    return Err(TableError::CardinalityMismatch {
                        name: a.name.clone(),
                        left: self.axes[p].card,
                        right: a.card,
                    })
                }
                Some(_) => {}
                None => out_axes.push(a.clone()),
            }
        }
        let n = cell_count(&out_axes)?;
        let (sa, sb) = (strides(&self.axes), strides(&other.axes));
        let map_a: Vec<usize> = (0..out_axes.len()).map(|i| if i < self.axes.len() { sa[i] } else { 0 }).collect();
        let map_b: Vec<usize> = out_axes
            .iter()
            .map(|a| other.position(&a.name).map(|p| sb[p]).unwrap_or(0))
            .collect();
        let mut out = Vec::with_capacity(n);
        let mut odo = Odometer::new(out_axes.iter().map(|a| a.card).collect());
        while let Some(cur) = odo.current() {
            let ia: usize = cur.iter().zip(&map_a).map(|(c, m)| c * m).sum();
            let ib: usize = cur.iter().zip(&map_b).map(|(c, m)| c * m).sum();
            let label = || {
                out_axes
                    .iter()
                    .zip(cur)
                    .map(|(a, c)| format!("{}={}", a.name, c))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            out.push(f(self.data[ia], other.data[ib], &label)?);
            odo.advance();
        }
        Table::new(out_axes, out)
    }

    pub fn multiply(&self, other: &Table) -> Result<Table, TableError> {
        self.combine(other, |a, b, _| Ok(a * b))
    }

    /// Division with `0 / 0 = 0`; a nonzero numerator over zero is an error
    /// naming the cell.
    pub fn divide(&self, other: &Table) -> Result<Table, TableError> {
        self.combine(other, |a, b, label| {
            if b != 0.0 {
                Ok(a / b)
            } else if a == 0.0 {
                Ok(0.0)
            } else {
                Err(TableError::ZeroDenominator {
                    cell: label(),
                    numerator: a,
                })
            }
        })
    }

    pub fn scale(&self, c: f64) -> Table {
        Table {
            axes: self.axes.clone(),
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// `p(head | tail)` from a joint over at least `head ∪ tail`, with
    /// `0 / 0 = 0`. Axes follow `tail` then `head`.
    pub fn conditional(&self, head: &[&str], tail: &[&str]) -> Result<Table, TableError> {
        let mut all: Vec<&str> = tail.to_vec();
        all.extend_from_slice(head);
        let joint = self.marginal(&all)?;
        let denom = joint.marginal(tail)?;
        joint.divide(&denom)
    }

    /// Largest absolute cellwise difference after aligning axes by name.
    pub fn max_abs_diff(&self, other: &Table) -> Result<f64, TableError> {
        if self.axes.len() != other.axes.len() {
            return Err(TableError::UnknownAxis(format!(
                "axes {:?} vs {:?}",
                self.axis_names(),
                other.axis_names()
            )));
        }
        let aligned = other.permuted(&self.axis_names())?;
        for (a, b) in self.axes.iter().zip(&aligned.axes) {
            if a.card != b.card {
                return Err(TableError::CardinalityMismatch {
                    name: a.name.clone(),
                    left: a.card,
                    right: b.card,
                });
            }
        }
        Ok(self
            .data
            .iter()
            .zip(&aligned.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Flat CSV: one column per axis then `p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = self.axis_names();
        header.push("p");
        out.push_str(&header.join(","));
        out.push('\n');
        let mut odo = Odometer::new(self.axes.iter().map(|a| a.card).collect());
        let mut flat = 0;
        while let Some(cur) = odo.current() {
            for c in cur {
                out.push_str(&c.to_string());
                out.push(',');
            }
            out.push_str(&format!("{:e}\n", self.data[flat]));
            flat += 1;
            odo.advance();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2() -> Table {
        // p(a, b) with a in {0,1}, b in {0,1,2}
        Table::new(
            vec![Axis::new("a", 2), Axis::new("b", 3)],
            vec![0.1, 0.2, 0.1, 0.3, 0.2, 0.1],
        )
        .unwrap()
    }

    #[test]
    fn marginal_and_slice() {
        let t = t2();
        let m = t.marginal(&["b"]).unwrap();
        assert!((m.data()[0] - 0.4).abs() < 1e-15);
        let s = t.slice("a", 1).unwrap();
        assert_eq!(s.data(), &[0.3, 0.2, 0.1]);
        let tr = t.truncate("b", 2).unwrap();
        assert_eq!(tr.data(), &[0.1, 0.2, 0.3, 0.2]);
        let p = t.permuted(&["b", "a"]).unwrap();
        assert_eq!(p.data(), &[0.1, 0.3, 0.2, 0.2, 0.1, 0.1]);
    }

    #[test]
    fn conditional_rows_sum_to_one() {
        let c = t2().conditional(&["b"], &["a"]).unwrap();
        for a in 0..2 {
            let s: f64 = c.slice("a", a).unwrap().total();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn division_rules() {
        let num = Table::new(vec![Axis::new("x", 2)], vec![0.0, 1.0]).unwrap();
        let den = Table::new(vec![Axis::new("x", 2)], vec![0.0, 2.0]).unwrap();
        assert_eq!(num.divide(&den).unwrap().data(), &[0.0, 0.5]);
        let bad = Table::new(vec![Axis::new("x", 2)], vec![1.0, 1.0]).unwrap();
        match bad.divide(&den) {
            Err(TableError::ZeroDenominator { cell, .. }) => assert_eq!(cell, "x=0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn broadcast_product() {
        let a = Table::new(vec![Axis::new("x", 2)], vec![1.0, 2.0]).unwrap();
        let b = Table::new(vec![Axis::new("y", 2)], vec![3.0, 5.0]).unwrap();
        let p = a.multiply(&b).unwrap();
        assert_eq!(p.axis_names(), ["x", "y"]);
        assert_eq!(p.data(), &[3.0, 5.0, 6.0, 10.0]);
    }

    #[test]
    fn guard() {
        let axes: Vec<Axis> = (0..30).map(|i| Axis::new(format!("v{i}"), 2)).collect();
        assert!(matches!(Table::filled(axes, 0.0), Err(TableError::TooLarge { .. })));
    }
}
