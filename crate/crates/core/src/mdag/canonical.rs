//! Library of named example models with binary variables.

use std::fmt;
use std::str::FromStr;

use super::{MDag, ModelError, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonicalModel {
    /// Permutation model: each indicator's propensity needs the other
    /// indicator fixed first.
    Permutation2,
    /// Block-parallel: the two indicators must be fixed together.
    BlockParallel2,
    BlockSequential2,
    MarExample2,
    /// Three variables needing a sequential step and a parallel pair.
    SeqPar3,
    /// Colluder at R_X2; R_X1 needs a marginalization first.
    PartialOrder3,
    /// Fully observed X3 between missing variables; R_X2 needs an
    /// intervention on X4.
    OutsideR4,
    OddsRatio3,
    /// Markov equivalent to [`CanonicalModel::OddsRatio3`].
    OddsRatio3Equiv,
    /// Four missing, two observed and three hidden variables.
    HiddenSix,
    SelfCensor1,
    /// Treatment A, covariate X, outcome Y missing, with hidden confounding
    /// of Y(1) with X and of R_Y with X.
    ConfoundedOutcome,
}

impl CanonicalModel {
    pub const ALL: [CanonicalModel; 12] = [
        CanonicalModel::Permutation2,
        CanonicalModel::BlockParallel2,
        CanonicalModel::BlockSequential2,
        CanonicalModel::MarExample2,
        CanonicalModel::SeqPar3,
        CanonicalModel::PartialOrder3,
        CanonicalModel::OutsideR4,
        CanonicalModel::OddsRatio3,
        CanonicalModel::OddsRatio3Equiv,
        CanonicalModel::HiddenSix,
        CanonicalModel::SelfCensor1,
        CanonicalModel::ConfoundedOutcome,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CanonicalModel::Permutation2 => "Permutation2",
            CanonicalModel::BlockParallel2 => "BlockParallel2",
            CanonicalModel::BlockSequential2 => "BlockSequential2",
            CanonicalModel::MarExample2 => "MarExample2",
            CanonicalModel::SeqPar3 => "SeqPar3",
            CanonicalModel::PartialOrder3 => "PartialOrder3",
            CanonicalModel::OutsideR4 => "OutsideR4",
            CanonicalModel::OddsRatio3 => "OddsRatio3",
            CanonicalModel::OddsRatio3Equiv => "OddsRatio3Equiv",
            CanonicalModel::HiddenSix => "HiddenSix",
            CanonicalModel::SelfCensor1 => "SelfCensor1",
            CanonicalModel::ConfoundedOutcome => "ConfoundedOutcome",
        }
    }

    fn spec(self) -> ModelSpec {
        let two = || ModelSpec::new().missing(&["X1", "X2"]);
        let three = || ModelSpec::new().missing(&["X1", "X2", "X3"]);
        match self {
            CanonicalModel::Permutation2 => two().edges(&[
                ("X1(1)", "X2(1)"),
                ("X2(1)", "R_X1"),
                ("R_X1", "R_X2"),
                ("X1", "R_X2"),
            ]),
            CanonicalModel::BlockParallel2 => {
                two().edges(&[("X1(1)", "X2(1)"), ("X2(1)", "R_X1"), ("X1(1)", "R_X2")])
            }
            CanonicalModel::BlockSequential2 => {
                two().edges(&[("X1(1)", "X2(1)"), ("X1(1)", "R_X2"), ("R_X1", "R_X2")])
            }
            CanonicalModel::MarExample2 => {
                two().edges(&[("X1(1)", "X2(1)"), ("R_X1", "R_X2"), ("X1", "R_X2")])
            }
            CanonicalModel::SeqPar3 => three().edges(&[
                ("X1(1)", "X2(1)"),
                ("X2(1)", "X3(1)"),
                ("X1(1)", "X3(1)"),
                ("X2(1)", "R_X1"),
                ("X3(1)", "R_X1"),
                ("X3(1)", "R_X2"),
                ("X2(1)", "R_X3"),
                ("R_X1", "R_X2"),
                ("R_X1", "R_X3"),
            ]),
            CanonicalModel::PartialOrder3 => three().edges(&[
                ("X2(1)", "X3(1)"),
                ("X2(1)", "R_X1"),
                ("X1(1)", "R_X2"),
                ("X3(1)", "R_X2"),
                ("X2(1)", "R_X3"),
                ("R_X1", "R_X2"),
                ("R_X1", "R_X3"),
            ]),
            CanonicalModel::OutsideR4 => ModelSpec::new()
                .missing(&["X1", "X2", "X4"])
                .observed(&["X3"])
                .edges(&[
                    ("X1(1)", "X3"),
                    ("X2(1)", "X3"),
                    ("X3", "X4(1)"),
                    ("X2(1)", "R_X1"),
                    ("X4(1)", "R_X1"),
                    ("X1(1)", "R_X2"),
                    ("X4(1)", "R_X2"),
                    ("X3", "R_X4"),
                    ("R_X2", "R_X1"),
                ]),
            CanonicalModel::OddsRatio3 => three().edges(&[
                ("X1(1)", "X2(1)"),
                ("X1(1)", "X3(1)"),
                ("X2(1)", "X3(1)"),
                ("X3(1)", "R_X1"),
                ("X1(1)", "R_X2"),
                ("X1(1)", "R_X3"),
                ("R_X2", "R_X1"),
                ("R_X3", "R_X2"),
            ]),
            CanonicalModel::OddsRatio3Equiv => three().edges(&[
                ("X1(1)", "X2(1)"),
                ("X1(1)", "X3(1)"),
                ("X2(1)", "X3(1)"),
                ("X3(1)", "R_X1"),
                ("X1(1)", "R_X2"),
                ("X1(1)", "R_X3"),
                ("R_X2", "R_X1"),
                ("R_X2", "R_X3"),
            ]),
            CanonicalModel::HiddenSix => ModelSpec::new()
                .missing(&["X1", "X2", "X3", "X4"])
                .observed(&["X5", "X6"])
                .hidden(&["U1", "U2", "U3"])
                .edges(&[
                    ("X1(1)", "X5"),
                    ("X3(1)", "X6"),
                    ("X5", "X2(1)"),
                    ("X6", "X4(1)"),
                    ("X3(1)", "R_X1"),
                    ("X6", "R_X1"),
                    ("X4(1)", "R_X2"),
                    ("X6", "R_X2"),
                    ("X1(1)", "R_X3"),
                    ("X5", "R_X3"),
                    ("X2(1)", "R_X4"),
                    ("X5", "R_X4"),
                    ("U1", "X5"),
                    ("U1", "R_X3"),
                    ("U1", "R_X4"),
                    ("U2", "X6"),
                    ("U2", "R_X1"),
                    ("U2", "R_X2"),
                    ("U3", "X1(1)"),
                    ("U3", "X2(1)"),
                    ("U3", "X3(1)"),
                    ("U3", "X4(1)"),
                ]),
            CanonicalModel::SelfCensor1 => ModelSpec::new().missing(&["X"]).edge("X(1)", "R_X"),
            CanonicalModel::ConfoundedOutcome => ModelSpec::new()
                .missing(&["Y"])
                .observed(&["X", "A"])
                .hidden(&["U1", "U2"])
                .edges(&[
                    ("X", "A"),
                    ("A", "Y(1)"),
                    ("U1", "X"),
                    ("U1", "Y(1)"),
                    ("U2", "X"),
                    ("U2", "R_Y"),
                ]),
        }
    }
}

impl fmt::Display for CanonicalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CanonicalModel {
    type Err = ModelError;

    /// Case-insensitive match on the model name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CanonicalModel::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownCanonical(s.to_string()))
    }
}

pub fn canonical_model(name: CanonicalModel) -> MDag {
    name.spec().build().expect("canonical models are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdag::{Edge, VertexRole};

    #[test]
    fn all_build() {
        for c in CanonicalModel::ALL {
            let m = canonical_model(c);
            assert_eq!(c.name().parse::<CanonicalModel>().unwrap(), c);
            assert!(m.graph().len() >= 3);
        }
        assert!("nope".parse::<CanonicalModel>().is_err());
    }

    #[test]
    fn block_parallel_edges() {
        let m = canonical_model(CanonicalModel::BlockParallel2);
        assert_eq!(
            m.prob_edges(),
            &[Edge::new("X1(1)", "R_X2"), Edge::new("X1(1)", "X2(1)"), Edge::new("X2(1)", "R_X1")]
        );
    }

    #[test]
    fn outside_has_observed_x3() {
        let m = canonical_model(CanonicalModel::OutsideR4);
        assert_eq!(m.role("X3"), Some(VertexRole::Observed));
        assert!(m.prob_edges().contains(&Edge::new("X3", "X4(1)")));
    }
}
