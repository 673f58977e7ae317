//! Result types of the identification engine. All of them serialize to JSON.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{Functional, SCHEMA_VERSION};
use crate::graph::VertexId;
use crate::mdag::StructureWitness;

/// One step of a reduction sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum ReductionStep {
    /// Fix one or more indicators at 1. Several indicators form a parallel
    /// group whose propensities are all read from the same kernel.
    FixIndicator { indicators: Vec<VertexId>, pseudo: bool },
    /// Fix a counterfactual whose indicator is already fixed.
    FixProxy { vertex: VertexId },
    Marginalize { vertices: Vec<VertexId> },
    ConsistencySwap { base: String },
}

impl fmt::Display for ReductionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |vs: &[VertexId]| vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            ReductionStep::FixIndicator { indicators, pseudo } => {
                write!(f, "fix {{{}}}", list(indicators))?;
                if *pseudo {
                    write!(f, " (pseudo)")?;
                }
                Ok(())
            }
            ReductionStep::FixProxy { vertex } => write!(f, "fix {vertex}"),
            ReductionStep::Marginalize { vertices } => write!(f, "marginalize {{{}}}", list(vertices)),
            ReductionStep::ConsistencySwap { base } => write!(f, "swap {base}"),
        }
    }
}

/// Partial-order text for a sequence ending with the intervention on
/// `target`, e.g. `{ {I_R_X2, I_R_X3} < I_R_X1 }`.
pub fn partial_order_text(steps: &[ReductionStep], target: &VertexId) -> String {
    let mut groups = Vec::new();
    let mut hidden: Vec<String> = Vec::new();
    for s in steps {
        match s {
            ReductionStep::FixIndicator { indicators, .. } => {
                let names: Vec<String> = indicators.iter().map(|v| format!("I_{v}")).collect();
                groups.push(if names.len() == 1 {
                    names[0].clone()
                } else {
                    format!("{{{}}}", names.join(", "))
                });
            }
            ReductionStep::FixProxy { vertex } => groups.push(format!("I_{vertex}")),
            ReductionStep::Marginalize { vertices } => hidden.extend(vertices.iter().map(|v| v.to_string())),
            ReductionStep::ConsistencySwap { .. } => {}
        }
    }
    groups.push(format!("I_{target}"));
    let mut out = format!("{{ {} }}", groups.join(" < "));
    if !hidden.is_empty() {
        out.push_str(&format!(" in G(V \\ {{{}}})", hidden.join(", ")));
    }
    out
}

/// Search statistics for one propensity query.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    pub states_visited: usize,
    pub depth_reached: usize,
    pub frontier_peak: usize,
    pub budget_exhausted: bool,
    /// Free-form notes, e.g. why no search was attempted.
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PropensityStatus {
    Identified {
        functional: Functional,
        sequence: Vec<ReductionStep>,
        marginalized: Vec<VertexId>,
        partial_order: String,
        /// Other sequences reaching the same depth, as partial-order text.
        alternates: Vec<String>,
    },
    /// Not identified alone; the joint of this indicator and `partner` at
    /// 1 is identified through the odds-ratio construction.
    IdentifiedJointly {
        partner: VertexId,
        functional: Functional,
    },
    Unresolved { diagnostics: SearchDiagnostics },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropensityResult {
    pub indicator: VertexId,
    /// Conditioning set of the propensity (parents, or the Markov pillow
    /// when hidden variables are present).
    pub conditioning: Vec<VertexId>,
    #[serde(flatten)]
    pub status: PropensityStatus,
}

impl PropensityResult {
    pub fn is_identified(&self) -> bool {
        !matches!(self.status, PropensityStatus::Unresolved { .. })
    }

    pub fn functional(&self) -> Option<&Functional> {
        match &self.status {
            PropensityStatus::Identified { functional, .. } => Some(functional),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeQuery {
    pub treatment: VertexId,
    /// Base name of the missing outcome.
    pub outcome: String,
    pub covariates: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case")]
pub enum Query {
    TargetLaw,
    FullLaw,
    CounterfactualOutcome(OutcomeQuery),
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::TargetLaw => write!(f, "target law"),
            Query::FullLaw => write!(f, "full law"),
            Query::CounterfactualOutcome(q) => write!(f, "p({}(1) under {}=a)", q.outcome, q.treatment),
        }
    }
}

/// A named identified quantity that is not the queried law itself, such
/// as one conditional of a full-law factorization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub name: String,
    pub functional: Functional,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Identified {
        /// Absent when only the decision and its pieces are available.
        functional: Option<Functional>,
        pieces: Vec<Piece>,
    },
    ProvablyNotIdentified { witnesses: Vec<StructureWitness> },
    NotIdentifiedByProcedure { diagnostics: Diagnostics },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Identified { .. } => "Identified",
            Verdict::ProvablyNotIdentified { .. } => "ProvablyNotIdentified",
            Verdict::NotIdentifiedByProcedure { .. } => "NotIdentifiedByProcedure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdResult {
    pub schema_version: u32,
    pub query: Query,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub propensities: Vec<PropensityResult>,
    pub notes: Vec<String>,
}

impl IdResult {
    pub fn new(query: Query, verdict: Verdict) -> Self {
        IdResult {
            schema_version: SCHEMA_VERSION,
            query,
            verdict,
            propensities: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn is_identified(&self) -> bool {
        matches!(self.verdict, Verdict::Identified { .. })
    }

    pub fn functional(&self) -> Option<&Functional> {
        match &self.verdict {
            Verdict::Identified { functional, .. } => functional.as_ref(),
            _ => None,
        }
    }

    pub fn witnesses(&self) -> &[StructureWitness] {
        match &self.verdict {
            Verdict::ProvablyNotIdentified { witnesses } => witnesses,
            _ => &[],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
