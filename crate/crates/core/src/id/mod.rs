//! The identification engine.

mod full;
mod odds_ratio;
mod outcome;
mod result;
mod search;
mod target;

pub use full::{full_law_witnesses, identify_full_law, MAX_ASSEMBLED};
pub use odds_ratio::{pair_block, PairBlock};
pub use outcome::identify_counterfactual_outcome;
pub use result::*;
pub use search::{
    conditioning_set, default_indicator_order, extract, identify_propensity, propensity_functional, search,
    trace_sequence, Found, IdOptions, Requirement, TraceEvent, DEFAULT_FRONTIER,
};
pub use target::{identify_target_law, identify_target_law_unchecked, target_law_witnesses};

use crate::mdag::MDag;

/// Runs the procedure for `query`.
pub fn identify(m: &MDag, query: &Query, opts: &IdOptions) -> IdResult {
    match query {
        Query::TargetLaw => identify_target_law(m, opts),
        Query::FullLaw => identify_full_law(m, opts),
        Query::CounterfactualOutcome(q) => identify_counterfactual_outcome(m, q),
    }
}
