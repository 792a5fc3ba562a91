//! Causal DAGs: reachability, d-separation, the backdoor criterion, and a
//! linear Gaussian structural equation model with do-interventions.

mod graph;
mod sem;

pub use graph::{
    backdoor_admissible, d_separated, descendants, minimal_backdoor_sets, BackdoorVerdict, Dag,
    MAX_ENUMERATION_NODES,
};
pub use sem::{
    ols_fit, simulate, Dataset, Intervention, LinearSem, NormalSampler, OlsFit, INTERCEPT_TERM,
};
