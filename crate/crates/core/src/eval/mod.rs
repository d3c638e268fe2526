//! Value computation: exact expectimax, exact policy evaluation, genie
//! baselines and Monte Carlo estimates.

pub mod exact;
pub mod genie;
pub mod instance;
pub mod mc;
pub mod report;

pub use exact::{optimal_value, policy_value_exact};
pub use genie::{genie_optimal_exact, genie_policy_exact, genie_value};
pub use instance::{estimated_states, InitialBeliefs, Instance, Limits};
pub use mc::{episode_rng, policy_value_mc, policy_value_mc_with, simulate_episode, EpisodeTrace, McConfig, McReport};
pub use report::{percent_gap, ValueReport};

use crate::error::Result;
use crate::policy::Greedy;

/// What the greedy value is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Optimal,
    Genie,
}

/// One row of a greedy-versus-reference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Suboptimality {
    pub reference_kind: Reference,
    pub reference: f64,
    pub greedy: f64,
    /// Present when greedy was estimated by simulation.
    pub greedy_stderr: Option<f64>,
    pub percent: f64,
}

/// Compares greedy with the optimal value when the instance fits `limits`
/// (both exact), otherwise with the genie value (greedy by simulation).
pub fn suboptimality_report(inst: &Instance, limits: &Limits, mc: &McConfig) -> Result<Suboptimality> {
    if limits.allows(inst) {
        let reference = optimal_value(inst, limits)?.total;
        let greedy = policy_value_exact(inst, &Greedy, limits)?.total;
        Ok(Suboptimality {
            reference_kind: Reference::Optimal,
            reference,
            greedy,
            greedy_stderr: None,
            percent: percent_gap(reference, greedy),
        })
    } else {
        let reference = genie_value(inst)?.total;
        let est = policy_value_mc(inst, &crate::policy::PolicySpec::Greedy, mc)?;
        Ok(Suboptimality {
            reference_kind: Reference::Genie,
            reference,
            greedy: est.value.total,
            greedy_stderr: Some(est.stderr),
            percent: percent_gap(reference, est.value.total),
        })
    }
}
