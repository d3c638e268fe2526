//! Opportunistic downlink scheduling over Gilbert-Elliott channels when the
//! only channel knowledge is delayed one-bit ARQ feedback.

pub mod belief;
pub mod capacity;
pub mod channel;
pub mod counterexample;
pub mod delay;
pub mod error;
pub mod eval;
pub mod hull;
pub mod order;
pub mod policy;

pub use belief::{BeliefTracker, ChannelSet, Observation, PolicyDecision};
pub use channel::{ChannelParams, ChannelState, Correlation};
pub use delay::{parse_fraction, Bit, DelayPmf, FeedbackEvent, Freshness, PendingFeedback, Slot};
pub use error::{Error, Result};
pub use eval::{InitialBeliefs, Instance, Limits, ValueReport};
pub use order::ScheduleOrderVector;
pub use policy::{Action, DecisionView, EpisodePolicy, Policy, PolicySpec};
