//! Scheduling policies.
//!
//! A [`Policy`] maps what the scheduler knows at the start of a slot to an
//! [`Action`], possibly randomized. The exact evaluators average over the
//! action distribution; simulation samples it. Stateful schedulers used only
//! in simulation implement [`EpisodePolicy`] directly.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::belief::{argmax, ChannelSet, Observation};
use crate::channel::Correlation;
use crate::delay::{parse_fraction, Bit, FeedbackEvent, Slot};
use crate::error::{Error, Result};
use crate::order::{FixedDelayOrder, RoundRobinOrder, ScheduleOrderVector};

/// What a policy sees when deciding slot `slot`.
#[derive(Debug, Clone, Copy)]
pub struct DecisionView<'a> {
    pub slot: Slot,
    pub horizon: Slot,
    pub beliefs: &'a [f64],
    pub latest: &'a [Option<Observation>],
    pub initial: &'a [f64],
    /// Per user, bit `j` is set when slot `slot + j` carried that user's
    /// transmission and its feedback has not arrived yet.
    pub in_flight: &'a [u32],
    /// Each feedback carries every user's state for its origin slot.
    pub genie: bool,
}

impl DecisionView<'_> {
    pub fn num_users(&self) -> usize {
        self.beliefs.len()
    }
}

/// Distribution over the user to schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    User(usize),
    Uniform,
    /// Probability of each user; sums to one.
    Weighted(Vec<f64>),
}

impl Action {
    /// `(user, probability)` pairs with positive probability.
    pub fn support(&self, users: usize) -> Vec<(usize, f64)> {
        match self {
            Action::User(u) => vec![(*u, 1.0)],
            Action::Uniform => (0..users).map(|u| (u, 1.0 / users as f64)).collect(),
            Action::Weighted(w) => w.iter().enumerate().filter(|(_, q)| **q > 0.0).map(|(u, q)| (u, *q)).collect(),
        }
    }

    /// Draws a user. Deterministic actions consume no randomness; the others
    /// consume one draw.
    pub fn sample<R: RngCore + ?Sized>(&self, users: usize, rng: &mut R) -> usize {
        match self {
            Action::User(u) => *u,
            Action::Uniform => rng.gen_range(0..users),
            Action::Weighted(w) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut last = 0;
                for (i, q) in w.iter().enumerate() {
                    if *q <= 0.0 {
                        continue;
                    }
                    acc += q;
                    last = i;
                    if u < acc {
                        return i;
                    }
                }
                last
            }
        }
    }
}

pub trait Policy: Sync {
    fn label(&self) -> String;
    fn act(&self, view: &DecisionView<'_>) -> Result<Action>;
}

/// Schedules the largest current belief, lowest index on ties.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl Policy for Greedy {
    fn label(&self) -> String {
        "greedy".into()
    }

    fn act(&self, view: &DecisionView<'_>) -> Result<Action> {
        Ok(Action::User(argmax(view.beliefs)))
    }
}

/// Greedy decided from feedback bits and origin slots alone: the head of the
/// ACK ‖ unobserved ‖ NACK queue rebuilt from the view.
#[derive(Debug, Clone, Copy, Default)]
pub struct QueueGreedy;

impl QueueGreedy {
    pub fn head(latest: &[Option<Observation>], initial: &[f64]) -> usize {
        let newest_ack = latest
            .iter()
            .enumerate()
            .filter_map(|(u, o)| o.filter(|o| o.bit == Bit::Ack).map(|o| (o.origin_slot, u)))
            .min();
        if let Some((_, u)) = newest_ack {
            return u;
        }
        let unobserved =
            (0..latest.len()).filter(|u| latest[*u].is_none()).fold(None, |best: Option<usize>, u| match best {
                Some(b) if initial[b] >= initial[u] => Some(b),
                _ => Some(u),
            });
        if let Some(u) = unobserved {
            return u;
        }
        latest
            .iter()
            .enumerate()
            .filter_map(|(u, o)| o.map(|o| (o.origin_slot, std::cmp::Reverse(u))))
            .max()
            .map(|(_, std::cmp::Reverse(u))| u)
            .unwrap_or(0)
    }
}

impl Policy for QueueGreedy {
    fn label(&self) -> String {
        "greedy-queue".into()
    }

    fn act(&self, view: &DecisionView<'_>) -> Result<Action> {
        Ok(Action::User(Self::head(view.latest, view.initial)))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandom;

impl Policy for UniformRandom {
    fn label(&self) -> String {
        "random".into()
    }

    fn act(&self, _view: &DecisionView<'_>) -> Result<Action> {
        Ok(Action::Uniform)
    }
}

/// Always the same (zero-based) user.
#[derive(Debug, Clone, Copy)]
pub struct FixedUser(pub usize);

impl Policy for FixedUser {
    fn label(&self) -> String {
        format!("fixed:{}", self.0 + 1)
    }

    fn act(&self, view: &DecisionView<'_>) -> Result<Action> {
        if self.0 >= view.num_users() {
            return Err(Error::UnknownUser { user: self.0, users: view.num_users() });
        }
        Ok(Action::User(self.0))
    }
}

/// Two-user genie scheduler keyed on the latest revealed state pair.
///
/// `alpha[c]` is the probability of scheduling the first user when the pair
/// is `(0,0)`, `(0,1)`, `(1,0)`, `(1,1)` for `c = 0..4`. Before any state pair
/// has been revealed the pair is drawn from the current beliefs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaPolicy {
    alpha: [f64; 4],
}

impl AlphaPolicy {
    pub fn new(alpha: [f64; 4]) -> Result<Self> {
        if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::AlphaPolicy("every alpha in [0, 1]"));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> [f64; 4] {
        self.alpha
    }

    fn case(first_on: bool, second_on: bool) -> usize {
        2 * first_on as usize + second_on as usize
    }
}

impl Policy for AlphaPolicy {
    fn label(&self) -> String {
        let a = self.alpha;
        format!("alpha:{},{},{},{}", a[0], a[1], a[2], a[3])
    }

    fn act(&self, view: &DecisionView<'_>) -> Result<Action> {
        if !view.genie {
            return Err(Error::AlphaPolicy("genie observation mode"));
        }
        if view.num_users() != 2 {
            return Err(Error::AlphaPolicy("exactly two users"));
        }
        let first = match (view.latest[0], view.latest[1]) {
            (Some(a), Some(b)) if a.origin_slot == b.origin_slot => {
                self.alpha[Self::case(a.bit.is_ack(), b.bit.is_ack())]
            }
            _ => {
                let (b1, b2) = (view.beliefs[0], view.beliefs[1]);
                (1.0 - b1) * (1.0 - b2) * self.alpha[0]
                    + (1.0 - b1) * b2 * self.alpha[1]
                    + b1 * (1.0 - b2) * self.alpha[2]
                    + b1 * b2 * self.alpha[3]
            }
        };
        Ok(if first == 1.0 {
            Action::User(0)
        } else if first == 0.0 {
            Action::User(1)
        } else {
            Action::Weighted(vec![first, 1.0 - first])
        })
    }
}

/// A policy chosen by name: `greedy | greedy-queue | random | fixed:<i> |
/// alpha:<a1,a2,a3,a4>`, with `fixed` users counted from 1.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Greedy,
    GreedyQueue,
    Random,
    /// Zero-based user.
    Fixed(usize),
    Alpha([f64; 4]),
}

impl PolicySpec {
    pub fn is_randomized(&self) -> bool {
        matches!(self, PolicySpec::Random | PolicySpec::Alpha(_))
    }

    /// Builds the policy, checking what it needs from the channels.
    pub fn build(&self, channels: &ChannelSet) -> Result<Box<dyn Policy>> {
        Ok(match self {
            PolicySpec::Greedy => Box::new(Greedy),
            PolicySpec::GreedyQueue => {
                require_positive(channels)?;
                Box::new(QueueGreedy)
            }
            PolicySpec::Random => Box::new(UniformRandom),
            PolicySpec::Fixed(i) => Box::new(FixedUser(*i)),
            PolicySpec::Alpha(a) => Box::new(AlphaPolicy::new(*a)?),
        })
    }

    /// Builds the scheduler driven through a simulated episode. The queue
    /// form keeps an incrementally updated order vector rather than
    /// rebuilding it.
    pub fn episode_policy(
        &self,
        channels: &ChannelSet,
        initial: &[f64],
        horizon: Slot,
    ) -> Result<Box<dyn EpisodePolicy>> {
        match self {
            PolicySpec::GreedyQueue => {
                let params = require_positive(channels)?;
                Ok(Box::new(ScheduleOrderVector::new(initial, horizon, params)?))
            }
            other => Ok(Box::new(Stateless(other.build(channels)?))),
        }
    }
}

fn require_positive(channels: &ChannelSet) -> Result<&crate::channel::ChannelParams> {
    match channels.identical() {
        Some(c) if c.correlation() == Correlation::Positive => Ok(c),
        _ => Err(Error::NotPositivelyCorrelated),
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::UnknownPolicy(s.to_string());
        match s {
            "greedy" => return Ok(PolicySpec::Greedy),
            "greedy-queue" => return Ok(PolicySpec::GreedyQueue),
            "random" => return Ok(PolicySpec::Random),
            _ => {}
        }
        if let Some(i) = s.strip_prefix("fixed:") {
            let i: usize = i.trim().parse().map_err(|_| unknown())?;
            return i.checked_sub(1).map(PolicySpec::Fixed).ok_or_else(unknown);
        }
        if let Some(rest) = s.strip_prefix("alpha:") {
            let vals = rest.split(',').map(parse_fraction).collect::<Result<Vec<_>>>().map_err(|_| unknown())?;
            let alpha: [f64; 4] = vals.try_into().map_err(|_| unknown())?;
            AlphaPolicy::new(alpha)?;
            return Ok(PolicySpec::Alpha(alpha));
        }
        Err(unknown())
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Greedy => f.write_str("greedy"),
            PolicySpec::GreedyQueue => f.write_str("greedy-queue"),
            PolicySpec::Random => f.write_str("random"),
            PolicySpec::Fixed(i) => write!(f, "fixed:{}", i + 1),
            PolicySpec::Alpha(a) => write!(f, "alpha:{},{},{},{}", a[0], a[1], a[2], a[3]),
        }
    }
}

/// A scheduler stepped through one simulated episode.
pub trait EpisodePolicy {
    fn decide(&mut self, view: &DecisionView<'_>, rng: &mut dyn RngCore) -> Result<usize>;

    /// Feedback delivered at the end of the slot just decided, in delivery
    /// order and including stale bits.
    fn observe(&mut self, _arrived: &[FeedbackEvent]) {}
}

/// Adapts a [`Policy`] by sampling its action.
pub struct Stateless<P>(pub P);

impl<P: std::ops::Deref<Target = dyn Policy>> EpisodePolicy for Stateless<P> {
    fn decide(&mut self, view: &DecisionView<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(self.0.act(view)?.sample(view.num_users(), rng))
    }
}

impl EpisodePolicy for ScheduleOrderVector {
    fn decide(&mut self, view: &DecisionView<'_>, _rng: &mut dyn RngCore) -> Result<usize> {
        Ok(ScheduleOrderVector::decide(self, view.slot).user)
    }

    fn observe(&mut self, arrived: &[FeedbackEvent]) {
        self.update(arrived);
    }
}

/// Valid only with a point-mass delay in ARQ mode, where each arrival is the
/// freshest feedback held from any user.
impl EpisodePolicy for FixedDelayOrder {
    fn decide(&mut self, view: &DecisionView<'_>, _rng: &mut dyn RngCore) -> Result<usize> {
        Ok(FixedDelayOrder::decide(self, view.slot).user)
    }

    fn observe(&mut self, arrived: &[FeedbackEvent]) {
        for ev in arrived {
            self.apply(ev.user, ev.bit);
        }
    }
}

/// Valid only with instantaneous feedback in ARQ mode.
impl EpisodePolicy for RoundRobinOrder {
    fn decide(&mut self, view: &DecisionView<'_>, _rng: &mut dyn RngCore) -> Result<usize> {
        Ok(RoundRobinOrder::decide(self, view.slot).user)
    }

    fn observe(&mut self, arrived: &[FeedbackEvent]) {
        for ev in arrived {
            self.apply(ev.bit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn view<'a>(beliefs: &'a [f64], latest: &'a [Option<Observation>], genie: bool) -> DecisionView<'a> {
        DecisionView { slot: 3, horizon: 6, beliefs, latest, initial: beliefs, in_flight: &[0; 3], genie }
    }

    fn obs(bit: Bit, origin_slot: Slot) -> Option<Observation> {
        Some(Observation { bit, origin_slot })
    }

    #[test]
    fn parse_names() {
        assert_eq!("greedy".parse::<PolicySpec>().unwrap(), PolicySpec::Greedy);
        assert_eq!("greedy-queue".parse::<PolicySpec>().unwrap(), PolicySpec::GreedyQueue);
        assert_eq!("random".parse::<PolicySpec>().unwrap(), PolicySpec::Random);
        assert_eq!("fixed:2".parse::<PolicySpec>().unwrap(), PolicySpec::Fixed(1));
        assert_eq!("alpha:1,0,1,1".parse::<PolicySpec>().unwrap(), PolicySpec::Alpha([1.0, 0.0, 1.0, 1.0]));
        for bad in ["whittle", "fixed:0", "fixed:x", "alpha:1,0,1", "alpha:1,0,1,2"] {
            assert!(bad.parse::<PolicySpec>().is_err(), "{bad}");
        }
        for s in ["greedy", "fixed:3", "alpha:0.5,0,1,0.25"] {
            assert_eq!(s.parse::<PolicySpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn random_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 4];
        let draws = 1_000_000;
        for _ in 0..draws {
            counts[Action::Uniform.sample(4, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 0.002);
        }
    }

    #[test]
    fn alpha_case_table() {
        let b = [0.5, 0.5];
        let a = AlphaPolicy::new([1.0, 0.0, 1.0, 1.0]).unwrap();
        let l = [obs(Bit::Ack, 5), obs(Bit::Nack, 5)];
        assert_eq!(a.act(&view(&b, &l, true)).unwrap(), Action::User(0));
        let a = AlphaPolicy::new([0.0, 0.0, 1.0, 0.0]).unwrap();
        let l = [obs(Bit::Ack, 5), obs(Bit::Ack, 5)];
        assert_eq!(a.act(&view(&b, &l, true)).unwrap(), Action::User(1));
    }

    #[test]
    fn alpha_needs_genie_and_two_users() {
        let a = AlphaPolicy::new([0.5; 4]).unwrap();
        assert!(a.act(&view(&[0.5, 0.5], &[None, None], false)).is_err());
        assert!(a.act(&view(&[0.5; 3], &[None; 3], true)).is_err());
        assert!(AlphaPolicy::new([0.0, 0.0, 1.1, 0.0]).is_err());
    }

    #[test]
    fn alpha_without_feedback_mixes_over_beliefs() {
        let a = AlphaPolicy::new([1.0, 0.0, 1.0, 0.0]).unwrap();
        // Schedules user 1 exactly when user 2 is OFF.
        let act = a.act(&view(&[0.9, 0.3], &[None, None], true)).unwrap();
        match act {
            Action::Weighted(w) => assert!((w[0] - 0.7).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn queue_head_cases() {
        let init = [0.2, 0.6, 0.1];
        assert_eq!(QueueGreedy::head(&[obs(Bit::Ack, 8), obs(Bit::Nack, 4), obs(Bit::Ack, 5)], &init), 2);
        assert_eq!(QueueGreedy::head(&[None, obs(Bit::Nack, 4), None], &init), 0);
        assert_eq!(QueueGreedy::head(&[obs(Bit::Nack, 9), obs(Bit::Nack, 4), obs(Bit::Nack, 6)], &init), 0);
    }

    #[test]
    fn queue_policy_needs_positive_memory() {
        let neg = ChannelSet::Identical(ChannelParams::new(0.2, 0.7).unwrap());
        assert!(PolicySpec::GreedyQueue.build(&neg).is_err());
        assert!(PolicySpec::GreedyQueue.episode_policy(&neg, &[0.5], 3).is_err());
        assert!(PolicySpec::Greedy.build(&neg).is_ok());
    }

    #[test]
    fn fixed_rejects_unknown_user() {
        let b = [0.5, 0.5];
        assert!(FixedUser(2).act(&view(&b, &[None, None], false)).is_err());
    }

    #[test]
    fn weighted_sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let act = Action::Weighted(vec![0.25, 0.0, 0.75]);
        let draws = 200_000;
        let hits = (0..draws).filter(|_| act.sample(3, &mut rng) == 2).count();
        assert!((hits as f64 / draws as f64 - 0.75).abs() < 0.005);
        assert_eq!(act.support(3), vec![(0, 0.25), (2, 0.75)]);
    }
}
