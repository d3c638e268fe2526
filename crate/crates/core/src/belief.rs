//! Per-user beliefs derived from time-stamped, possibly out-of-order feedback.
//!
//! Beliefs are never stored numerically. Each user keeps only its most recent
//! observation (bit and origin slot) and the belief for any slot is evaluated
//! on demand, so no rounding error accumulates across slots.

use crate::channel::{ChannelParams, ChannelState};
use crate::delay::{Bit, FeedbackEvent, Slot};
use crate::error::{check_probability, Error, Result};

/// Most recent feedback known for a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation {
    pub bit: Bit,
    pub origin_slot: Slot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserBelief {
    latest: Option<Observation>,
    initial: f64,
}

impl UserBelief {
    pub fn latest(&self) -> Option<Observation> {
        self.latest
    }

    /// Belief held at the start of the horizon.
    pub fn initial(&self) -> f64 {
        self.initial
    }
}

/// Which users a tracker's channel parameters describe.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSet {
    Identical(ChannelParams),
    /// One parameter pair per user. Greedy optimality results do not carry
    /// over to this case; it exists for the non-identical counterexample.
    PerUser(Vec<ChannelParams>),
}

impl ChannelSet {
    pub fn get(&self, user: usize) -> &ChannelParams {
        match self {
            ChannelSet::Identical(c) => c,
            ChannelSet::PerUser(v) => &v[user],
        }
    }

    pub fn identical(&self) -> Option<&ChannelParams> {
        match self {
            ChannelSet::Identical(c) => Some(c),
            ChannelSet::PerUser(_) => None,
        }
    }
}

/// Belief state of all users over a horizon of `m` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTracker {
    users: Vec<UserBelief>,
    horizon: Slot,
    channels: ChannelSet,
}

impl BeliefTracker {
    pub fn new(initial: &[f64], horizon: Slot, channels: ChannelSet) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::Config("at least one user is required".into()));
        }
        if let ChannelSet::PerUser(v) = &channels {
            if v.len() != initial.len() {
                return Err(Error::Dimension { expected: initial.len(), got: v.len() });
            }
        }
        let users = initial
            .iter()
            .map(|&x| check_probability(x).map(|initial| UserBelief { latest: None, initial }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { users, horizon, channels })
    }

    pub fn identical(initial: &[f64], horizon: Slot, params: ChannelParams) -> Result<Self> {
        Self::new(initial, horizon, ChannelSet::Identical(params))
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn horizon(&self) -> Slot {
        self.horizon
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn user(&self, i: usize) -> &UserBelief {
        &self.users[i]
    }

    pub fn users(&self) -> &[UserBelief] {
        &self.users
    }

    /// Applies arrived feedback. A bit replaces a user's observation only if
    /// it originated strictly later than the one held; older bits carry no
    /// information under first-order Markov dynamics. Returns the events
    /// that were applied.
    pub fn update(&mut self, arrived: &[FeedbackEvent]) -> Result<Vec<FeedbackEvent>> {
        let mut applied = Vec::new();
        for ev in arrived {
            let n = self.users.len();
            let user = self.users.get_mut(ev.user).ok_or(Error::UnknownUser { user: ev.user, users: n })?;
            if ev.origin_slot > self.horizon || ev.origin_slot == 0 {
                return Err(Error::InvalidFeedbackSlot {
                    origin: ev.origin_slot,
                    slot: ev.arrival_slot,
                    horizon: self.horizon,
                });
            }
            let fresher = user.latest.is_none_or(|o| ev.origin_slot < o.origin_slot);
            if fresher {
                user.latest = Some(Observation { bit: ev.bit, origin_slot: ev.origin_slot });
                applied.push(*ev);
            }
        }
        Ok(applied)
    }

    /// Belief that `user` is ON in `slot`, given everything applied so far.
    ///
    /// # Panics
    /// If `slot` is not strictly earlier than the user's latest observation.
    pub fn belief(&self, user: usize, slot: Slot) -> f64 {
        let u = &self.users[user];
        let ch = self.channels.get(user);
        match u.latest {
            Some(o) => {
                assert!(o.origin_slot > slot, "feedback from slot {} queried at slot {slot}", o.origin_slot);
                ch.after_observation(ChannelState::from(o.bit), o.origin_slot - slot - 1)
            }
            None => ch.evolve_unchecked(u.initial, self.horizon.saturating_sub(slot)),
        }
    }

    pub fn beliefs(&self, slot: Slot) -> Vec<f64> {
        (0..self.users.len()).map(|i| self.belief(i, slot)).collect()
    }
}

/// A scheduling decision for one slot. Users are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyDecision {
    pub slot: Slot,
    pub user: usize,
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy decision: the user most likely to be ON. Valid for either sign of
/// the channel memory.
pub fn greedy_decide_argmax(tracker: &BeliefTracker, slot: Slot) -> PolicyDecision {
    PolicyDecision { slot, user: argmax(&tracker.beliefs(slot)) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch() -> ChannelParams {
        ChannelParams::new(0.8, 0.2).unwrap()
    }

    fn ev(user: usize, origin_slot: Slot, bit: Bit) -> FeedbackEvent {
        FeedbackEvent { user, origin_slot, bit, arrival_slot: origin_slot }
    }

    #[test]
    fn no_arrivals_is_identity() {
        let mut t = BeliefTracker::identical(&[0.3, 0.6], 10, ch()).unwrap();
        let before = t.clone();
        assert!(t.update(&[]).unwrap().is_empty());
        assert_eq!(t, before);
    }

    #[test]
    fn ack_two_slots_back() {
        let mut t = BeliefTracker::identical(&[0.5, 0.5], 10, ch()).unwrap();
        t.update(&[ev(0, 7, Bit::Ack)]).unwrap();
        assert!((t.belief(0, 5) - 0.68).abs() < 1e-12);
    }

    #[test]
    fn stale_bit_is_ignored() {
        let mut t = BeliefTracker::identical(&[0.5, 0.5], 10, ch()).unwrap();
        t.update(&[ev(0, 5, Bit::Ack)]).unwrap();
        let applied = t.update(&[ev(0, 6, Bit::Nack)]).unwrap();
        assert!(applied.is_empty());
        assert_eq!(t.user(0).latest(), Some(Observation { bit: Bit::Ack, origin_slot: 5 }));
        // Same-slot duplicates are not fresher either.
        assert!(t.update(&[ev(0, 5, Bit::Nack)]).unwrap().is_empty());
    }

    #[test]
    fn errors() {
        let mut t = BeliefTracker::identical(&[0.5, 0.5], 10, ch()).unwrap();
        assert_eq!(t.update(&[ev(2, 5, Bit::Ack)]), Err(Error::UnknownUser { user: 2, users: 2 }));
        assert!(t.update(&[ev(0, 11, Bit::Ack)]).is_err());
        assert!(BeliefTracker::identical(&[1.5], 3, ch()).is_err());
        assert!(BeliefTracker::new(&[0.5], 3, ChannelSet::PerUser(vec![])).is_err());
    }

    #[test]
    fn unobserved_users_follow_the_prior() {
        let t = BeliefTracker::identical(&[0.9, 0.1], 6, ch()).unwrap();
        assert_eq!(t.belief(0, 6), 0.9);
        assert!((t.belief(1, 4) - ch().evolve(0.1, 2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax(&[0.3, 0.7, 0.5]), 1);
        assert_eq!(argmax(&[0.4, 0.4]), 0);
    }

    #[test]
    fn greedy_prefers_fresh_ack_over_recent_nack() {
        // Slot t = 3; user 0 NACK from t + 1, user 1 ACK from t + 3.
        let mut t = BeliefTracker::identical(&[0.5, 0.5], 8, ch()).unwrap();
        t.update(&[ev(0, 4, Bit::Nack), ev(1, 6, Bit::Ack)]).unwrap();
        let b = t.beliefs(3);
        assert!((b[0] - 0.2).abs() < 1e-12);
        assert!((b[1] - 0.608).abs() < 1e-12);
        assert_eq!(greedy_decide_argmax(&t, 3), PolicyDecision { slot: 3, user: 1 });
    }

    #[test]
    fn beliefs_stay_in_unit_interval() {
        let c = ChannelParams::new(0.05, 0.99).unwrap();
        let mut t = BeliefTracker::identical(&[0.0, 1.0, 0.5], 20, c).unwrap();
        t.update(&[ev(0, 19, Bit::Ack), ev(1, 18, Bit::Nack)]).unwrap();
        for slot in 1..18 {
            for b in t.beliefs(slot) {
                assert!((0.0..=1.0).contains(&b));
            }
        }
    }
}
