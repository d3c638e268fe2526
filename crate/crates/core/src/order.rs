//! Statistics-free implementation of the greedy policy.
//!
//! For positively correlated channels the users can be kept in three queues
//! whose concatenation is always sorted by current belief:
//!
//! * `A`: users whose latest feedback is an ACK, most recent origin first;
//! * `X`: users never observed, by nonincreasing initial belief;
//! * `N`: users whose latest feedback is a NACK, oldest origin first.
//!
//! An initial belief of exactly 1 (or 0) evolves like an ACK (or NACK) from
//! the first slot, so such users start in `A` (or `N`) at origin `m`. Equal
//! origins are ordered by user index, which reproduces lowest-index
//! tie-breaking on equal beliefs.
//!
//! Updating the queues only needs the feedback bits and their origin slots,
//! never `p`, `r` or the delay law.

use crate::belief::PolicyDecision;
use crate::channel::{ChannelParams, Correlation};
use crate::delay::{Bit, FeedbackEvent, Slot};
use crate::error::{Error, Result};

/// Which queue supplies the head of the combined order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionCase {
    Ack,
    Unobserved,
    Nack,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleOrderVector {
    /// `(user, origin)` by increasing origin, then user.
    acks: Vec<(usize, Slot)>,
    unobserved: Vec<usize>,
    /// `(user, origin)` by decreasing origin, then user.
    nacks: Vec<(usize, Slot)>,
}

impl ScheduleOrderVector {
    /// Starts users with interior initial beliefs in the unobserved queue,
    /// ordered by initial belief (ties to the lower index), and certain users
    /// in `A` or `N` at origin `horizon`. Refuses channels without positive
    /// memory.
    pub fn new(initial: &[f64], horizon: Slot, params: &ChannelParams) -> Result<Self> {
        if params.correlation() != Correlation::Positive {
            return Err(Error::NotPositivelyCorrelated);
        }
        let mut unobserved: Vec<usize> = (0..initial.len()).filter(|&i| initial[i] > 0.0 && initial[i] < 1.0).collect();
        unobserved.sort_by(|&a, &b| initial[b].total_cmp(&initial[a]).then(a.cmp(&b)));
        let certain = |x: f64| (0..initial.len()).filter(|&i| initial[i] == x).map(|i| (i, horizon)).collect();
        Ok(Self { acks: certain(1.0), unobserved, nacks: certain(0.0) })
    }

    pub fn num_users(&self) -> usize {
        self.acks.len() + self.unobserved.len() + self.nacks.len()
    }

    pub fn acks(&self) -> &[(usize, Slot)] {
        &self.acks
    }

    pub fn unobserved(&self) -> &[usize] {
        &self.unobserved
    }

    pub fn nacks(&self) -> &[(usize, Slot)] {
        &self.nacks
    }

    /// The combined queue `A ‖ X ‖ N`.
    pub fn order(&self) -> Vec<usize> {
        self.acks
            .iter()
            .map(|(u, _)| *u)
            .chain(self.unobserved.iter().copied())
            .chain(self.nacks.iter().map(|(u, _)| *u))
            .collect()
    }

    pub fn case(&self) -> DecisionCase {
        if !self.acks.is_empty() {
            DecisionCase::Ack
        } else if !self.unobserved.is_empty() {
            DecisionCase::Unobserved
        } else {
            DecisionCase::Nack
        }
    }

    /// Head of the combined queue.
    pub fn decide(&self, slot: Slot) -> PolicyDecision {
        let user = match self.case() {
            DecisionCase::Ack => self.acks[0].0,
            DecisionCase::Unobserved => self.unobserved[0],
            DecisionCase::Nack => self.nacks[0].0,
        };
        PolicyDecision { slot, user }
    }

    fn held_origin(&self, user: usize) -> Option<Slot> {
        self.acks.iter().chain(self.nacks.iter()).find(|(u, _)| *u == user).map(|(_, k)| *k)
    }

    fn remove(&mut self, user: usize) -> bool {
        let before = self.num_users();
        self.acks.retain(|(u, _)| *u != user);
        self.unobserved.retain(|u| *u != user);
        self.nacks.retain(|(u, _)| *u != user);
        self.num_users() != before
    }

    /// Moves each user whose arrived feedback is its freshest into `A` or `N`
    /// at the position that keeps the origin ordering. Stale bits and unknown
    /// users leave the queues untouched.
    pub fn update(&mut self, arrived: &[FeedbackEvent]) {
        for ev in arrived {
            if self.held_origin(ev.user).is_some_and(|k| ev.origin_slot >= k) {
                continue;
            }
            if !self.remove(ev.user) {
                continue;
            }
            let k = ev.origin_slot;
            match ev.bit {
                Bit::Ack => {
                    let pos = self.acks.partition_point(|&(u, ka)| (ka, u) < (k, ev.user));
                    self.acks.insert(pos, (ev.user, k));
                }
                Bit::Nack => {
                    let pos = self.nacks.partition_point(|&(u, kn)| kn > k || (kn == k && u < ev.user));
                    self.nacks.insert(pos, (ev.user, k));
                }
            }
        }
    }
}

/// Greedy order under a fixed delay `d`: every arrival is the freshest
/// feedback held from anyone, so an ACK moves its user to the top and a NACK
/// to the bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedDelayOrder {
    order: Vec<usize>,
}

impl FixedDelayOrder {
    pub fn new(initial: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..initial.len()).collect();
        order.sort_by(|&a, &b| initial[b].total_cmp(&initial[a]).then(a.cmp(&b)));
        Self { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn decide(&self, slot: Slot) -> PolicyDecision {
        PolicyDecision { slot, user: self.order[0] }
    }

    pub fn apply(&mut self, user: usize, bit: Bit) {
        if let Some(pos) = self.order.iter().position(|u| *u == user) {
            self.order.remove(pos);
            match bit {
                Bit::Ack => self.order.insert(0, user),
                Bit::Nack => self.order.push(user),
            }
        }
    }
}

/// Greedy order with instantaneous feedback: keep the user on ACK, rotate it
/// to the back on NACK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRobinOrder {
    order: std::collections::VecDeque<usize>,
}

impl RoundRobinOrder {
    pub fn new(initial: &[f64]) -> Self {
        Self { order: FixedDelayOrder::new(initial).order.into_iter().collect() }
    }

    pub fn decide(&self, slot: Slot) -> PolicyDecision {
        PolicyDecision { slot, user: self.order[0] }
    }

    /// Feedback for the user just scheduled.
    pub fn apply(&mut self, bit: Bit) {
        if bit == Bit::Nack {
            self.order.rotate_left(1);
        }
    }
}
