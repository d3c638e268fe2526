//! Exhaustive expectimax over information states with delayed ARQ feedback.
//!
//! Per user the state holds the freshest bit received (and how many slots
//! ago it originated) plus a bitmask of scheduled slots whose feedback is
//! still in flight and newer than that bit. At the end of each slot every
//! in-flight bit arrives independently with the delay hazard for its age;
//! only the newest arrival per user matters and its value is drawn from the
//! user's chain conditioned on the previously held bit.

use std::collections::HashMap;
use std::rc::Rc;

use crate::belief::{ChannelSet, Observation};
use crate::channel::ChannelState;
use crate::delay::{Bit, Slot};
use crate::error::{Error, Result};
use crate::policy::{DecisionView, Policy};

use super::instance::{Instance, Limits};
use super::report::ValueReport;

/// Exact value of the optimal adaptive policy.
pub fn optimal_value(inst: &Instance, limits: &Limits) -> Result<ValueReport> {
    limits.check(inst)?;
    let mut tree = Tree::new(inst, None);
    let per_slot = tree.run()?;
    Ok(ValueReport::exact("optimal", per_slot, inst.describe()))
}

/// Exact value of `policy`, averaging over its action distribution.
pub fn policy_value_exact(inst: &Instance, policy: &dyn Policy, limits: &Limits) -> Result<ValueReport> {
    limits.check(inst)?;
    let mut tree = Tree::new(inst, Some(policy));
    let per_slot = tree.run()?;
    Ok(ValueReport::exact(policy.label(), per_slot, inst.describe()))
}

/// Freshest bit and in-flight mask of one user.
///
/// `latest` is 0 when nothing has arrived, otherwise `2 * rel + bit` where
/// the bit originated `rel >= 1` slots before the current one. Bit `j` of
/// `pending` marks a scheduled slot `j` slots before the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct UserInfo {
    latest: u32,
    pending: u32,
}

impl UserInfo {
    const EMPTY: Self = Self { latest: 0, pending: 0 };

    fn observed(bit: Bit, rel: u32) -> u32 {
        2 * rel + bit as u32
    }

    fn latest(self) -> Option<(Bit, u32)> {
        (self.latest != 0).then(|| {
            let bit = if self.latest & 1 == 1 { Bit::Ack } else { Bit::Nack };
            (bit, self.latest / 2)
        })
    }

    /// Advances `rel` by one slot; the empty code stays empty.
    fn aged(self) -> u32 {
        if self.latest == 0 {
            0
        } else {
            self.latest + 2
        }
    }
}

type Key = (Slot, Vec<(UserInfo, u32)>);

struct Tree<'a> {
    inst: &'a Instance,
    policy: Option<&'a dyn Policy>,
    hazard: Vec<f64>,
    /// Exchangeability class of each user while unobserved and once observed.
    class_unobserved: Vec<u32>,
    class_observed: Vec<u32>,
    memo: HashMap<Key, Rc<Vec<f64>>>,
}

impl<'a> Tree<'a> {
    fn new(inst: &'a Instance, policy: Option<&'a dyn Policy>) -> Self {
        let n = inst.num_users();
        let hazard = (0..=inst.delay().max_delay()).map(|a| inst.delay().hazard(a)).collect();
        // Users are exchangeable for the optimal value only when their
        // channels coincide, and while unobserved only if their priors do.
        let (class_unobserved, class_observed) = match (policy, inst.channels()) {
            (None, ChannelSet::Identical(_)) => {
                let pi = inst.initial();
                let cu = (0..n).map(|i| (0..n).find(|&j| pi[j].to_bits() == pi[i].to_bits()).unwrap() as u32).collect();
                (cu, vec![0; n])
            }
            _ => {
                let id: Vec<u32> = (0..n as u32).collect();
                (id.clone(), id)
            }
        };
        Self { inst, policy, hazard, class_unobserved, class_observed, memo: HashMap::new() }
    }

    fn run(&mut self) -> Result<Vec<f64>> {
        let m = self.inst.horizon();
        let start: Vec<(UserInfo, usize)> = (0..self.inst.num_users()).map(|u| (UserInfo::EMPTY, u)).collect();
        let v = self.value(m, start)?;
        Ok(v.as_ref().clone())
    }

    fn class(&self, info: UserInfo, user: usize) -> u32 {
        if info.latest == 0 {
            self.class_unobserved[user]
        } else {
            self.class_observed[user]
        }
    }

    fn key(&self, t: Slot, state: &mut [(UserInfo, usize)]) -> Key {
        if self.policy.is_none() {
            state.sort_by_key(|(info, u)| (*info, self.class(*info, *u), *u));
        }
        (t, state.iter().map(|(info, u)| (*info, self.class(*info, *u))).collect())
    }

    fn belief(&self, t: Slot, info: UserInfo, user: usize) -> f64 {
        let ch = self.inst.channel(user);
        match info.latest() {
            Some((bit, rel)) => ch.after_observation(ChannelState::from(bit), rel - 1),
            None => ch.evolve_unchecked(self.inst.initial()[user], self.inst.horizon() - t),
        }
    }

    /// ON probability of `user` in the slot `j` slots before `t`'s end, given
    /// only what is currently held for that user.
    fn on_probability(&self, t: Slot, info: UserInfo, user: usize, j: u32) -> f64 {
        let ch = self.inst.channel(user);
        match info.latest() {
            Some((bit, rel)) => ch.after_observation(ChannelState::from(bit), rel - j - 1),
            None => ch.evolve_unchecked(self.inst.initial()[user], self.inst.horizon() - t - j),
        }
    }

    /// Per-slot expected rewards from slot `t` to slot 1; index 0 is `t`.
    fn value(&mut self, t: Slot, mut state: Vec<(UserInfo, usize)>) -> Result<Rc<Vec<f64>>> {
        let key = self.key(t, &mut state);
        if let Some(v) = self.memo.get(&key) {
            return Ok(Rc::clone(v));
        }
        let beliefs: Vec<f64> = state.iter().map(|(info, u)| self.belief(t, *info, *u)).collect();

        let result = match self.policy {
            None => {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for a in 0..state.len() {
                    let v = self.after_action(t, &state, a, beliefs[a])?;
                    let total: f64 = v.iter().sum();
                    if best.as_ref().is_none_or(|(b, _)| total > *b) {
                        best = Some((total, v));
                    }
                }
                best.map(|(_, v)| v).unwrap_or_default()
            }
            Some(policy) => {
                let latest: Vec<Option<Observation>> = state
                    .iter()
                    .map(|(info, _)| info.latest().map(|(bit, rel)| Observation { bit, origin_slot: t + rel }))
                    .collect();
                let in_flight: Vec<u32> = state.iter().map(|(info, _)| info.pending).collect();
                let view = DecisionView {
                    slot: t,
                    horizon: self.inst.horizon(),
                    beliefs: &beliefs,
                    latest: &latest,
                    initial: self.inst.initial(),
                    in_flight: &in_flight,
                    genie: false,
                };
                let action = policy.act(&view)?;
                let mut acc = vec![0.0; t as usize];
                for (a, w) in action.support(state.len()) {
                    if a >= state.len() {
                        return Err(Error::UnknownUser { user: a, users: state.len() });
                    }
                    let v = self.after_action(t, &state, a, beliefs[a])?;
                    for (x, y) in acc.iter_mut().zip(&v) {
                        *x += w * y;
                    }
                }
                acc
            }
        };
        let result = Rc::new(result);
        self.memo.insert(key, Rc::clone(&result));
        Ok(result)
    }

    fn after_action(&mut self, t: Slot, state: &[(UserInfo, usize)], a: usize, reward: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; t as usize];
        out[0] = reward;
        if t == 1 {
            return Ok(out);
        }
        for (prob, next) in self.branches(t, state, a) {
            let v = self.value(t - 1, next)?;
            for (x, y) in out[1..].iter_mut().zip(v.iter()) {
                *x += prob * y;
            }
        }
        Ok(out)
    }

    /// Joint outcomes of the arrivals at the end of slot `t` after
    /// scheduling position `a`.
    fn branches(&self, t: Slot, state: &[(UserInfo, usize)], a: usize) -> Vec<(f64, Vec<(UserInfo, usize)>)> {
        let mut joint: Vec<(f64, Vec<(UserInfo, usize)>)> = vec![(1.0, Vec::with_capacity(state.len()))];
        for (pos, &(info, user)) in state.iter().enumerate() {
            let mask = info.pending | u32::from(pos == a);
            let outcomes = self.user_outcomes(t, info, user, mask);
            if outcomes.len() == 1 {
                for (_, s) in joint.iter_mut() {
                    s.push((outcomes[0].1, user));
                }
                continue;
            }
            let mut next = Vec::with_capacity(joint.len() * outcomes.len());
            for (p, s) in &joint {
                for &(q, o) in &outcomes {
                    let mut s2 = s.clone();
                    s2.push((o, user));
                    next.push((p * q, s2));
                }
            }
            joint = next;
        }
        joint
    }

    fn user_outcomes(&self, t: Slot, info: UserInfo, user: usize, mask: u32) -> Vec<(f64, UserInfo)> {
        let mut out = Vec::new();
        let mut none = 1.0;
        let mut bits = mask;
        while bits != 0 {
            let j = bits.trailing_zeros();
            bits &= bits - 1;
            let newest = none * self.hazard[j as usize];
            if newest > 0.0 {
                let q = self.on_probability(t, info, user, j);
                let pending = (mask & ((1 << j) - 1)) << 1;
                for (bit, pb) in [(Bit::Ack, q), (Bit::Nack, 1.0 - q)] {
                    if newest * pb > 0.0 {
                        out.push((newest * pb, UserInfo { latest: UserInfo::observed(bit, j + 1), pending }));
                    }
                }
            }
            none *= 1.0 - self.hazard[j as usize];
        }
        if none > 0.0 {
            out.push((none, UserInfo { latest: info.aged(), pending: mask << 1 }));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::delay::DelayPmf;
    use crate::eval::instance::InitialBeliefs;
    use crate::policy::{FixedUser, Greedy, UniformRandom};

    fn inst(n_pi: &[f64], m: Slot, p: f64, r: f64, delay: DelayPmf) -> Instance {
        Instance::identical(
            ChannelParams::new(p, r).unwrap(),
            n_pi.len(),
            m,
            delay,
            InitialBeliefs::Explicit(n_pi.to_vec()),
        )
        .unwrap()
    }

    #[test]
    fn single_slot_is_max_belief() {
        let i = inst(&[0.3, 0.6], 1, 0.8, 0.2, DelayPmf::instantaneous());
        let v = optimal_value(&i, &Limits::default()).unwrap();
        assert!((v.total - 0.6).abs() < 1e-15);
    }

    #[test]
    fn greedy_two_slots_by_hand() {
        // 0.5 + [0.5 * 0.8 + 0.5 * max(0.2, T(0.5))]
        let i = inst(&[0.5, 0.5], 2, 0.8, 0.2, DelayPmf::instantaneous());
        let v = policy_value_exact(&i, &Greedy, &Limits::default()).unwrap();
        assert!((v.total - 1.15).abs() < 1e-12, "{}", v.total);
        assert!((v.per_slot[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fixed_user_follows_prior() {
        let i = inst(&[0.1, 0.9, 0.4], 5, 0.7, 0.25, DelayPmf::new(vec![0.3, 0.7]).unwrap());
        let c = i.channel(0);
        let v = policy_value_exact(&i, &FixedUser(2), &Limits::default()).unwrap();
        let expect: f64 = (0..5).map(|u| c.evolve(0.4, u).unwrap()).sum();
        assert!((v.total - expect).abs() < 1e-12);
    }

    #[test]
    fn value_ordering() {
        let i = inst(&[0.2, 0.7, 0.5], 5, 0.9, 0.3, DelayPmf::new(vec![0.2, 0.5, 0.3]).unwrap());
        let l = Limits::default();
        let opt = optimal_value(&i, &l).unwrap().total;
        let gr = policy_value_exact(&i, &Greedy, &l).unwrap().total;
        let rnd = policy_value_exact(&i, &UniformRandom, &l).unwrap().total;
        assert!(opt >= gr - 1e-9 && gr >= rnd - 1e-9 && rnd >= 0.0);
    }

    #[test]
    fn per_slot_sums_to_total() {
        let i = inst(&[0.2, 0.7], 6, 0.9, 0.3, DelayPmf::new(vec![0.2, 0.8]).unwrap());
        let v = optimal_value(&i, &Limits::default()).unwrap();
        assert_eq!(v.per_slot.len(), 6);
        assert!((v.per_slot.iter().sum::<f64>() - v.total).abs() < 1e-12);
        assert!(v.per_slot.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn refuses_large_instances() {
        let i = inst(&[0.5; 5], 3, 0.8, 0.2, DelayPmf::instantaneous());
        assert!(matches!(optimal_value(&i, &Limits::default()), Err(Error::Infeasible(_))));
    }
}
