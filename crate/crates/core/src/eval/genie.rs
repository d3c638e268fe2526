//! Genie-aided observation: every feedback reveals all users' states for its
//! origin slot. What is learned no longer depends on whom is scheduled, so
//! greedy is optimal and its value has a closed form.

use std::collections::HashMap;
use std::rc::Rc;

use crate::belief::Observation;
use crate::channel::ChannelState;
use crate::delay::{Bit, Slot};
use crate::error::{Error, Result};
use crate::policy::{DecisionView, Policy};

use super::instance::{Instance, Limits};
use super::report::ValueReport;

/// Expected reward of greedy (hence optimal) scheduling under genie
/// observation, computed slot by slot from the freshness law.
///
/// Needs identical channels; initial beliefs are arbitrary.
pub fn genie_value(inst: &Instance) -> Result<ValueReport> {
    let ch = inst
        .channels()
        .identical()
        .ok_or_else(|| Error::Precondition("closed-form genie value needs identical channels".into()))?;
    let m = inst.horizon();
    let pi = inst.initial();
    let mut per_slot = Vec::with_capacity(m as usize);
    for t in (1..=m).rev() {
        let elapsed = (m - t) as usize;
        let fresh = inst.delay().freshness(elapsed);
        let unobserved = pi.iter().map(|&x| ch.evolve_unchecked(x, m - t)).fold(0.0f64, f64::max);
        let mut reward = fresh.absent() * unobserved;
        for (l, w) in fresh.by_age().iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let l = l as u32;
            // The revealed vector is from slot k = t + l + 1, distributed
            // by the prior propagated to k.
            let k = t + l + 1;
            let all_off: f64 = pi.iter().map(|&x| 1.0 - ch.evolve_unchecked(x, m - k)).product();
            let all_on: f64 = pi.iter().map(|&x| ch.evolve_unchecked(x, m - k)).product();
            let (hi, lo) = (ch.after_ack(l), ch.after_nack(l));
            let expected_max =
                if hi >= lo { (1.0 - all_off) * hi + all_off * lo } else { (1.0 - all_on) * lo + all_on * hi };
            reward += w * expected_max;
        }
        per_slot.push(reward);
    }
    Ok(ValueReport::exact("genie", per_slot, inst.describe()))
}

/// Exact optimal value under genie observation by exhaustive expectimax.
pub fn genie_optimal_exact(inst: &Instance, limits: &Limits) -> Result<ValueReport> {
    limits.check(inst)?;
    let per_slot = GenieTree::new(inst, None).run()?;
    Ok(ValueReport::exact("genie-optimal", per_slot, inst.describe()))
}

/// Exact value of `policy` under genie observation.
pub fn genie_policy_exact(inst: &Instance, policy: &dyn Policy, limits: &Limits) -> Result<ValueReport> {
    limits.check(inst)?;
    let per_slot = GenieTree::new(inst, Some(policy)).run()?;
    Ok(ValueReport::exact(format!("genie-{}", policy.label()), per_slot, inst.describe()))
}

/// Freshest revealed state vector (bit `i` is user `i`) and its age, plus
/// the in-flight mask shared by all users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GenieInfo {
    latest: Option<(u32, u32)>,
    pending: u32,
}

struct GenieTree<'a> {
    inst: &'a Instance,
    policy: Option<&'a dyn Policy>,
    hazard: Vec<f64>,
    memo: HashMap<(Slot, GenieInfo), Rc<Vec<f64>>>,
}

impl<'a> GenieTree<'a> {
    fn new(inst: &'a Instance, policy: Option<&'a dyn Policy>) -> Self {
        let hazard = (0..=inst.delay().max_delay()).map(|a| inst.delay().hazard(a)).collect();
        Self { inst, policy, hazard, memo: HashMap::new() }
    }

    fn run(mut self) -> Result<Vec<f64>> {
        let m = self.inst.horizon();
        Ok(self.value(m, GenieInfo { latest: None, pending: 0 })?.as_ref().clone())
    }

    /// ON probability of `user` `j` slots before the end of slot `t`.
    fn on_probability(&self, t: Slot, info: GenieInfo, user: usize, j: u32) -> f64 {
        let ch = self.inst.channel(user);
        match info.latest {
            Some((v, rel)) => ch.after_observation(ChannelState::from_bool(v >> user & 1 == 1), rel - j - 1),
            None => ch.evolve_unchecked(self.inst.initial()[user], self.inst.horizon() - t - j),
        }
    }

    fn value(&mut self, t: Slot, info: GenieInfo) -> Result<Rc<Vec<f64>>> {
        if let Some(v) = self.memo.get(&(t, info)) {
            return Ok(Rc::clone(v));
        }
        let n = self.inst.num_users();
        let beliefs: Vec<f64> = match info.latest {
            Some(_) => (0..n).map(|u| self.on_probability(t, info, u, 0)).collect(),
            None => (0..n)
                .map(|u| self.inst.channel(u).evolve_unchecked(self.inst.initial()[u], self.inst.horizon() - t))
                .collect(),
        };
        let reward = match self.policy {
            None => beliefs.iter().copied().fold(0.0, f64::max),
            Some(policy) => {
                let latest: Vec<Option<Observation>> = (0..n)
                    .map(|u| {
                        info.latest.map(|(v, rel)| Observation {
                            bit: if v >> u & 1 == 1 { Bit::Ack } else { Bit::Nack },
                            origin_slot: t + rel,
                        })
                    })
                    .collect();
                let in_flight = vec![info.pending; n];
                let view = DecisionView {
                    slot: t,
                    horizon: self.inst.horizon(),
                    beliefs: &beliefs,
                    latest: &latest,
                    initial: self.inst.initial(),
                    in_flight: &in_flight,
                    genie: true,
                };
                let mut r = 0.0;
                for (a, w) in policy.act(&view)?.support(n) {
                    if a >= n {
                        return Err(Error::UnknownUser { user: a, users: n });
                    }
                    r += w * beliefs[a];
                }
                r
            }
        };
        let mut out = vec![0.0; t as usize];
        out[0] = reward;
        if t > 1 {
            for (prob, next) in self.branches(t, info) {
                let v = self.value(t - 1, next)?;
                for (x, y) in out[1..].iter_mut().zip(v.iter()) {
                    *x += prob * y;
                }
            }
        }
        let out = Rc::new(out);
        self.memo.insert((t, info), Rc::clone(&out));
        Ok(out)
    }

    fn branches(&self, t: Slot, info: GenieInfo) -> Vec<(f64, GenieInfo)> {
        let n = self.inst.num_users();
        let mask = info.pending | 1;
        let mut out = Vec::new();
        let mut none = 1.0;
        let mut bits = mask;
        while bits != 0 {
            let j = bits.trailing_zeros();
            bits &= bits - 1;
            let newest = none * self.hazard[j as usize];
            if newest > 0.0 {
                let q: Vec<f64> = (0..n).map(|u| self.on_probability(t, info, u, j)).collect();
                let pending = (mask & ((1 << j) - 1)) << 1;
                for v in 0..(1u32 << n) {
                    let pv: f64 = (0..n).map(|u| if v >> u & 1 == 1 { q[u] } else { 1.0 - q[u] }).product();
                    if newest * pv > 0.0 {
                        out.push((newest * pv, GenieInfo { latest: Some((v, j + 1)), pending }));
                    }
                }
            }
            none *= 1.0 - self.hazard[j as usize];
        }
        if none > 0.0 {
            let latest = info.latest.map(|(v, rel)| (v, rel + 1));
            out.push((none, GenieInfo { latest, pending: mask << 1 }));
        }
        out
    }
}
