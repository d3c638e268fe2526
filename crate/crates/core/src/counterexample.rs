//! Instances where greedy scheduling is strictly suboptimal, each with a
//! closed-form reward gap and an exact cross-check through the expectimax
//! evaluator.
//!
//! Users are indexed from zero here; the first user is the one with the
//! largest initial belief.

use std::fmt;
use std::str::FromStr;

use crate::belief::{argmax, BeliefTracker, ChannelSet};
use crate::channel::ChannelParams;
use crate::delay::{Bit, DelayPmf, FeedbackEvent, Slot};
use crate::error::{check_probability, Error, Result};
use crate::eval::{policy_value_exact, InitialBeliefs, Instance, Limits};
use crate::policy::{Action, DecisionView, Greedy, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleKind {
    /// Three or more users, unit delay, four slots.
    M4,
    /// Unit delay, horizon `m >= 5`.
    GeneralM,
    /// Two users with different OFF-to-ON probabilities, two slots.
    Nonidentical,
}

impl FromStr for CounterexampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m4" | "n3-delay1-m4" => Ok(Self::M4),
            "general" | "general-m" => Ok(Self::GeneralM),
            "nonidentical" | "nonidentical-n2" => Ok(Self::Nonidentical),
            other => Err(Error::Config(format!(
                "unknown counterexample kind `{other}` (expected n3-delay1-m4, general-m or nonidentical-n2)"
            ))),
        }
    }
}

impl fmt::Display for CounterexampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::M4 => "n3-delay1-m4",
            Self::GeneralM => "general-m",
            Self::Nonidentical => "nonidentical-n2",
        })
    }
}

/// Greedy except at listed slots, where the listed user is forced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedGreedy {
    label: String,
    script: Vec<(Slot, usize)>,
}

impl ScriptedGreedy {
    pub fn new(label: impl Into<String>, script: Vec<(Slot, usize)>) -> Self {
        Self { label: label.into(), script }
    }
}

impl Policy for ScriptedGreedy {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn act(&self, view: &DecisionView<'_>) -> Result<Action> {
        match self.script.iter().find(|(s, _)| *s == view.slot) {
            Some(&(_, u)) => Ok(Action::User(u)),
            None => Greedy.act(view),
        }
    }
}

/// Greedy, except in slot 3 when only the first user has ever been
/// scheduled and its slot-5 bit was an ACK: then the second user is served.
/// From slot 4 on this replays the four-slot deviation with the first
/// user's belief pinned at `p`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConditionalDeviation;

impl ConditionalDeviation {
    fn triggered(view: &DecisionView<'_>) -> bool {
        let first_ok = matches!(view.latest[0], Some(o) if o.bit == Bit::Ack && o.origin_slot == 5)
            && view.in_flight[0] & 0b10 != 0;
        let rest_untouched = (1..view.num_users()).all(|u| view.latest[u].is_none() && view.in_flight[u] == 0);
        view.slot == 3 && view.num_users() > 1 && first_ok && rest_untouched
    }
}

impl Policy for ConditionalDeviation {
    fn label(&self) -> String {
        "conditional-deviation".into()
    }

    fn act(&self, view: &DecisionView<'_>) -> Result<Action> {
        if Self::triggered(view) {
            Ok(Action::User(1))
        } else {
            Greedy.act(view)
        }
    }
}

/// One feedback realization `(f4, f3)` of the four-slot instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRow {
    pub f4: Bit,
    pub f3: Bit,
    pub probability: f64,
    /// Users served in slots 2 and 1.
    pub decisions: [usize; 2],
    /// Their beliefs when served, i.e. the expected immediate rewards.
    pub rewards: [f64; 2],
}

/// Reward table of the four-slot instance when slot 4 serves the first user
/// and slot 3 serves `third_slot_user`, with greedy in slots 2 and 1.
///
/// Rows are ordered `(ACK,ACK), (ACK,NACK), (NACK,ACK), (NACK,NACK)`.
/// The second return value is the policy's total expected reward.
pub fn m4_reward_table(params: ChannelParams, pi: &[f64], third_slot_user: usize) -> Result<(Vec<BranchRow>, f64)> {
    check_m4(pi)?;
    if third_slot_user >= pi.len() {
        return Err(Error::UnknownUser { user: third_slot_user, users: pi.len() });
    }
    let a3 = third_slot_user;
    let slot3_belief = params.evolve(pi[a3], 1)?;
    let mut value = pi[0] + slot3_belief;
    let mut rows = Vec::with_capacity(4);
    for (f4, f3) in [(Bit::Ack, Bit::Ack), (Bit::Ack, Bit::Nack), (Bit::Nack, Bit::Ack), (Bit::Nack, Bit::Nack)] {
        let p4 = if f4.is_ack() { pi[0] } else { 1.0 - pi[0] };
        let on3 = if a3 == 0 {
            if f4.is_ack() {
                params.p()
            } else {
                params.r()
            }
        } else {
            slot3_belief
        };
        let p3 = if f3.is_ack() { on3 } else { 1.0 - on3 };

        let mut tracker = BeliefTracker::identical(pi, 4, params)?;
        tracker.update(&[FeedbackEvent { user: 0, origin_slot: 4, bit: f4, arrival_slot: 3 }])?;
        let b2 = tracker.beliefs(2);
        let d2 = argmax(&b2);
        tracker.update(&[FeedbackEvent { user: a3, origin_slot: 3, bit: f3, arrival_slot: 2 }])?;
        let b1 = tracker.beliefs(1);
        let d1 = argmax(&b1);

        let row = BranchRow { f4, f3, probability: p4 * p3, decisions: [d2, d1], rewards: [b2[d2], b1[d1]] };
        value += row.probability * (row.rewards[0] + row.rewards[1]);
        rows.push(row);
    }
    Ok((rows, value))
}

/// Slot-2/slot-1 decisions the closed forms assume, per branch.
pub const M4_GREEDY_DECISIONS: [[usize; 2]; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];
pub const M4_DEVIATION_DECISIONS: [[usize; 2]; 4] = [[0, 1], [0, 0], [1, 1], [1, 2]];

fn check_m4(pi: &[f64]) -> Result<()> {
    if pi.len() < 3 {
        return Err(Error::Precondition("the four-slot counterexample needs at least three users".into()));
    }
    for x in pi {
        check_probability(*x)?;
    }
    if pi.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Precondition("initial beliefs must be non-increasing in the user index".into()));
    }
    Ok(())
}

fn positive(params: &ChannelParams) -> Result<()> {
    if params.p() > params.r() {
        Ok(())
    } else {
        Err(Error::NotPositivelyCorrelated)
    }
}

/// Reward of the deviating policy minus greedy on the four-slot instance.
///
/// Errors unless both policies follow the branch decisions the formula is
/// built on.
pub fn greedy_vs_tilde_gap_m4(params: ChannelParams, pi: &[f64]) -> Result<f64> {
    positive(&params)?;
    check_m4(pi)?;
    let greedy_third = argmax(&pi.iter().map(|&x| params.evolve_unchecked(x, 1)).collect::<Vec<_>>());
    let (greedy, _) = m4_reward_table(params, pi, greedy_third)?;
    let (tilde, _) = m4_reward_table(params, pi, 1)?;
    let follows = |rows: &[BranchRow], want: &[[usize; 2]; 4]| rows.iter().zip(want).all(|(r, w)| r.decisions == *w);
    if greedy_third != 0 || !follows(&greedy, &M4_GREEDY_DECISIONS) || !follows(&tilde, &M4_DEVIATION_DECISIONS) {
        return Err(Error::Precondition("beliefs fall outside the branch structure of the four-slot gap".into()));
    }
    let (p, r) = (params.p(), params.r());
    let g = p - r;
    Ok(g * (pi[1] - pi[0] + g * g * (1.0 - pi[0]) * pi[2] * (1.0 - r - g * pi[1])))
}

/// Exact values of two policies on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGap {
    pub greedy: f64,
    pub alternative: f64,
}

impl OracleGap {
    /// Alternative minus greedy.
    pub fn advantage(&self) -> f64 {
        self.alternative - self.greedy
    }
}

fn relaxed_limits(inst: &Instance) -> Limits {
    let mut limits = Limits::default();
    limits.max_users = limits.max_users.max(inst.num_users());
    limits.max_horizon = limits.max_horizon.max(inst.horizon());
    limits
}

fn oracle(inst: &Instance, alternative: &dyn Policy) -> Result<OracleGap> {
    let limits = relaxed_limits(inst);
    Ok(OracleGap {
        greedy: policy_value_exact(inst, &Greedy, &limits)?.total,
        alternative: policy_value_exact(inst, alternative, &limits)?.total,
    })
}

/// Four-slot instance with unit delay.
pub fn m4_instance(params: ChannelParams, pi: &[f64]) -> Result<Instance> {
    check_m4(pi)?;
    Instance::identical(params, pi.len(), 4, DelayPmf::deterministic(1), InitialBeliefs::Explicit(pi.to_vec()))
}

/// Expectimax values of greedy and of the slot-3 deviation.
pub fn m4_oracle(params: ChannelParams, pi: &[f64]) -> Result<OracleGap> {
    oracle(&m4_instance(params, pi)?, &ScriptedGreedy::new("deviate-slot3", vec![(4, 0), (3, 1)]))
}

fn check_general(m: Slot, pi: &[f64]) -> Result<()> {
    if m <= 4 {
        return Err(Error::Precondition("horizon must exceed four slots; use the four-slot instance".into()));
    }
    check_m4(pi)
}

/// Gap credited to the conditional deviation over horizon `m`, weighting
/// the four-slot gap at `pi_4 = (p, p, ...)` by both leading users staying
/// ON through slots `m..5`.
pub fn greedy_vs_tilde_gap_general(m: Slot, params: ChannelParams, pi: &[f64]) -> Result<f64> {
    positive(&params)?;
    check_general(m, pi)?;
    let (p, r) = (params.p(), params.r());
    let run = |x: f64| x * p.powi(m as i32 - 5);
    let prob = run(pi[0]) * run(pi[1]);
    Ok(prob * (p - r).powi(3) * (1.0 - p) * ((1.0 - r) - (p - r) * p))
}

/// Gap of [`ConditionalDeviation`] over greedy from what the scheduler can
/// actually observe: the first user ON through slots `m..5`, the others
/// still at their propagated priors.
///
/// Needs greedy to abandon the first user after any NACK before slot 4.
pub fn observable_gap_general(m: Slot, params: ChannelParams, pi: &[f64]) -> Result<f64> {
    positive(&params)?;
    check_general(m, pi)?;
    let after_nack = params.after_nack(1);
    if (2..=m - 4).any(|u| after_nack >= params.evolve_unchecked(pi[1], u)) {
        return Err(Error::Precondition("greedy would keep the first user after a NACK".into()));
    }
    let prob = pi[0] * params.p().powi(m as i32 - 5);
    let mut pi4 = vec![params.p()];
    pi4.extend(pi[1..].iter().map(|&x| params.evolve_unchecked(x, m - 4)));
    Ok(prob * greedy_vs_tilde_gap_m4(params, &pi4)?)
}

pub fn general_instance(m: Slot, params: ChannelParams, pi: &[f64]) -> Result<Instance> {
    check_general(m, pi)?;
    Instance::identical(params, pi.len(), m, DelayPmf::deterministic(1), InitialBeliefs::Explicit(pi.to_vec()))
}

pub fn general_oracle(m: Slot, params: ChannelParams, pi: &[f64]) -> Result<OracleGap> {
    oracle(&general_instance(m, params, pi)?, &ConditionalDeviation)
}

/// Two users sharing ON-to-ON probability `p` with OFF-to-ON
/// probabilities `r1 > r2`, over two slots with instantaneous feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonidenticalPair {
    first: ChannelParams,
    second: ChannelParams,
    pi: [f64; 2],
}

impl NonidenticalPair {
    pub fn new(p: f64, r1: f64, r2: f64, pi: [f64; 2]) -> Result<Self> {
        let first = ChannelParams::new(p, r1)?;
        let second = ChannelParams::new(p, r2)?;
        check_probability(pi[0])?;
        check_probability(pi[1])?;
        if !(p > r1 && r1 > r2) {
            return Err(Error::Precondition("needs p > r1 > r2".into()));
        }
        if pi[0] <= pi[1] {
            return Err(Error::Precondition("needs the first user's belief strictly larger".into()));
        }
        if second.evolve_unchecked(pi[1], 1) <= r1 {
            return Err(Error::Precondition("needs the second user's propagated belief above r1".into()));
        }
        Ok(Self { first, second, pi })
    }

    pub fn channels(&self) -> ChannelSet {
        ChannelSet::PerUser(vec![self.first, self.second])
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::new(self.channels(), 2, 2, DelayPmf::instantaneous(), InitialBeliefs::Explicit(self.pi.to_vec()))
    }

    /// Greedy minus serving the second user first; negative when greedy
    /// loses.
    pub fn gap(&self) -> f64 {
        let [a, b] = self.pi;
        (a - b) - (self.first.r() - self.second.r()) * (1.0 - a) * (1.0 - b)
    }

    /// Exact values of greedy and of serving the second user first.
    pub fn oracle(&self) -> Result<OracleGap> {
        oracle(&self.instance()?, &ScriptedGreedy::new("second-user-first", vec![(2, 1)]))
    }
}

pub fn nonidentical_gap(p: f64, r1: f64, r2: f64, pi: [f64; 2]) -> Result<f64> {
    Ok(NonidenticalPair::new(p, r1, r2, pi)?.gap())
}

/// Closed form against the exact oracle, in the closed form's sign
/// convention.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub kind: CounterexampleKind,
    pub closed_form: f64,
    /// The same quantity from exhaustive evaluation of both policies.
    pub oracle_gap: f64,
    pub oracle: OracleGap,
    /// Observable reading of the general-horizon gap; absent otherwise.
    pub observable_closed_form: Option<f64>,
    pub greedy_suboptimal: bool,
}

impl CounterexampleReport {
    pub fn delta(&self) -> f64 {
        self.oracle_gap - self.closed_form
    }
}

pub fn m4_report(params: ChannelParams, pi: &[f64]) -> Result<CounterexampleReport> {
    let closed_form = greedy_vs_tilde_gap_m4(params, pi)?;
    let oracle = m4_oracle(params, pi)?;
    Ok(CounterexampleReport {
        kind: CounterexampleKind::M4,
        closed_form,
        oracle_gap: oracle.advantage(),
        greedy_suboptimal: oracle.advantage() > 0.0,
        oracle,
        observable_closed_form: None,
    })
}

pub fn general_report(m: Slot, params: ChannelParams, pi: &[f64]) -> Result<CounterexampleReport> {
    let closed_form = greedy_vs_tilde_gap_general(m, params, pi)?;
    let observable = observable_gap_general(m, params, pi).ok();
    let oracle = general_oracle(m, params, pi)?;
    Ok(CounterexampleReport {
        kind: CounterexampleKind::GeneralM,
        closed_form,
        oracle_gap: oracle.advantage(),
        greedy_suboptimal: oracle.advantage() > 0.0,
        oracle,
        observable_closed_form: observable,
    })
}

pub fn nonidentical_report(pair: &NonidenticalPair) -> Result<CounterexampleReport> {
    let oracle = pair.oracle()?;
    let oracle_gap = -oracle.advantage();
    Ok(CounterexampleReport {
        kind: CounterexampleKind::Nonidentical,
        closed_form: pair.gap(),
        oracle_gap,
        greedy_suboptimal: oracle_gap < 0.0,
        oracle,
        observable_closed_form: None,
    })
}
