use arqsched::belief::argmax;
use arqsched::eval::{episode_rng, simulate_episode, EpisodeTrace};
use arqsched::order::{DecisionCase, FixedDelayOrder, RoundRobinOrder};
use arqsched::policy::{EpisodePolicy, Greedy, Stateless};
use arqsched::{
    BeliefTracker, Bit, ChannelParams, DecisionView, DelayPmf, FeedbackEvent, InitialBeliefs, Instance, Policy,
    PolicySpec, ScheduleOrderVector,
};
use proptest::prelude::*;

/// `0 < r < p < 1`. At `r = 0` (or `p = 1`) every NACK (or ACK) belief is
/// constant, so beliefs tie regardless of origin and only values, not
/// decision logs, agree.
fn positive_channel() -> impl Strategy<Value = ChannelParams> {
    (0.01..0.95f64, 0.02..0.98f64).prop_map(|(r, f)| ChannelParams::new(r + (1.0 - r) * f, r).unwrap())
}

fn delay(max: usize) -> impl Strategy<Value = DelayPmf> {
    prop::collection::vec(0.0..1.0f64, 1..=max + 1)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| DelayPmf::normalized(&w).unwrap())
}

fn instance(max_users: usize, max_m: u32, max_d: usize) -> impl Strategy<Value = Instance> {
    (positive_channel(), 1..=max_users, 1..=max_m, delay(max_d)).prop_flat_map(|(ch, n, m, d)| {
        prop::collection::vec(0.0..=1.0f64, n)
            .prop_map(move |pi| Instance::identical(ch, n, m, d.clone(), InitialBeliefs::Explicit(pi)).unwrap())
    })
}

fn run(inst: &Instance, policy: &mut dyn EpisodePolicy, seed: u64, episode: u64) -> EpisodeTrace {
    let mut rng = episode_rng(seed, episode);
    let mut trace = EpisodeTrace::default();
    simulate_episode(inst, false, policy, &mut rng, &mut trace).unwrap();
    trace
}

fn greedy() -> Stateless<Box<dyn Policy>> {
    Stateless(Box::new(Greedy))
}

/// Greedy that records the smallest gap between the largest belief and any
/// user holding different information. Gaps below f64 resolution make
/// argmax fall back to the index rule while the queue still orders by the
/// exact belief. Users with the same latest observation and initial belief
/// are genuinely tied and skipped.
struct GapProbe {
    inner: Stateless<Box<dyn Policy>>,
    min_gap: f64,
    in_unit: bool,
}

impl GapProbe {
    fn new() -> Self {
        Self { inner: greedy(), min_gap: f64::INFINITY, in_unit: true }
    }

    fn separated(&self) -> bool {
        self.min_gap > 1e-12
    }
}

impl EpisodePolicy for GapProbe {
    fn decide(&mut self, view: &DecisionView<'_>, rng: &mut dyn rand::RngCore) -> arqsched::Result<usize> {
        self.in_unit &= view.beliefs.iter().all(|b| (0.0..=1.0).contains(b));
        let best = argmax(view.beliefs);
        for (i, b) in view.beliefs.iter().enumerate() {
            let same_info = view.latest[i] == view.latest[best] && view.initial[i] == view.initial[best];
            if i != best && !same_info {
                self.min_gap = self.min_gap.min(view.beliefs[best] - b);
            }
        }
        self.inner.decide(view, rng)
    }
}

/// Greedy decisions of one episode, or `None` when a near-tie occurred.
fn separated_greedy(inst: &Instance, seed: u64, episode: u64) -> Option<EpisodeTrace> {
    let mut probe = GapProbe::new();
    let trace = run(inst, &mut probe, seed, episode);
    probe.separated().then_some(trace)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    /// The incrementally maintained order yields the same decisions as
    /// belief argmax, so both episodes see identical draws.
    #[test]
    fn queue_matches_argmax(inst in instance(6, 12, 3), seed in any::<u64>()) {
        let spec = PolicySpec::GreedyQueue;
        for e in 0..4 {
            let Some(a) = separated_greedy(&inst, seed, e) else { continue };
            let mut q = spec.episode_policy(inst.channels(), inst.initial(), inst.horizon()).unwrap();
            let b = run(&inst, q.as_mut(), seed, e);
            prop_assert_eq!(&a.decisions, &b.decisions);
            prop_assert_eq!(a.rewards, b.rewards);
        }
    }

    #[test]
    fn fixed_delay_order_is_greedy(
        ch in positive_channel(),
        n in 1usize..=6,
        m in 1u32..=12,
        d in 0usize..=3,
        seed in any::<u64>(),
    ) {
        let inst = Instance::steady(ch, n, m, DelayPmf::deterministic(d)).unwrap();
        let a = separated_greedy(&inst, seed, 0);
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let b = run(&inst, &mut FixedDelayOrder::new(inst.initial()), seed, 0);
        prop_assert_eq!(a.decisions, b.decisions);
    }

    #[test]
    fn round_robin_is_greedy_without_delay(
        ch in positive_channel(),
        pi in prop::collection::vec(0.0..=1.0f64, 1..=6),
        m in 1u32..=12,
        seed in any::<u64>(),
    ) {
        let n = pi.len();
        let inst = Instance::identical(ch, n, m, DelayPmf::instantaneous(), InitialBeliefs::Explicit(pi)).unwrap();
        let a = separated_greedy(&inst, seed, 0);
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let b = run(&inst, &mut RoundRobinOrder::new(inst.initial()), seed, 0);
        prop_assert_eq!(a.decisions, b.decisions);
    }

    /// Replays random arrival sequences into the order vector and a belief
    /// tracker: the case label names the queue the head comes from, the
    /// queues partition the users, and the head maximizes the belief.
    #[test]
    fn order_vector_invariants(
        ch in positive_channel(),
        pi in prop::collection::vec(0.0..=1.0f64, 1..=6),
        events in prop::collection::vec((0usize..6, any::<bool>(), 0u32..=3), 0..20),
    ) {
        let n = pi.len();
        let m = 20u32;
        let mut sov = ScheduleOrderVector::new(&pi, m, &ch).unwrap();
        let mut tracker = BeliefTracker::identical(&pi, m, ch).unwrap();
        let mut t = m;
        for (u, ack, lag) in events {
            let origin = t;
            let arrival = origin.saturating_sub(lag).max(1);
            let ev = FeedbackEvent {
                user: u % n,
                origin_slot: origin,
                bit: if ack { Bit::Ack } else { Bit::Nack },
                arrival_slot: arrival,
            };
            sov.update(&[ev]);
            tracker.update(&[ev]).unwrap();
            if t == 1 {
                break;
            }
            t -= 1;
            let mut order = sov.order();
            order.sort_unstable();
            prop_assert_eq!(order, (0..n).collect::<Vec<_>>());
            let case = sov.case();
            match case {
                DecisionCase::Ack => prop_assert!(!sov.acks().is_empty()),
                DecisionCase::Unobserved => prop_assert!(sov.acks().is_empty() && !sov.unobserved().is_empty()),
                DecisionCase::Nack => prop_assert!(sov.acks().is_empty() && sov.unobserved().is_empty()),
            }
            let beliefs = tracker.beliefs(t);
            prop_assert!(beliefs.iter().all(|b| (0.0..=1.0).contains(b)));
            let head = sov.decide(t).user;
            prop_assert!(beliefs[head] >= beliefs[argmax(&beliefs)] - 1e-12);
        }
    }

    #[test]
    fn beliefs_stay_in_unit_interval(inst in instance(5, 12, 3), seed in any::<u64>()) {
        let mut probe = GapProbe::new();
        run(&inst, &mut probe, seed, 0);
        prop_assert!(probe.in_unit);
    }
}
