//! Random ARQ feedback delay: the delay law, per-feedback sampling, in-flight
//! bookkeeping and the freshness law of the most recent arrived feedback.
//!
//! Slots follow the scheduling convention used throughout the crate: the
//! horizon starts at slot `m` and counts down to slot 1, so a larger slot
//! index is *earlier* in time. A feedback bit produced in slot `k` with delay
//! `d` arrives at the end of slot `k - d`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{Error, Result};

/// Default cap on the largest supported delay.
pub const DEFAULT_MAX_DELAY: usize = 64;

const MASS_TOLERANCE: f64 = 1e-12;

/// Slot index, counted down from the horizon `m` to 1.
pub type Slot = u32;

/// Finite-support probability mass function of the feedback delay in slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayPmf {
    probs: Vec<f64>,
}

impl DelayPmf {
    /// Builds a pmf from `probs[d] = P(D = d)`; trailing zeros are trimmed.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_cap(probs, DEFAULT_MAX_DELAY)
    }

    pub fn with_cap(mut probs: Vec<f64>, max_delay: usize) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|q| !q.is_finite() || **q < 0.0) {
            return Err(Error::InvalidDelay(format!("negative or non-finite mass {bad}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDelay(format!("masses sum to {total}, not 1")));
        }
        while probs.last() == Some(&0.0) {
            probs.pop();
        }
        if probs.len() > max_delay + 1 {
            return Err(Error::InvalidDelay(format!("maximum delay {} exceeds the cap {max_delay}", probs.len() - 1)));
        }
        Ok(Self { probs })
    }

    /// Builds a pmf from nonnegative weights, rescaling them to unit mass.
    /// Useful for published four-digit pmfs whose entries sum to 0.9999.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidDelay(format!("cannot normalize weights {weights:?}")));
        }
        let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // Push the rounding residue onto the largest entry so the sum is 1
        // to within the construction tolerance.
        let residue = 1.0 - probs.iter().sum::<f64>();
        if let Some(max) = probs.iter_mut().max_by(|a, b| a.total_cmp(b)) {
            *max += residue;
        }
        Self::new(probs)
    }

    /// Point mass at `d`.
    pub fn deterministic(d: usize) -> Self {
        let mut probs = vec![0.0; d + 1];
        probs[d] = 1.0;
        Self { probs }
    }

    /// Feedback at the end of the same slot.
    pub fn instantaneous() -> Self {
        Self::deterministic(0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest delay with positive mass.
    pub fn max_delay(&self) -> usize {
        self.probs.len() - 1
    }

    /// `Some(d)` when all mass sits on a single delay.
    pub fn point_mass(&self) -> Option<usize> {
        let d = self.max_delay();
        (self.probs[d] == 1.0).then_some(d)
    }

    /// P(D = d).
    pub fn mass(&self, d: usize) -> f64 {
        self.probs.get(d).copied().unwrap_or(0.0)
    }

    /// P(D <= l).
    pub fn cdf(&self, l: usize) -> f64 {
        if l >= self.max_delay() {
            return 1.0;
        }
        self.probs[..=l].iter().sum()
    }

    /// P(D > l), summed over the tail rather than as `1 - cdf`.
    pub fn survival(&self, l: usize) -> f64 {
        if l >= self.max_delay() {
            return 0.0;
        }
        self.probs[l + 1..].iter().sum()
    }

    /// P(D = a | D >= a): chance that a feedback `a` slots old arrives now.
    pub fn hazard(&self, a: usize) -> f64 {
        if a >= self.max_delay() {
            return 1.0;
        }
        let at_least: f64 = self.probs[a..].iter().sum();
        if at_least <= 0.0 {
            1.0
        } else {
            (self.probs[a] / at_least).min(1.0)
        }
    }

    /// Draws a delay. Consumes exactly one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (d, q) in self.probs.iter().enumerate() {
            acc += q;
            if u < acc {
                return d;
            }
        }
        self.max_delay()
    }

    /// Law of the freshness of the latest arrived feedback after `elapsed`
    /// scheduled slots (`elapsed = m - t` at the start of slot `t`).
    pub fn freshness(&self, elapsed: usize) -> FreshnessPmf {
        let mut by_age = Vec::with_capacity(elapsed);
        let mut none_yet = 1.0;
        for l in 0..elapsed {
            by_age.push(self.cdf(l) * none_yet);
            none_yet *= self.survival(l);
        }
        FreshnessPmf { by_age, absent: none_yet }
    }
}

impl fmt::Display for DelayPmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.probs.iter().map(|q| format!("{q}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for DelayPmf {
    type Err = Error;

    /// Parses a comma-separated list such as `0.5,0.5` or `1/3,1/3,1/3`.
    fn from_str(s: &str) -> Result<Self> {
        let probs = s.split(',').map(|tok| parse_fraction(tok.trim())).collect::<Result<Vec<_>>>()?;
        Self::new(probs)
    }
}

/// Parses `0.25` or `1/4`.
pub fn parse_fraction(tok: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot parse `{tok}` as a probability"));
    match tok.split_once('/') {
        Some((num, den)) => {
            let n: f64 = num.trim().parse().map_err(|_| bad())?;
            let d: f64 = den.trim().parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            Ok(n / d)
        }
        None => tok.parse().map_err(|_| bad()),
    }
}

/// Freshness `l` of the latest arrived feedback: it originated `l + 1` slots
/// before the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Freshness {
    Age(usize),
    Absent,
}

/// Distribution over [`Freshness`].
#[derive(Debug, Clone, PartialEq)]
pub struct FreshnessPmf {
    by_age: Vec<f64>,
    absent: f64,
}

impl FreshnessPmf {
    pub fn get(&self, f: Freshness) -> f64 {
        match f {
            Freshness::Age(l) => self.by_age.get(l).copied().unwrap_or(0.0),
            Freshness::Absent => self.absent,
        }
    }

    /// `P(L = l)` for `l = 0..elapsed`.
    pub fn by_age(&self) -> &[f64] {
        &self.by_age
    }

    pub fn absent(&self) -> f64 {
        self.absent
    }

    pub fn total(&self) -> f64 {
        self.by_age.iter().sum::<f64>() + self.absent
    }
}

/// One-bit decodability feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bit {
    Nack = 0,
    Ack = 1,
}

impl Bit {
    pub fn is_ack(self) -> bool {
        self == Bit::Ack
    }
}

impl From<ChannelState> for Bit {
    fn from(s: ChannelState) -> Self {
        match s {
            ChannelState::On => Bit::Ack,
            ChannelState::Off => Bit::Nack,
        }
    }
}

impl From<Bit> for ChannelState {
    fn from(b: Bit) -> Self {
        match b {
            Bit::Ack => ChannelState::On,
            Bit::Nack => ChannelState::Off,
        }
    }
}

/// A feedback bit still travelling back to the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingFeedback {
    pub user: usize,
    pub origin_slot: Slot,
    pub bit: Bit,
    /// Slot ends remaining before delivery; 0 means it lands this slot end.
    pub remaining: usize,
}

/// A time-stamped feedback bit as delivered to the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackEvent {
    pub user: usize,
    pub origin_slot: Slot,
    pub bit: Bit,
    pub arrival_slot: Slot,
}

/// Delivers every pending feedback due at the end of `slot` and ages the rest.
///
/// Out-of-order arrivals are passed through untouched; discarding stale bits
/// is the receiver's job.
pub fn arrivals_at_slot_end(in_flight: Vec<PendingFeedback>, slot: Slot) -> (Vec<FeedbackEvent>, Vec<PendingFeedback>) {
    let mut arrived = Vec::new();
    let mut still = Vec::with_capacity(in_flight.len());
    for mut fb in in_flight {
        if fb.remaining == 0 {
            arrived.push(FeedbackEvent { user: fb.user, origin_slot: fb.origin_slot, bit: fb.bit, arrival_slot: slot });
        } else {
            fb.remaining -= 1;
            still.push(fb);
        }
    }
    (arrived, still)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const THIRD: f64 = 1.0 / 3.0;

    #[test]
    fn construction_rules() {
        assert!(DelayPmf::new(vec![0.5, 0.6]).is_err());
        assert!(DelayPmf::new(vec![1.1, -0.1]).is_err());
        assert_eq!(DelayPmf::new(vec![0.0, 1.0, 0.0]).unwrap().max_delay(), 1);
        let mut long = vec![0.0; 70];
        long[69] = 1.0;
        assert!(DelayPmf::new(long.clone()).is_err());
        assert!(DelayPmf::with_cap(long, 80).is_ok());
        assert_eq!(DelayPmf::deterministic(2).point_mass(), Some(2));
        assert_eq!(DelayPmf::new(vec![0.5, 0.5]).unwrap().point_mass(), None);
    }

    #[test]
    fn parse_lists() {
        let pmf: DelayPmf = "0.5,0.5".parse().unwrap();
        assert_eq!(pmf.probs(), &[0.5, 0.5]);
        let pmf: DelayPmf = "1/3, 1/3, 1/3".parse().unwrap();
        assert_eq!(pmf.max_delay(), 2);
        assert!("0.5,0.4".parse::<DelayPmf>().is_err());
        assert!("a,b".parse::<DelayPmf>().is_err());
        assert!("1/0".parse::<DelayPmf>().is_err());
    }

    #[test]
    fn normalizes_rounded_tables() {
        let pmf = DelayPmf::normalized(&[0.5908, 0.3959, 0.0132]).unwrap();
        assert!((pmf.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((pmf.mass(0) - 0.5908 / 0.9999).abs() < 1e-12);
    }

    #[test]
    fn cdf_and_survival() {
        let pmf = DelayPmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((pmf.cdf(0) - 0.2).abs() < 1e-15);
        assert!((pmf.survival(0) - 0.8).abs() < 1e-15);
        assert!((pmf.survival(1) - 0.5).abs() < 1e-15);
        assert_eq!(pmf.survival(2), 0.0);
        assert_eq!(pmf.survival(10), 0.0);
        assert!((pmf.hazard(1) - 0.3 / 0.8).abs() < 1e-15);
        assert_eq!(pmf.hazard(2), 1.0);
    }

    #[test]
    fn point_mass_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zero = DelayPmf::instantaneous();
        let one = DelayPmf::new(vec![0.0, 1.0]).unwrap();
        for _ in 0..1000 {
            assert_eq!(zero.sample(&mut rng), 0);
            assert_eq!(one.sample(&mut rng), 1);
        }
    }

    #[test]
    fn uniform_sample_frequencies() {
        let pmf = DelayPmf::new(vec![THIRD, THIRD, THIRD]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut counts = [0usize; 3];
        let n = 1_000_000;
        for _ in 0..n {
            counts[pmf.sample(&mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - THIRD).abs() < 0.002, "{counts:?}");
        }
    }

    #[test]
    fn freshness_examples() {
        let pmf = DelayPmf::new(vec![THIRD, THIRD, THIRD]).unwrap();
        let f0 = pmf.freshness(0);
        assert_eq!(f0.get(Freshness::Absent), 1.0);
        for elapsed in 3..8 {
            let f = pmf.freshness(elapsed);
            assert!((f.get(Freshness::Age(0)) - 1.0 / 3.0).abs() < 1e-12);
            assert!((f.get(Freshness::Age(1)) - 4.0 / 9.0).abs() < 1e-12);
            assert!((f.get(Freshness::Age(2)) - 2.0 / 9.0).abs() < 1e-12);
            assert!(f.get(Freshness::Absent).abs() < 1e-12);
            for l in 3..elapsed {
                assert_eq!(f.get(Freshness::Age(l)), 0.0);
            }
        }
        let one = DelayPmf::deterministic(1);
        for elapsed in 2..6 {
            let f = one.freshness(elapsed);
            assert_eq!(f.get(Freshness::Age(0)), 0.0);
            assert_eq!(f.get(Freshness::Age(1)), 1.0);
            assert_eq!(f.get(Freshness::Absent), 0.0);
        }
    }

    #[test]
    fn arrival_bookkeeping() {
        let (a, s) = arrivals_at_slot_end(vec![], 5);
        assert!(a.is_empty() && s.is_empty());

        let fb = |user, remaining| PendingFeedback { user, origin_slot: 7, bit: Bit::Ack, remaining };
        let (a, s) = arrivals_at_slot_end(vec![fb(0, 0)], 5);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].arrival_slot, 5);
        assert!(s.is_empty());

        let (a, s) = arrivals_at_slot_end(vec![fb(0, 0), fb(1, 2)], 5);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].user, 0);
        assert_eq!(s, vec![fb(1, 1)]);
    }

    fn random_pmf() -> impl Strategy<Value = DelayPmf> {
        prop::collection::vec(0.0f64..1.0, 1..8)
            .prop_filter_map("zero mass", |w| (w.iter().sum::<f64>() > 1e-6).then(|| DelayPmf::normalized(&w).unwrap()))
    }

    proptest! {
        #[test]
        fn freshness_is_a_distribution(pmf in random_pmf(), elapsed in 0usize..=100) {
            let f = pmf.freshness(elapsed);
            prop_assert!((f.total() - 1.0).abs() <= 1e-12);
            if elapsed > pmf.max_delay() {
                prop_assert!(f.absent() == 0.0);
                for l in pmf.max_delay() + 1..elapsed {
                    prop_assert!(f.get(Freshness::Age(l)) == 0.0);
                }
            }
        }

        #[test]
        fn cdf_monotone(pmf in random_pmf()) {
            for l in 0..pmf.max_delay() + 3 {
                prop_assert!(pmf.cdf(l + 1) >= pmf.cdf(l) - 1e-15);
                prop_assert!(pmf.survival(l + 1) <= pmf.survival(l) + 1e-15);
            }
            prop_assert_eq!(pmf.survival(pmf.max_delay()), 0.0);
        }
    }
}
