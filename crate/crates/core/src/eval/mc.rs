//! Seeded Monte Carlo simulation of scheduling episodes.
//!
//! Episode `e` draws from a ChaCha8 stream keyed by `(seed, e)`, and episodes
//! are summed in fixed-size chunks reduced in order, so results do not
//! depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::belief::{BeliefTracker, Observation, PolicyDecision};
use crate::channel::ChannelState;
use crate::delay::{arrivals_at_slot_end, Bit, Freshness, PendingFeedback};
use crate::error::{Error, Result};
use crate::policy::{DecisionView, EpisodePolicy, PolicySpec};

use super::instance::Instance;
use super::report::ValueReport;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub episodes: u64,
    pub seed: u64,
    /// Feedback reveals every user's state for its origin slot.
    pub genie: bool,
    /// Number of leading episodes whose decision logs are kept.
    pub keep_logs: usize,
}

impl McConfig {
    pub fn new(episodes: u64, seed: u64) -> Self {
        Self { episodes, seed, genie: false, keep_logs: 0 }
    }

    pub fn genie(self, genie: bool) -> Self {
        Self { genie, ..self }
    }

    pub fn keep_logs(self, keep_logs: usize) -> Self {
        Self { keep_logs, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub value: ValueReport,
    pub stderr: f64,
    pub episodes: u64,
    pub logs: Vec<Vec<PolicyDecision>>,
}

/// Everything observed in one episode, slot `m` first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeTrace {
    pub decisions: Vec<PolicyDecision>,
    pub rewards: Vec<bool>,
    /// Freshness of the newest feedback held at the start of each slot.
    pub freshness: Vec<Freshness>,
}

impl EpisodeTrace {
    pub fn total(&self) -> usize {
        self.rewards.iter().filter(|r| **r).count()
    }
}

/// Random stream for episode `episode`.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// Runs one episode.
///
/// Draw order: initial states (one per user), then per slot the policy's
/// draw if randomized, one delay, and one transition per user.
pub fn simulate_episode<R: Rng>(
    inst: &Instance,
    genie: bool,
    policy: &mut dyn EpisodePolicy,
    rng: &mut R,
    trace: &mut EpisodeTrace,
) -> Result<()> {
    let n = inst.num_users();
    let m = inst.horizon();
    trace.decisions.clear();
    trace.rewards.clear();
    trace.freshness.clear();

    let mut states: Vec<ChannelState> =
        inst.initial().iter().map(|&x| ChannelState::from_bool(rng.gen::<f64>() < x)).collect();
    let mut tracker = BeliefTracker::new(inst.initial(), m, inst.channels().clone())?;
    let mut in_flight: Vec<PendingFeedback> = Vec::new();
    let mut beliefs = vec![0.0; n];
    let mut latest: Vec<Option<Observation>> = vec![None; n];
    let mut masks = vec![0u32; n];

    for t in (1..=m).rev() {
        for u in 0..n {
            beliefs[u] = tracker.belief(u, t);
            latest[u] = tracker.user(u).latest();
            masks[u] = 0;
        }
        for fb in &in_flight {
            if let Some(bit) = 1u32.checked_shl(fb.origin_slot - t) {
                masks[fb.user] |= bit;
            }
        }
        let newest = latest.iter().flatten().map(|o| o.origin_slot).min();
        trace.freshness.push(match newest {
            Some(k) => Freshness::Age((k - t - 1) as usize),
            None => Freshness::Absent,
        });
        let view = DecisionView {
            slot: t,
            horizon: m,
            beliefs: &beliefs,
            latest: &latest,
            initial: inst.initial(),
            in_flight: &masks,
            genie,
        };
        let a = policy.decide(&view, rng)?;
        if a >= n {
            return Err(Error::UnknownUser { user: a, users: n });
        }
        trace.decisions.push(PolicyDecision { slot: t, user: a });
        trace.rewards.push(states[a].is_on());

        let d = inst.delay().sample(rng);
        if genie {
            for (u, s) in states.iter().enumerate() {
                in_flight.push(PendingFeedback { user: u, origin_slot: t, bit: Bit::from(*s), remaining: d });
            }
        } else {
            in_flight.push(PendingFeedback { user: a, origin_slot: t, bit: Bit::from(states[a]), remaining: d });
        }
        let (arrived, rest) = arrivals_at_slot_end(std::mem::take(&mut in_flight), t);
        in_flight = rest;
        tracker.update(&arrived)?;
        policy.observe(&arrived);

        if t > 1 {
            for (u, s) in states.iter_mut().enumerate() {
                *s = inst.channel(u).transition(*s, rng);
            }
        }
    }
    Ok(())
}

#[derive(Default)]
struct Partial {
    sum: f64,
    sum_sq: f64,
    per_slot: Vec<f64>,
    logs: Vec<Vec<PolicyDecision>>,
}

/// Mean episode reward of the scheduler built by `make` for each episode.
pub fn policy_value_mc_with<F>(inst: &Instance, label: &str, cfg: &McConfig, make: F) -> Result<McReport>
where
    F: Fn() -> Result<Box<dyn EpisodePolicy>> + Sync,
{
    if cfg.episodes == 0 {
        return Err(Error::Config("Monte Carlo needs at least one episode".into()));
    }
    let m = inst.horizon() as usize;
    let chunks = cfg.episodes.div_ceil(CHUNK);
    let partials: Vec<Result<Partial>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut part = Partial { per_slot: vec![0.0; m], ..Partial::default() };
            let mut trace = EpisodeTrace::default();
            let end = ((c + 1) * CHUNK).min(cfg.episodes);
            for e in c * CHUNK..end {
                let mut rng = episode_rng(cfg.seed, e);
                let mut policy = make()?;
                simulate_episode(inst, cfg.genie, policy.as_mut(), &mut rng, &mut trace)?;
                let total = trace.total() as f64;
                part.sum += total;
                part.sum_sq += total * total;
                for (acc, r) in part.per_slot.iter_mut().zip(&trace.rewards) {
                    *acc += f64::from(u8::from(*r));
                }
                if (e as usize) < cfg.keep_logs {
                    part.logs.push(trace.decisions.clone());
                }
            }
            Ok(part)
        })
        .collect();

    let mut acc = Partial { per_slot: vec![0.0; m], ..Partial::default() };
    for p in partials {
        let p = p?;
        acc.sum += p.sum;
        acc.sum_sq += p.sum_sq;
        for (a, b) in acc.per_slot.iter_mut().zip(&p.per_slot) {
            *a += b;
        }
        acc.logs.extend(p.logs);
    }
    let n = cfg.episodes as f64;
    let mean = acc.sum / n;
    let var = if cfg.episodes > 1 { (acc.sum_sq - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
    let stderr = (var / n).sqrt();
    let per_slot = acc.per_slot.iter().map(|s| s / n).collect();
    let mut config = inst.describe();
    config.push(("episodes".into(), cfg.episodes.to_string()));
    config.push(("seed".into(), cfg.seed.to_string()));
    config.push(("observation".into(), if cfg.genie { "genie" } else { "arq" }.into()));
    let value = ValueReport { label: label.to_string(), total: mean, per_slot, stderr: Some(stderr), config };
    Ok(McReport { value, stderr, episodes: cfg.episodes, logs: acc.logs })
}

/// Monte Carlo value of a named policy.
pub fn policy_value_mc(inst: &Instance, spec: &PolicySpec, cfg: &McConfig) -> Result<McReport> {
    // Fail on construction errors before spawning work.
    spec.episode_policy(inst.channels(), inst.initial(), inst.horizon())?;
    let label = if cfg.genie { format!("genie-{spec}") } else { spec.to_string() };
    policy_value_mc_with(inst, &label, cfg, || spec.episode_policy(inst.channels(), inst.initial(), inst.horizon()))
}
