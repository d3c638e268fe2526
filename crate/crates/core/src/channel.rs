//! Two-state (ON/OFF) Markov channel: transition law, the `u`-step belief
//! evolution operator and the steady state.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Floating-point spill tolerated by [`ChannelParams::evolve`] before clamping.
const SPILL: f64 = 1e-12;

/// Instantaneous state of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelState {
    Off = 0,
    On = 1,
}

impl ChannelState {
    pub fn is_on(self) -> bool {
        self == ChannelState::On
    }

    pub fn from_bool(on: bool) -> Self {
        if on {
            ChannelState::On
        } else {
            ChannelState::Off
        }
    }
}

/// Sign of the one-step memory `p - r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correlation {
    Positive,
    Negative,
    Memoryless,
}

/// Transition probabilities of one channel.
///
/// `p` is P(ON | previously ON) and `r` is P(ON | previously OFF). Every
/// pair in the unit square is accepted except the identity chain `p = 1,
/// r = 0`, which has no unique steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    p: f64,
    r: f64,
}

impl ChannelParams {
    pub fn new(p: f64, r: f64) -> Result<Self> {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidChannel { p, r, reason: "p must lie in [0, 1]" });
        }
        if !(r.is_finite() && (0.0..=1.0).contains(&r)) {
            return Err(Error::InvalidChannel { p, r, reason: "r must lie in [0, 1]" });
        }
        if p == 1.0 && r == 0.0 {
            return Err(Error::InvalidChannel {
                p,
                r,
                reason: "the identity chain (p = 1, r = 0) has no steady state",
            });
        }
        Ok(Self { p, r })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// One-step memory `p - r`, the eigenvalue governing belief decay.
    pub fn memory(&self) -> f64 {
        self.p - self.r
    }

    pub fn correlation(&self) -> Correlation {
        if self.p > self.r {
            Correlation::Positive
        } else if self.p < self.r {
            Correlation::Negative
        } else {
            Correlation::Memoryless
        }
    }

    /// Limiting ON probability `r / (1 - (p - r))`.
    pub fn steady_state(&self) -> f64 {
        self.r / (1.0 - self.memory())
    }

    /// Probability of being ON next slot given the current state.
    pub fn on_probability(&self, state: ChannelState) -> f64 {
        match state {
            ChannelState::On => self.p,
            ChannelState::Off => self.r,
        }
    }

    /// Draws the next state. Consumes exactly one uniform variate.
    pub fn transition<R: Rng + ?Sized>(&self, state: ChannelState, rng: &mut R) -> ChannelState {
        let u: f64 = rng.gen();
        ChannelState::from_bool(u < self.on_probability(state))
    }

    /// `T^u(x)`: the belief `u` slots after holding belief `x`.
    ///
    /// Uses the closed form `p_s + (p - r)^u (x - p_s)`; the result is
    /// clamped to `[0, 1]` only for floating-point spill.
    pub fn evolve(&self, x: f64, u: u32) -> Result<f64> {
        check_probability(x)?;
        Ok(self.evolve_unchecked(x, u))
    }

    pub(crate) fn evolve_unchecked(&self, x: f64, u: u32) -> f64 {
        if u == 0 {
            return x;
        }
        let ps = self.steady_state();
        let decay = pow_u32(self.memory(), u);
        clamp_spill(ps + decay * (x - ps))
    }

    /// `T^u(p)`: belief `u + 1` slots after observing ON.
    pub fn after_ack(&self, u: u32) -> f64 {
        self.evolve_unchecked(self.p, u)
    }

    /// `T^u(r)`: belief `u + 1` slots after observing OFF.
    pub fn after_nack(&self, u: u32) -> f64 {
        self.evolve_unchecked(self.r, u)
    }

    /// Belief `gap + 1` slots after observing `state`.
    pub fn after_observation(&self, state: ChannelState, gap: u32) -> f64 {
        match state {
            ChannelState::On => self.after_ack(gap),
            ChannelState::Off => self.after_nack(gap),
        }
    }
}

impl fmt::Display for ChannelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} r={}", self.p, self.r)
    }
}

fn pow_u32(base: f64, exp: u32) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(exp as f64),
    }
}

fn clamp_spill(x: f64) -> f64 {
    debug_assert!(x > -SPILL && x < 1.0 + SPILL, "belief {x} escaped [0, 1]");
    x.clamp(0.0, 1.0)
}
