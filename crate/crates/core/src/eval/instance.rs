use std::fmt::Write as _;

use crate::belief::ChannelSet;
use crate::channel::ChannelParams;
use crate::delay::{DelayPmf, Slot};
use crate::error::{check_probability, Error, Result};

/// Initial beliefs at the first slot of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialBeliefs {
    /// Every user at its own channel's steady state.
    Steady,
    Explicit(Vec<f64>),
}

/// One finite-horizon scheduling problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    channels: ChannelSet,
    delay: DelayPmf,
    initial: Vec<f64>,
    steady: bool,
    horizon: Slot,
}

impl Instance {
    pub fn new(
        channels: ChannelSet,
        users: usize,
        horizon: Slot,
        delay: DelayPmf,
        init: InitialBeliefs,
    ) -> Result<Self> {
        if users == 0 {
            return Err(Error::Config("at least one user is required".into()));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least one slot".into()));
        }
        if let ChannelSet::PerUser(v) = &channels {
            if v.len() != users {
                return Err(Error::Dimension { expected: users, got: v.len() });
            }
        }
        let (initial, steady) = match init {
            InitialBeliefs::Steady => ((0..users).map(|i| channels.get(i).steady_state()).collect(), true),
            InitialBeliefs::Explicit(v) => {
                if v.len() != users {
                    return Err(Error::Dimension { expected: users, got: v.len() });
                }
                for x in &v {
                    check_probability(*x)?;
                }
                (v, false)
            }
        };
        Ok(Self { channels, delay, initial, steady, horizon })
    }

    pub fn identical(
        params: ChannelParams,
        users: usize,
        horizon: Slot,
        delay: DelayPmf,
        init: InitialBeliefs,
    ) -> Result<Self> {
        Self::new(ChannelSet::Identical(params), users, horizon, delay, init)
    }

    pub fn steady(params: ChannelParams, users: usize, horizon: Slot, delay: DelayPmf) -> Result<Self> {
        Self::identical(params, users, horizon, delay, InitialBeliefs::Steady)
    }

    pub fn num_users(&self) -> usize {
        self.initial.len()
    }

    pub fn horizon(&self) -> Slot {
        self.horizon
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn channel(&self, user: usize) -> &ChannelParams {
        self.channels.get(user)
    }

    pub fn delay(&self) -> &DelayPmf {
        &self.delay
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// True when built with [`InitialBeliefs::Steady`].
    pub fn is_steady_init(&self) -> bool {
        self.steady
    }

    pub fn with_horizon(&self, horizon: Slot) -> Self {
        Self { horizon, ..self.clone() }
    }

    /// Resolved configuration as ordered `key=value` pairs.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out =
            vec![("n".to_string(), self.num_users().to_string()), ("m".to_string(), self.horizon.to_string())];
        match &self.channels {
            ChannelSet::Identical(c) => {
                out.push(("p".into(), c.p().to_string()));
                out.push(("r".into(), c.r().to_string()));
            }
            ChannelSet::PerUser(v) => {
                out.push(("p".into(), join(v.iter().map(|c| c.p()))));
                out.push(("r".into(), join(v.iter().map(|c| c.r()))));
            }
        }
        out.push(("delay".into(), self.delay.to_string()));
        let pi = if self.steady { "steady".to_string() } else { join(self.initial.iter().copied()) };
        out.push(("pi".into(), pi));
        out
    }
}

fn join(values: impl Iterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in values.enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

/// Size limits for exhaustive evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_users: usize,
    pub max_horizon: Slot,
    pub max_delay: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_users: 4, max_horizon: 8, max_delay: 3 }
    }
}

impl Limits {
    pub fn check(&self, inst: &Instance) -> Result<()> {
        let n = inst.num_users();
        let m = inst.horizon();
        let d = inst.delay().max_delay();
        if n > self.max_users || m > self.max_horizon || d > self.max_delay {
            return Err(Error::Infeasible(format!(
                "N={n}, m={m}, d_max={d} exceeds N<={}, m<={}, d_max<={} (about {:.1e} information states)",
                self.max_users,
                self.max_horizon,
                self.max_delay,
                estimated_states(inst)
            )));
        }
        // Pending feedback is tracked in a 32-bit mask per user.
        if d >= 32 {
            return Err(Error::Infeasible(format!("d_max={d} exceeds the hard limit of 31")));
        }
        Ok(())
    }

    pub fn allows(&self, inst: &Instance) -> bool {
        self.check(inst).is_ok()
    }
}

/// Loose upper bound on the number of distinct information states visited
/// by the exact evaluator over the whole horizon.
pub fn estimated_states(inst: &Instance) -> f64 {
    let m = inst.horizon() as f64;
    let d = inst.delay().max_delay() as i32;
    let per_user = (2.0 * m + 1.0) * 2f64.powi(d);
    m * per_user.powi(inst.num_users() as i32)
}
