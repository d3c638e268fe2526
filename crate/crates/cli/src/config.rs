//! Flat `key = value` experiment configuration.
//!
//! Every value is parsed into its typed form as soon as it is set, so a bad
//! probability or delay law is rejected before any work starts. Later
//! settings override earlier ones; command-line flags are applied after the
//! file.

use std::fmt::Write as _;

use arqsched::counterexample::CounterexampleKind;
use arqsched::{parse_fraction, ChannelParams, DelayPmf, Error, InitialBeliefs, Instance, PolicySpec, Result, Slot};

/// Keys in the order they are echoed.
pub const KEYS: [&str; 12] =
    ["kind", "n", "m", "p", "r", "r2", "delay", "pi", "policy", "observation", "episodes", "seed"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Option<CounterexampleKind>,
    pub users: Option<usize>,
    pub horizon: Option<Slot>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    /// Second user's OFF-to-ON probability for the two-channel counterexample.
    pub r2: Option<f64>,
    pub delay: Option<DelayPmf>,
    /// `None` means steady-state beliefs.
    pub pi: Option<Vec<f64>>,
    pub policies: Vec<PolicySpec>,
    pub genie: bool,
    pub episodes: Option<u64>,
    pub seed: Option<u64>,
}

fn probability(key: &str, v: &str) -> Result<f64> {
    let x = parse_fraction(v.trim())?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Config(format!("{key} = {x} is not a probability")));
    }
    Ok(x)
}

fn integer<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key} expects a non-negative integer, got `{v}`")))
}

impl ExperimentConfig {
    /// Parses a configuration file; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.to_ascii_lowercase().as_str() {
            "kind" => self.kind = Some(value.parse()?),
            "n" => {
                let n: usize = integer(key, value)?;
                if n == 0 {
                    return Err(Error::Config("n must be positive".into()));
                }
                self.users = Some(n);
            }
            "m" => {
                let m: Slot = integer(key, value)?;
                if m == 0 {
                    return Err(Error::Config("m must be positive".into()));
                }
                self.horizon = Some(m);
            }
            "p" => self.p = Some(probability(key, value)?),
            "r" => self.r = Some(probability(key, value)?),
            "r2" => self.r2 = Some(probability(key, value)?),
            "delay" => self.delay = Some(value.parse()?),
            "pi" => {
                self.pi = if value.trim().eq_ignore_ascii_case("steady") {
                    None
                } else {
                    Some(value.split(',').map(|t| probability(key, t)).collect::<Result<_>>()?)
                }
            }
            "policy" => {
                // `;` separates policies because alpha vectors use commas.
                self.policies =
                    value.split(';').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
            }
            "observation" => {
                self.genie = match value.trim() {
                    "arq" => false,
                    "genie" => true,
                    other => return Err(Error::Config(format!("observation must be arq or genie, got `{other}`"))),
                }
            }
            "episodes" => self.episodes = Some(integer(key, value)?),
            "seed" => self.seed = Some(integer(key, value)?),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> Option<String> {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        match key {
            "kind" => self.kind.map(|k| k.to_string()),
            "n" => self.users.map(|v| v.to_string()),
            "m" => self.horizon.map(|v| v.to_string()),
            "p" => self.p.map(|v| v.to_string()),
            "r" => self.r.map(|v| v.to_string()),
            "r2" => self.r2.map(|v| v.to_string()),
            "delay" => self.delay.as_ref().map(|d| d.to_string()),
            "pi" => Some(self.pi.as_deref().map_or_else(|| "steady".to_string(), join)),
            "policy" => (!self.policies.is_empty())
                .then(|| self.policies.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";")),
            "observation" => Some(if self.genie { "genie" } else { "arq" }.to_string()),
            "episodes" => self.episodes.map(|v| v.to_string()),
            "seed" => self.seed.map(|v| v.to_string()),
            _ => None,
        }
    }

    /// Every set key with its resolved value, in [`KEYS`] order.
    pub fn echo(&self) -> Vec<(String, String)> {
        KEYS.iter().filter_map(|k| self.value_of(k).map(|v| (k.to_string(), v))).collect()
    }

    /// Renders the configuration back into the file format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.echo() {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| Error::Config(format!("`{key}` is required")))
    }

    pub fn channel(&self) -> Result<ChannelParams> {
        ChannelParams::new(Self::require(self.p, "p")?, Self::require(self.r, "r")?)
    }

    /// Defaults to instantaneous feedback.
    pub fn delay_or_default(&self) -> DelayPmf {
        self.delay.clone().unwrap_or_else(DelayPmf::instantaneous)
    }

    /// User count from `n`, or from the length of `pi`.
    pub fn num_users(&self) -> Result<usize> {
        match (self.users, &self.pi) {
            (Some(n), Some(pi)) if n != pi.len() => {
                Err(Error::Config(format!("n = {n} but pi lists {} beliefs", pi.len())))
            }
            (Some(n), _) => Ok(n),
            (None, Some(pi)) => Ok(pi.len()),
            (None, None) => Err(Error::Config("`n` is required".into())),
        }
    }

    pub fn initial(&self) -> InitialBeliefs {
        self.pi.clone().map_or(InitialBeliefs::Steady, InitialBeliefs::Explicit)
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::identical(
            self.channel()?,
            self.num_users()?,
            Self::require(self.horizon, "m")?,
            self.delay_or_default(),
            self.initial(),
        )
    }

    pub fn policies_or_greedy(&self) -> Vec<PolicySpec> {
        if self.policies.is_empty() {
            vec![PolicySpec::Greedy]
        } else {
            self.policies.clone()
        }
    }

    /// Stochastic runs must name their seed.
    pub fn seed_required(&self) -> Result<u64> {
        Self::require(self.seed, "seed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_echoes() {
        let text = "# comment\nn = 3\nm=7\np = 0.9172\nr = 0.2858\ndelay = 0.8822, 0.1178\n\
                    policy = greedy; alpha:1,0,1/2,1\nseed = 7 # trailing\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.users, Some(3));
        assert_eq!(cfg.policies.len(), 2);
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        assert!(cfg.echo().iter().any(|(k, v)| k == "pi" && v == "steady"));
    }

    #[test]
    fn rejects_at_parse_time() {
        for bad in ["p = 1.5", "delay = 0.5,0.6", "zz = 1", "n = 0", "policy = nope", "pi = 0.2,x", "n 3"] {
            assert!(ExperimentConfig::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn pi_fixes_user_count() {
        let cfg = ExperimentConfig::parse("pi = 0.1,0.2\nn = 3").unwrap();
        assert!(cfg.num_users().is_err());
        let cfg = ExperimentConfig::parse("pi = 0.1,0.2").unwrap();
        assert_eq!(cfg.num_users().unwrap(), 2);
    }
}
