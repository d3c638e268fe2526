//! Per-slot reward rate against horizon length for three levels of
//! channel knowledge.

use anyhow::Result;
use serde::{Deserialize, Serialize};

use arqsched::eval::{genie_optimal_exact, optimal_value, policy_value_exact};
use arqsched::policy::UniformRandom;
use arqsched::{ChannelParams, DelayPmf, InitialBeliefs, Instance, Limits, Slot};

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub params: ChannelParams,
    pub delay: DelayPmf,
    pub pi: Vec<f64>,
    pub max_horizon: Slot,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            params: ChannelParams::new(0.87, 0.1083).expect("valid default channel"),
            delay: DelayPmf::normalized(&[1.0, 1.0, 1.0]).expect("valid default delay"),
            pi: vec![0.3358, 0.1851, 0.5483],
            max_horizon: 8,
        }
    }
}

/// Rates (value divided by `m`) at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigurePoint {
    pub m: u32,
    /// Optimal scheduling when every feedback reveals all users' states.
    pub genie_optimal: f64,
    /// Optimal scheduling from ARQ feedback alone.
    pub arq_optimal: f64,
    pub random: f64,
}

pub fn run_figure1(opts: &FigureOptions) -> Result<Vec<FigurePoint>> {
    let mut limits = Limits::default();
    limits.max_horizon = limits.max_horizon.max(opts.max_horizon);
    limits.max_users = limits.max_users.max(opts.pi.len());
    (1..=opts.max_horizon)
        .map(|m| {
            let inst = Instance::identical(
                opts.params,
                opts.pi.len(),
                m,
                opts.delay.clone(),
                InitialBeliefs::Explicit(opts.pi.clone()),
            )?;
            Ok(FigurePoint {
                m,
                genie_optimal: genie_optimal_exact(&inst, &limits)?.rate(),
                arq_optimal: optimal_value(&inst, &limits)?.rate(),
                random: policy_value_exact(&inst, &UniformRandom, &limits)?.rate(),
            })
        })
        .collect()
}

pub fn echo(opts: &FigureOptions) -> Vec<(String, String)> {
    vec![
        ("n".into(), opts.pi.len().to_string()),
        ("m".into(), format!("1..{}", opts.max_horizon)),
        ("p".into(), opts.params.p().to_string()),
        ("r".into(), opts.params.r().to_string()),
        ("delay".into(), opts.delay.to_string()),
        ("pi".into(), opts.pi.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_slot_values() {
        let opts = FigureOptions { max_horizon: 1, ..FigureOptions::default() };
        let pt = run_figure1(&opts).unwrap()[0];
        assert!((pt.arq_optimal - 0.5483).abs() < 1e-12);
        assert!((pt.genie_optimal - 0.5483).abs() < 1e-12);
        let mean = (0.3358 + 0.1851 + 0.5483) / 3.0;
        assert!((pt.random - mean).abs() < 1e-12);
    }
}
